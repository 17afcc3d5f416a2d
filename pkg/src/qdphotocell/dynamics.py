"""Evolution generator, steady-state solve, and time-integration oracle.

The density matrix of the four-state dot is reduced to the real vector

    v = (rho1, rho2, rho_e, rho0, Re rho12, Im rho12)

where rho12 is the coherence between the two ground levels; its conjugate
partner is eliminated analytically.  The master equation is then a linear
system v' = A v with a 6x6 real generator A whose first four rows conserve
probability exactly (the row vector (1,1,1,1,0,0) is a left null vector).

The nonequilibrium steady state is the kernel of A normalized to unit trace,
computed by replacing the redundant empty-state row with the normalization
row and solving the square system by partial-pivot elimination.  A fixed-step
fourth-order integrator provides an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoUniqueSteadyStateError, StepInstabilityError
from .model import INFINITE, RateSet

__all__ = [
    "DensityState",
    "Generator",
    "SteadySolution",
    "build_generator",
    "steady_state",
    "evolve",
    "spectral_gap",
]

_TRACE_ROW = np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0])

# Row replaced by the normalization condition: the empty-state balance row,
# whose content is implied by trace preservation.
_NORM_ROW_INDEX = 3

# Condition-number gate beyond which the replaced-row solve is treated as
# having no unique solution.
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class DensityState:
    """Populations and ground-doublet coherence of the four-state dot."""

    rho1: float
    rho2: float
    rho_e: float
    rho0: float
    rho12: complex = 0.0 + 0.0j

    @property
    def trace(self) -> float:
        return self.rho1 + self.rho2 + self.rho_e + self.rho0

    @property
    def populations(self) -> tuple[float, float, float, float]:
        return (self.rho1, self.rho2, self.rho_e, self.rho0)

    @property
    def populations_clamped(self) -> tuple[float, float, float, float]:
        """Populations clamped to [0, 1] for reporting."""
        return tuple(min(1.0, max(0.0, p)) for p in self.populations)

    def as_vector(self) -> np.ndarray:
        return np.array([self.rho1, self.rho2, self.rho_e, self.rho0,
                         self.rho12.real, self.rho12.imag])

    @classmethod
    def from_vector(cls, v) -> "DensityState":
        v = np.asarray(v, dtype=float)
        if v.shape != (6,):
            raise DomainError(f"state vector must have shape (6,), got {v.shape}")
        return cls(rho1=float(v[0]), rho2=float(v[1]), rho_e=float(v[2]),
                   rho0=float(v[3]), rho12=complex(v[4], v[5]))

    def validate(self, trace_tol: float = 1e-10, pop_tol: float = 1e-12,
                 coherence_tol: float = 1e-12) -> None:
        """Raise DomainError if the state violates its physical invariants."""
        if abs(self.trace - 1.0) > trace_tol:
            raise DomainError(f"state trace {self.trace!r} deviates from 1 "
                              f"by more than {trace_tol}")
        for name, p in zip(("rho1", "rho2", "rho_e", "rho0"), self.populations):
            if not -pop_tol <= p <= 1.0 + pop_tol:
                raise DomainError(f"population {name} = {p!r} outside [0, 1]")
        if abs(self.rho12) ** 2 > self.rho1 * self.rho2 + coherence_tol:
            raise DomainError(
                f"|rho12|^2 = {abs(self.rho12)**2!r} exceeds rho1*rho2 = "
                f"{self.rho1 * self.rho2!r}: ground-doublet block not positive")


@dataclass(frozen=True)
class Generator:
    """Linear evolution generator acting on the reduced state vector.

    ``matrix`` reproduces the population/coherence equations of motion built
    from ``rates``; ``tau`` is the decoherence rate (``INFINITE`` pins the
    coherence to zero exactly instead of damping it).  When the cross
    couplings are maximal on every ground-coupling channel and tau = 0 with
    degenerate levels, the antisymmetric ground combination decouples from
    all baths ("dark state") and the kernel is two-dimensional;
    ``dark_state_degenerate`` records that situation so the steady-state
    solver can select the decoherence-continuity branch.
    """

    matrix: np.ndarray
    rates: RateSet
    delta21: float
    tau: float
    dark_state_degenerate: bool

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (6, 6):
            raise DomainError(f"generator matrix must be 6x6, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("generator matrix entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def tau_mode(self) -> str:
        return "infinite" if self.tau == INFINITE else "finite"

    def left_null_residual(self) -> float:
        """Max |(1,1,1,1,0,0) . A| over columns; zero when trace is conserved."""
        return float(np.abs(_TRACE_ROW @ self.matrix).max())


def _is_dark_state_degenerate(rates: RateSet, delta21: float, tau: float) -> bool:
    if delta21 != 0.0 or tau != 0.0:
        return False
    photon_dead = rates.b_minus[0, 0] == 0.0 and rates.b_plus[0, 0] == 0.0
    left_dead = rates.f_l_plus[0, 0] == 0.0 and rates.f_l_minus[0, 0] == 0.0
    photon_max = (rates.b_plus[0, 1] == rates.b_plus[0, 0]
                  and rates.b_minus[0, 1] == rates.b_minus[0, 0])
    left_max = (rates.f_l_plus[0, 1] == rates.f_l_plus[0, 0]
                and rates.f_l_minus[0, 1] == rates.f_l_minus[0, 0])
    if photon_dead and left_dead:
        return False  # fully disconnected doublet: generic singular handling
    return (photon_dead or photon_max) and (left_dead or left_max)


def build_generator(rates: RateSet, delta21: float = 0.0, tau: float = 0.0) -> Generator:
    """Assemble the 6x6 generator from the dissipation coefficients.

    Parameters
    ----------
    rates : RateSet
        Coefficients from :func:`qdphotocell.model.build_rates`.
    delta21 : float
        Ground-level splitting; couples Re rho12 and Im rho12.
    tau : float
        Decoherence rate (>= 0) or ``INFINITE``.  The infinite mode removes
        the coherence rows structurally rather than using a large number, so
        it is free of stiffness artifacts.
    """
    if tau != INFINITE:
        if not math.isfinite(tau):
            raise DomainError(f"tau must be finite or INFINITE, got {tau!r}")
        if tau < 0.0:
            raise DomainError(f"tau must be >= 0, got {tau}")
    if not math.isfinite(delta21) or delta21 < 0.0:
        raise DomainError(f"delta21 must be finite and >= 0, got {delta21!r}")

    bp, bm = rates.b_plus, rates.b_minus
    flp, flm = rates.f_l_plus, rates.f_l_minus
    frp, frm = rates.f_r_plus, rates.f_r_minus

    A = np.zeros((6, 6))
    # ground level 1
    A[0, 0] = -2.0 * (bp[0, 0] + flm[0, 0])
    A[0, 2] = 2.0 * bm[0, 0]
    A[0, 3] = 2.0 * flp[0, 0]
    A[0, 4] = -2.0 * (bp[0, 1] + flm[0, 1])
    # ground level 2
    A[1, 1] = -2.0 * (bp[1, 1] + flm[1, 1])
    A[1, 2] = 2.0 * bm[1, 1]
    A[1, 3] = 2.0 * flp[1, 1]
    A[1, 4] = -2.0 * (bp[1, 0] + flm[1, 0])
    # excited level
    A[2, 0] = 2.0 * bp[0, 0]
    A[2, 1] = 2.0 * bp[1, 1]
    A[2, 2] = -2.0 * (bm[0, 0] + bm[1, 1] + frm)
    A[2, 3] = 2.0 * frp
    A[2, 4] = 2.0 * (bp[1, 0] + bp[0, 1])
    # empty state
    A[3, 0] = 2.0 * flm[0, 0]
    A[3, 1] = 2.0 * flm[1, 1]
    A[3, 2] = 2.0 * frm
    A[3, 3] = -2.0 * (flp[0, 0] + flp[1, 1] + frp)
    A[3, 4] = 2.0 * (flm[1, 0] + flm[0, 1])

    if tau == INFINITE:
        # coherence pinned to zero; unit relaxation keeps the solve square
        A[4, 4] = -1.0
        A[5, 5] = -1.0
    else:
        decay = bp[0, 0] + bp[1, 1] + flm[0, 0] + flm[1, 1] + tau
        A[4, 0] = -(bp[1, 0] + flm[1, 0])
        A[4, 1] = -(bp[0, 1] + flm[0, 1])
        A[4, 2] = bm[1, 0] + bm[0, 1]
        A[4, 3] = flp[1, 0] + flp[0, 1]
        A[4, 4] = -decay
        A[4, 5] = -delta21
        A[5, 4] = delta21
        A[5, 5] = -decay

    return Generator(matrix=A, rates=rates, delta21=delta21, tau=tau,
                     dark_state_degenerate=_is_dark_state_degenerate(rates, delta21, tau))


@dataclass(frozen=True)
class SteadySolution:
    """Steady state plus solver diagnostics.

    residual : float
        Max-norm of A v over all six generator rows at the solution.
    replaced_row_residual : float
        Residual of the empty-state row that was swapped for normalization.
    dark_state_branch : bool
        True when the two-dimensional-kernel degeneracy was resolved by
        pinning the coherence to its decoherence-continuity value (zero).
    """

    state: DensityState
    residual: float
    replaced_row_residual: float
    dark_state_branch: bool = False


def steady_state(gen: Generator, residual_tol: float = 1e-10) -> SteadySolution:
    """Solve A v = 0 with unit trace; unique for irreducible dynamics.

    The empty-state row is replaced by the normalization row and the square
    system solved by partial-pivot elimination.  Raises
    :class:`NoUniqueSteadyStateError` when the replaced system is singular or
    ill-conditioned (for example a disconnected transition network), except
    in the dark-state degeneracy, where the coherence-free branch is the
    unique limit of any positive decoherence rate and is returned flagged.
    """
    A = gen.matrix
    M = A.copy()
    M[_NORM_ROW_INDEX] = _TRACE_ROW
    rhs = np.zeros(6)
    rhs[_NORM_ROW_INDEX] = 1.0

    dark_branch = False
    if gen.dark_state_degenerate:
        # unique limit tau -> 0+ : coherence vanishes, populations decouple
        M[4] = 0.0
        M[4, 4] = 1.0
        dark_branch = True

    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise NoUniqueSteadyStateError(
            "steady-state system is singular or ill-conditioned "
            f"(cond ~ {cond:.3e}); the transition network likely does not "
            "connect all four dot states")
    try:
        v = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise NoUniqueSteadyStateError(
            f"steady-state solve failed: {exc}") from exc

    full_residual = float(np.abs(A @ v).max())
    replaced_residual = float(abs(A[_NORM_ROW_INDEX] @ v))
    if replaced_residual > residual_tol * max(1.0, float(np.abs(A).max())):
        raise NoUniqueSteadyStateError(
            f"replaced-row residual {replaced_residual:.3e} exceeds tolerance; "
            "the computed kernel vector is not a steady state")

    state = DensityState.from_vector(v)
    state.validate(trace_tol=1e-9, pop_tol=1e-9, coherence_tol=1e-9)
    return SteadySolution(state=state, residual=full_residual,
                          replaced_row_residual=replaced_residual,
                          dark_state_branch=dark_branch)


def spectral_gap(gen: Generator) -> float:
    """Slowest nonzero relaxation rate of the generator.

    Returns -max(Re lambda) over eigenvalues away from the stationary
    kernel; exp(-gap * t) bounds how fast transients die out, which decides
    how long the time-integration oracle must run to reach a given accuracy.
    """
    ev = np.linalg.eigvals(gen.matrix)
    nonzero = ev[np.abs(ev) > 1e-12]
    if nonzero.size == 0:
        return 0.0
    return float(-np.max(nonzero.real))


def _rk4_step_matrix(A: np.ndarray, h: float) -> np.ndarray:
    """One-step propagator of classical RK4 for the linear system v' = A v."""
    B = h * A
    M = np.eye(6) + B
    term = B
    for k in (2.0, 3.0, 4.0):
        term = term @ B / k
        M = M + term
    return M


def evolve(gen: Generator, initial: DensityState, duration: float, dt: float,
           trace_drift_tol: float = 1e-6) -> DensityState:
    """Integrate v' = A v with fixed-step fourth-order Runge-Kutta.

    For a linear autonomous system the four RK4 stages collapse into a
    constant one-step propagator; steps are applied in blocks of up to 1024
    via exact binary powering, with the probability trace monitored at every
    block boundary.  Instability (trace drift beyond ``trace_drift_tol`` or
    non-finite values) raises :class:`StepInstabilityError`.

    With ``dt <= 1e-3 / gamma`` the trace is preserved to 1e-9 over
    durations up to 1e3 / gamma.
    """
    if not (math.isfinite(dt) and dt > 0.0):
        raise DomainError(f"dt must be positive and finite, got {dt!r}")
    if not (math.isfinite(duration) and duration >= 0.0):
        raise DomainError(f"duration must be >= 0 and finite, got {duration!r}")
    initial.validate(trace_tol=1e-9, pop_tol=1e-9, coherence_tol=1e-9)
    if duration == 0.0:
        return initial

    v = initial.as_vector()
    if gen.tau == INFINITE:
        # infinite decoherence removes the coherence before any dynamics
        v[4] = 0.0
        v[5] = 0.0

    n_steps = max(1, math.ceil(duration / dt - 1e-12))
    h = duration / n_steps
    M = _rk4_step_matrix(gen.matrix, h)
    if not np.all(np.isfinite(M)):
        raise StepInstabilityError("step matrix is not finite; reduce dt")

    block = 1024
    M_block = None
    remaining = n_steps
    # overflow during divergence is the detection signal, not an error
    with np.errstate(over="ignore", invalid="ignore"):
        while remaining > 0:
            take = min(block, remaining)
            if take == block:
                if M_block is None:
                    M_block = np.linalg.matrix_power(M, block)
                P = M_block
            else:
                P = np.linalg.matrix_power(M, take)
            if not np.all(np.isfinite(P)):
                raise StepInstabilityError(
                    f"integration diverged with dt = {h:.3e}; reduce the step size")
            v = P @ v
            remaining -= take
            drift = abs(v[:4].sum() - 1.0)
            if not np.all(np.isfinite(v)) or drift > trace_drift_tol:
                raise StepInstabilityError(
                    f"trace drift {drift:.3e} exceeds {trace_drift_tol:.1e} with "
                    f"dt = {h:.3e}; reduce the step size")
    return DensityState.from_vector(v)
