"""Physical parameters, bath occupation functions, and dissipation rates.

The converter is a four-state quantum dot (empty state, two quasi-degenerate
ground levels, one excited level) exchanging electrons with two leads at
temperature ``temp`` and photons with a radiation field at ``temp_p``.
This module owns the parameter record, the Bose/Fermi occupation functions
in overflow-safe form, the scaled-energy maps, and the assembly of all
dissipation rate coefficients.

Units: k_B = 1 and hbar = 1 throughout.  Energies are absolute (same unit as
the temperatures); rates carry the unit of the ``gamma_*`` couplings.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError

__all__ = [
    "INFINITE",
    "ModelParams",
    "RateSet",
    "bose_occupation",
    "fermi_occupation",
    "scaled_energies",
    "params_from_scaled",
    "build_rates",
]

#: Sentinel for an infinitely fast decoherence rate (coherence removed exactly).
INFINITE = math.inf

# Above this argument exp(x) ~ expm1(x) to full double precision and the
# asymptotic forms avoid overflow up to x ~ 1e308.
_EXP_SWITCH = 350.0


def bose_occupation(x: float) -> float:
    """Mean photon number 1/(exp(x) - 1) at scaled energy ``x > 0``.

    Evaluated via ``expm1`` for small ``x`` and via ``exp(-x)`` beyond
    x = 350 so that arguments up to several hundred neither overflow nor
    lose precision.
    """
    if not isinstance(x, numbers.Real) or not math.isfinite(x):
        raise DomainError(f"bose_occupation: argument must be a finite real, got {x!r}")
    x = float(x)
    if x == 0.0:
        raise DomainError("bose_occupation: x = 0 is the distribution's singularity")
    if x < 0.0:
        raise DomainError(f"bose_occupation: x must be positive, got {x}")
    if x > _EXP_SWITCH:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def fermi_occupation(x: float) -> float:
    """Fermi factor 1/(exp(x) + 1) for any finite real ``x``.

    Uses the logistic form exp(-|x|)/(1 + exp(-|x|)) so that fermi(x) and
    1 - fermi(-x) agree to rounding and |x| up to ~700 cannot overflow.
    """
    if not isinstance(x, numbers.Real) or not math.isfinite(x):
        raise DomainError(f"fermi_occupation: argument must be a finite real, got {x!r}")
    x = float(x)
    if x >= 0.0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def _bose_array(x):
    """Vectorized bose_occupation without domain checks (callers guarantee x > 0)."""
    x = np.asarray(x, dtype=float)
    big = x > _EXP_SWITCH
    safe = np.where(big, 1.0, x)
    out = 1.0 / np.expm1(safe)
    return np.where(big, np.exp(-x), out)


def _fermi_array(x):
    """Vectorized fermi_occupation without domain checks (same logistic form)."""
    x = np.asarray(x, dtype=float)
    z = np.exp(-np.abs(x))
    return np.where(x < 0.0, 1.0 / (1.0 + z), z / (1.0 + z))


def _require_real(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class ModelParams:
    """All physical knobs of the converter.

    Attributes
    ----------
    eps_g : float
        Bandgap energy (excited level minus lower ground level), > 0.
    eps_l : float
        Energy of the lower ground level g1 (both levels when degenerate).
    delta21 : float
        Ground-level splitting eps_g2 - eps_g1 >= 0.  The validated
        configuration is delta21 = 0; nonzero splittings are handled by
        the same equations but are an extrapolation.
    mu_l, mu_r : float
        Lead chemical potentials; mu_r - mu_l is the applied bias energy.
    temp : float
        Common lead temperature, > 0.
    temp_p : float
        Photon temperature, > 0.
    gamma_p, gamma_l, gamma_r : float
        Diagonal transition rates for the photon, left-lead, and right-lead
        channels, >= 0.  A zero rate disconnects that channel; steady-state
        uniqueness is then decided by the solver's conditioning check.
    r_p, r_l : float
        Cross-coupling strengths in [0, 1] for the photon and left-lead
        channels; the cross rates are taken real and symmetric.
    tau : float
        Phenomenological decoherence rate >= 0, or ``INFINITE`` to remove
        the coherence from the dynamics exactly.
    """

    eps_g: float = 11560.0
    eps_l: float = 0.0
    delta21: float = 0.0
    mu_l: float = 0.0
    mu_r: float = 11560.0
    temp: float = 295.0
    temp_p: float = 5780.0
    gamma_p: float = 1.0
    gamma_l: float = 1.0
    gamma_r: float = 1.0
    r_p: float = 0.0
    r_l: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        for name in ("eps_g", "eps_l", "delta21", "mu_l", "mu_r", "temp", "temp_p",
                     "gamma_p", "gamma_l", "gamma_r", "r_p", "r_l"):
            value = _require_real(name, getattr(self, name))
            object.__setattr__(self, name, value)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
        tau = _require_real("tau", self.tau)
        object.__setattr__(self, "tau", tau)
        if self.eps_g <= 0.0:
            raise DomainError(f"eps_g must be > 0, got {self.eps_g}")
        if self.temp <= 0.0 or self.temp_p <= 0.0:
            raise DomainError("temp and temp_p must be > 0 "
                              f"(got temp={self.temp}, temp_p={self.temp_p})")
        for name in ("gamma_p", "gamma_l", "gamma_r"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("r_p", "r_l"):
            r = getattr(self, name)
            if not 0.0 <= r <= 1.0:
                raise DomainError(f"{name} must satisfy 0 <= {name} <= 1, got {r}")
        if not self.delta21 >= 0.0:
            raise DomainError(f"delta21 must be >= 0, got {self.delta21}")
        if self.delta21 >= self.eps_g:
            raise DomainError("delta21 must be smaller than eps_g so both optical "
                              f"transition energies stay positive (delta21={self.delta21}, "
                              f"eps_g={self.eps_g})")
        if self.tau != INFINITE and not math.isfinite(self.tau):
            raise DomainError(f"tau must be finite or INFINITE, got {self.tau}")
        if self.tau < 0.0:
            raise DomainError(f"tau must be >= 0, got {self.tau}")

    # -- scaled variables ---------------------------------------------------

    @property
    def x_g(self) -> float:
        """Bandgap over photon temperature, eps_g / temp_p."""
        return self.eps_g / self.temp_p

    @property
    def x_l(self) -> float:
        """Lead-referenced ground-level energy, (eps_l - mu_l) / temp."""
        return (self.eps_l - self.mu_l) / self.temp

    @property
    def x_r(self) -> float:
        """Lead-referenced excited-level energy, (eps_l + eps_g - mu_r) / temp."""
        return (self.eps_l + self.eps_g - self.mu_r) / self.temp

    @property
    def is_degenerate(self) -> bool:
        return self.delta21 == 0.0

    def with_scaled(self, x_g=None, x_l=None, x_r=None) -> "ModelParams":
        """Copy of these parameters with the given scaled energies substituted."""
        return params_from_scaled(
            x_g if x_g is not None else self.x_g,
            x_l if x_l is not None else self.x_l,
            x_r if x_r is not None else self.x_r,
            temp=self.temp, temp_p=self.temp_p,
            gamma_p=self.gamma_p, gamma_l=self.gamma_l, gamma_r=self.gamma_r,
            r_p=self.r_p, r_l=self.r_l, tau=self.tau, delta21=self.delta21,
        )

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def scaled_energies(params: ModelParams) -> tuple[float, float, float]:
    """Return (x_g, x_l, x_r) for the given parameters."""
    return params.x_g, params.x_l, params.x_r


def params_from_scaled(x_g: float, x_l: float, x_r: float, *,
                       temp: float = 295.0, temp_p: float = 5780.0,
                       gamma: float = 1.0, gamma_p=None, gamma_l=None, gamma_r=None,
                       r_p: float = 0.0, r_l: float = 0.0, tau: float = 0.0,
                       delta21: float = 0.0) -> ModelParams:
    """Build ModelParams from scaled energies.

    Gauge choice: eps_l = 0 and mu_l = -x_l * temp.  Only energy differences
    enter any observable, so the gauge is free; fixing it makes the scaled ->
    physical -> scaled round trip exact.
    """
    x_g = _require_real("x_g", x_g)
    x_l = _require_real("x_l", x_l)
    x_r = _require_real("x_r", x_r)
    eps_l = 0.0
    eps_g = x_g * temp_p
    mu_l = -x_l * temp
    mu_r = eps_l + eps_g - x_r * temp
    return ModelParams(
        eps_g=eps_g, eps_l=eps_l, delta21=delta21, mu_l=mu_l, mu_r=mu_r,
        temp=temp, temp_p=temp_p,
        gamma_p=gamma if gamma_p is None else gamma_p,
        gamma_l=gamma if gamma_l is None else gamma_l,
        gamma_r=gamma if gamma_r is None else gamma_r,
        r_p=r_p, r_l=r_l, tau=tau,
    )


@dataclass(frozen=True)
class RateSet:
    """Evaluated dissipation coefficients feeding the evolution generator.

    Index convention: entry [i][j] is the coefficient with level indices
    (i+1, j+1) evaluated at the transition energy of level j+1, which is the
    argument the defining expressions use.  Because the cross rates are real
    and symmetric, every coefficient the equations of motion need at either
    transition energy is one of the stored entries.

    b_plus / b_minus : (2, 2) arrays
        Photon absorption / emission coefficients.
    f_l_plus / f_l_minus : (2, 2) arrays
        Left-lead injection / extraction coefficients.
    f_r_plus / f_r_minus : float
        Right-lead injection / extraction coefficients at the excited level.
    """

    b_plus: np.ndarray
    b_minus: np.ndarray
    f_l_plus: np.ndarray
    f_l_minus: np.ndarray
    f_r_plus: float
    f_r_minus: float

    def __post_init__(self):
        for name in ("b_plus", "b_minus", "f_l_plus", "f_l_minus"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (2, 2):
                raise DomainError(f"RateSet.{name} must have shape (2, 2)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        all_entries = self.as_array()
        if not np.all(np.isfinite(all_entries)):
            raise DomainError("RateSet entries must be finite")
        if np.any(all_entries < 0.0):
            raise DomainError("RateSet entries must be non-negative")

    def as_array(self) -> np.ndarray:
        """All 18 coefficients as a flat array (for finiteness/positivity checks)."""
        return np.concatenate([
            self.b_plus.ravel(), self.b_minus.ravel(),
            self.f_l_plus.ravel(), self.f_l_minus.ravel(),
            [self.f_r_plus, self.f_r_minus],
        ])


def build_rates(params: ModelParams) -> RateSet:
    """Evaluate all dissipation coefficients for the given parameters.

    In the degenerate configuration (delta21 = 0) the diagonal photon
    coefficients are gamma_p * n(x_g) and gamma_p * (1 + n(x_g)), the lead
    coefficients carry the Fermi factors at x_l and x_r, and every cross
    entry is the matching diagonal entry scaled by r_p or r_l.  For
    delta21 > 0 each entry is evaluated at its own transition energy.
    """
    t = params.temp
    tp = params.temp_p
    # transition energies: level 1 at eps_l, level 2 at eps_l + delta21
    eps_1 = params.eps_g                     # eps_e - eps_g1
    eps_2 = params.eps_g - params.delta21    # eps_e - eps_g2
    x_1 = eps_1 / tp
    x_2 = eps_2 / tp
    x_g1 = (params.eps_l - params.mu_l) / t
    x_g2 = (params.eps_l + params.delta21 - params.mu_l) / t
    x_r = (params.eps_l + params.eps_g - params.mu_r) / t

    n = (bose_occupation(x_1), bose_occupation(x_2))
    f = (fermi_occupation(x_g1), fermi_occupation(x_g2))
    fr = fermi_occupation(x_r)

    gp = np.array([[1.0, params.r_p], [params.r_p, 1.0]]) * params.gamma_p
    gl = np.array([[1.0, params.r_l], [params.r_l, 1.0]]) * params.gamma_l

    b_plus = np.empty((2, 2))
    b_minus = np.empty((2, 2))
    f_l_plus = np.empty((2, 2))
    f_l_minus = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            b_plus[i, j] = gp[i, j] * n[j]
            b_minus[i, j] = gp[i, j] * (1.0 + n[j])
            f_l_plus[i, j] = gl[i, j] * f[j]
            f_l_minus[i, j] = gl[i, j] * (1.0 - f[j])

    return RateSet(
        b_plus=b_plus, b_minus=b_minus,
        f_l_plus=f_l_plus, f_l_minus=f_l_minus,
        f_r_plus=params.gamma_r * fr,
        f_r_minus=params.gamma_r * (1.0 - fr),
    )
