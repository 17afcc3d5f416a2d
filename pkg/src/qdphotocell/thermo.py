"""Currents, heat flux, power, efficiencies, and the analytic coherence check.

Sign conventions: ``j_l`` and ``j_r`` are electron number currents flowing
from the left and right lead *into* the dot, obtained by tracing the number
operator against the corresponding dissipator.  With these definitions
probability conservation forces j_l + j_r = 0 at any steady state.  The
converter current is J = j_l (positive when electrons are pumped from the
left lead through the dot into the right lead against the bias).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import DensityState
from .errors import DomainError, SecondLawViolationError
from .model import ModelParams, bose_occupation, build_rates, fermi_occupation

__all__ = [
    "ThermoReport",
    "CoherenceStructure",
    "currents",
    "thermo_report",
    "analytic_coherence_structure",
    "reference_efficiencies",
]

# |j_l + j_r| <= tol * max(1, |j_l|) qualifies a state as stationary
_STATIONARY_TOL = 1e-8

# Headroom on the Carnot bound before a positive-power stationary point is
# treated as a second-law violation (hard failure).
_SECOND_LAW_SLACK = 1e-9


def currents(state: DensityState, params: ModelParams) -> tuple[float, float]:
    """Electron currents (j_l, j_r) from the left/right lead into the dot.

    Both are the trace of the number operator against the respective lead
    dissipator, so they include the coherence contribution on the left side
    (both ground levels couple to the same lead) and satisfy j_l = -j_r at
    any steady state.
    """
    r = build_rates(params)
    u = state.rho12.real
    j_l = (2.0 * (r.f_l_plus[0, 0] + r.f_l_plus[1, 1]) * state.rho0
           - 2.0 * r.f_l_minus[0, 0] * state.rho1
           - 2.0 * r.f_l_minus[1, 1] * state.rho2
           - 2.0 * (r.f_l_minus[1, 0] + r.f_l_minus[0, 1]) * u)
    j_r = 2.0 * r.f_r_plus * state.rho0 - 2.0 * r.f_r_minus * state.rho_e
    return j_l, j_r


@dataclass(frozen=True)
class ThermoReport:
    """Steady-state thermodynamic observables.

    ``eta`` is None when the converter current vanishes (0/0 efficiency).
    ``stationary`` is False when the input state failed the current-balance
    check; the values are still reported but should not be read as
    steady-state thermodynamics.
    """

    j_l: float
    j_r: float
    j: float
    q_dot_p: float
    power: float
    eta: float | None
    eta_c: float
    eta_ca: float
    stationary: bool


def reference_efficiencies(temp: float, temp_p: float) -> tuple[float, float]:
    """Carnot and Curzon-Ahlborn efficiencies for lead/photon temperatures.

    eta_c = 1 - temp/temp_p and eta_ca = 1 - sqrt(temp/temp_p); requires
    0 < temp <= temp_p.
    """
    if not (temp > 0.0 and math.isfinite(temp) and math.isfinite(temp_p)):
        raise DomainError(f"temperatures must be positive and finite, "
                          f"got temp={temp!r}, temp_p={temp_p!r}")
    if temp > temp_p:
        raise DomainError(f"temp = {temp} exceeds temp_p = {temp_p}; "
                          "the converter needs temp <= temp_p")
    ratio = temp / temp_p
    return 1.0 - ratio, 1.0 - math.sqrt(ratio)


def thermo_report(state: DensityState, params: ModelParams) -> ThermoReport:
    """Full thermodynamic report for a (nominally steady) state.

    The output power is computed both as bias times current and in the
    scaled-energy form temp_p * [x_g - (1 - eta_c)(x_r - x_l)] * J; the two
    algebraic forms are asserted equal to 1e-12 relative.  A stationary
    point with positive power and eta > eta_c raises
    :class:`SecondLawViolationError`.
    """
    j_l, j_r = currents(state, params)
    stationary = abs(j_l + j_r) <= _STATIONARY_TOL * max(1.0, abs(j_l))
    j = j_l
    q_dot_p = params.eps_g * j
    power = (params.mu_r - params.mu_l) * j

    eta_c = 1.0 - params.temp / params.temp_p
    x_g, x_l, x_r = params.x_g, params.x_l, params.x_r
    power_scaled_form = params.temp_p * (x_g - (1.0 - eta_c) * (x_r - x_l)) * j
    # near zero bias both forms are differences of large terms; the identity
    # is only meaningful above the cancellation floor of those terms
    floor = 64.0 * 2.3e-16 * abs(j) * (abs(params.mu_r) + abs(params.mu_l)
                                       + params.temp_p * (abs(x_g) + abs(x_r - x_l)))
    tol = max(1e-12 * max(abs(power), abs(power_scaled_form)), floor)
    if abs(power - power_scaled_form) > tol:
        raise AssertionError(
            f"power forms disagree: {power!r} vs {power_scaled_form!r}")

    eta = power / q_dot_p if q_dot_p != 0.0 else None
    if params.temp <= params.temp_p:
        _, eta_ca = reference_efficiencies(params.temp, params.temp_p)
    else:
        eta_ca = math.nan  # no converter regime above the photon temperature

    if stationary and power > 0.0 and eta is not None and eta > eta_c + _SECOND_LAW_SLACK:
        raise SecondLawViolationError(
            f"stationary point with power {power!r} has eta = {eta!r} above "
            f"the Carnot bound {eta_c!r}")

    return ThermoReport(j_l=j_l, j_r=j_r, j=j, q_dot_p=q_dot_p, power=power,
                        eta=eta, eta_c=eta_c, eta_ca=eta_ca, stationary=stationary)


@dataclass(frozen=True)
class CoherenceStructure:
    """Structural evaluation of the closed-form steady-coherence numerator.

    ``numerator`` is the occupation-factor form
    2 * gamma_p * (r_p - r_l) * {n(x_g) f(x_l) - [1 + n(x_g) - f(x_l)] f(x_r)}
    and ``product_form`` the equivalent csch/sech/sinh product; the two are
    algebraically identical and ``rel_discrepancy`` reports their floating-
    point disagreement.  ``steady_sign`` is the sign the numerically solved
    steady-state Re rho12 takes: the *negative* of the numerator's sign
    (equivalently sign[(r_p - r_l) * sinh((x_g + x_l - x_r)/2)]), a
    convention pinned against the linear solve across the operating plane.
    """

    numerator: float
    product_form: float
    rel_discrepancy: float
    zero_when_r_equal: bool
    zero_when_resonant: bool
    steady_sign: int


def analytic_coherence_structure(params: ModelParams) -> CoherenceStructure:
    """Evaluate the closed-form coherence numerator and its zero loci.

    Only valid in the degenerate symmetric configuration (delta21 = 0).
    The numerator vanishes on two loci: equal cross couplings r_p = r_l,
    and the resonance x_g + x_l - x_r = 0 where the transition network
    satisfies detailed balance.
    """
    if params.delta21 != 0.0:
        raise DomainError("analytic coherence structure requires degenerate "
                          f"ground levels (delta21 = 0), got {params.delta21}")
    x_g, x_l, x_r = params.x_g, params.x_l, params.x_r
    if x_g <= 0.0:
        raise DomainError(f"x_g must be positive, got {x_g}")
    n = bose_occupation(x_g)
    f_l = fermi_occupation(x_l)
    f_r = fermi_occupation(x_r)
    numerator = 2.0 * params.gamma_p * (params.r_p - params.r_l) * (
        n * f_l - (1.0 + n - f_l) * f_r)
    product_form = (0.5 * params.gamma_p * (params.r_l - params.r_p)
                    / math.sinh(0.5 * x_g)
                    / math.cosh(0.5 * x_l)
                    / math.cosh(0.5 * x_r)
                    * math.sinh(0.5 * (x_g + x_l - x_r)))
    scale = max(abs(numerator), abs(product_form))
    rel = abs(numerator - product_form) / scale if scale > 0.0 else 0.0
    resonant = x_g + x_l - x_r == 0.0
    sign = 0 if numerator == 0.0 else (-1 if numerator > 0.0 else 1)
    return CoherenceStructure(
        numerator=numerator,
        product_form=product_form,
        rel_discrepancy=rel,
        zero_when_r_equal=params.r_p == params.r_l,
        zero_when_resonant=resonant,
        steady_sign=sign,
    )
