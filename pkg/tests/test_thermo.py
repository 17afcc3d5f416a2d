"""Currents, power/efficiency identities, and the analytic coherence check."""

import math

import numpy as np
import pytest

from qdphotocell import (
    DensityState,
    DomainError,
    analytic_coherence_structure,
    build_generator,
    build_rates,
    currents,
    params_from_scaled,
    reference_efficiencies,
    steady_state,
    thermo_report,
)
from conftest import draw_params


def solve(p):
    return steady_state(build_generator(build_rates(p), p.delta21, p.tau)).state


class TestCurrents:
    def test_empty_dot_injection_rates(self):
        # all weight on the empty state, symmetric Fermi factors at 1/2:
        # the left lead injects through two channels, the right through one
        p = params_from_scaled(2.0, 0.0, 0.0, gamma=1.0)
        st = DensityState(0.0, 0.0, 0.0, 1.0)
        j_l, j_r = currents(st, p)
        assert j_l == pytest.approx(2.0, rel=1e-15)
        assert j_r == pytest.approx(1.0, rel=1e-15)

    def test_balance_at_steady_state(self, rng):
        for _ in range(300):
            p = draw_params(rng)
            j_l, j_r = currents(solve(p), p)
            assert abs(j_l + j_r) <= 1e-10 * max(1.0, abs(j_l))

    def test_balance_with_split_levels(self, rng):
        for _ in range(50):
            p = draw_params(rng)
            p = p.replace(delta21=rng.uniform(0.0, 0.2) * p.eps_g)
            j_l, j_r = currents(solve(p), p)
            assert abs(j_l + j_r) <= 1e-10 * max(1.0, abs(j_l))

    def test_equilibrium_null(self):
        temp = 500.0
        p = params_from_scaled(1.7, -0.4, 1.3, temp=temp, temp_p=temp,
                               r_p=0.7, r_l=0.2, tau=0.1)
        j_l, j_r = currents(solve(p), p)
        assert abs(j_l) < 1e-12 and abs(j_r) < 1e-12

    def test_coherence_term_enters_left_current(self):
        # two states differing only in coherence must give different j_l
        p = params_from_scaled(2.0, -1.0, 3.0, r_l=0.5)
        a = DensityState(0.3, 0.3, 0.2, 0.2)
        b = DensityState(0.3, 0.3, 0.2, 0.2, rho12=-0.1 + 0.0j)
        assert currents(a, p)[0] != currents(b, p)[0]
        assert currents(a, p)[1] == currents(b, p)[1]


class TestThermoReport:
    def test_zero_bias_zero_power(self):
        from qdphotocell import ModelParams
        p = ModelParams(eps_g=11560.0, eps_l=0.0, mu_l=250.0, mu_r=250.0,
                        temp=295.0, temp_p=5780.0)
        st = DensityState(0.3, 0.3, 0.2, 0.2)
        rep = thermo_report(st, p)
        assert rep.power == 0.0

    def test_bias_prefactor_identity(self):
        p = params_from_scaled(2.0, 0.5, 1.0)
        assert (p.mu_r - p.mu_l) / p.temp_p == pytest.approx(
            2.0 - (295.0 / 5780.0) * 0.5, rel=1e-12)

    def test_reference_values_at_solar_temperatures(self):
        p = params_from_scaled(2.0, -1.0, 3.0)
        rep = thermo_report(solve(p), p)
        assert rep.eta_c == pytest.approx(0.9489619, abs=5e-8)
        assert rep.eta_ca == pytest.approx(0.7740839, abs=5e-8)

    def test_eta_identity_and_dual_power_form(self, rng):
        for _ in range(200):
            p = draw_params(rng)
            rep = thermo_report(solve(p), p)
            assert rep.stationary
            if rep.eta is not None:
                want = 1.0 - (1.0 - rep.eta_c) * (p.x_r - p.x_l) / p.x_g
                assert rep.eta == pytest.approx(want, rel=1e-12)
                assert rep.power == pytest.approx(rep.eta * rep.q_dot_p, rel=1e-12)

    def test_second_law_over_operating_grid(self):
        # every stationary point with positive power must respect eta <= eta_c
        for x_l in np.linspace(-4.0, 2.0, 12):
            for x_r in np.linspace(-2.0, 6.0, 12):
                p = params_from_scaled(2.0, float(x_l), float(x_r),
                                       r_p=0.9, r_l=0.0)
                rep = thermo_report(solve(p), p)  # raises on violation
                if rep.power > 0.0:
                    assert rep.eta <= rep.eta_c + 1e-9

    def test_nonstationary_input_flagged(self):
        p = params_from_scaled(2.0, -1.0, 3.0)
        rep = thermo_report(DensityState(0.0, 0.0, 0.0, 1.0), p)
        assert not rep.stationary


class TestReferenceEfficiencies:
    def test_equilibrium(self):
        assert reference_efficiencies(300.0, 300.0) == (0.0, 0.0)

    def test_solar_values(self):
        eta_c, eta_ca = reference_efficiencies(295.0, 5780.0)
        assert eta_c == pytest.approx(0.9489619, abs=5e-8)
        assert eta_ca == pytest.approx(0.7740839, abs=5e-8)

    def test_ca_from_carnot_identity(self):
        for eta_c in np.linspace(0.001, 0.999, 200):
            temp_p = 1000.0
            temp = (1.0 - eta_c) * temp_p
            got_c, got_ca = reference_efficiencies(temp, temp_p)
            assert abs(got_ca - (1.0 - math.sqrt(1.0 - got_c))) <= 1e-15

    def test_ordering(self):
        eta_c, eta_ca = reference_efficiencies(295.0, 5780.0)
        assert 0.0 <= eta_ca <= eta_c < 1.0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            reference_efficiencies(400.0, 300.0)
        with pytest.raises(DomainError):
            reference_efficiencies(0.0, 300.0)


class TestAnalyticCoherenceStructure:
    def test_equal_couplings_zero(self):
        p = params_from_scaled(2.0, -1.0, 3.0, r_p=0.5, r_l=0.5)
        cs = analytic_coherence_structure(p)
        assert cs.numerator == 0.0
        assert cs.zero_when_r_equal

    def test_resonance_zero(self):
        p = params_from_scaled(2.0, 1.0, 3.0, r_p=0.9, r_l=0.1)
        cs = analytic_coherence_structure(p)
        assert cs.zero_when_resonant
        assert abs(cs.numerator) < 1e-12
        assert abs(cs.product_form) < 1e-12

    def test_two_printed_forms_agree(self, rng):
        worst = 0.0
        for _ in range(300):
            p = draw_params(rng)
            cs = analytic_coherence_structure(p)
            worst = max(worst, cs.rel_discrepancy)
        assert worst <= 1e-12

    def test_steady_sign_matches_solver_on_grid(self):
        # pinned convention: Re rho12 at the solved steady state carries the
        # opposite sign of the printed numerator, across the operating plane
        checked = 0
        for x_l in np.linspace(-4.0, 4.0, 20):
            for x_r in np.linspace(-4.0, 4.0, 20):
                p = params_from_scaled(2.0, float(x_l), float(x_r),
                                       r_p=0.9, r_l=0.2)
                cs = analytic_coherence_structure(p)
                u = solve(p).rho12.real
                if abs(u) > 1e-13:
                    checked += 1
                    assert math.copysign(1.0, u) == cs.steady_sign
                    assert cs.steady_sign == -math.copysign(1.0, cs.numerator)
        assert checked > 350

    def test_sign_flips_with_coupling_order(self):
        p_plus = params_from_scaled(2.0, -1.0, 3.0, r_p=0.9, r_l=0.1)
        p_minus = params_from_scaled(2.0, -1.0, 3.0, r_p=0.1, r_l=0.9)
        assert (analytic_coherence_structure(p_plus).steady_sign
                == -analytic_coherence_structure(p_minus).steady_sign)

    def test_split_levels_rejected(self):
        p = params_from_scaled(2.0, -1.0, 3.0, delta21=100.0)
        with pytest.raises(DomainError):
            analytic_coherence_structure(p)
