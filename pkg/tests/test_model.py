"""Occupation functions, parameter validation, scaled maps, and rate assembly."""

import math

import numpy as np
import pytest

from qdphotocell import (
    INFINITE,
    DomainError,
    ModelParams,
    bose_occupation,
    build_rates,
    fermi_occupation,
    params_from_scaled,
    scaled_energies,
)
from conftest import draw_params


class TestBoseOccupation:
    def test_ln2_gives_one(self):
        assert bose_occupation(math.log(2.0)) == pytest.approx(1.0, abs=1e-15)

    def test_closed_form_at_one(self):
        # 1/(e - 1)
        assert bose_occupation(1.0) == pytest.approx(0.5819767068693265, rel=1e-12)

    def test_large_argument_decays_without_overflow(self):
        assert 0.0 < bose_occupation(50.0) < 1e-21
        assert bose_occupation(700.0) == pytest.approx(math.exp(-700.0), rel=1e-12)
        assert bose_occupation(900.0) >= 0.0  # underflows to zero, no exception

    def test_zero_is_a_distinct_singularity_error(self):
        with pytest.raises(DomainError, match="singular"):
            bose_occupation(0.0)

    @pytest.mark.parametrize("bad", [-1.0, -1e-12, math.inf, math.nan, "x"])
    def test_domain_errors(self, bad):
        with pytest.raises(DomainError):
            bose_occupation(bad)

    def test_mean_occupation_identity(self):
        # n(x) * (e^x - 1) = 1; the stable expm1 evaluates the parenthesis
        for x in np.geomspace(1e-6, 30.0, 200):
            assert bose_occupation(float(x)) * math.expm1(x) == pytest.approx(
                1.0, rel=1e-12)

    def test_strictly_decreasing(self):
        xs = np.linspace(0.01, 40.0, 100)
        vals = [bose_occupation(float(x)) for x in xs]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestFermiOccupation:
    def test_symmetry_point(self):
        assert fermi_occupation(0.0) == 0.5

    def test_closed_form(self):
        assert fermi_occupation(2.0) == pytest.approx(0.1192029220221175, rel=1e-12)
        assert fermi_occupation(-2.0) == pytest.approx(0.8807970779778823, rel=1e-12)

    def test_particle_hole_symmetry(self):
        for x in np.linspace(-30.0, 30.0, 301):
            assert abs(fermi_occupation(float(x)) + fermi_occupation(float(-x)) - 1.0) <= 1e-15

    def test_extreme_arguments(self):
        assert fermi_occupation(700.0) == pytest.approx(math.exp(-700.0), rel=1e-12)
        assert fermi_occupation(-700.0) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan, None])
    def test_domain_errors(self, bad):
        with pytest.raises(DomainError):
            fermi_occupation(bad)


class TestScaledEnergies:
    def test_definitions(self):
        p = ModelParams(eps_g=2.0 * 5780.0, eps_l=7.0, mu_l=7.0, mu_r=7.0,
                        temp=295.0, temp_p=5780.0)
        x_g, x_l, x_r = scaled_energies(p)
        assert x_g == 2.0
        assert x_l == 0.0
        assert x_r == pytest.approx(2.0 * 5780.0 / 295.0, rel=1e-15)

    def test_fig2_temperatures(self):
        p = params_from_scaled(2.0, 0.0, 0.0)
        assert (p.temp, p.temp_p) == (295.0, 5780.0)
        assert p.eps_g == 2.0 * 5780.0
        assert p.x_g == 2.0

    def test_round_trip_at_nominal_scale(self, rng):
        for _ in range(100):
            x_l = rng.uniform(-5.0, 5.0)
            x_r = rng.uniform(-5.0, 5.0)
            p = params_from_scaled(2.0, x_l, x_r)
            assert p.x_g == pytest.approx(2.0, abs=1e-14)
            assert p.x_l == pytest.approx(x_l, abs=1e-14)
            assert p.x_r == pytest.approx(x_r, abs=1e-14)

    def test_round_trip_general(self, rng):
        # recovering x_r cancels the bandgap term, so its error carries the
        # scale eps_g / temp; x_g and x_l invert to rounding
        for _ in range(300):
            x_g = rng.uniform(0.5, 10.0)
            x_l = rng.uniform(-5.0, 5.0)
            x_r = rng.uniform(-5.0, 5.0)
            p = params_from_scaled(x_g, x_l, x_r)
            assert p.x_g == pytest.approx(x_g, rel=1e-14)
            assert p.x_l == pytest.approx(x_l, abs=1e-14)
            assert abs(p.x_r - x_r) <= 1e-14 * max(1.0, p.eps_g / p.temp)


class TestModelParamsValidation:
    def test_cross_coupling_range(self):
        with pytest.raises(DomainError, match="0 <= r_p <= 1"):
            params_from_scaled(2.0, 0.0, 0.0, r_p=1.5)
        with pytest.raises(DomainError, match="0 <= r_l <= 1"):
            params_from_scaled(2.0, 0.0, 0.0, r_l=-0.1)

    def test_complex_cross_coupling_rejected(self):
        with pytest.raises(DomainError, match="real"):
            params_from_scaled(2.0, 0.0, 0.0, r_p=0.5 + 0.1j)

    @pytest.mark.parametrize("kwargs", [
        {"eps_g": -1.0}, {"eps_g": 0.0}, {"temp": 0.0}, {"temp_p": -5.0},
        {"gamma_p": -1.0}, {"tau": -0.5}, {"tau": math.nan},
        {"delta21": -1.0}, {"delta21": 11560.0}, {"mu_l": math.inf},
    ])
    def test_invalid_fields(self, kwargs):
        base = dict(eps_g=11560.0, eps_l=0.0, mu_l=0.0, mu_r=0.0,
                    temp=295.0, temp_p=5780.0)
        base.update(kwargs)
        with pytest.raises(DomainError):
            ModelParams(**base)

    def test_infinite_tau_allowed(self):
        p = params_from_scaled(2.0, 0.0, 0.0, tau=INFINITE)
        assert p.tau == INFINITE

    def test_zero_gamma_allowed(self):
        # a disconnected channel is legal; uniqueness is the solver's concern
        p = params_from_scaled(2.0, 0.0, 0.0, gamma_p=0.0)
        assert p.gamma_p == 0.0


class TestBuildRates:
    def test_photon_cross_terms_vanish_without_coupling(self):
        r = build_rates(params_from_scaled(2.0, 0.3, 1.0, r_p=0.0, r_l=0.4))
        assert r.b_plus[0, 1] == 0.0 and r.b_plus[1, 0] == 0.0
        assert r.b_minus[0, 1] == 0.0 and r.b_minus[1, 0] == 0.0
        assert r.f_l_plus[0, 1] != 0.0  # lead cross coupling still present

    def test_diagonal_absorption_value(self):
        r = build_rates(params_from_scaled(2.0, 0.0, 0.0, gamma=1.0))
        assert r.b_plus[0, 0] == pytest.approx(0.15651764274966565, rel=1e-12)

    def test_cross_to_diagonal_ratio_is_r(self, rng):
        for _ in range(200):
            p = draw_params(rng)
            r = build_rates(p)
            if p.r_p > 0:
                assert r.b_plus[0, 1] / r.b_plus[0, 0] == pytest.approx(p.r_p, rel=1e-15)
                assert r.b_minus[0, 1] / r.b_minus[0, 0] == pytest.approx(p.r_p, rel=1e-15)
            if p.r_l > 0:
                assert r.f_l_plus[0, 1] / r.f_l_plus[0, 0] == pytest.approx(p.r_l, rel=1e-15)

    def test_degenerate_symmetry(self, rng):
        for _ in range(100):
            r = build_rates(draw_params(rng))
            assert r.b_plus[0, 0] == r.b_plus[1, 1]
            assert r.b_minus[0, 0] == r.b_minus[1, 1]
            assert r.f_l_plus[0, 0] == r.f_l_plus[1, 1]
            assert r.f_l_minus[0, 0] == r.f_l_minus[1, 1]
            assert r.b_plus[0, 1] == r.b_plus[1, 0]

    def test_all_entries_nonnegative(self, rng):
        for _ in range(1000):
            assert np.all(build_rates(draw_params(rng)).as_array() >= 0.0)

    def test_detailed_balance_ratios(self, rng):
        for _ in range(300):
            p = draw_params(rng)
            r = build_rates(p)
            assert r.b_plus[0, 0] / r.b_minus[0, 0] == pytest.approx(
                math.exp(-p.x_g), rel=1e-12)
            assert r.f_l_plus[0, 0] / r.f_l_minus[0, 0] == pytest.approx(
                math.exp(-p.x_l), rel=1e-12)
            assert r.f_r_plus / r.f_r_minus == pytest.approx(
                math.exp(-p.x_r), rel=1e-12)

    def test_split_levels_use_their_own_transition_energies(self):
        p = params_from_scaled(2.0, 0.5, 1.5, r_p=0.4, r_l=0.6, delta21=590.0)
        r = build_rates(p)
        x_1 = p.eps_g / p.temp_p
        x_2 = (p.eps_g - p.delta21) / p.temp_p
        assert r.b_plus[0, 0] == pytest.approx(bose_occupation(x_1), rel=1e-14)
        assert r.b_plus[1, 1] == pytest.approx(bose_occupation(x_2), rel=1e-14)
        # cross entries carry the column's energy argument
        assert r.b_plus[0, 1] == pytest.approx(0.4 * bose_occupation(x_2), rel=1e-14)
        assert r.b_plus[1, 0] == pytest.approx(0.4 * bose_occupation(x_1), rel=1e-14)
        x_g2 = (p.eps_l + p.delta21 - p.mu_l) / p.temp
        assert r.f_l_plus[1, 1] == pytest.approx(fermi_occupation(x_g2), rel=1e-14)
