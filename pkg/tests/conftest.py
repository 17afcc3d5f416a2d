"""Shared draw helpers for the property suites."""

import numpy as np
import pytest

from qdphotocell import build_generator, build_rates, params_from_scaled
from qdphotocell.dynamics import spectral_gap


def draw_params(rng, **fixed):
    """One random parameter draw over the documented property-test ranges:

    r_p, r_l uniform in [0, 1]; x_g in [0.5, 10]; x_l, x_r in [-5, 5];
    tau in [0, 10]; unit rates; lead/photon temperatures 295 K / 5780 K.
    """
    values = dict(
        x_g=rng.uniform(0.5, 10.0),
        x_l=rng.uniform(-5.0, 5.0),
        x_r=rng.uniform(-5.0, 5.0),
        r_p=rng.uniform(0.0, 1.0),
        r_l=rng.uniform(0.0, 1.0),
        tau=rng.uniform(0.0, 10.0),
    )
    values.update(fixed)
    return params_from_scaled(**values)


def draw_fast_mixing_params(rng, min_gap=0.11, **fixed):
    """Draw parameters whose slowest relaxation rate is at least ``min_gap``.

    The time-integration oracle runs for a fixed duration, so its transient
    must decay below the comparison tolerance; draws with a smaller spectral
    gap are rejected (the oracle-equivalence statement presumes the
    transient has died out).
    """
    while True:
        p = draw_params(rng, **fixed)
        gen = build_generator(build_rates(p), p.delta21, p.tau)
        if spectral_gap(gen) >= min_gap:
            return p, gen


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
