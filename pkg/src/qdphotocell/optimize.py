"""Power maximization over scaled energy variables.

The output power is positive only inside the operating window
x_g < x_r - x_l < x_g / (1 - eta_c), which collapses to a thin diagonal
strip near equilibrium.  A plain rectangular seed grid in (x_l, x_r) can
miss the strip entirely, so whenever x_r is free the search runs in
window-relative coordinates: x_r = x_l + x_g * (1 + nu * eta_c / (1 - eta_c))
with nu in (0, 1).  Seeding uses a coarse grid per free dimension; the top
seeds are refined with a deterministic Nelder-Mead simplex.  No randomness
anywhere: identical configuration produces bit-identical results.

Points with non-positive power (or current flowing backwards) score zero so
the maximizer stays inside the converter regime; a vanished operating region
is reported via the ``degenerate`` flag rather than an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoUniqueSteadyStateError
from .model import INFINITE, ModelParams, _bose_array, _fermi_array, params_from_scaled

__all__ = [
    "DEFAULT_BOUNDS",
    "OptResult",
    "CurvePoint",
    "maximize_power",
    "efficiency_at_max_power_curve",
    "grid_search_power",
    "steady_observables_grid",
    "nelder_mead",
]

#: Default search box; occupations saturate beyond |x| ~ 20.
DEFAULT_BOUNDS = {
    "x_g": (0.1, 30.0),
    "x_l": (-20.0, 20.0),
    "x_r": (-20.0, 20.0),
}

_FREE_ORDER = ("x_g", "x_l", "x_r")

# Interior margin for the window coordinate; both window edges carry zero power.
_NU_MARGIN = 1e-9

# Winning coordinates within this fraction of the box range of an edge are
# reported as active bounds.
_BOUND_FLAG_FRACTION = 1e-6


def steady_observables_grid(params: ModelParams, x_g, x_l, x_r) -> dict:
    """Vectorized steady-state observables over broadcastable scaled energies.

    Returns a dict with arrays ``power`` (units k_B * temp_p * gamma_p),
    ``j`` (converter current), ``rho12_re``, ``rho12_im``, and the raw state
    vectors ``v`` with trailing dimension 6.  Supports the degenerate
    configuration only (delta21 = 0); the assembled systems mirror
    :func:`qdphotocell.dynamics.build_generator` entry for entry.
    """
    if params.delta21 != 0.0:
        raise DomainError("the vectorized evaluator supports the degenerate "
                          "configuration only (delta21 = 0)")
    x_g, x_l, x_r = np.broadcast_arrays(
        np.asarray(x_g, dtype=float), np.asarray(x_l, dtype=float),
        np.asarray(x_r, dtype=float))
    if np.any(x_g <= 0.0):
        raise DomainError("x_g must be positive everywhere on the grid")
    shape = x_g.shape
    gp, gl, gr = params.gamma_p, params.gamma_l, params.gamma_r
    rp, rl = params.r_p, params.r_l
    tau = params.tau

    n = _bose_array(x_g)
    fl = _fermi_array(x_l)
    fr = _fermi_array(x_r)
    bp = gp * n
    bm = gp * (1.0 + n)
    flp = gl * fl
    flm = gl * (1.0 - fl)
    frp = gr * fr
    frm = gr * (1.0 - fr)

    M = np.zeros(shape + (6, 6))
    M[..., 0, 0] = -2.0 * (bp + flm)
    M[..., 0, 2] = 2.0 * bm
    M[..., 0, 3] = 2.0 * flp
    M[..., 0, 4] = -2.0 * (rp * bp + rl * flm)
    M[..., 1, 1] = -2.0 * (bp + flm)
    M[..., 1, 2] = 2.0 * bm
    M[..., 1, 3] = 2.0 * flp
    M[..., 1, 4] = -2.0 * (rp * bp + rl * flm)
    M[..., 2, 0] = 2.0 * bp
    M[..., 2, 1] = 2.0 * bp
    M[..., 2, 2] = -2.0 * (2.0 * bm + frm)
    M[..., 2, 3] = 2.0 * frp
    M[..., 2, 4] = 4.0 * rp * bp
    # normalization row replaces the empty-state balance row
    M[..., 3, 0] = 1.0
    M[..., 3, 1] = 1.0
    M[..., 3, 2] = 1.0
    M[..., 3, 3] = 1.0
    dark = (tau == 0.0 and (gp == 0.0 or rp == 1.0) and (gl == 0.0 or rl == 1.0)
            and not (gp == 0.0 and gl == 0.0))
    if tau == INFINITE or dark:
        # coherence pinned to zero (structural infinite decoherence, or the
        # dark-state degeneracy resolved on its decoherence-continuity branch)
        M[..., 4, 4] = 1.0
        M[..., 5, 5] = 1.0
    else:
        M[..., 4, 0] = -(rp * bp + rl * flm)
        M[..., 4, 1] = -(rp * bp + rl * flm)
        M[..., 4, 2] = 2.0 * rp * bm
        M[..., 4, 3] = 2.0 * rl * flp
        M[..., 4, 4] = -(2.0 * bp + 2.0 * flm + tau)
        M[..., 5, 5] = -(2.0 * bp + 2.0 * flm + tau)

    rhs = np.zeros(shape + (6, 1))
    rhs[..., 3, 0] = 1.0
    try:
        v = np.linalg.solve(M, rhs)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NoUniqueSteadyStateError(
            f"batched steady-state solve hit a singular system: {exc}") from exc

    u = v[..., 4]
    j = (4.0 * flp * v[..., 3]
         - 2.0 * flm * (v[..., 0] + v[..., 1])
         - 4.0 * rl * flm * u)
    eta_c = 1.0 - params.temp / params.temp_p
    gamma_ref = gp if gp > 0.0 else 1.0
    power = (x_g - (1.0 - eta_c) * (x_r - x_l)) * j / gamma_ref
    return {"power": power, "j": j, "rho12_re": u, "rho12_im": v[..., 5], "v": v}


def nelder_mead(fn, x0, step, *, f_rel_tol=1e-9, x_rel_tol=1e-8,
                x_scale=None, max_evals=2000):
    """Deterministic Nelder-Mead minimization with relative tolerances.

    Parameters
    ----------
    fn : callable
        Objective; must accept a 1-D numpy array.
    x0 : array
        Initial vertex; the simplex is completed by displacing each
        coordinate by ``step``.
    step : array
        Per-dimension initial displacement.
    f_rel_tol, x_rel_tol : float
        Termination when the simplex function spread falls below
        f_rel_tol * (|best| + tiny) and the coordinate spread below
        x_rel_tol per dimension relative to ``x_scale``.
    x_scale : array, optional
        Reference scale per dimension (defaults to max(|x0|, 1)).

    Returns
    -------
    (x_best, f_best, evals, converged, f_spread, x_spread)
    """
    x0 = np.asarray(x0, dtype=float)
    step = np.asarray(step, dtype=float)
    dim = x0.size
    if x_scale is None:
        x_scale = np.maximum(np.abs(x0), 1.0)
    x_scale = np.asarray(x_scale, dtype=float)

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    verts = [x0.copy()]
    for d in range(dim):
        x = x0.copy()
        x[d] += step[d]
        verts.append(x)
    fvals = [fn(v) for v in verts]
    evals = dim + 1
    converged = False

    def spread():
        fs = max(fvals) - min(fvals)
        arr = np.array(verts)
        xs = float(np.max((arr.max(axis=0) - arr.min(axis=0)) / x_scale))
        return fs, xs

    while evals < max_evals:
        order = sorted(range(dim + 1), key=lambda i: (fvals[i], tuple(verts[i])))
        verts = [verts[i] for i in order]
        fvals = [fvals[i] for i in order]
        f_spread, x_spread = spread()
        if f_spread <= f_rel_tol * (abs(fvals[0]) + 1e-300) and x_spread <= x_rel_tol:
            converged = True
            break

        centroid = np.mean(verts[:-1], axis=0)
        xr = centroid + alpha * (centroid - verts[-1])
        fr = fn(xr); evals += 1
        if fvals[0] <= fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[0]:
            xe = centroid + gamma * (centroid - verts[-1])
            fe = fn(xe); evals += 1
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
            continue
        xc = centroid + rho * (verts[-1] - centroid)
        fc = fn(xc); evals += 1
        if fc < fvals[-1]:
            verts[-1], fvals[-1] = xc, fc
            continue
        for i in range(1, dim + 1):
            verts[i] = verts[0] + sigma * (verts[i] - verts[0])
            fvals[i] = fn(verts[i]); evals += 1

    order = sorted(range(dim + 1), key=lambda i: (fvals[i], tuple(verts[i])))
    best = order[0]
    f_spread, x_spread = spread()
    return verts[best], fvals[best], evals, converged, f_spread, x_spread


@dataclass(frozen=True)
class OptResult:
    """Outcome of a power maximization.

    ``p_max`` is in units of k_B * temp_p * gamma_p.  ``degenerate`` marks an
    empty operating region (no seed produced positive power); ``eta_at_pmax``
    is then None.  ``active_bounds`` lists free variables whose optimum sits
    on the search box within 1e-6 of the range.
    """

    x_opt: dict
    p_max: float
    eta_at_pmax: float | None
    evals: int
    converged: bool
    degenerate: bool = False
    active_bounds: tuple = ()
    f_spread: float = math.nan
    x_spread: float = math.nan


def _validated_free_and_bounds(free, bounds):
    unknown_free = set(free) - set(_FREE_ORDER)
    if unknown_free:
        raise DomainError(f"unknown free variable(s): {sorted(unknown_free)}")
    free = tuple(f for f in _FREE_ORDER if f in set(free))
    if not free:
        raise DomainError("free variable set must be a nonempty subset of "
                          f"{_FREE_ORDER}")
    unknown = set(bounds or {}) - set(_FREE_ORDER)
    if unknown:
        raise DomainError(f"unknown bound names: {sorted(unknown)}")
    box = {k: tuple(map(float, (bounds or {}).get(k, DEFAULT_BOUNDS[k])))
           for k in _FREE_ORDER}
    for k, (lo, hi) in box.items():
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise DomainError(f"bounds for {k} must be finite with lo < hi, "
                              f"got ({lo}, {hi})")
    if box["x_g"][0] <= 0.0:
        raise DomainError(f"lower bound for x_g must be positive, got {box['x_g'][0]}")
    return free, box


def maximize_power(params: ModelParams, free=("x_l", "x_r"), bounds=None, *,
                   seeds_per_dim: int = 16, refine_top: int = 8,
                   f_rel_tol: float = 1e-9, x_rel_tol: float = 1e-8,
                   max_evals_per_seed: int = 2000) -> OptResult:
    """Maximize output power over the chosen scaled energy variables.

    Multi-start derivative-free search: a coarse deterministic seed grid
    (``seeds_per_dim`` points per free dimension, window-relative in the
    x_r direction), followed by Nelder-Mead refinement of the
    ``refine_top`` best seeds.  The best refined point wins; ties break
    lexicographically on the coordinates.
    """
    if params.delta21 != 0.0:
        raise DomainError("power maximization supports the degenerate "
                          "configuration only (delta21 = 0)")
    if seeds_per_dim < 2 or refine_top < 1 or max_evals_per_seed < 1:
        raise DomainError("need seeds_per_dim >= 2, refine_top >= 1, and "
                          "max_evals_per_seed >= 1")
    free, box = _validated_free_and_bounds(free, bounds)
    eta_c = 1.0 - params.temp / params.temp_p
    base = {"x_g": params.x_g, "x_l": params.x_l, "x_r": params.x_r}

    if eta_c <= 0.0:
        # no free-energy source: power <= 0 everywhere
        return OptResult(x_opt={k: base[k] for k in free}, p_max=0.0,
                         eta_at_pmax=None, evals=0, converged=False,
                         degenerate=True)

    use_nu = "x_r" in free
    window = eta_c / (1.0 - eta_c)

    def decode(t):
        vals = dict(base)
        for name, value in zip(free, t):
            vals[name] = value
        if use_nu:
            nu = vals["x_r"]  # slot holds the window coordinate
            vals["x_r"] = vals["x_l"] + vals["x_g"] * (1.0 + nu * window)
        return vals["x_g"], vals["x_l"], vals["x_r"]

    def in_box(xg, xl, xr):
        # bounds constrain the free variables only; fixed ones come from base
        vals = {"x_g": xg, "x_l": xl, "x_r": xr}
        return all(box[name][0] <= vals[name] <= box[name][1] for name in free)

    # clip raw coordinates into their boxes; nu into its margin interval
    t_lo, t_hi = [], []
    for name in free:
        if name == "x_r":
            t_lo.append(_NU_MARGIN)
            t_hi.append(1.0 - _NU_MARGIN)
        else:
            t_lo.append(box[name][0])
            t_hi.append(box[name][1])
    t_lo = np.array(t_lo)
    t_hi = np.array(t_hi)

    evals = 0

    def objective(t):
        nonlocal evals
        evals += 1
        t = np.minimum(np.maximum(t, t_lo), t_hi)
        xg, xl, xr = decode(t)
        if not in_box(xg, xl, xr):
            return 0.0
        obs = steady_observables_grid(params, xg, xl, xr)
        p = float(obs["power"])
        return p if p > 0.0 else 0.0

    # ---- seed grid (vectorized) ----
    axes = [np.linspace(lo, hi, seeds_per_dim) for lo, hi in zip(t_lo, t_hi)]
    if use_nu:
        # strictly interior window points seed better than edge-touching ones
        idx = free.index("x_r")
        axes[idx] = np.linspace(0.5 / seeds_per_dim, 1.0 - 0.5 / seeds_per_dim,
                                seeds_per_dim)
    mesh = np.meshgrid(*axes, indexing="ij")
    t_grid = np.stack([m.ravel() for m in mesh], axis=-1)
    decoded = np.array([decode(t) for t in t_grid])
    xg_a, xl_a, xr_a = decoded[:, 0], decoded[:, 1], decoded[:, 2]
    obs = steady_observables_grid(params, xg_a, xl_a, xr_a)
    p_grid = np.where(obs["power"] > 0.0, obs["power"], 0.0)
    arrays = {"x_g": xg_a, "x_l": xl_a, "x_r": xr_a}
    inside = np.ones(t_grid.shape[0], dtype=bool)
    for name in free:
        inside &= (arrays[name] >= box[name][0]) & (arrays[name] <= box[name][1])
    p_grid = np.where(inside, p_grid, 0.0)
    evals += t_grid.shape[0]

    if not np.any(p_grid > 0.0):
        return OptResult(x_opt={k: base[k] for k in free}, p_max=0.0,
                         eta_at_pmax=None, evals=evals, converged=False,
                         degenerate=True)

    ranked = sorted(range(t_grid.shape[0]),
                    key=lambda i: (-p_grid[i], tuple(t_grid[i])))
    seeds = [i for i in ranked[:refine_top] if p_grid[i] > 0.0]

    # ---- refinement ----
    step = 0.05 * (t_hi - t_lo)
    candidates = []
    for i in seeds:
        t0 = np.minimum(np.maximum(t_grid[i], t_lo + step), t_hi - step)
        tb, fb, used, conv, fs, xs = nelder_mead(
            lambda t: -objective(t), t0, step,
            f_rel_tol=f_rel_tol, x_rel_tol=x_rel_tol,
            x_scale=t_hi - t_lo, max_evals=max_evals_per_seed)
        tb = np.minimum(np.maximum(tb, t_lo), t_hi)
        candidates.append((-fb, decode(tb), conv, fs, xs))
    candidates.sort(key=lambda c: (-c[0], c[1]))
    p_best, (xg, xl, xr), conv, fs, xs = candidates[0]

    x_opt = {}
    for name, value in zip(_FREE_ORDER, (xg, xl, xr)):
        if name in free:
            x_opt[name] = float(value)
    active = tuple(
        name for name in free
        if min(abs(x_opt[name] - box[name][0]), abs(x_opt[name] - box[name][1]))
        <= _BOUND_FLAG_FRACTION * (box[name][1] - box[name][0]))
    eta = 1.0 - (1.0 - eta_c) * (xr - xl) / xg if p_best > 0.0 else None
    return OptResult(x_opt=x_opt, p_max=float(p_best), eta_at_pmax=eta,
                     evals=evals, converged=bool(conv),
                     degenerate=False, active_bounds=active,
                     f_spread=float(fs), x_spread=float(xs))


@dataclass(frozen=True)
class CurvePoint:
    """One point of an efficiency-at-maximum-power curve."""

    eta_c: float
    eta_ca: float
    eta_at_pmax: float | None
    p_max: float
    x_opt: dict = field(default_factory=dict)
    converged: bool = False
    degenerate: bool = False
    error: str | None = None


def efficiency_at_max_power_curve(base: ModelParams, eta_c_grid,
                                  free=("x_g", "x_l", "x_r"), bounds=None,
                                  **opt_kwargs) -> list[CurvePoint]:
    """Efficiency at maximum power as a function of Carnot efficiency.

    For each eta_c the lead temperature is set to (1 - eta_c) * temp_p with
    the photon temperature held at its base value, the scaled operating
    variables of ``base`` are carried over, and power is maximized over
    ``free``.  Optimizer failures at individual points are recorded as
    flagged gaps and the curve continues.
    """
    points = []
    for eta_c in eta_c_grid:
        eta_c = float(eta_c)
        if not 0.0 < eta_c < 1.0:
            raise DomainError(f"eta_c values must lie in (0, 1), got {eta_c}")
        eta_ca = 1.0 - math.sqrt(1.0 - eta_c)
        params = params_from_scaled(
            base.x_g, base.x_l, base.x_r,
            temp=(1.0 - eta_c) * base.temp_p, temp_p=base.temp_p,
            gamma_p=base.gamma_p, gamma_l=base.gamma_l, gamma_r=base.gamma_r,
            r_p=base.r_p, r_l=base.r_l, tau=base.tau, delta21=base.delta21)
        try:
            res = maximize_power(params, free=free, bounds=bounds, **opt_kwargs)
        except NoUniqueSteadyStateError as exc:
            points.append(CurvePoint(eta_c=eta_c, eta_ca=eta_ca,
                                     eta_at_pmax=None, p_max=math.nan,
                                     error=str(exc)))
            continue
        points.append(CurvePoint(
            eta_c=eta_c, eta_ca=eta_ca, eta_at_pmax=res.eta_at_pmax,
            p_max=res.p_max, x_opt=res.x_opt, converged=res.converged,
            degenerate=res.degenerate))
    return points


def grid_search_power(params: ModelParams, free, bounds=None,
                      n_per_dim: int = 400, chunk: int = 65536):
    """Exhaustive rectangular grid search oracle over the original variables.

    Evaluates power on an ``n_per_dim`` grid per free dimension inside the
    box and returns (p_max, coords) with the grid's power clipped at zero
    exactly like the optimizer objective.  Intended as an independent check
    of :func:`maximize_power`, not for production use.
    """
    free, box = _validated_free_and_bounds(free, bounds)
    base = {"x_g": params.x_g, "x_l": params.x_l, "x_r": params.x_r}
    axes = [np.linspace(*box[name], n_per_dim) for name in free]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.ravel() for m in mesh]
    total = flat[0].size

    best_p = 0.0
    best_coords = {name: base[name] for name in free}
    for start in range(0, total, chunk):
        sl = slice(start, min(start + chunk, total))
        vals = dict(base)
        for name, arr in zip(free, flat):
            vals[name] = arr[sl]
        obs = steady_observables_grid(params, vals["x_g"], vals["x_l"], vals["x_r"])
        p = np.where(obs["power"] > 0.0, obs["power"], 0.0)
        k = int(np.argmax(p))
        if p[k] > best_p:
            best_p = float(p[k])
            best_coords = {name: float(np.asarray(vals[name]).ravel()[k]
                                       if np.ndim(vals[name]) else vals[name])
                           for name in free}
    return best_p, best_coords
