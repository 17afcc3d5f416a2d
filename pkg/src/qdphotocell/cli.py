"""Command-line front end.

Subcommands: ``steady`` (print the stationary state), ``thermo`` (currents,
power, efficiencies), ``maximize`` (power optimization), ``fig2`` / ``fig3a``
/ ``fig3b`` (canned sweeps written as CSV or JSON), and ``selftest``.

Configuration comes from an optional JSON file (--config) overlaid with
per-parameter flags; the fully resolved configuration is echoed on stdout
with every run so results are reproducible from their own output.  Human-
readable numbers are printed at 6 significant digits; machine formats go to
files at full precision.

Exit status: 0 success, 2 configuration or parameter error, 3 solver or
runtime failure, 4 output path exists without --force, 5 selftest failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from . import __version__
from .dynamics import build_generator, steady_state
from .errors import ConfigError, DomainError, OutputExistsError, QdpcError
from .experiments import (
    default_eta_c_grid,
    default_r_grid,
    run_fig2,
    run_fig3a,
    run_fig3b,
)
from .model import INFINITE, ModelParams, build_rates, params_from_scaled
from .optimize import maximize_power
from .selftest import run_selftest
from .thermo import thermo_report

__all__ = ["RunConfig", "parse_config", "dispatch", "main"]

_WORKERS_ENV = "QDPHOTOCELL_WORKERS"

_SCALED_KEYS = {"x_g", "x_l", "x_r"}
_PHYSICAL_KEYS = {"eps_g", "eps_l", "mu_l", "mu_r"}
_MODEL_KEYS = {"temp", "temp_p", "gamma", "gamma_p", "gamma_l", "gamma_r",
               "r_p", "r_l", "tau", "delta21"}
_OPTIMIZER_KEYS = {"free", "bounds", "seeds_per_dim", "refine_top",
                   "f_rel_tol", "x_rel_tol", "max_evals_per_seed"}
_SWEEP_KEYS = {"r_step", "eta_c_lo", "eta_c_hi", "eta_c_step",
               "r_l_values", "tau_values", "x_g"}
_OUTPUT_KEYS = {"path", "format", "force", "workers"}
_TOP_KEYS = {"scaled", "physical", "model", "optimizer", "sweep", "output"}

_MODEL_DEFAULTS = {"temp": 295.0, "temp_p": 5780.0, "gamma": 1.0,
                   "r_p": 0.0, "r_l": 0.0, "tau": 0.0, "delta21": 0.0}
_SCALED_DEFAULTS = {"x_g": 2.0, "x_l": 0.0, "x_r": 0.0}


def _parse_tau(value):
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinite", "infinity"):
            return INFINITE
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"tau must be a number or 'inf', got {value!r}") from None
    return float(value)


@dataclass
class RunConfig:
    """Fully resolved run configuration."""

    params: ModelParams
    free: tuple = ("x_l", "x_r")
    bounds: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    r_step: float = 0.05
    eta_c_lo: float = 0.05
    eta_c_hi: float = 0.95
    eta_c_step: float = 0.05
    r_l_values: tuple = (0.0, 0.3, 0.9)
    tau_values: tuple = (0.0, 1.0, 10.0, INFINITE)
    sweep_x_g: float = 2.0
    out: str | None = None
    fmt: str = "csv"
    force: bool = False
    workers: int | None = None
    explicit_model_keys: frozenset = frozenset()

    def echo(self) -> dict:
        """JSON-serializable echo of every resolved setting."""
        p = self.params
        return {
            "version": __version__,
            "params": {
                "eps_g": p.eps_g, "eps_l": p.eps_l, "delta21": p.delta21,
                "mu_l": p.mu_l, "mu_r": p.mu_r, "temp": p.temp,
                "temp_p": p.temp_p, "gamma_p": p.gamma_p, "gamma_l": p.gamma_l,
                "gamma_r": p.gamma_r, "r_p": p.r_p, "r_l": p.r_l,
                "tau": "inf" if p.tau == INFINITE else p.tau,
                "x_g": p.x_g, "x_l": p.x_l, "x_r": p.x_r,
            },
            "optimizer": {"free": list(self.free),
                          "bounds": {k: list(v) for k, v in self.bounds.items()},
                          **self.optimizer},
            "sweep": {"r_step": self.r_step, "eta_c_lo": self.eta_c_lo,
                      "eta_c_hi": self.eta_c_hi, "eta_c_step": self.eta_c_step,
                      "r_l_values": list(self.r_l_values),
                      "tau_values": ["inf" if t == INFINITE else t
                                     for t in self.tau_values],
                      "x_g": self.sweep_x_g},
            "output": {"path": self.out, "format": self.fmt,
                       "force": self.force, "workers": self.workers},
        }


def _reject_unknown(block: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def parse_config(source: dict | None, overrides: dict | None = None) -> RunConfig:
    """Validate a config document plus flag overrides into a RunConfig.

    ``source`` is the parsed JSON config file (or None); ``overrides`` maps
    flag names (x_g, r_p, temp, ...) to values and wins over file values.
    Exactly one of the scaled/physical parameter blocks may be present;
    with neither, documented defaults apply (scaled x_g=2, x_l=0, x_r=0,
    temp 295, photon temperature 5780, unit rates, no cross coupling).
    """
    source = dict(source or {})
    overrides = dict(overrides or {})
    _reject_unknown(source, _TOP_KEYS, "config")
    scaled = dict(source.get("scaled") or {})
    physical = dict(source.get("physical") or {})
    model = dict(source.get("model") or {})
    opt = dict(source.get("optimizer") or {})
    sweep = dict(source.get("sweep") or {})
    output = dict(source.get("output") or {})
    _reject_unknown(scaled, _SCALED_KEYS, "config.scaled")
    _reject_unknown(physical, _PHYSICAL_KEYS, "config.physical")
    _reject_unknown(model, _MODEL_KEYS, "config.model")
    _reject_unknown(opt, _OPTIMIZER_KEYS, "config.optimizer")
    _reject_unknown(sweep, _SWEEP_KEYS, "config.sweep")
    _reject_unknown(output, _OUTPUT_KEYS, "config.output")

    if "scaled" in source and "physical" in source:
        raise ConfigError("config must contain at most one of the 'scaled' "
                          "and 'physical' parameter blocks, not both")

    for key in ("temp", "temp_p", "gamma", "r_p", "r_l", "tau"):
        if overrides.get(key) is not None:
            model[key] = overrides[key]
    explicit_model_keys = frozenset(model)
    scaled_overrides = {k: overrides[k] for k in ("x_g", "x_l", "x_r")
                        if overrides.get(k) is not None}
    if scaled_overrides and physical:
        raise ConfigError("scaled overrides (--x-g/--x-l/--x-r) cannot be "
                          "combined with a 'physical' parameter block")
    scaled.update(scaled_overrides)

    merged_model = dict(_MODEL_DEFAULTS)
    merged_model.update(model)
    merged_model["tau"] = _parse_tau(merged_model["tau"])
    gamma = merged_model.pop("gamma")
    gammas = {f"gamma_{c}": merged_model.pop(f"gamma_{c}", None) for c in "plr"}
    gammas = {k: gamma if v is None else float(v) for k, v in gammas.items()}

    try:
        if physical:
            params = ModelParams(
                eps_g=float(physical.get("eps_g", 11560.0)),
                eps_l=float(physical.get("eps_l", 0.0)),
                mu_l=float(physical.get("mu_l", 0.0)),
                mu_r=float(physical.get("mu_r", 11560.0)),
                temp=float(merged_model["temp"]),
                temp_p=float(merged_model["temp_p"]),
                r_p=float(merged_model["r_p"]), r_l=float(merged_model["r_l"]),
                tau=merged_model["tau"], delta21=float(merged_model["delta21"]),
                **gammas)
        else:
            merged_scaled = dict(_SCALED_DEFAULTS)
            merged_scaled.update(scaled)
            params = params_from_scaled(
                float(merged_scaled["x_g"]), float(merged_scaled["x_l"]),
                float(merged_scaled["x_r"]),
                temp=float(merged_model["temp"]),
                temp_p=float(merged_model["temp_p"]),
                gamma_p=gammas["gamma_p"], gamma_l=gammas["gamma_l"],
                gamma_r=gammas["gamma_r"],
                r_p=float(merged_model["r_p"]), r_l=float(merged_model["r_l"]),
                tau=merged_model["tau"], delta21=float(merged_model["delta21"]))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc

    free = tuple(opt.get("free", ("x_l", "x_r")))
    bounds = {k: tuple(map(float, v)) for k, v in (opt.get("bounds") or {}).items()}
    optimizer = {k: opt[k] for k in
                 ("seeds_per_dim", "refine_top", "f_rel_tol", "x_rel_tol",
                  "max_evals_per_seed") if k in opt}

    workers = output.get("workers")
    if overrides.get("workers") is not None:
        workers = overrides["workers"]
    if workers is None and os.environ.get(_WORKERS_ENV):
        try:
            workers = int(os.environ[_WORKERS_ENV])
        except ValueError:
            raise ConfigError(f"{_WORKERS_ENV} must be an integer, got "
                              f"{os.environ[_WORKERS_ENV]!r}") from None

    tau_values = tuple(_parse_tau(t) for t in sweep.get("tau_values",
                                                        (0.0, 1.0, 10.0, "inf")))
    cfg = RunConfig(
        params=params, free=free, bounds=bounds, optimizer=optimizer,
        r_step=float(sweep.get("r_step", 0.05)),
        eta_c_lo=float(sweep.get("eta_c_lo", 0.05)),
        eta_c_hi=float(sweep.get("eta_c_hi", 0.95)),
        eta_c_step=float(sweep.get("eta_c_step", 0.05)),
        r_l_values=tuple(float(r) for r in sweep.get("r_l_values", (0.0, 0.3, 0.9))),
        tau_values=tau_values,
        sweep_x_g=float(sweep.get("x_g", 2.0)),
        out=overrides.get("out") or output.get("path"),
        fmt=overrides.get("fmt") or output.get("format", "csv"),
        force=bool(overrides.get("force") or output.get("force", False)),
        workers=workers,
        explicit_model_keys=explicit_model_keys,
    )
    if cfg.fmt not in ("csv", "json"):
        raise ConfigError(f"output format must be 'csv' or 'json', got {cfg.fmt!r}")
    return cfg


def _fmt(value, digits=6) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float) and value == INFINITE:
        return "inf"
    return format(value, f".{digits}g")


def _echo_config(cfg: RunConfig) -> None:
    print("resolved-config: " + json.dumps(cfg.echo(), sort_keys=True))


def _cmd_steady(cfg: RunConfig) -> int:
    p = cfg.params
    sol = steady_state(build_generator(build_rates(p), p.delta21, p.tau))
    s = sol.state
    pops = s.populations_clamped
    print(f"x_g = {_fmt(p.x_g)}  x_l = {_fmt(p.x_l)}  x_r = {_fmt(p.x_r)}")
    for name, value in zip(("rho1", "rho2", "rho_e", "rho0"), pops):
        print(f"{name:6s} = {_fmt(value)}")
    print(f"rho12  = {_fmt(s.rho12.real)} + {_fmt(s.rho12.imag)}i "
          f"(|rho12| = {_fmt(abs(s.rho12))})")
    print(f"residual = {_fmt(sol.residual, 3)}  "
          f"replaced-row residual = {_fmt(sol.replaced_row_residual, 3)}")
    if sol.dark_state_branch:
        print("note: dark-state degeneracy resolved on the coherence-free branch")
    return 0


def _cmd_thermo(cfg: RunConfig) -> int:
    p = cfg.params
    sol = steady_state(build_generator(build_rates(p), p.delta21, p.tau))
    rep = thermo_report(sol.state, p)
    print(f"j_l = {_fmt(rep.j_l)}   j_r = {_fmt(rep.j_r)}   J = {_fmt(rep.j)}")
    print(f"q_dot_p = {_fmt(rep.q_dot_p)}   power = {_fmt(rep.power)}")
    print(f"eta = {_fmt(rep.eta)}   eta_c = {_fmt(rep.eta_c)}   "
          f"eta_ca = {_fmt(rep.eta_ca)}")
    print(f"stationary = {rep.stationary}")
    return 0


def _cmd_maximize(cfg: RunConfig) -> int:
    res = maximize_power(cfg.params, free=cfg.free, bounds=cfg.bounds,
                         **cfg.optimizer)
    x_desc = "  ".join(f"{k} = {_fmt(v)}" for k, v in res.x_opt.items())
    print(f"p_max = {_fmt(res.p_max)} kB*temp_p*gamma_p at {x_desc}")
    print(f"eta_at_pmax = {_fmt(res.eta_at_pmax)}   evals = {res.evals}   "
          f"converged = {res.converged}   degenerate = {res.degenerate}")
    if res.active_bounds:
        print(f"warning: optimum sits on bounds of {', '.join(res.active_bounds)}")
    return 0


def _sweep_common(cfg: RunConfig, cmd: str):
    out = cfg.out or f"{cmd}.{cfg.fmt}"
    eta_grid = default_eta_c_grid(cfg.eta_c_lo, cfg.eta_c_hi, cfg.eta_c_step)
    return out, eta_grid


def _cmd_fig2(cfg: RunConfig) -> int:
    out, _ = _sweep_common(cfg, "fig2")
    p = cfg.params
    table = run_fig2(default_r_grid(cfg.r_step), temp=p.temp, temp_p=p.temp_p,
                     x_g=cfg.sweep_x_g, tau=p.tau, gamma=p.gamma_p,
                     workers=cfg.workers, **cfg.optimizer)
    table.write(out, cfg.fmt, force=cfg.force)
    print(f"fig2: wrote {len(table.rows)} rows to {out}")
    return 0


def _fig3_r_p(cfg: RunConfig) -> float:
    # the canonical curve family fixes r_p = 0.9 unless set explicitly
    return cfg.params.r_p if "r_p" in cfg.explicit_model_keys else 0.9


def _cmd_fig3a(cfg: RunConfig) -> int:
    out, eta_grid = _sweep_common(cfg, "fig3a")
    p = cfg.params
    table = run_fig3a(cfg.r_l_values, eta_grid, r_p=_fig3_r_p(cfg), tau=p.tau,
                      temp_p=p.temp_p, gamma=p.gamma_p, workers=cfg.workers,
                      **cfg.optimizer)
    table.write(out, cfg.fmt, force=cfg.force)
    print(f"fig3a: wrote {len(table.rows)} rows to {out}")
    return 0


def _cmd_fig3b(cfg: RunConfig) -> int:
    out, eta_grid = _sweep_common(cfg, "fig3b")
    p = cfg.params
    table = run_fig3b(cfg.tau_values, eta_grid, r_p=_fig3_r_p(cfg), r_l=p.r_l,
                      temp_p=p.temp_p, gamma=p.gamma_p, workers=cfg.workers,
                      **cfg.optimizer)
    table.write(out, cfg.fmt, force=cfg.force)
    print(f"fig3b: wrote {len(table.rows)} rows to {out}")
    return 0


def _cmd_selftest(cfg: RunConfig) -> int:
    _passed, failed = run_selftest(report=print)
    return 0 if failed == 0 else 5


_COMMANDS = {
    "steady": _cmd_steady,
    "thermo": _cmd_thermo,
    "maximize": _cmd_maximize,
    "fig2": _cmd_fig2,
    "fig3a": _cmd_fig3a,
    "fig3b": _cmd_fig3b,
    "selftest": _cmd_selftest,
}


def dispatch(cmd: str, cfg: RunConfig) -> int:
    """Run one subcommand against a resolved configuration."""
    if cmd not in _COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    _echo_config(cfg)
    return _COMMANDS[cmd](cfg)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdphotocell",
        description="Three-level quantum-dot photocell: steady states, "
                    "thermodynamics, and power optimization.")
    parser.add_argument("--version", action="version",
                        version=f"qdphotocell {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("steady", "solve and print the stationary state"),
            ("thermo", "print currents, power, and efficiencies"),
            ("maximize", "maximize output power over scaled energies"),
            ("fig2", "sweep (r_p, r_l) map of efficiency and coherence"),
            ("fig3a", "efficiency-at-max-power curves for several r_l"),
            ("fig3b", "efficiency-at-max-power curves for several tau"),
            ("selftest", "run built-in invariant checks")):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", metavar="PATH", help="JSON config file")
        sp.add_argument("--out", metavar="PATH", help="output file for tables")
        sp.add_argument("--format", choices=("csv", "json"), dest="fmt")
        sp.add_argument("--workers", type=int,
                        help=f"parallel workers (default: ${_WORKERS_ENV} "
                             "or available CPUs)")
        sp.add_argument("--force", action="store_true",
                        help="overwrite existing output files")
        sp.add_argument("--r-p", type=float, dest="r_p")
        sp.add_argument("--r-l", type=float, dest="r_l")
        sp.add_argument("--tau", type=str)
        sp.add_argument("--x-g", type=float, dest="x_g")
        sp.add_argument("--x-l", type=float, dest="x_l")
        sp.add_argument("--x-r", type=float, dest="x_r")
        sp.add_argument("--temp", type=float)
        sp.add_argument("--temp-p", type=float, dest="temp_p")
        sp.add_argument("--gamma", type=float)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        source = None
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    source = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        overrides = {
            "r_p": args.r_p, "r_l": args.r_l,
            "tau": _parse_tau(args.tau) if args.tau is not None else None,
            "x_g": args.x_g, "x_l": args.x_l, "x_r": args.x_r,
            "temp": args.temp, "temp_p": args.temp_p, "gamma": args.gamma,
            "out": args.out, "fmt": args.fmt, "force": args.force,
            "workers": args.workers,
        }
        cfg = parse_config(source, overrides)
        return dispatch(args.command, cfg)
    except QdpcError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        if isinstance(exc, OutputExistsError):
            return 4
        if isinstance(exc, (ConfigError, DomainError)):
            return 2
        return 3
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}),
              file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
