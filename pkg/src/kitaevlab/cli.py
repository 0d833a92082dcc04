"""Command-line front end.

Every subcommand writes ``<stem>.csv`` (+ companion tables), ``<stem>.json``
and, unless ``--no-plot`` is given, ``<stem>.png`` into the output directory
(``--output-dir``, else ``$KITAEVLAB_OUTPUT_DIR``, else the working directory).

Option values resolve as: command-line flag > config file > built-in default.
The config file is INI: a ``[model]`` section applies to every subcommand and
a section named after the subcommand overrides it.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import dynamics, io, observables, phases
from .canon import equilibrium_correlations, svd_canonical
from .model import (BOUNDARIES, ModelError, ModelParams, SectorConfig, build_b_matrix,
                    build_disorder_pattern, make_sector)

log = logging.getLogger("kitaevlab")

EXIT_OK, EXIT_INVALID, EXIT_AUDIT = 0, 2, 3
ENV_OUTPUT = "KITAEVLAB_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


class AuditFailure(RuntimeError):
    pass


def _floats(s):
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    return [float(x) for x in str(s).replace(" ", "").split(",") if x]


def _ints(s):
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    return [int(x) for x in str(s).replace(" ", "").split(",") if x]


# name: (type, default, help)
_MODEL = {
    "L": (int, 16, "number of sites (even)"),
    "t": (float, 1.0, "hopping = pairing amplitude"),
    "U": (_floats, [1.0], "on-site interaction; a comma list gives a site pattern"),
    "lambda": (float, 0.0, "dimer interaction"),
    "delta0": (float, 0.0, "edge pairing"),
    "h": (float, 0.0, "edge field"),
    "boundary": (str, "open", "open, periodic or antiperiodic"),
    "sector": (str, "homogeneous-plus", "sector family or comma list of +-1"),
    "alpha": (float, None, "set the edge coupling through alpha (overrides delta0, h)"),
}

OPTIONS = {
    "spectrum": dict(_MODEL),
    "correlators": {**_MODEL, "ref": (int, 1, "reference site for two-point tables")},
    "phase-scan": {
        "L": (int, 16, "number of sites"),
        "t": (float, 1.0, "hopping"),
        "delta0": (float, 0.0, "edge pairing"),
        "h": (float, 0.0, "edge field"),
        "u_min": (float, -4.0, "U window start"),
        "u_max": (float, 4.0, "U window end"),
        "u_step": (float, 0.02, "U step"),
        "lambda_min": (float, 0.0, "lambda window start"),
        "lambda_max": (float, 1.5, "lambda window end"),
        "lambda_step": (float, 0.005, "lambda step"),
        "mode": (str, "families", "families or exhaustive"),
    },
    "majorana-number": {
        "t": (float, 1.0, "hopping"),
        "x": (float, 1.0, "weak-site ratio"),
        "N": (int, 1, "supercell length (strong site every N)"),
        "U_values": (_floats, [0.5, 1.0, 1.5, 2.0, 2.5, 3.0], "interaction strengths"),
        "random_fraction": (float, None, "random pattern: probability of a weak site"),
        "L": (int, 16, "random pattern length"),
        "seed": (int, 0, "random pattern seed"),
    },
    "beta-scan": {
        "t": (float, 1.0, "hopping"),
        "x": (float, 0.5, "weak-site ratio"),
        "N_values": (_ints, [2, 4, 8, 16], "supercell lengths"),
        "U_max": (float, 100.0, "largest U searched"),
        "tol": (float, 1e-4, "bisection tolerance on U/t"),
    },
    "quench": {
        "L": (int, 200, "number of sites"),
        "t": (float, 1.0, "hopping"),
        "U": (_floats, [1.0], "interaction; several values give a velocity curve"),
        "lambda": (float, 0.0, "dimer interaction"),
        "sector": (str, "homogeneous-plus", "sector family or comma list of +-1"),
        "alpha0": (float, 1e-6, "initial alpha"),
        "dtau": (float, 0.1, "time step"),
        "tau_max": (float, 30.0, "final time"),
    },
    "ramp": {
        "L": (int, 400, "number of sites"),
        "t": (float, 1.0, "hopping"),
        "tau_Q": (_floats, [16.0, 32.0, 64.0, 128.0], "ramp times (dU/dtau = 1/tau_Q)"),
        "U_start": (float, 0.0, "initial interaction"),
        "U_end": (float, 4.0, "final interaction"),
        "dtau": (float, 0.2, "integration step"),
        "n_out": (int, 80, "stored time points per ramp"),
        "boundary": (str, "antiperiodic", "boundary condition"),
        "method": (str, "midpoint", "midpoint or rk4"),
    },
    "oracle": {
        "L": (int, 4, "number of sites (<= 6)"),
        "t": (float, 1.0, "hopping"),
        "U": (float, 1.0, "interaction"),
        "lambda": (float, 0.0, "dimer interaction"),
        "delta0": (float, 0.0, "edge pairing"),
        "h": (float, 0.0, "edge field"),
        "tol": (float, 1e-8, "audit tolerance"),
    },
}

COMMANDS = tuple(OPTIONS)


@dataclass
class RunConfig:
    command: str
    values: dict
    output_dir: Path
    prefix: str
    plot: bool = True
    workers: Optional[int] = None
    config_file: Optional[str] = None
    sources: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        # worker count and output location are excluded: artifacts must not depend on them
        return {"command": self.command, **self.values, "plot": self.plot,
                "config_file": self.config_file}


def _flag(name):
    return "--" + name.replace("_", "-")


def _global_options(parser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", help="INI file with [model] and per-command sections", **d)
    parser.add_argument("--output-dir", help=f"output directory (default ${ENV_OUTPUT} or .)", **d)
    parser.add_argument("--prefix", help="file stem (default: the command name)", **d)
    parser.add_argument("--no-plot", action="store_true", help="skip PNG rendering", **d)
    parser.add_argument("--workers", type=int, help="thread pool size for independent points", **d)
    parser.add_argument("-v", "--verbose", action="count", **({"default": argparse.SUPPRESS} if suppress else {"default": 0}))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kitaevlab", description=__doc__.split("\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    _global_options(p, suppress=False)
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd)
        _global_options(sp, suppress=True)  # also accepted after the command name
        for name, (typ, default, hlp) in opts.items():
            sp.add_argument(_flag(name), dest=name, type=str, default=argparse.SUPPRESS,
                            help=f"{hlp} (default {default})")
    return p


def _convert(cmd, name, raw):
    typ = OPTIONS[cmd][name][0]
    try:
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {raw!r} for {name}")


def _read_file(path, cmd) -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    out = {}
    for section in cp.sections():
        if section != "model" and section not in OPTIONS:
            raise ConfigError(f"unknown config section [{section}]")
    for section in ("model", cmd):
        if not cp.has_section(section):
            continue
        for key, raw in cp.items(section):
            name = key.replace("-", "_")
            if name not in OPTIONS[cmd]:
                if section == "model" and name in _MODEL:
                    continue  # model keys a command does not use
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            out[name] = _convert(cmd, name, raw)
    return out


def parse_config(argv=None, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    args = build_parser().parse_args(argv)
    cmd = args.command
    values = {k: d for k, (_, d, _) in OPTIONS[cmd].items()}
    sources = {k: "default" for k in values}
    if args.config:
        for k, v in _read_file(args.config, cmd).items():
            values[k] = v
            sources[k] = "file"
    for k in OPTIONS[cmd]:
        if hasattr(args, k):
            values[k] = _convert(cmd, k, getattr(args, k))
            sources[k] = "flag"
    outdir = Path(args.output_dir or environ.get(ENV_OUTPUT) or ".")
    if args.workers is not None and args.workers < 1:
        raise ConfigError("workers must be >= 1")
    cfg = RunConfig(cmd, values, outdir, args.prefix or cmd, not args.no_plot, args.workers,
                    args.config, sources)
    _validate(cfg)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(message)s")
    return cfg


def _sector(spec: str, L: int) -> SectorConfig:
    if "," in spec or spec.lstrip("+-").isdigit():
        r = _ints(spec)
        if len(r) != L:
            raise ModelError(f"sector has {len(r)} entries, expected L={L}")
        return SectorConfig.custom(r)
    return make_sector(spec, L)


def _u_value(v):
    return v[0] if isinstance(v, list) and len(v) == 1 else np.asarray(v, dtype=float)


def model_params(values: dict) -> ModelParams:
    v = values
    boundary = v.get("boundary", "open")
    if boundary not in BOUNDARIES:
        raise ModelError(f"boundary must be one of {BOUNDARIES}")
    u = v.get("U", 0.0)
    u = _u_value(u) if isinstance(u, list) else u
    return ModelParams(t=v.get("t", 1.0), u=u, lam=v.get("lambda", 0.0), delta0=v.get("delta0", 0.0),
                       h=v.get("h", 0.0), L=v.get("L", 2), boundary=boundary)


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    c = cfg.command
    if c in ("spectrum", "correlators"):
        p = model_params(v)
        _sector(v["sector"], p.L)
        if v["alpha"] is not None and not p.homogeneous_u:
            raise ModelError("alpha requires a uniform U")
        if c == "correlators" and not 1 <= v["ref"] < p.L:
            raise ModelError("ref must satisfy 1 <= ref < L")
    elif c == "phase-scan":
        ModelParams(t=v["t"], L=v["L"], delta0=v["delta0"], h=v["h"])
        if v["mode"] not in ("families", "exhaustive"):
            raise ModelError("mode must be families or exhaustive")
        for a in ("u", "lambda"):
            if v[f"{a}_step"] <= 0:
                raise ModelError(f"{a}_step must be positive")
            if v[f"{a}_max"] < v[f"{a}_min"]:
                raise ModelError(f"empty {a} range")
    elif c == "majorana-number":
        if v["t"] <= 0:
            raise ModelError("t must be positive")
        if v["N"] < 1 or v["x"] < 0:
            raise ModelError("need N >= 1 and x >= 0")
    elif c == "beta-scan":
        if v["x"] < 0 or any(n < 1 for n in v["N_values"]):
            raise ModelError("need x >= 0 and N >= 1")
    elif c == "quench":
        for U in v["U"]:
            ModelParams(t=v["t"], u=U, lam=v["lambda"], L=v["L"])
        _sector(v["sector"], v["L"])
        if v["dtau"] <= 0 or v["tau_max"] < 2 * v["dtau"]:
            raise ModelError("need dtau > 0 and tau_max >= 2 dtau")
    elif c == "ramp":
        ModelParams(t=v["t"], u=v["U_start"], L=v["L"], boundary=v["boundary"])
        if any(q <= 0 for q in v["tau_Q"]) or v["U_end"] <= v["U_start"]:
            raise ModelError("need tau_Q > 0 and U_end > U_start")
        if v["method"] not in ("midpoint", "rk4"):
            raise ModelError("method must be midpoint or rk4")
    elif c == "oracle":
        p = model_params(v)
        if p.L > 6:
            raise ModelError("oracle audit is limited to L <= 6")


# ---------------------------------------------------------------------------
# commands

def _finish(cfg, out, header, rows, results, plot=None):
    io.write_csv(out.path(".csv"), header, rows, io.config_comment(cfg.resolved()))
    io.write_metadata(out.path(".json"), cfg.resolved(), results)
    if cfg.plot and plot is not None:
        plot(out.path(".png"))


def _extra_csv(cfg, out, suffix, header, rows):
    io.write_csv(out.path(suffix), header, rows, io.config_comment(cfg.resolved()))


def _static_setup(v):
    p = model_params(v)
    sector = _sector(v["sector"], p.L)
    if v["alpha"] is not None:
        p = p.with_alpha(v["alpha"], sector.r[-1])
    bm = build_b_matrix(p, sector)
    return p, sector, svd_canonical(bm)


def cmd_spectrum(cfg, out):
    p, sector, cf = _static_setup(cfg.values)
    lam = cf.Lambda
    rows = [(k + 1, x) for k, x in enumerate(lam)]
    res = {"E0": cf.E0, "offset": cf.offset, "energy": cf.energy, "detB_sign": cf.detB_sign,
           "zero_modes": cf.zero_modes(), "sector": list(sector.r)}
    from . import plotting
    _finish(cfg, out, ["k", "Lambda"], rows, res,
            lambda path: plotting.spectrum(lam, path, f"L={p.L}, energy={cf.energy:.6g}"))


def cmd_correlators(cfg, out):
    p, sector, cf = _static_setup(cfg.values)
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        corr = equilibrium_correlations(cf)
    singlet = observables.singlet_profile(corr, sector)
    sy = observables.magnetization_profile(corr, sector)
    sites = np.arange(1, p.L + 1)
    rows = [(j, s.imag, m) for j, s, m in zip(sites, singlet, sy)]
    i0 = cfg.values["ref"]
    pairs = [(i0, j, observables.pair_pair(corr, sector, i0, j), observables.spinspin_y(corr, sector, i0, j))
             for j in range(i0 + 1, p.L + 1)]
    _extra_csv(cfg, out, "_pairs.csv", ["i", "j", "pair_pair", "spinspin_y"], pairs)
    res = {"energy": cf.energy, "Zp2": observables.parity_zp(corr, sector), "sector": list(sector.r)}
    from . import plotting
    _finish(cfg, out, ["j", "singlet_im", "Sy"], rows, res,
            lambda path: plotting.profile(sites, singlet.imag, path, r"Im $\langle c_\uparrow c_\downarrow\rangle$"))


def cmd_phase_scan(cfg, out):
    v = cfg.values
    base = ModelParams(t=v["t"], L=v["L"], delta0=v["delta0"], h=v["h"])
    grid = phases.phase_scan((v["u_min"], v["u_max"]), (v["lambda_min"], v["lambda_max"]),
                             (v["u_step"], v["lambda_step"]), v["L"], base, v["mode"],
                             workers=cfg.workers)
    rows = [(pt.U, pt.lam, pt.region, pt.energy, pt.family, pt.degeneracy) for pt in grid.rows()]
    res = {"grid_meta": grid.meta, "components": grid.components(),
           "lambda_c_at_U0": grid.lambda_c(0.0) if v["u_min"] <= 0 <= v["u_max"] else None}
    from . import plotting
    _finish(cfg, out, ["U", "lambda", "region", "energy", "family", "degeneracy"], rows, res,
            lambda path: plotting.phase_diagram(grid, path))


def cmd_majorana_number(cfg, out):
    v = cfg.values
    rows = []
    for U in v["U_values"]:
        if v["random_fraction"] is not None:
            from .model import random_disorder_pattern
            u = random_disorder_pattern(v["x"], v["random_fraction"], U, v["L"], v["seed"])
        else:
            u = build_disorder_pattern(v["x"], v["N"], U, v["N"])
        rows.append((U, phases.majorana_number(u, v["t"])))
    res = {"note": "M = -1 topological, +1 trivial, 0 critical"}
    _finish(cfg, out, ["U", "M"], rows, res)


def cmd_beta_scan(cfg, out):
    v = cfg.values
    ests = [phases.beta_threshold(v["x"], N, v["t"], v["U_max"], v["tol"]) for N in v["N_values"]]
    rows = [(N, e.beta, e.U_star, e.bounded) for N, e in zip(v["N_values"], ests)]
    from . import plotting
    _finish(cfg, out, ["N", "beta", "U_star", "bounded"], rows, {"x_over_2": v["x"] / 2},
            lambda path: plotting.beta_curve(v["N_values"], [e.beta for e in ests], v["x"], path))


def _stationarity(taus, vel, start):
    w = vel[taus >= start - 1e-9]
    m = float(np.mean(w))
    return float(np.max(np.abs(w - m)) / abs(m)) if m else float("nan")


def cmd_quench(cfg, out):
    v = cfg.values
    from . import plotting
    curve = []
    results = {}
    for n, U in enumerate(v["U"]):
        p = ModelParams(t=v["t"], u=U, lam=v["lambda"], L=v["L"])
        sector = _sector(v["sector"], v["L"])
        setup = dynamics.boundary_quench(p, sector, v["alpha0"])
        traj = dynamics.quench_trajectory(setup, v["tau_max"], v["dtau"], cfg.workers)
        vC = dynamics.wavefront_velocity(traj, "C")
        vS = dynamics.wavefront_velocity(traj, "S")
        tag = f"_U{U:g}" if len(v["U"]) > 1 else ""
        start = 2.0 * v["tau_max"] / 3.0
        results[f"U={U:g}"] = {
            "v_C_final": float(vC.values[-1]), "v_S_final": float(vS.values[-1]),
            "flagged_zero": bool(vC.flagged and vS.flagged),
            "stationarity_C": _stationarity(traj.taus, vC.values, start),
            "stationarity_S": _stationarity(traj.taus, vS.values, start),
            "stationarity_window": [start, v["tau_max"]], **traj.meta}
        curve.append((U, vC.values[-1], vS.values[-1]))
        rows = [(tau, i + 1, traj.C[k, i], traj.S[k, i])
                for k, tau in enumerate(traj.taus) for i in range(traj.L - 1)]
        _extra_csv(cfg, out, f"{tag}_trajectory.csv", ["tau", "i", "C", "S"], rows)
        R2C, R2S = traj.R2("C"), traj.R2("S")
        _extra_csv(cfg, out, f"{tag}_velocity.csv", ["tau", "R2_C", "R2_S", "v_C", "v_S"],
                   zip(traj.taus, R2C, R2S, vC.values, vS.values))
        if cfg.plot:
            plotting.quench(traj, vC.values, vS.values, out.path(f"{tag}_trajectory.png"))
    plot = (lambda path: plotting.velocity_curve(*zip(*curve), path)) if len(curve) > 1 else None
    _finish(cfg, out, ["U", "v_C", "v_S"], curve, results, plot)


def fit_exponent(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def late_window(result, frac=0.1):
    """Indices of the stored points in the final ``frac`` of the ramp."""
    return result.taus >= result.taus[-1] * (1.0 - frac) - 1e-9


def cmd_ramp(cfg, out):
    v = cfg.values
    from . import plotting
    res = [dynamics.linear_ramp(v["L"], q, v["t"], v["U_start"], v["U_end"], v["dtau"],
                                v["n_out"], v["boundary"], v["method"]) for q in v["tau_Q"]]
    rows, summary = [], []
    for r in res:
        for tau, U, P, Pa in zip(r.taus, r.U, r.power, r.power_adiabatic):
            rows.append((r.tau_Q, tau, U, P, Pa, P - Pa))
        late = float(np.mean(r.excess_power[late_window(r)]) / r.L)
        est = dynamics.kibble_zurek_estimate(r.tau_Q, v["t"])
        summary.append((r.tau_Q, r.excitation, late, est, late / est))
    _extra_csv(cfg, out, "_summary.csv",
               ["tau_Q", "excitation_density", "late_excess_power_density", "estimate", "ratio"], summary)
    tq = np.array([s[0] for s in summary])
    info = {}
    if len(res) > 1:
        info = {"exponent_excitation": fit_exponent(tq, [s[1] for s in summary]),
                "exponent_excess_power_per_rate": fit_exponent(tq, [s[2] * s[0] for s in summary]),
                "exponent_excess_power_density": fit_exponent(tq, [s[2] for s in summary])}
    _finish(cfg, out, ["tau_Q", "tau", "U", "P", "P_adiabatic", "P_excess"], rows, info,
            lambda path: plotting.ramp(res, path))


def cmd_oracle(cfg, out):
    from . import audit
    p = model_params(cfg.values)
    checks = audit.run_audit(p, cfg.values["tol"])
    rows = [(c.name, c.value, c.tolerance, c.passed) for c in checks]
    failed = [c.name for c in checks if not c.passed]
    _finish(cfg, out, ["check", "deviation", "tolerance", "pass"], rows, {"failed": failed})
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} (tol {c.tolerance:g})")
    if failed:
        raise AuditFailure(f"{len(failed)} audit check(s) failed")


DISPATCH = {
    "spectrum": cmd_spectrum,
    "correlators": cmd_correlators,
    "phase-scan": cmd_phase_scan,
    "majorana-number": cmd_majorana_number,
    "beta-scan": cmd_beta_scan,
    "quench": cmd_quench,
    "ramp": cmd_ramp,
    "oracle": cmd_oracle,
}


def run(cfg: RunConfig) -> int:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = io.OutputSet(cfg.output_dir, cfg.prefix)
    try:
        DISPATCH[cfg.command](cfg, out)
    except AuditFailure as exc:
        print(f"audit failed: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    except (ModelError, ConfigError) as exc:
        out.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BaseException:
        out.cleanup()
        raise
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except (ModelError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
