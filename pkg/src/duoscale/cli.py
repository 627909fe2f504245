"""Command-line entry point: ``duoscale <verb> --config run.ini [--out file.csv]``."""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from .asymptotics import backbone_detuning, backbone_frequency, first_order_params
from .config import (ANALYSIS_KEYS, INITIAL_KEYS, INTEGRATOR_KEYS, SYSTEM_KEYS, ConfigError,
                     RunConfig, broadcast, load_config)
from .errors import DuoscaleError, InvalidArgument
from .integrate import IntegratorConfig, TimeSeries, expansion_verify, initial_state, integrate
from .model import NonlinearSpring, build_chain, modal_decompose
from .response import frf_trace, peak_point
from .spectral import peak_detect, spectrum_scan

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
VERBS = ("modes", "simulate", "frf", "backbone", "spectrum", "verify")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def build_system(cfg: RunConfig):
    """Chain, modal basis and driven-mode parameters described by ``[system]``."""
    s = cfg.system
    spring = NonlinearSpring(s["c"], s["d"], s["epsilon"], s["p"])
    n, k = s["n"], s["driven_mode"]
    base = build_chain(n, s["mass"], s["stiffness"], spring, damping=s["lambda"],
                       driven_mode=k)
    basis = modal_decompose(base)
    forcing = s["forcing"]
    if forcing is None:
        F = np.zeros(n)
    elif len(forcing) == 1:
        # scalar: modal forcing amplitude on the driven mode
        F = forcing[0] * (base.mass_matrix @ basis.mode(k))
    else:
        F = np.asarray(forcing, dtype=float)
    if s["sigma"] is not None:
        sigma = s["sigma"]
    elif s["omega_tilde"] is not None:
        sigma = (s["omega_tilde"] - basis.frequencies[k - 1]) / s["epsilon"]
    else:
        sigma = 0.0
    system = build_chain(n, s["mass"], s["stiffness"], spring, damping=s["lambda"],
                         forcing=F, detuning=sigma, driven_mode=k)
    return system, basis, first_order_params(system, basis)


def _initial(cfg, system, basis):
    i = cfg.initial
    if i["a0"] is not None:
        return initial_state(system, basis, i["a0"], i["beta0"], i["zero_velocity"])
    return broadcast(i["u0"], system.n), broadcast(i["v0"], system.n)


def cmd_modes(cfg: RunConfig, args) -> str:
    system, basis, _ = build_system(cfg)
    n = system.n
    header = ["k", "omega"] + [f"phi_{j}" for j in range(1, n + 1)] + ["delta_p_phi"]
    rows = [[k, basis.frequencies[k - 1], *basis.mode(k), basis.gaps[k - 1]]
            for k in range(1, n + 1)]
    return _csv(header, rows)


def cmd_simulate(cfg: RunConfig, args) -> str:
    icfg = cfg.integrator_config()
    system, basis, _ = build_system(cfg)
    u0, v0 = _initial(cfg, system, basis)
    series = integrate(system, u0, v0, icfg, basis)
    n = system.n
    header = ["t"] + [f"u_{j}" for j in range(1, n + 1)] + [f"v_{j}" for j in range(1, n + 1)]
    rows = (np.concatenate(([t], u, v)) for t, u, v in zip(series.t, series.u, series.v))
    return _csv(header, rows)


def cmd_frf(cfg: RunConfig, args) -> str:
    cfg.require("analysis", "sigma_min", "sigma_max")
    a = cfg.analysis
    if not a["sigma_min"] < a["sigma_max"] or a["n_sigma"] < 2:
        raise ConfigError("[analysis] need sigma_min < sigma_max and n_sigma >= 2")
    if not cfg.system["forcing"] or not any(cfg.system["forcing"]):
        raise ConfigError("frf needs a nonzero [system] forcing")
    _, _, params = build_system(cfg)
    curve = frf_trace(params, a["sigma_min"], a["sigma_max"], a["n_sigma"], args.seed_branch)
    points = list(zip(curve.points, curve.labels))
    if params.lam > 0:
        points.append((peak_point(params), "peak"))
    header = ["sigma", "a", "beta", "det_J", "stable", "branch", "sigma_backbone"]
    rows = [[p.sigma, p.a, p.beta, p.det, p.stable, label, backbone_detuning(params, p.a)]
            for p, label in points]
    return _csv(header, rows)


def cmd_backbone(cfg: RunConfig, args) -> str:
    cfg.require("analysis", "a_max")
    a = cfg.analysis
    if not a["a_max"] > 0 or a["n_a"] < 2:
        raise ConfigError("[analysis] need a_max > 0 and n_a >= 2")
    _, _, params = build_system(cfg)
    amps = np.linspace(0.0, a["a_max"], a["n_a"])
    return _csv(["a", "nu_epsilon"], ([x, backbone_frequency(params, x)] for x in amps))


def read_series_csv(path) -> TimeSeries:
    """Load a ``t,u_1..u_n[,v_1..v_n]`` CSV as written by ``simulate``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read input {path}: {exc.strerror}") from exc
    if len(rows) < 3 or not rows[0] or rows[0][0] != "t":
        raise ConfigError(f"{path}: expected a header starting with 't' and >= 2 rows")
    header = rows[0]
    u_cols = [j for j, h in enumerate(header) if h.startswith("u_")]
    v_cols = [j for j, h in enumerate(header) if h.startswith("v_")]
    if not u_cols:
        raise ConfigError(f"{path}: no u_ columns")
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric entry") from exc
    if not np.all(np.isfinite(data)):
        raise ConfigError(f"{path}: non-finite entry")
    t = data[:, 0]
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if not dt > 0 or np.max(np.abs(np.diff(t) - dt)) > 1e-9 * max(1.0, abs(t[-1])):
        raise ConfigError(f"{path}: samples must be uniformly spaced in t")
    u = data[:, u_cols]
    v = data[:, v_cols] if len(v_cols) == len(u_cols) else np.zeros_like(u)
    return TimeSeries(float(t[0]), float(dt), u, v)


def cmd_spectrum(cfg: RunConfig, args) -> str:
    cfg.require("analysis", "lambda_max")
    a = cfg.analysis
    if not a["lambda_min"] < a["lambda_max"] or a["n_grid"] < 2:
        raise ConfigError("[analysis] need lambda_min < lambda_max and n_grid >= 2")
    if not 0 <= a["transient"] < 1 or a["min_prominence"] <= 0:
        raise ConfigError("[analysis] need 0 <= transient < 1 and min_prominence > 0")
    if a["input"] is not None:
        path = Path(a["input"])
        if not path.is_absolute() and args.config is not None:
            path = Path(args.config).resolve().parent / path
        series = read_series_csv(path)
    else:
        icfg = cfg.integrator_config()
        system, basis, _ = build_system(cfg)
        u0, v0 = _initial(cfg, system, basis)
        series = integrate(system, u0, v0, icfg, basis)
    if not 1 <= a["component"] <= series.u.shape[1]:
        raise ConfigError(f"[analysis] component must lie in 1..{series.u.shape[1]}")
    spec = spectrum_scan(series, a["component"] - 1, a["lambda_min"], a["lambda_max"],
                         a["n_grid"], a["transient"])
    for peak in peak_detect(spec, a["min_prominence"]):
        print(f"peak lambda={peak.frequency:.10g} |alpha|={peak.magnitude:.6g}", file=sys.stderr)
    rows = ([lam, c.real, c.imag, abs(c)] for lam, c in zip(spec.frequencies, spec.coefficients))
    return _csv(["lambda", "re_alpha", "im_alpha", "abs_alpha"], rows)


def _workers(n_jobs: int) -> int:
    raw = os.environ.get("DUOSCALE_THREADS")
    cap = os.cpu_count() or 1
    if raw is not None:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise ConfigError(f"DUOSCALE_THREADS must be an integer, got {raw!r}") from exc
        if cap < 1:
            raise ConfigError("DUOSCALE_THREADS must be >= 1")
    return max(1, min(cap, n_jobs))


def cmd_verify(cfg: RunConfig, args) -> str:
    cfg.require("analysis", "epsilons")
    eps = list(cfg.analysis["epsilons"])
    if len(eps) < 3:
        raise ConfigError("[analysis] epsilons needs at least three values")
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("[analysis] epsilons must be positive and strictly decreasing")
    if not cfg.analysis["gamma"] > 0:
        raise ConfigError("[analysis] gamma must be > 0")
    if "integrator" in cfg.sections:
        i = cfg.integrator
        icfg = IntegratorConfig(i["method"], i["theta"], i["dt"], 1.0,
                                i["newton_tol"], i["newton_max_iter"], 1)
    else:
        icfg = IntegratorConfig(method="rk4", dt=0.005, t_end=1.0)
    system, _, _ = build_system(cfg)
    ini = cfg.initial
    beta0 = ini["beta0"] if "beta0" in ini["_given"] else None
    report = expansion_verify(system, eps, cfg.analysis["gamma"], ini["a0"], beta0, icfg,
                              ini["zero_velocity"], workers=_workers(len(eps)))
    for e, h, s in zip(report.epsilons, report.horizons, report.sup_remainders):
        print(f"epsilon={e:.6g} horizon={h:.6g} sup|r|={s:.6g}", file=sys.stderr)
    print(f"verdict: {report.verdict}", file=sys.stderr)
    ratios = ("",) + report.growth_ratios
    rows = zip(report.epsilons, report.horizons, report.sup_remainders, ratios)
    return _csv(["epsilon", "horizon", "sup_remainder", "ratio"], rows)


COMMANDS = {"modes": cmd_modes, "simulate": cmd_simulate, "frf": cmd_frf,
            "backbone": cmd_backbone, "spectrum": cmd_spectrum, "verify": cmd_verify}


def _key_help() -> str:
    lines = ["configuration keys (INI sections, '#' comments, decimal numbers):"]
    for name, spec in (("system", SYSTEM_KEYS), ("integrator", INTEGRATOR_KEYS),
                       ("initial", INITIAL_KEYS), ("analysis", ANALYSIS_KEYS)):
        items = ", ".join(f"{k}={'required' if d is None and k in _REQUIRED else d}"
                          for k, (_, d) in spec.items())
        lines.append(f"  [{name}] {items}")
    lines += [
        "notes:",
        "  K = stiffness * tridiag(-1, 2, -1), M = mass * I (fixed-fixed chain).",
        "  scalar forcing f means F = f * M phi_{driven_mode}; forcing needs sigma or omega_tilde.",
        "  verify uses rk4 with dt=0.005 unless an [integrator] section is given.",
        "  DUOSCALE_THREADS caps the verify worker pool (default: CPU count).",
        "exit codes: 0 success, 2 configuration error, 3 numerical failure.",
    ]
    return "\n".join(lines)


_REQUIRED = {"n", "stiffness", "epsilon", "t_end"}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="INI run configuration")
    common.add_argument("--out", default=argparse.SUPPRESS, help="CSV output path (default stdout)")
    common.add_argument("--seed-branch", choices=("upper", "lower"), default=argparse.SUPPRESS,
                        help="frf starting branch (default upper)")
    parser = argparse.ArgumentParser(
        prog="duoscale", parents=[common],
        description="Double-scale analysis of spring chains with one nonlinear spring.",
        epilog=_key_help(), formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="verb", metavar="VERB")
    for verb in VERBS:
        sub.add_parser(verb, parents=[common], help=COMMANDS[verb].__name__[4:] + " command")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    for name, default in (("config", None), ("out", None), ("seed_branch", "upper")):
        if not hasattr(args, name):
            setattr(args, name, default)
    if args.verb is None:
        parser.print_usage(sys.stderr)
        print("duoscale: error: a verb is required", file=sys.stderr)
        return EXIT_CONFIG
    if args.config is None:
        print("duoscale: error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        text = COMMANDS[args.verb](cfg, args)
    except (ConfigError, InvalidArgument) as exc:
        print(f"duoscale: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DuoscaleError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"duoscale: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
