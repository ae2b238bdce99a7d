"""Command-line front end. Data goes to ``--out`` (default stdout), diagnostics to stderr."""

from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

import numpy as np

from .decoy import DEFAULT_Q111_CONVENTION, DecoyError, Q111Convention
from .ghz import QuadratureError
from .keyrate import (
    BaselineModel,
    NoCrossingError,
    NoKeyAtZeroError,
    baseline_sync,
    max_distance,
    rate_point,
    tqm_threshold,
)
from .montecarlo import McConfig, simulate_sync
from .params import ConfigError, SimParams, load_config
from .sync import SyncModel, sync_success

SWEEP_VARS = ("L_km", "T_QM", "N")
MC_GRID = [(L, N, T) for L in (0.0, 10.0, 25.0) for N in (1, 3, 5) for T in (0.9, 0.98)]


class CliError(Exception):
    pass


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain ints stay ints."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def sweep_values(start: float, stop: float, step: float, var: str):
    if step <= 0:
        raise CliError(f"--step must be > 0, got {step}")
    if start > stop:
        raise CliError(f"--start ({start}) must not exceed --stop ({stop})")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    values = [start + i * step for i in range(count)]
    if var == "N":
        if any(v != int(v) for v in values):
            raise CliError("N sweeps need integer start/step")
        return [int(v) for v in values]
    # Round away accumulated binary noise so row labels stay stable.
    return [float(round(v, 12)) for v in values]


def _params_for(params: SimParams, var: str, value) -> SimParams:
    if var == "L_km":
        return params.with_(L_km=value)
    if var == "T_QM":
        return params.with_(T_QM=value)
    return params.with_(N=value)


def cmd_sync_prob(params: SimParams, args, out) -> int:
    variants = [BaselineModel.parse(v) for v in (args.variant or ["qm", "wcp"])]
    values = sweep_values(args.start, args.stop, args.step, args.var)
    out.write("variable,value,variant,Ps3\n")
    for value in values:
        p = _params_for(params, args.var, value)
        for variant in variants:
            ps3 = baseline_sync(variant, p, p.L_km)
            out.write(f"{args.var},{fmt(value)},{variant.value},{fmt(ps3)}\n")
    return 0


def cmd_keyrate(params: SimParams, args, out) -> int:
    L = params.L_km if args.L is None else args.L
    point = rate_point(params, L, BaselineModel.parse(args.variant or "qm"), args.q111_convention)
    out.write(f"q111_convention = {Q111Convention.parse(args.q111_convention).value}\n")
    for name, value in point.__dict__.items():
        shown = value.value if isinstance(value, BaselineModel) else fmt(value)
        out.write(f"{name} = {shown}\n")
    return 0


KEYRATE_HEADER = "L_km,variant,Ps3,Q_X_mu,E_X_mu,Q111_XL,e111_BZU,R_raw,R"


def cmd_sweep(params: SimParams, args, out) -> int:
    if args.var != "L_km":
        raise CliError("the key-rate sweep runs over L_km; use --tqm for memory-efficiency families")
    variants = [BaselineModel.parse(v) for v in (args.variant or [m.value for m in BaselineModel])]
    runs = []
    for variant in variants:
        if variant.has_memory and args.tqm:
            runs += [(f"{variant.value}@T_QM={fmt(t)}", variant, params.with_(T_QM=t)) for t in args.tqm]
        else:
            runs.append((variant.value, variant, params))
    values = sweep_values(args.start, args.stop, args.step, "L_km")
    out.write(KEYRATE_HEADER + "\n")
    for L in values:
        for label, variant, p in runs:
            r = rate_point(p, L, variant, args.q111_convention)
            row = [fmt(L), label, fmt(r.Ps3), fmt(r.Q_X_mu), fmt(r.E_X_mu), fmt(r.Q111_XL), fmt(r.e111_BZU), fmt(r.R_raw), fmt(r.R)]
            out.write(",".join(row) + "\n")
    if not args.no_summary:
        for label, variant, p in runs:
            try:
                km = fmt(max_distance(p, variant, args.q111_convention))
            except NoKeyAtZeroError:
                km = "none"
            out.write(f"# max_distance variant={label} L_km={km}\n")
    return 0


def cmd_max_distance(params: SimParams, args, out) -> int:
    variants = [BaselineModel.parse(v) for v in (args.variant or [m.value for m in BaselineModel])]
    out.write("variant,T_QM,max_L_km\n")
    for variant in variants:
        tqms = args.tqm if (variant.has_memory and args.tqm) else [params.T_QM]
        for t in tqms:
            km = max_distance(params.with_(T_QM=t), variant, args.q111_convention, step=args.step)
            out.write(f"{variant.value},{fmt(t)},{fmt(km)}\n")
    return 0


def cmd_tqm_threshold(params: SimParams, args, out) -> int:
    t = tqm_threshold(params, args.L_ref)
    out.write(f"L_ref_km = {fmt(args.L_ref)}\nT_QM_threshold = {fmt(t)}\n")
    return 0


def cmd_mc_validate(params: SimParams, args, out) -> int:
    out.write("L_km,N,T_QM,analytic,mc,stderr,z\n")
    worst = 0.0
    for L, N, T in MC_GRID:
        p = params.with_(L_km=L, N=N, T_QM=T)
        analytic = sync_success(3, SyncModel.from_params(p))
        est = simulate_sync(McConfig(seed=args.seed, trials=args.trials, params=p, workers=args.workers))
        z = est.z_score(analytic)
        worst = max(worst, abs(z))
        out.write(",".join(fmt(x) for x in (L, N, T, analytic, est.p, est.stderr, z)) + "\n")
    verdict = "PASS" if worst <= 3.0 else "FAIL"
    out.write(f"# overall {verdict} max|z|={fmt(worst)} trials={args.trials} seed={args.seed}\n")
    return 0 if verdict == "PASS" else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value parameter file")
    common.add_argument("--out", default="stdout", help="output path or 'stdout'")
    common.add_argument(
        "--q111-convention",
        choices=[c.value for c in Q111Convention],
        default=DEFAULT_Q111_CONVENTION.value,
    )

    sweep_flags = argparse.ArgumentParser(add_help=False)
    sweep_flags.add_argument("--var", choices=SWEEP_VARS, default="L_km")
    sweep_flags.add_argument("--start", type=float, default=0.0)
    sweep_flags.add_argument("--stop", type=float, default=300.0)
    sweep_flags.add_argument("--step", type=float, default=1.0)
    sweep_flags.add_argument("--variant", action="append", help="repeatable; qm, hsps-nonideal, hsps-ideal, wcp")

    p = argparse.ArgumentParser(prog="mdiqss", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    sub.add_parser("sync-prob", parents=[common, sweep_flags], help="three-photon synchronization probability sweep (CSV)")

    k = sub.add_parser("keyrate", parents=[common], help="full key-rate report at one distance")
    k.add_argument("--L", type=float, help="arm length in km (default: config L_km)")
    k.add_argument("--variant", default="qm")

    s = sub.add_parser("sweep", parents=[common, sweep_flags], help="key-rate sweep over distance (CSV)")
    s.add_argument("--tqm", type=float, action="append", help="repeatable memory efficiencies for the qm variant")
    s.add_argument("--no-summary", action="store_true", help="skip the max-distance footer")

    m = sub.add_parser("max-distance", parents=[common], help="largest arm length with positive key")
    m.add_argument("--variant", action="append")
    m.add_argument("--tqm", type=float, action="append")
    m.add_argument("--step", type=float, default=1.0, help="grid step before bisection (km)")

    t = sub.add_parser("tqm-threshold", parents=[common], help="memory efficiency where memory and WCP synchronization cross")
    t.add_argument("--L-ref", type=float, default=200.0)

    v = sub.add_parser("mc-validate", parents=[common], help="Monte Carlo vs analytic synchronization on the fixed grid")
    v.add_argument("--trials", type=int, default=10_000_000)
    v.add_argument("--seed", type=int, default=20240101)
    v.add_argument("--workers", type=int, default=1)
    return p


COMMANDS = {
    "sync-prob": cmd_sync_prob,
    "keyrate": cmd_keyrate,
    "sweep": cmd_sweep,
    "max-distance": cmd_max_distance,
    "tqm-threshold": cmd_tqm_threshold,
    "mc-validate": cmd_mc_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        params = load_config(args.config) if args.config else SimParams()
        buf = io.StringIO()
        code = COMMANDS[args.cmd](params, args, buf)
    except (ConfigError, CliError, DecoyError, QuadratureError, NoKeyAtZeroError, NoCrossingError, ValueError, OSError) as exc:
        print(f"mdiqss {args.cmd}: error: {exc}", file=sys.stderr)
        return 2
    text = buf.getvalue()
    if args.out == "stdout":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
