"""Command line interface: ``survdom {km,dominance,classical,simulate}``.

Every command prints one JSON document on stdout (``--table`` prints a
human-readable view instead). A rejected null hypothesis is not an error:
exit status is 0 and the decision is part of the payload.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classical import Variant, weighted_logrank
from .covariance import DENOMINATORS
from .datasets import DataError, ingest_csv, write_step_csv
from .dominance import DominanceConfig, PipelineError, dominance_test
from .estimators import km_fit
from .mvn import FactorizationError
from .simulation import CENSOR_TARGETS, Scenario, TableBuildError, rejection_table

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

logger = logging.getLogger("survdom")


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(doc, stream):
    stream.write(json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n")


def _bandwidth(value):
    if value == "auto":
        return "auto"
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("bandwidth must be a positive number or 'auto'") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return v


def _tau(value):
    if value == "auto":
        return "auto"
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("tau must be a positive number or 'auto'") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("tau must be positive")
    return v


def _u64(value):
    v = int(value)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(value):
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _data_args(p):
    p.add_argument("--data", required=True, help="CSV file (or bundled fixture: lung, kidney)")
    p.add_argument("--time-col", default="time")
    p.add_argument("--status-col", default="status")
    p.add_argument("--group-col", default="group")
    p.add_argument("--status-event-value", type=float, default=1, help="status code marking an event")


def _mapping(args):
    return dict(
        time_col=args.time_col,
        status_col=args.status_col,
        group_col=args.group_col,
        event_value=args.status_event_value,
    )


def _groups(args):
    t, u = getattr(args, "t_group", None), getattr(args, "u_group", None)
    if (t is None) != (u is None):
        raise UsageError("--t-group and --u-group must be given together")
    return None if t is None else (t, u)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="survdom", description="Dominance and weighted log-rank tests for censored data"
    )
    parser.add_argument("--version", action="version", version=f"survdom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("km", help="Kaplan-Meier curves per group")
    _data_args(p)
    p.add_argument("--plot-out", help="write step coordinates to this CSV file")
    p.add_argument("--table", action="store_true")

    p = sub.add_parser("dominance", help="supremum test of H0: S_T <= S_U")
    _data_args(p)
    p.add_argument("--t-group", help="group playing T (the one H0 says is dominated)")
    p.add_argument("--u-group")
    p.add_argument("--grid", type=_positive_int, default=100)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--accuracy", type=float, default=5e-4)
    p.add_argument("--bandwidth", type=_bandwidth, default="auto")
    p.add_argument("--denominator", choices=DENOMINATORS, default="empirical")
    p.add_argument("--tau", type=_tau, default="auto")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--table", action="store_true")

    p = sub.add_parser("classical", help="weighted log-rank family")
    _data_args(p)
    p.add_argument("--t-group")
    p.add_argument("--u-group")
    which = p.add_mutually_exclusive_group()
    which.add_argument("--all", action="store_true", help="run every variant (default)")
    which.add_argument("--variant", choices=[v.value for v in Variant], action="append")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--table", action="store_true")

    p = sub.add_parser("simulate", help="rejection-rate study over a scenario file")
    p.add_argument("--scenarios", required=True, help="lines: label,shapeT,scaleT,shapeU,scaleU,censor,n")
    p.add_argument("--replications", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--grid", type=_positive_int, default=100)
    p.add_argument("--accuracy", type=float, default=5e-4)
    p.add_argument("--alpha", type=float, action="append", help="significance level(s); default 0.05 and 0.01")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--out", help="write the CSV table here instead of stdout")
    return parser


def parse_scenarios(path):
    """Scenario lines ``label,shapeT,scaleT,shapeU,scaleU,censor,n``.

    Blank lines, ``#`` comments and a header line starting with ``label``
    are skipped.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    scenarios = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#") or line.lower().startswith("label,"):
            continue
        parts = [s.strip() for s in line.split(",")]
        if len(parts) != 7:
            raise DataError(f"{path}: line {lineno}: expected 7 fields, got {len(parts)}")
        label, st, sct, su, scu, cens, n = parts
        if cens not in CENSOR_TARGETS:
            raise DataError(f"{path}: line {lineno}: censor must be one of {CENSOR_TARGETS}")
        try:
            scenarios.append(Scenario(label, float(st), float(sct), float(su), float(scu), cens, int(n)))
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
    if not scenarios:
        raise DataError(f"{path}: no scenarios")
    return scenarios


def cmd_km(args, out):
    samples = ingest_csv(args.data, **_mapping(args))
    curves = {s.label: km_fit(s) for s in samples}
    if args.plot_out:
        write_step_csv(curves, args.plot_out)
    doc = {
        "command": "km",
        "version": __version__,
        "input": {"data": str(args.data), **_mapping(args)},
        "result": {
            s.label: {
                "n": len(s),
                "events": s.n_events,
                "times": curves[s.label].times,
                "survival": curves[s.label].values,
            }
            for s in samples
        },
        "plot_out": args.plot_out,
    }
    if args.table:
        for s in samples:
            c = curves[s.label]
            out.write(f"# {s.label} (n={len(s)}, events={s.n_events})\n")
            out.write(f"{'time':>12} {'survival':>10}\n")
            for t, v in zip(c.times, c.values):
                out.write(f"{t:12.4g} {v:10.4f}\n")
    else:
        _emit(doc, out)
    return EXIT_OK


def cmd_dominance(args, out):
    groups = _groups(args)
    sample_t, sample_u = ingest_csv(args.data, groups=groups, **_mapping(args))
    try:
        config = DominanceConfig(
            grid_size=args.grid,
            accuracy=args.accuracy,
            bandwidth=args.bandwidth,
            denominator=args.denominator,
            tau=args.tau,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = dominance_test(sample_t, sample_u, config)
    reject = res.reject(args.alpha)
    doc = {
        "command": "dominance",
        "version": __version__,
        "input": {
            "data": str(args.data),
            "t_group": sample_t.label,
            "u_group": sample_u.label,
            "n_t": len(sample_t),
            "n_u": len(sample_u),
            **_mapping(args),
        },
        "config": config.as_dict(),
        "result": res.as_dict(),
        "decision": {
            "alpha": args.alpha,
            "reject_h0": reject,
            "h0": f"S_{sample_t.label}(t) <= S_{sample_u.label}(t) on (0, tau)",
            "conclusion": (
                "evidence of a crossing: the survival of the T group exceeds that of U somewhere"
                if reject
                else "no evidence against dominance of U over T"
            ),
        },
    }
    if args.table:
        out.write(f"T = {sample_t.label} (n={len(sample_t)}), U = {sample_u.label} (n={len(sample_u)})\n")
        out.write(f"tau        {res.tau:.6g}\n")
        out.write(f"grid       {res.m}\n")
        out.write(f"Delta      {res.delta:.4f}\n")
        out.write(f"p (upper)  {res.p_upper:.4f} +/- {res.p_error:.1e}\n")
        out.write(f"decision   {'reject' if reject else 'do not reject'} H0 at alpha={args.alpha}\n")
    else:
        _emit(doc, out)
    return EXIT_OK


def cmd_classical(args, out):
    groups = _groups(args)
    s1, s2 = ingest_csv(args.data, groups=groups, **_mapping(args))
    variants = [Variant.parse(v) for v in args.variant] if args.variant else list(Variant)
    results = [weighted_logrank(s1, s2, v) for v in variants]
    doc = {
        "command": "classical",
        "version": __version__,
        "input": {"data": str(args.data), "group_1": s1.label, "group_2": s2.label, **_mapping(args)},
        "alpha": args.alpha,
        "result": [dict(r.as_dict(), reject=r.p <= args.alpha) for r in results],
    }
    if args.table:
        out.write(f"{'test':<20} {'statistic':>10} {'p-value':>8}\n")
        for r in results:
            out.write(f"{r.variant.value:<20} {r.statistic:10.4f} {r.p:8.4f}\n")
    else:
        _emit(doc, out)
    return EXIT_OK


def cmd_simulate(args, out):
    scenarios = parse_scenarios(args.scenarios)
    alphas = tuple(args.alpha) if args.alpha else (0.05, 0.01)
    if args.replications < 50:
        raise UsageError("--replications must be at least 50")
    try:
        config = DominanceConfig(grid_size=args.grid, accuracy=args.accuracy, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    table = rejection_table(
        scenarios,
        replications=args.replications,
        base_seed=args.seed,
        alphas=alphas,
        config=config,
        n_jobs=args.jobs,
    )
    text = table.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


COMMANDS = {
    "km": cmd_km,
    "dominance": cmd_dominance,
    "classical": cmd_classical,
    "simulate": cmd_simulate,
}


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"survdom: usage error: {exc}\n")
        return EXIT_USAGE
    except DataError as exc:
        err.write(f"survdom: data error: {exc}\n")
        return EXIT_DATA
    except (PipelineError, FactorizationError, TableBuildError) as exc:
        err.write(f"survdom: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        # validation errors raised below the ingestion layer
        err.write(f"survdom: data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
