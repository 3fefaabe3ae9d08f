"""Command-line entry point: ``mpsvc run | gen-traces | aggregate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .baselines import BaselineConfig
from .experiment import ALGORITHMS, ExperimentConfig, ExperimentError, aggregate, run_experiment
from .io import TraceProfile, gen_synthetic_traces, load_manifest, load_profiles, load_traces
from .model import ModelError
from .online import OnlineConfig

log = logging.getLogger("mpsvc")


def _add_run(sub) -> None:
    p = sub.add_parser("run", help="run one algorithm over one or more trace pairs")
    p.add_argument("--algo", required=True, choices=ALGORITHMS)
    p.add_argument("--mode", choices=("skip", "noskip"), default="skip")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--trace-link1", required=True, nargs="+", type=Path)
    p.add_argument("--trace-link2", required=True, nargs="+", type=Path)
    p.add_argument("--n2", type=int, default=None, help="highest layer allowed on link 2")
    p.add_argument("--window", type=int, default=10, help="online window W in chunks")
    p.add_argument("--alpha", type=int, default=None,
                   help="re-plan period in slots (default 2; beyond the horizon with the oracle predictor)")
    p.add_argument("--beta", type=int, default=10, help="harmonic-mean sample count")
    p.add_argument("--bmax", type=int, default=None,
                   help="buffer cap in slots (default 120, raised to W*L if needed)")
    p.add_argument("--bmin", type=int, default=4, help="resume threshold after a stall")
    p.add_argument("--predictor", choices=("harmonic", "oracle"), default="harmonic")
    p.add_argument("--oracle-predictor", action="store_true", help="same as --predictor oracle")
    p.add_argument("--bba-thresholds", type=float, nargs=2, default=(30, 90), metavar=("LOW", "HIGH"))
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--slot-seconds", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1)


def _add_gen(sub) -> None:
    p = sub.add_parser("gen-traces", help="write synthetic trace pairs")
    p.add_argument("--profile", default="markov-two-state", choices=("constant", "step", "markov-two-state"))
    p.add_argument("--profile-file", type=Path, default=None,
                   help="INI with [link1]/[link2] sections (overrides --profile/--mean*)")
    p.add_argument("--mean1", type=int, default=250_000, help="link 1 mean, bytes per slot")
    p.add_argument("--mean2", type=int, default=150_000, help="link 2 mean, bytes per slot")
    p.add_argument("--var1", type=float, default=0.0)
    p.add_argument("--var2", type=float, default=0.0)
    p.add_argument("--switch-prob", type=float, default=0.1)
    p.add_argument("--slots", type=int, default=600)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--slot-seconds", type=float, default=1.0)


def _add_aggregate(sub) -> None:
    p = sub.add_parser("aggregate", help="PMF / CDF tables from a records file")
    p.add_argument("records", type=Path)
    p.add_argument("--out", type=Path, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpsvc", description="Multi-path layered video scheduling")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_gen(sub)
    _add_aggregate(sub)
    return parser


def _run(args) -> int:
    if len(args.trace_link1) != len(args.trace_link2):
        raise ExperimentError("--trace-link1 and --trace-link2 need the same number of files")
    video = load_manifest(args.manifest, args.slot_seconds)
    traces = []
    for p1, p2 in zip(args.trace_link1, args.trace_link2):
        traces.append((f"{p1.name}+{p2.name}", load_traces([p1, p2], args.slot_seconds)))
    predictor = "oracle" if args.oracle_predictor else args.predictor
    alpha = args.alpha
    if alpha is None:
        alpha = 2 if predictor == "harmonic" else 11 * video.duration + video.startup_delay + 1
    bmax = args.bmax
    if bmax is None:
        bmax = max(120, args.window * video.chunk_duration)
    online = OnlineConfig(
        window=args.window, alpha=alpha, beta=args.beta, buffer_max=bmax,
        buffer_min=args.bmin, predictor=predictor,
    )
    baseline = BaselineConfig(thresholds=tuple(args.bba_thresholds), beta=args.beta, buffer_max=bmax)
    cfg = ExperimentConfig(
        args.algo, video, traces, args.mode, args.n2, online, baseline, args.out_dir, args.jobs,
    )
    records = run_experiment(cfg)
    if args.out_dir is None:
        for rec in records:
            print(json.dumps(rec, sort_keys=True))
    else:
        log.info("wrote %d record(s) to %s", len(records), args.out_dir)
    return 0


def _gen(args) -> int:
    if args.profile_file is not None:
        profiles = load_profiles(args.profile_file)
    else:
        profiles = [
            TraceProfile(args.profile, args.mean1, args.var1, args.switch_prob, args.slots),
            TraceProfile(args.profile, args.mean2, args.var2, args.switch_prob, args.slots),
        ]
    gen_synthetic_traces(args.seed, profiles, args.count, args.out_dir, args.slot_seconds)
    log.info("wrote %d trace pair(s) to %s", args.count, args.out_dir)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "gen-traces":
            return _gen(args)
        rows = aggregate(args.records, args.out)
        log.info("wrote %d aggregate row(s) to %s", len(rows), args.out)
        return 0
    except (ModelError, OSError) as exc:
        print(f"mpsvc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
