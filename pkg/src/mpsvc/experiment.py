"""Batch runner: algorithm dispatch, per-run records and aggregate tables."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .baselines import BaselineConfig, attribute_aggregate, mp_bba, mptcp_bba, msplayer
from .io import append_records, plan_digest, write_aggregate
from .model import BandwidthTrace, FetchPlan, ModelError, VideoSpec
from .mptcp import aggregate_trace, mptcp_svc, pref_mptcp_svc
from .noskip import avoid_stalls_mp_svc, no_skip_mp_svc, pref_no_skip_mp_svc
from .offline import mp_svc_offline
from .online import OnlineConfig, run_online
from .playback import DownloadLog, compute_metrics, simulate_download
from .pref import PreferenceConfig, avoid_skips_mp_svc, pref_mp_svc

OFFLINE = (
    "mp-svc", "pref-mp-svc", "avoid-skips", "no-skip-mp-svc", "avoid-stalls",
    "mptcp-svc", "pref-mptcp-svc",
)
ONLINE = ("online-mp-svc", "online-pref-mp-svc", "online-avoid-skips")
BASELINES = ("mp-bba", "mptcp-bba", "msplayer")
ALGORITHMS = OFFLINE + ONLINE + BASELINES


class ExperimentError(ModelError):
    pass


def _effective_mode(algo: str, mode: str) -> str:
    if algo in ("no-skip-mp-svc", "avoid-stalls"):
        return "noskip"
    return mode


def offline_plan(algo: str, video: VideoSpec, trace: BandwidthTrace, mode: str, n2: Optional[int]) -> FetchPlan:
    noskip = mode == "noskip"
    if algo == "mp-svc" or algo == "no-skip-mp-svc":
        return no_skip_mp_svc(video, trace) if noskip else mp_svc_offline(video, trace)
    if algo == "avoid-skips" or algo == "avoid-stalls":
        return avoid_stalls_mp_svc(video, trace) if noskip else avoid_skips_mp_svc(video, trace)
    cfg = PreferenceConfig(video.top_layer if n2 is None else n2)
    if algo == "pref-mp-svc":
        return pref_no_skip_mp_svc(video, trace, cfg) if noskip else pref_mp_svc(video, trace, cfg)
    if algo == "mptcp-svc":
        return mptcp_svc(video, trace, mode)
    if algo == "pref-mptcp-svc":
        return pref_mptcp_svc(video, trace, PreferenceConfig(0 if n2 is None else n2), mode)
    raise ExperimentError(f"unknown algorithm {algo!r}")


def run_algorithm(
    algo: str,
    video: VideoSpec,
    trace: BandwidthTrace,
    mode: str = "skip",
    n2: Optional[int] = None,
    online: OnlineConfig = OnlineConfig(),
    baseline: BaselineConfig = BaselineConfig(),
) -> tuple[DownloadLog, FetchPlan]:
    """Run one algorithm on one trace; returns the download log and the plan
    (the realized plan for online and baseline players)."""
    if algo not in ALGORITHMS:
        raise ExperimentError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
    mode = _effective_mode(algo, mode)
    trace = trace.with_links(2)
    if algo in OFFLINE:
        plan = offline_plan(algo, video, trace, mode, n2)
        if algo == "mptcp-svc":
            log = simulate_download(plan, aggregate_trace(trace), video)
            log.consumed = attribute_aggregate(log.consumed[0], trace)
        else:
            log = simulate_download(plan, trace, video)
        return log, plan
    if algo in ONLINE:
        cfg = replace(online, algorithm=algo[len("online-"):], mode=mode, n2=n2 if n2 is not None else online.n2)
        log = run_online(video, trace, cfg)
        return log, log.realized_plan()
    runner = {"mp-bba": mp_bba, "mptcp-bba": mptcp_bba, "msplayer": msplayer}[algo]
    log = runner(video, trace, replace(baseline, mode=mode))
    return log, log.realized_plan()


@dataclass
class ExperimentConfig:
    algo: str
    video: VideoSpec
    traces: Sequence[tuple[str, BandwidthTrace]]
    mode: str = "skip"
    n2: Optional[int] = None
    online: OnlineConfig = field(default_factory=OnlineConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    out_dir: Optional[Path] = None
    jobs: int = 1

    def check(self) -> None:
        if self.algo not in ALGORITHMS:
            raise ExperimentError(f"unknown algorithm {self.algo!r}")
        if self.mode not in ("skip", "noskip"):
            raise ExperimentError(f"unknown mode {self.mode!r}")
        for name, t in self.traces:
            if t.links != 2:
                raise ExperimentError(f"trace {name!r} has {t.links} link(s); two are required")
        if self.algo in ONLINE:
            self.online.check(self.video)


def _one(args) -> dict:
    cfg, name, trace = args
    log, plan = run_algorithm(cfg.algo, cfg.video, trace, cfg.mode, cfg.n2, cfg.online, cfg.baseline)
    rec = {"algo": cfg.algo, "mode": _effective_mode(cfg.algo, cfg.mode), "trace": name}
    rec.update(compute_metrics(log, cfg.video).to_dict())
    rec["plan_digest"] = plan_digest(plan)
    rec["stall_slots"] = plan.total_stall
    return rec


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Run every trace, append records to ``records.jsonl`` and rewrite
    ``aggregate.csv`` under ``out_dir`` (if given)."""
    cfg.check()
    work = [(cfg, name, t) for name, t in cfg.traces]
    if cfg.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            records = list(pool.map(_one, work))
    else:
        records = [_one(w) for w in work]
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        append_records(out / "records.jsonl", records)
        aggregate(out / "records.jsonl", out / "aggregate.csv")
    return records


def aggregate(records_path: Path, out_path: Path) -> list[dict]:
    from .io import read_records

    return write_aggregate(read_records(records_path), out_path)


__all__ = [
    "ALGORITHMS",
    "BASELINES",
    "ExperimentConfig",
    "ExperimentError",
    "OFFLINE",
    "ONLINE",
    "aggregate",
    "offline_plan",
    "run_algorithm",
    "run_experiment",
]
