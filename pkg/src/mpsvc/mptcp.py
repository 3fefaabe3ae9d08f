"""MPTCP variants: both links act as one aggregated pipe, so a single layer
may be split across the physical links."""

from __future__ import annotations

from typing import Optional

from .model import (
    SKIPPED,
    BandwidthTrace,
    FetchPlan,
    ModelError,
    Residual,
    VideoSpec,
    cumulative_bandwidth,
    deadlines as make_deadlines,
)
from .noskip import min_stall_scan, no_skip_mp_svc, default_max_stall, InfeasibleStall
from .offline import mp_svc_offline, reserve_backward, run_layers
from .pref import PreferenceConfig

MODES = ("skip", "noskip")


def aggregate_trace(trace: BandwidthTrace) -> BandwidthTrace:
    """Two-link trace whose link 1 carries the slot-wise sum of all links."""
    total = tuple(sum(col) for col in zip(*trace.bw))
    return BandwidthTrace((total, (0,) * trace.slots))


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ModelError(f"mode must be one of {MODES}, got {mode!r}")


def mptcp_svc(video: VideoSpec, trace: BandwidthTrace, mode: str = "skip") -> FetchPlan:
    """MP-SVC (or its no-skip variant) on the aggregated pipe."""
    _check_mode(mode)
    agg = aggregate_trace(trace)
    if mode == "skip":
        return mp_svc_offline(video, agg)
    return no_skip_mp_svc(video, agg)


def _split_plan(video, assignment, x1, x2, stall, n2):
    split = tuple(
        tuple(
            (x1[n][i], x2[n][i]) if assignment[n][i] != SKIPPED else (0, 0)
            for i in range(video.chunk_count)
        )
        for n in range(video.layer_count)
    )
    return FetchPlan(tuple(map(tuple, assignment)), stall, n2, split)


def pref_mptcp_svc(
    video: VideoSpec,
    trace: BandwidthTrace,
    cfg: PreferenceConfig = PreferenceConfig(0),
    mode: str = "skip",
) -> FetchPlan:
    """Aggregated-pipe decisions up to ``n2``, link 1 used as far as it can
    go, shortfalls moved to link 2 from the earliest bytes.

    The plan labels every fetched layer with link 1 (the logical pipe) and
    carries the exact per-link byte split in ``plan.split``.
    """
    _check_mode(mode)
    cfg.check(video)
    trace = trace.with_links(2)
    agg = aggregate_trace(trace)
    C, layers = video.chunk_count, video.layer_count
    stall: tuple[int, ...] = ()
    if mode == "noskip":
        stall, dl = min_stall_scan(video, agg)
    else:
        dl = make_deadlines(video)
    horizon = max(trace.slots, dl[-1])

    # phase 1: decisions for layers 0..n2 on the aggregate
    while True:
        residual = Residual.from_trace(agg, horizon)
        assignment = [[SKIPPED] * C for _ in range(layers)]
        run_layers(video, residual, dl, range(cfg.n2 + 1), lambda n: (1,), assignment)
        if mode == "skip" or all(x != SKIPPED for x in assignment[0]):
            break
        d = stall[0] + 1
        if d > default_max_stall(video):
            raise InfeasibleStall("base layers cannot be delivered")
        stall = (d,) * C
        dl = make_deadlines(video, stall)
        horizon = max(trace.slots, dl[-1])

    # phase 2: everything on link 1, shortfalls drawn to link 2 earliest first
    t = trace.extended(horizon)
    R1, R2 = cumulative_bandwidth(t)[:2]
    x1 = [[video.layer_sizes[n][i] if assignment[n][i] != SKIPPED else 0 for i in range(C)]
          for n in range(layers)]
    x2 = [[0] * C for _ in range(layers)]
    load1 = 0
    load2 = [0] * C  # link-2 demand of chunks <= i
    for i in range(C):
        load1 += sum(x1[n][i] for n in range(layers))
        over = load1 - R1[dl[i]]
        if over <= 0:
            continue
        for j in range(i + 1):
            if over == 0:
                break
            slack = min(R2[dl[t_]] - load2[t_] for t_ in range(j, C))
            for n in range(layers):
                if over == 0 or slack <= 0:
                    break
                move = min(x1[n][j], over, slack)
                if move <= 0:
                    continue
                x1[n][j] -= move
                x2[n][j] += move
                for t_ in range(j, C):
                    load2[t_] += move
                over -= move
                load1 -= move
                slack -= move
        if over:
            raise AssertionError("aggregate-feasible decisions could not be split")

    # phase 3: reserve link 1 and link 2 shares, then higher layers on link 1
    residual = Residual.from_trace(trace, horizon)
    for i in range(C):
        for n in range(layers):
            if x1[n][i]:
                reserve_backward(residual, 1, dl[i], x1[n][i])
            if x2[n][i]:
                reserve_backward(residual, 2, dl[i], x2[n][i])
    run_layers(video, residual, dl, range(cfg.n2 + 1, layers), lambda n: (1,), assignment)
    for n in range(cfg.n2 + 1, layers):
        for i in range(C):
            if assignment[n][i] != SKIPPED:
                x1[n][i] = video.layer_sizes[n][i]
    return _split_plan(video, assignment, x1, x2, stall, cfg.n2)


__all__ = ["aggregate_trace", "mptcp_svc", "pref_mptcp_svc", "MODES"]
