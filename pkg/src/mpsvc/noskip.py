"""No-skip (stall-based) schedulers: every base layer is fetched and the
playback start is delayed by the smallest stall that makes this possible."""

from __future__ import annotations

from typing import Optional, Sequence

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
from .offline import OfflineResult, prefix_at, run_layers
from .pref import PreferenceConfig, avoid_skips_layers, pref_layers


class InfeasibleStall(ModelError):
    """The trace cannot deliver every base layer within the stall horizon."""


def default_max_stall(video: VideoSpec) -> int:
    return 10 * video.duration


def base_fits(
    video: VideoSpec,
    rows: Sequence,
    dl: Sequence[int],
    chunks: Optional[Sequence[int]] = None,
) -> bool:
    """Forward-scan test: can every listed base layer meet ``dl``?"""
    chunks = list(range(1, video.chunk_count + 1)) if chunks is None else sorted(chunks)
    if not chunks:
        return True
    sizes = [video.layer_sizes[0][i - 1] for i in chunks]
    cdl = [dl[i - 1] for i in chunks]
    cols = [prefix_at(r, cdl) for r in rows]
    uniform = len(set(sizes)) == 1
    demand = 0
    for p, y in enumerate(sizes):
        demand += y
        if uniform:
            if sum(c[p] // y for c in cols) < p + 1:
                return False
        elif sum(c[p] for c in cols) < demand:
            return False
    return True


def min_stall_scan(
    video: VideoSpec,
    trace: BandwidthTrace,
    max_stall: Optional[int] = None,
    links: Optional[Sequence[int]] = None,
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Smallest stall d(C) such that the forward scan keeps every base layer.

    Chunks are visited in order and d grows one slot at a time while chunk
    ``i`` is short; all stalls are then moved to the start.  Returns the
    uniform stall vector and the shifted deadlines.
    """
    max_stall = default_max_stall(video) if max_stall is None else max_stall
    C = video.chunk_count
    top = make_deadlines(video)[-1] + max_stall
    t = trace.extended(max(top, trace.slots))
    links = list(range(1, t.links + 1)) if links is None else list(links)
    R = cumulative_bandwidth(t)
    base = make_deadlines(video)
    sizes = video.layer_sizes[0]
    uniform = len(set(sizes)) == 1
    d = 0
    demand = 0
    for i in range(1, C + 1):
        demand += sizes[i - 1]
        while True:
            j = base[i - 1] + d
            if uniform:
                ok = sum(R[k - 1][j] // sizes[0] for k in links) >= i
            else:
                ok = sum(R[k - 1][j] for k in links) >= demand
            if ok:
                break
            d += 1
            if d > max_stall:
                raise InfeasibleStall(
                    f"base layers need more than {max_stall} slots of stall"
                )
    stall = (d,) * C
    return stall, make_deadlines(video, stall)


def _run_with_stall(video, trace, stall_links, layer_fn, max_stall, n2=None):
    trace = trace.with_links(2)
    stall, _ = min_stall_scan(video, trace, max_stall, stall_links)
    d = stall[0]
    max_stall = default_max_stall(video) if max_stall is None else max_stall
    while True:
        st = (d,) * video.chunk_count
        dl = make_deadlines(video, st)
        residual = Residual.from_trace(trace, max(trace.slots, dl[-1]))
        assignment = [[SKIPPED] * video.chunk_count for _ in range(video.layer_count)]
        res = OfflineResult(FetchPlan.empty(video.layer_count, video.chunk_count), residual, dl)
        layer_fn(video, residual, dl, assignment, res)
        if all(x != SKIPPED for x in assignment[0]):
            res.plan = FetchPlan(tuple(map(tuple, assignment)), st, n2)
            return res
        # unequal base sizes can defeat the byte-level scan; add a slot
        d += 1
        if d > max_stall:
            raise InfeasibleStall(f"base layers need more than {max_stall} slots of stall")


def no_skip_detailed(
    video: VideoSpec, trace: BandwidthTrace, max_stall: Optional[int] = None
) -> OfflineResult:
    def layers(video, residual, dl, assignment, res):
        rule = lambda n: tuple(range(1, residual.links + 1))
        run_layers(video, residual, dl, range(video.layer_count), rule, assignment, result=res)

    return _run_with_stall(video, trace, None, layers, max_stall)


def no_skip_mp_svc(
    video: VideoSpec, trace: BandwidthTrace, max_stall: Optional[int] = None
) -> FetchPlan:
    """MP-SVC against deadlines shifted by the minimum stall."""
    return no_skip_detailed(video, trace, max_stall).plan


def avoid_stalls_detailed(
    video: VideoSpec, trace: BandwidthTrace, max_stall: Optional[int] = None
) -> OfflineResult:
    def layers(video, residual, dl, assignment, res):
        keep = range(1, video.chunk_count + 1)
        avoid_skips_layers(video, residual, dl, assignment, result=res, keep=keep)

    return _run_with_stall(video, trace, (1, 2), layers, max_stall, n2=0)


def avoid_stalls_mp_svc(
    video: VideoSpec, trace: BandwidthTrace, max_stall: Optional[int] = None
) -> FetchPlan:
    """Avoid-Skips logic in no-skip mode: stall as little as the two links
    allow, use link 2 only for base layers link 1 cannot carry in time."""
    return avoid_stalls_detailed(video, trace, max_stall).plan


def pref_no_skip_mp_svc(
    video: VideoSpec,
    trace: BandwidthTrace,
    cfg: PreferenceConfig,
    max_stall: Optional[int] = None,
) -> FetchPlan:
    """Pref-MP-SVC against deadlines shifted by the minimum stall."""
    cfg.check(video)

    def layers(video, residual, dl, assignment, res):
        pref_layers(video, residual, dl, cfg, assignment, result=res)

    return _run_with_stall(video, trace, None, layers, max_stall, n2=cfg.n2).plan
