"""Offline MP-SVC: per-layer forward scan plus per-chunk backward-cost assignment.

The engine here is shared by every scheduler in the package.  Schedulers work
on explicit deadline lists and on a mutable :class:`Residual` so that the
online controller can run them over a sliding window with some layers already
pinned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import kernels
from .model import (
    SKIPPED,
    BandwidthTrace,
    FetchPlan,
    Residual,
    VideoSpec,
    deadlines as make_deadlines,
)

LinkRule = Callable[[int], Sequence[int]]


@dataclass(frozen=True)
class FetchCost:
    """Outcome of a simulated backward fetch of one layer on one link.

    ``cost`` is None when the layer cannot be fetched by its deadline
    (infinite cost).  ``stop``/``take_at_stop`` describe the reservation so
    it can be committed without re-scanning.
    """

    link: int
    cost: Optional[int]
    deadline: int
    stop: int = 0
    take_at_stop: int = 0

    @property
    def feasible(self) -> bool:
        return self.cost is not None


@dataclass
class LayerScanState:
    """Result of the forward scan of one layer."""

    layer: int
    candidates: list[int]
    V: dict[int, int]
    skip: dict[int, int]
    kept: list[int]
    skipped: list[int]


@dataclass
class OfflineResult:
    plan: FetchPlan
    residual: Residual
    deadlines: tuple[int, ...]
    costs: dict = field(default_factory=dict)
    # layers dropped by the safety net because no link could carry them
    fallback_skips: list = field(default_factory=list)


def _row_end(row, d: int) -> int:
    return min(d, len(row) - 1)


def prefix_at(row, dl: Sequence[int]) -> list[int]:
    """Cumulative residual bytes of one row at each (increasing) deadline."""
    out = []
    acc = 0
    j = 0
    for d in dl:
        top = _row_end(row, d)
        while j < top:
            j += 1
            acc += row[j]
        out.append(acc)
    return out


def forward_scan(
    n: int,
    residual: Residual,
    video: VideoSpec,
    dl: Sequence[int],
    candidates: Sequence[int],
    links: Sequence[int],
) -> LayerScanState:
    """Decide which candidates get layer ``n``; unavoidable skips hit the
    earliest candidates.

    With equal sizes the count fetchable by deadline(i) is
    ``sum_k floor(R_k(deadline(i)) / Y)`` on the residual rows; with unequal
    sizes the byte totals are packed instead.
    """
    cands = sorted(candidates)
    sizes = {i: video.layer_sizes[n][i - 1] for i in cands}
    uniform = len(set(sizes.values())) <= 1
    cand_dl = [dl[i - 1] for i in cands]
    per_link = [prefix_at(residual.rows[k - 1], cand_dl) for k in links]
    V: dict[int, int] = {}
    skip: dict[int, int] = {}
    kept: list[int] = []
    dropped: list[int] = []
    head = 0  # kept[head:] are the live kept candidates
    demand = 0
    skips = 0
    for pos, i in enumerate(cands):
        kept.append(i)
        demand += sizes[i]
        if uniform:
            y = sizes[i]
            cap = sum(col[pos] // y for col in per_link)
            V[i] = cap
            while len(kept) - head > cap:
                dropped.append(kept[head])
                demand -= sizes[kept[head]]
                head += 1
                skips += 1
        else:
            cap = sum(col[pos] for col in per_link)
            while demand > cap:
                dropped.append(kept[head])
                demand -= sizes[kept[head]]
                head += 1
                skips += 1
            V[i] = len(kept) - head
        skip[i] = skips
    return LayerScanState(n, cands, V, skip, kept[head:], sorted(dropped))


def backward_cost(
    k: int,
    i: int,
    n: int,
    residual: Residual,
    video: VideoSpec,
    dl: Sequence[int],
    prev_deadline: Optional[int] = None,
) -> FetchCost:
    """Cost of fetching layer ``n`` of chunk ``i`` on link ``k``: the bytes
    the fetch would consume at or before deadline(i-1).  Residual unchanged."""
    row = residual.rows[k - 1]
    d = _row_end(row, dl[i - 1])
    if prev_deadline is None:
        prev_deadline = dl[i - 2] if i > 1 else 0
    cost, stop, take = kernels.backward_probe(
        row, d, prev_deadline, video.layer_sizes[n][i - 1]
    )
    if cost < 0:
        return FetchCost(k, None, d)
    return FetchCost(k, cost, d, stop, take)


def commit(residual: Residual, fc: FetchCost) -> None:
    kernels.backward_commit(residual.rows[fc.link - 1], fc.deadline, fc.stop, fc.take_at_stop)


def reserve_backward(residual: Residual, k: int, d: int, need: int) -> int:
    """Reserve up to ``need`` bytes on link ``k`` from slot ``d`` backward.

    Returns the bytes that could not be reserved (0 on success).
    """
    row = residual.rows[k - 1]
    d = _row_end(row, d)
    cost, stop, take = kernels.backward_probe(row, d, 0, need)
    if cost >= 0:
        kernels.backward_commit(row, d, stop, take)
        return 0
    missing = need - sum(row[1 : d + 1])
    for j in range(1, d + 1):
        row[j] = 0
    return missing


def reserve_forward(residual: Residual, k: int, need: int) -> int:
    """Reserve up to ``need`` bytes on link ``k`` from slot 1 forward."""
    row = residual.rows[k - 1]
    j = 1
    while need > 0 and j < len(row):
        take = min(row[j], need)
        row[j] -= take
        need -= take
        j += 1
    return need


def assign_layer(
    n: int,
    chunks: Sequence[int],
    residual: Residual,
    video: VideoSpec,
    dl: Sequence[int],
    links: Sequence[int],
    assignment: list[list[int]],
    result: Optional[OfflineResult] = None,
) -> list[int]:
    """Commit layer ``n`` of each chunk, in increasing order, to the link of
    minimum backward cost (ties go to the lower link).  Returns the chunks the
    safety net had to drop."""
    dropped = []
    for i in sorted(chunks):
        best = None
        costs = []
        for k in links:
            fc = backward_cost(k, i, n, residual, video, dl)
            costs.append(fc)
            if fc.feasible and (best is None or fc.cost < best.cost):
                best = fc
        if result is not None:
            result.costs[(n, i)] = {fc.link: fc.cost for fc in costs}
        if best is None:
            dropped.append(i)
            if result is not None:
                result.fallback_skips.append((n, i))
            continue
        commit(residual, best)
        assignment[n][i - 1] = best.link
    return dropped


def layer_candidates(
    n: int,
    assignment: list[list[int]],
    pinned: Optional[set] = None,
    chunks: Optional[Sequence[int]] = None,
) -> list[int]:
    """Chunks that may receive layer ``n``: lower layer fetched, not pinned."""
    C = len(assignment[0])
    pool = range(1, C + 1) if chunks is None else chunks
    out = []
    for i in pool:
        if pinned and (n, i) in pinned:
            continue
        if assignment[n][i - 1] != SKIPPED:
            continue
        if n > 0 and assignment[n - 1][i - 1] == SKIPPED:
            continue
        out.append(i)
    return out


def run_layers(
    video: VideoSpec,
    residual: Residual,
    dl: Sequence[int],
    layers: Sequence[int],
    links_for: LinkRule,
    assignment: list[list[int]],
    pinned: Optional[set] = None,
    result: Optional[OfflineResult] = None,
) -> None:
    """MP-SVC forward/backward passes for ``layers`` in order."""
    for n in layers:
        links = list(links_for(n))
        cands = layer_candidates(n, assignment, pinned)
        if not cands or not links:
            continue
        scan = forward_scan(n, residual, video, dl, cands, links)
        assign_layer(n, scan.kept, residual, video, dl, links, assignment, result)


def all_links(residual: Residual) -> LinkRule:
    ks = tuple(range(1, residual.links + 1))
    return lambda n: ks


def mp_svc_detailed(
    video: VideoSpec,
    trace: BandwidthTrace,
    dl: Optional[Sequence[int]] = None,
    links_for: Optional[LinkRule] = None,
) -> OfflineResult:
    """MP-SVC with the intermediate costs and the final residual exposed."""
    dl = tuple(make_deadlines(video) if dl is None else dl)
    horizon = max(trace.slots, dl[-1])
    residual = Residual.from_trace(trace, horizon)
    assignment = [[SKIPPED] * video.chunk_count for _ in range(video.layer_count)]
    result = OfflineResult(FetchPlan.empty(video.layer_count, video.chunk_count), residual, dl)
    rule = links_for or all_links(residual)
    run_layers(video, residual, dl, range(video.layer_count), rule, assignment, result=result)
    result.plan = FetchPlan(tuple(map(tuple, assignment)))
    return result


def mp_svc_offline(video: VideoSpec, trace: BandwidthTrace) -> FetchPlan:
    """Offline MP-SVC plan (skip mode)."""
    return mp_svc_detailed(video, trace).plan


def rebuild_residual(
    plan: FetchPlan,
    video: VideoSpec,
    trace: BandwidthTrace,
    dl: Sequence[int],
) -> Residual:
    """Residual left after reserving every fetched layer backward from its
    deadline, in (layer, chunk) order."""
    horizon = max(trace.slots, dl[-1])
    residual = Residual.from_trace(trace, horizon)
    for n, row in enumerate(plan.assignment):
        for i, link in enumerate(row, start=1):
            if link == SKIPPED:
                continue
            if plan.split is not None:
                for k, b in enumerate(plan.split[n][i - 1], start=1):
                    if b:
                        reserve_backward(residual, k, dl[i - 1], b)
            else:
                reserve_backward(residual, link, dl[i - 1], video.layer_sizes[n][i - 1])
    return residual
