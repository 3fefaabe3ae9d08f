"""Exact objective evaluation and exhaustive search over fetch plans.

Feasibility of a plan is checked per link with the prefix condition: for every
chunk ``i`` the bytes a link must deliver for chunks ``1..i`` may not exceed
its cumulative bandwidth at deadline(i).  On a single link with
earliest-deadline-first service this is exact.  Search is a depth-first
enumeration of per-chunk options with branch and bound; it is exponential by
design and guarded to small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Optional, Sequence

from . import kernels
from .model import (
    SKIPPED,
    BandwidthTrace,
    FetchPlan,
    ModelError,
    VideoSpec,
    WeightTable,
    build_weights,
    cumulative_bandwidth,
    deadlines as make_deadlines,
)

MAX_CHUNKS = 6
MAX_LAYERS = 3
MAX_SLOTS = 10


class InstanceTooLarge(ModelError):
    pass


@dataclass(frozen=True)
class OracleResult:
    value: object
    plan: Optional[FetchPlan]


def objective_value(plan: FetchPlan, w: WeightTable, mode: str = "skip") -> int:
    """Weighted sum of fetched layers, minus mu * d(C) in no-skip mode."""
    plan.check()
    if plan.layer_count != w.layer_count:
        raise ModelError("plan and weight table disagree on the layer count")
    total = 0
    for n, row in enumerate(plan.assignment):
        for link in row:
            if link != SKIPPED:
                total += w.lam[n][link - 1]
    if mode == "noskip":
        total -= w.mu * plan.total_stall
    return total


def objective_tuple(plan: FetchPlan, links: int = 2) -> tuple[int, ...]:
    """Lexicographic form: (-d(C), |I_0^1|, |I_0^2|, |I_1^1|, ...)."""
    plan.check()
    out = [-plan.total_stall]
    for n in range(plan.layer_count):
        for k in range(1, links + 1):
            out.append(plan.count(n, k))
    return tuple(out)


def plan_feasible(
    plan: FetchPlan,
    video: VideoSpec,
    trace: BandwidthTrace,
    dl: Optional[Sequence[int]] = None,
) -> bool:
    """Per-link prefix test of bandwidth feasibility."""
    dl = make_deadlines(video, plan.stall) if dl is None else dl
    t = trace.extended(max(dl[-1], trace.slots)) if dl else trace
    R = cumulative_bandwidth(t)
    links = t.links
    used = [0] * links
    for i in range(1, video.chunk_count + 1):
        for n in range(video.layer_count):
            link = plan.assignment[n][i - 1]
            if link == SKIPPED:
                continue
            if link > links:
                return False
            if plan.split is not None:
                for k, b in enumerate(plan.split[n][i - 1]):
                    used[k] += b
            else:
                used[link - 1] += video.layer_sizes[n][i - 1]
        for k in range(links):
            if used[k] > R[k][dl[i - 1]]:
                return False
    return True


Option = tuple[tuple[int, ...], object, tuple[int, ...]]  # (bytes per link, value, layer links)


def search(
    video: VideoSpec,
    trace: BandwidthTrace,
    dl: Sequence[int],
    options: Sequence[Sequence[Option]],
) -> tuple[object, Optional[list[tuple[int, ...]]]]:
    """Maximise the summed option value subject to per-link prefix caps.

    ``options[i]`` lists the choices of chunk ``i+1``.  Returns the best value
    and the chosen layer-link tuples, or ``(None, None)`` when infeasible.
    """
    links = trace.links
    t = trace.extended(max(dl[-1], trace.slots))
    R = cumulative_bandwidth(t)
    opt_bytes: list = []
    opt_value: list = []
    opt_start = [0]
    for opts in options:
        for b, v, _ in opts:
            opt_bytes.extend(b)
            opt_value.append(v)
        opt_start.append(len(opt_value))
    caps = [R[k][d] for d in dl for k in range(links)]
    value, choice = kernels.best_assignment(opt_bytes, opt_value, opt_start, caps, links)
    if value is None:
        return None, None
    return value, [options[i][c][2] for i, c in enumerate(choice)]


def chunk_options(
    video: VideoSpec,
    i: int,
    links: int,
    allowed: Callable[[int], Sequence[int]],
    value: Callable[[tuple[int, ...]], object],
    min_layers: int = 0,
    max_layers: Optional[int] = None,
) -> list[Option]:
    """All monotone layer/link choices for chunk ``i``.

    Options are listed in lexicographic order of their per-layer links with
    SKIPPED (0) first, so the first optimum found in depth-first order is the
    lexicographically smallest optimal plan (chunk-major).
    """
    top = video.layer_count if max_layers is None else max_layers
    out = []
    for m in range(min_layers, top + 1):
        for combo in product(*(allowed(n) for n in range(m))):
            b = [0] * links
            for n, k in enumerate(combo):
                b[k - 1] += video.layer_sizes[n][i - 1]
            out.append((tuple(b), value(combo), tuple(combo)))
    depth = video.layer_count
    out.sort(key=lambda o: o[2] + (0,) * (depth - len(o[2])))
    return out


def _guard(video: VideoSpec, trace: BandwidthTrace, force: bool) -> None:
    if force:
        return
    if (
        video.chunk_count > MAX_CHUNKS
        or video.layer_count > MAX_LAYERS
        or trace.slots > MAX_SLOTS
        or trace.links != 2
    ):
        raise InstanceTooLarge(
            f"oracle limited to C<={MAX_CHUNKS}, N<={MAX_LAYERS - 1}, "
            f"T<={MAX_SLOTS}, K=2"
        )


def _to_plan(video: VideoSpec, chosen: Sequence[tuple[int, ...]], stall=(), n2=None) -> FetchPlan:
    a = [[SKIPPED] * video.chunk_count for _ in range(video.layer_count)]
    for i, combo in enumerate(chosen):
        for n, k in enumerate(combo):
            a[n][i] = k
    return FetchPlan(tuple(map(tuple, a)), tuple(stall), n2)


def _allowed(n2: Optional[int], links: int):
    every = tuple(range(1, links + 1))
    if n2 is None:
        return lambda n: every
    return lambda n: every if n <= n2 else (1,)


def min_feasible_stall(
    video: VideoSpec,
    trace: BandwidthTrace,
    max_stall: Optional[int] = None,
    force: bool = False,
) -> Optional[int]:
    """Smallest uniform stall d such that every base layer can be fetched."""
    _guard(video, trace, force)
    max_stall = 10 * video.duration if max_stall is None else max_stall
    links = trace.links
    for d in range(max_stall + 1):
        dl = make_deadlines(video, [d] * video.chunk_count)
        opts = [
            chunk_options(video, i, links, _allowed(None, links), lambda c: 0, 1, 1)
            for i in range(1, video.chunk_count + 1)
        ]
        value, _ = search(video, trace, dl, opts)
        if value is not None:
            return d
    return None


def brute_force_optimal(
    video: VideoSpec,
    trace: BandwidthTrace,
    w: Optional[WeightTable] = None,
    cfg=None,
    mode: str = "skip",
    force: bool = False,
) -> OracleResult:
    """Best plan of the weighted objective over every feasible plan.

    ``cfg`` is a PreferenceConfig (or None for no preference).  In no-skip
    mode the smallest feasible stall is used, since the stall weight
    outweighs every layer, and every base layer is forced.
    """
    _guard(video, trace, force)
    links = trace.links
    if w is None:
        w = build_weights(video.chunk_count, video.top_layer, video.max_layer_size(), links)
    n2 = None if cfg is None else cfg.n2
    allowed = _allowed(n2, links)

    def value(combo):
        return sum(w.lam[n][k - 1] for n, k in enumerate(combo))

    stall = ()
    min_layers = 0
    if mode == "noskip":
        d = min_feasible_stall(video, trace, force=True)
        if d is None:
            return OracleResult(None, None)
        stall = (d,) * video.chunk_count
        min_layers = 1
    dl = make_deadlines(video, stall or None)
    opts = [
        chunk_options(video, i, links, allowed, value, min_layers)
        for i in range(1, video.chunk_count + 1)
    ]
    best, chosen = search(video, trace, dl, opts)
    if best is None:
        return OracleResult(None, None)
    plan = _to_plan(video, chosen, stall, n2)
    return OracleResult(objective_value(plan, w, mode), plan)


def max_layer_count(
    video: VideoSpec,
    trace: BandwidthTrace,
    plan: FetchPlan,
    n: int,
    n2: Optional[int] = None,
    fix_links: bool = True,
    force: bool = False,
) -> int:
    """Most layer-``n`` fetches possible when layers below ``n`` are fetched
    as in ``plan``; higher layers are ignored.

    With ``fix_links`` the lower layers keep their links too (the plan's
    decision variables); otherwise only which layers are fetched is kept.
    """
    _guard(video, trace, force)
    links = trace.links
    allowed = _allowed(n2, links)
    dl = make_deadlines(video, plan.stall)
    opts = []
    for i in range(1, video.chunk_count + 1):
        q = sum(1 for m in range(n) if plan.assignment[m][i - 1] != SKIPPED)
        top = q + 1 if q == n else q
        opt = chunk_options(video, i, links, allowed, lambda c: 1 if len(c) > n else 0, q, top)
        if fix_links:
            lower = tuple(plan.assignment[m][i - 1] for m in range(q))
            opt = [o for o in opt if o[2][:q] == lower]
        opts.append(opt)
    best, _ = search(video, trace, dl, opts)
    if best is None:
        raise ModelError("lower-layer decisions are themselves infeasible")
    return best


def min_link2_base(
    video: VideoSpec,
    trace: BandwidthTrace,
    dl: Optional[Sequence[int]] = None,
    force: bool = False,
) -> tuple[int, int]:
    """(max base-layer count, fewest link-2 base bytes at that count)."""
    _guard(video, trace, force)
    links = trace.links
    dl = make_deadlines(video) if dl is None else dl
    big = sum(video.layer_sizes[0]) + 1
    opts = []
    for i in range(1, video.chunk_count + 1):
        y = video.layer_sizes[0][i - 1]
        row = [((0,) * links, 0, ())]
        for k in range(1, links + 1):
            b = [0] * links
            b[k - 1] = y
            row.append((tuple(b), big - (y if k == 2 else 0), (k,)))
        opts.append(row)
    best, chosen = search(video, trace, dl, opts)
    count = sum(1 for c in chosen if c)
    link2 = count * big - best
    return count, link2


def enumerate_plans(
    video: VideoSpec,
    links: int = 2,
    n2: Optional[int] = None,
):
    """Yield every layer-monotone plan (tiny instances only)."""
    allowed = _allowed(n2, links)
    per_chunk = [
        [o[2] for o in chunk_options(video, i, links, allowed, lambda c: 0)]
        for i in range(1, video.chunk_count + 1)
    ]
    for chosen in product(*per_chunk):
        yield _to_plan(video, chosen, (), n2)
