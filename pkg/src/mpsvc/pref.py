"""Preference-aware schedulers: link 1 is preferred, link 2 may only carry
layers up to ``n2`` and its usage is minimised."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .model import (
    SKIPPED,
    BandwidthTrace,
    FetchPlan,
    ModelError,
    Residual,
    VideoSpec,
    deadlines as make_deadlines,
)
from .offline import (
    OfflineResult,
    forward_scan,
    layer_candidates,
    prefix_at,
    rebuild_residual,
    reserve_backward,
    run_layers,
)


@dataclass(frozen=True)
class PreferenceConfig:
    n2: int = 0
    preferred_link: int = 1

    def __post_init__(self) -> None:
        if self.n2 < 0:
            raise ModelError("n2 must be >= 0")
        if self.preferred_link != 1:
            raise ModelError("only link 1 can be the preferred link")

    def check(self, video: VideoSpec) -> None:
        if self.n2 > video.top_layer:
            raise ModelError(f"n2={self.n2} exceeds the top layer {video.top_layer}")

    def links_for(self, links: int):
        others = tuple(range(1, links + 1))

        def rule(n: int):
            return others if n <= self.n2 else (1,)

        return rule


def _new_result(video: VideoSpec, trace: BandwidthTrace, dl) -> tuple[OfflineResult, list]:
    horizon = max(trace.slots, dl[-1])
    residual = Residual.from_trace(trace.with_links(2), horizon)
    assignment = [[SKIPPED] * video.chunk_count for _ in range(video.layer_count)]
    res = OfflineResult(FetchPlan.empty(video.layer_count, video.chunk_count), residual, tuple(dl))
    return res, assignment


def shift_to_link1(
    n: int,
    video: VideoSpec,
    residual: Residual,
    dl: Sequence[int],
    assignment: list[list[int]],
    pinned: Optional[set] = None,
) -> list[int]:
    """Move as many layer-``n`` fetches as possible from link 2 to link 1,
    keeping the earliest ones on link 2.  Link 2's residual is left stale."""
    on2 = [
        i
        for i in range(1, len(assignment[n]) + 1)
        if assignment[n][i - 1] == 2 and not (pinned and (n, i) in pinned)
    ]
    if not on2:
        return []
    scan = forward_scan(n, residual, video, dl, on2, (1,))
    moved = []
    for i in scan.kept:
        left = reserve_backward(residual, 1, dl[i - 1], video.layer_sizes[n][i - 1])
        if left:
            # cannot happen for equal-size layers; keep the link-2 fetch
            continue
        assignment[n][i - 1] = 1
        moved.append(i)
    return moved


def pref_layers(
    video: VideoSpec,
    residual: Residual,
    dl: Sequence[int],
    cfg: PreferenceConfig,
    assignment: list[list[int]],
    pinned: Optional[set] = None,
    result: Optional[OfflineResult] = None,
    base_done: bool = False,
) -> None:
    """Three phases: MP-SVC up to n2, minimise link 2 per layer, then the
    remaining layers on link 1 only."""
    low = range(1 if base_done else 0, cfg.n2 + 1)
    run_layers(video, residual, dl, low, cfg.links_for(residual.links), assignment, pinned, result)
    for n in range(0, cfg.n2 + 1):
        shift_to_link1(n, video, residual, dl, assignment, pinned)
    run_layers(
        video, residual, dl, range(cfg.n2 + 1, video.layer_count), lambda n: (1,),
        assignment, pinned, result,
    )


def pref_mp_svc_detailed(
    video: VideoSpec,
    trace: BandwidthTrace,
    cfg: PreferenceConfig,
    dl: Optional[Sequence[int]] = None,
) -> OfflineResult:
    cfg.check(video)
    dl = tuple(make_deadlines(video) if dl is None else dl)
    res, assignment = _new_result(video, trace, dl)
    pref_layers(video, res.residual, dl, cfg, assignment, result=res)
    res.plan = FetchPlan(tuple(map(tuple, assignment)), n2=cfg.n2)
    res.residual = rebuild_residual(res.plan, video, trace.with_links(2), dl)
    return res


def pref_mp_svc(video: VideoSpec, trace: BandwidthTrace, cfg: PreferenceConfig) -> FetchPlan:
    """Pref-MP-SVC plan (skip mode)."""
    return pref_mp_svc_detailed(video, trace, cfg).plan


def avoid_skips_base(
    video: VideoSpec,
    residual: Residual,
    dl: Sequence[int],
    assignment: list[list[int]],
    keep: Sequence[int],
) -> list[int]:
    """Place the base layers of ``keep`` with link 2 used only where link 1
    falls short, always moving the earliest movable chunk.

    Feasibility is tested per link on prefix byte totals of the residual
    rows.  Returns the chunks that could not be placed on either link.
    """
    keep = sorted(keep)
    if not keep:
        return []
    size = {i: video.layer_sizes[0][i - 1] for i in keep}
    dls = [dl[i - 1] for i in keep]
    cap1 = prefix_at(residual.rows[0], dls)
    cap2 = prefix_at(residual.rows[1], dls)
    pos = {i: p for p, i in enumerate(keep)}
    on1 = list(keep)
    on2: set[int] = set()
    load2 = [0] * len(keep)  # link-2 demand of chunks at positions <= p
    unplaced = []
    demand1 = 0
    for p, i in enumerate(keep):
        demand1 += size[i]
        while demand1 > cap1[p]:
            moved = False
            for j in on1:
                q = pos[j]
                if q > p:
                    break
                y = size[j]
                if all(load2[t] + y <= cap2[t] for t in range(q, len(keep))):
                    for t in range(q, len(keep)):
                        load2[t] += y
                    on1.remove(j)
                    on2.add(j)
                    demand1 -= y
                    moved = True
                    break
            if not moved:
                # safety net (unequal sizes): give up the latest chunk on link 1
                j = max(x for x in on1 if pos[x] <= p)
                on1.remove(j)
                unplaced.append(j)
                demand1 -= size[j]
    for i in keep:
        if i in on2:
            link = 2
        elif i in unplaced:
            continue
        else:
            link = 1
        if reserve_backward(residual, link, dl[i - 1], size[i]):
            raise AssertionError("prefix-feasible base layer failed to reserve")
        assignment[0][i - 1] = link
    return sorted(unplaced)


def avoid_skips_layers(
    video: VideoSpec,
    residual: Residual,
    dl: Sequence[int],
    assignment: list[list[int]],
    pinned: Optional[set] = None,
    result: Optional[OfflineResult] = None,
    keep: Optional[Sequence[int]] = None,
) -> list[int]:
    """Avoid-Skips on a residual: base layers via the earliest-move sweep,
    enhancement layers on link 1 only.  ``keep`` overrides the base set."""
    if keep is None:
        cands = layer_candidates(0, assignment, pinned)
        keep = forward_scan(0, residual, video, dl, cands, (1, 2)).kept
    unplaced = avoid_skips_base(video, residual, dl, assignment, keep)
    if result is not None:
        result.fallback_skips.extend((0, i) for i in unplaced)
    run_layers(
        video, residual, dl, range(1, video.layer_count), lambda n: (1,),
        assignment, pinned, result,
    )
    return unplaced


def avoid_skips_detailed(
    video: VideoSpec,
    trace: BandwidthTrace,
    dl: Optional[Sequence[int]] = None,
) -> OfflineResult:
    dl = tuple(make_deadlines(video) if dl is None else dl)
    res, assignment = _new_result(video, trace, dl)
    avoid_skips_layers(video, res.residual, dl, assignment, result=res)
    res.plan = FetchPlan(tuple(map(tuple, assignment)), n2=0)
    return res


def avoid_skips_mp_svc(video: VideoSpec, trace: BandwidthTrace) -> FetchPlan:
    """Avoid-Skips MP-SVC plan: link 2 only prevents base-layer skips."""
    return avoid_skips_detailed(video, trace).plan


__all__ = [
    "PreferenceConfig",
    "avoid_skips_base",
    "avoid_skips_detailed",
    "avoid_skips_layers",
    "avoid_skips_mp_svc",
    "pref_layers",
    "pref_mp_svc",
    "pref_mp_svc_detailed",
    "shift_to_link1",
]
