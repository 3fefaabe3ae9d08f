"""Replay of fetch plans against traces and QoE metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .model import (
    SKIPPED,
    BandwidthTrace,
    FetchPlan,
    VideoSpec,
    deadlines as make_deadlines,
)


@dataclass
class DownloadLog:
    """What actually happened during a session.

    ``completion[n][i-1]`` is the slot in which layer ``n`` of chunk ``i``
    finished (None if it never did); ``consumed[k-1][j-1]`` is the bytes link
    ``k`` delivered in slot ``j``; ``quality[i-1]`` is the highest layer
    playable at the chunk's deadline (-1 means skipped).
    """

    chunk_duration: int
    deadlines: tuple[int, ...]
    completion: tuple[tuple[Optional[int], ...], ...]
    links_used: tuple[tuple[int, ...], ...]
    consumed: tuple[tuple[int, ...], ...]
    quality: tuple[int, ...]
    late: tuple[tuple[int, int], ...] = ()
    stalls: tuple[tuple[int, int], ...] = ()
    extra: dict = field(default_factory=dict)

    @property
    def chunk_count(self) -> int:
        return len(self.quality)

    @property
    def skipped(self) -> list[int]:
        return [i + 1 for i, q in enumerate(self.quality) if q < 0]

    def link_bytes(self) -> tuple[int, ...]:
        return tuple(sum(r) for r in self.consumed)

    def realized_plan(self) -> FetchPlan:
        """Plan made of the layers that were playable, with their links."""
        a = []
        for n, row in enumerate(self.links_used):
            a.append(tuple(
                link if self.quality[i] >= n else SKIPPED for i, link in enumerate(row)
            ))
        stall = self.extra.get("stall_vector") or ()
        return FetchPlan(tuple(a), tuple(stall))


def _item_parts(plan: FetchPlan, video: VideoSpec, n: int, i: int, links: int):
    if plan.split is not None:
        return [(k + 1, b) for k, b in enumerate(plan.split[n][i - 1][:links]) if b > 0]
    return [(plan.assignment[n][i - 1], video.layer_sizes[n][i - 1])]


def simulate_download(
    plan: FetchPlan,
    trace: BandwidthTrace,
    video: VideoSpec,
    dl: Optional[Sequence[int]] = None,
) -> DownloadLog:
    """Each link drains its committed layers in (chunk, layer) order as fast
    as its per-slot capacity allows."""
    C = video.chunk_count
    dl = tuple(make_deadlines(video, plan.stall) if dl is None else dl)
    links = max(trace.links, max((max(r) for r in plan.assignment), default=0))
    trace = trace.with_links(links)
    horizon = max(trace.slots, dl[-1] if dl else 0)
    trace = trace.extended(horizon)
    queues: list[list] = [[] for _ in range(links)]
    pending: dict[tuple[int, int], int] = {}
    for i in range(1, C + 1):
        for n in range(video.layer_count):
            if plan.assignment[n][i - 1] == SKIPPED:
                continue
            parts = _item_parts(plan, video, n, i, links)
            pending[(n, i)] = len(parts)
            for k, b in parts:
                queues[k - 1].append([n, i, b])
    completion = [[None] * C for _ in range(video.layer_count)]
    consumed = [[0] * horizon for _ in range(links)]
    heads = [0] * links
    for j in range(1, horizon + 1):
        for k in range(links):
            cap = trace.bw[k][j - 1]
            q = queues[k]
            while cap > 0 and heads[k] < len(q):
                item = q[heads[k]]
                take = min(cap, item[2])
                item[2] -= take
                cap -= take
                consumed[k][j - 1] += take
                if item[2] == 0:
                    heads[k] += 1
                    key = (item[0], item[1])
                    pending[key] -= 1
                    if pending[key] == 0:
                        completion[item[0]][item[1] - 1] = j
        if all(h == len(q) for h, q in zip(heads, queues)):
            break
    late = []
    quality = []
    for i in range(1, C + 1):
        q = -1
        for n in range(video.layer_count):
            done = completion[n][i - 1]
            if plan.assignment[n][i - 1] != SKIPPED and (done is None or done > dl[i - 1]):
                late.append((n, i))
            if done is not None and done <= dl[i - 1] and q == n - 1:
                q = n
        quality.append(q)
    stalls = ()
    if plan.total_stall:
        stalls = ((video.startup_delay, plan.total_stall),)
    return DownloadLog(
        video.chunk_duration,
        dl,
        tuple(map(tuple, completion)),
        plan.assignment,
        tuple(map(tuple, consumed)),
        tuple(quality),
        tuple(late),
        stalls,
        {"stall_vector": plan.stall},
    )


@dataclass(frozen=True)
class QoeReport:
    """Session metrics; rates are in bytes per slot."""

    chunk_count: int
    skip_count: int
    skip_duration: int
    stall_duration: int
    avg_playback_rate: Fraction
    layer_switching_rate: Fraction
    link_bytes: tuple[int, ...]
    pmf: tuple[Fraction, ...]  # (skipped, layer 0, ..., layer N)
    late_layers: int = 0

    @property
    def link2_share(self) -> Fraction:
        total = sum(self.link_bytes)
        if total == 0 or len(self.link_bytes) < 2:
            return Fraction(0)
        return Fraction(sum(self.link_bytes[1:]), total)

    def to_dict(self) -> dict:
        return {
            "chunk_count": self.chunk_count,
            "skip_count": self.skip_count,
            "skip_duration": self.skip_duration,
            "stall_duration": self.stall_duration,
            "avg_playback_rate": float(self.avg_playback_rate),
            "layer_switching_rate": float(self.layer_switching_rate),
            "link_bytes": list(self.link_bytes),
            "link2_share": float(self.link2_share),
            "pmf": [float(p) for p in self.pmf],
            "late_layers": self.late_layers,
        }


def chunk_rates(quality: Sequence[int], video: VideoSpec) -> list[Fraction]:
    """Nominal cumulative rate of each chunk's quality (0 when skipped)."""
    return [video.nominal_rates[q] if q >= 0 else Fraction(0) for q in quality]


def layer_switching_rate(rates: Sequence[Fraction]) -> Fraction:
    if len(rates) < 2:
        return Fraction(0)
    total = sum(abs(b - a) for a, b in zip(rates, rates[1:]))
    return Fraction(total) / (len(rates) - 1)


def compute_metrics(log: DownloadLog, video: VideoSpec) -> QoeReport:
    quality = log.quality
    C = len(quality)
    rates = chunk_rates(quality, video)
    played = [r for q, r in zip(quality, rates) if q >= 0]
    avg = Fraction(sum(played)) / len(played) if played else Fraction(0)
    counts = [0] * (video.layer_count + 1)
    for q in quality:
        counts[q + 1] += 1
    pmf = tuple(Fraction(c, C) for c in counts) if C else tuple(Fraction(0) for _ in counts)
    skips = sum(1 for q in quality if q < 0)
    return QoeReport(
        chunk_count=C,
        skip_count=skips,
        skip_duration=skips * log.chunk_duration,
        stall_duration=sum(length for _, length in log.stalls),
        avg_playback_rate=avg,
        layer_switching_rate=layer_switching_rate(rates),
        link_bytes=log.link_bytes(),
        pmf=pmf,
        late_layers=len(log.late),
    )
