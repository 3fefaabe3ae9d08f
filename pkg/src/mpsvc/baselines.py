"""Comparison players: buffer-based MP-BBA / MPTCP-BBA and MSPlayer.

They fetch one job at a time (a chunk, or a pair of chunks for MSPlayer) on
top of a shared slot simulator that also tracks buffer level, skips and
stalls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .model import BandwidthTrace, SKIPPED, VideoSpec, deadlines as make_deadlines
from .online import harmonic_mean
from .playback import DownloadLog


def bba_quality(
    buffer_level: float,
    thresholds: tuple[float, float] = (30, 90),
    ladder: Sequence[Fraction] = (),
) -> int:
    """Buffer-to-quality map: lowest below ``low``, highest above ``high``,
    otherwise the linear rate rounded down to the ladder."""
    low, high = thresholds
    if not low < high:
        raise ValueError("low threshold must be below the high one")
    top = len(ladder) - 1
    if buffer_level <= low:
        return 0
    if buffer_level >= high:
        return top
    lo, hi = Fraction(ladder[0]), Fraction(ladder[-1])
    rate = lo + (Fraction(buffer_level) - Fraction(low)) / (Fraction(high) - Fraction(low)) * (hi - lo)
    q = 0
    for n, r in enumerate(ladder):
        if r <= rate:
            q = n
    return q


def nearest_level(value: Fraction, ladder: Sequence[Fraction]) -> int:
    """Index of the ladder entry nearest to ``value``; ties go down."""
    best = 0
    for n, r in enumerate(ladder):
        if abs(r - value) < abs(ladder[best] - value):
            best = n
    return best


def earliest_finish_split(
    sizes: Sequence[int],
    rates: Sequence[float],
    backlog: Optional[Sequence[float]] = None,
) -> list[int]:
    """Give each layer, in order, to the link that would finish it first.

    ``rates`` are predicted bytes per slot, ``backlog`` the bytes already
    waiting on each link.  Returns 1-based links; ties go to the lower link.
    """
    K = len(rates)
    finish = [
        (Fraction(backlog[k]) if backlog else Fraction(0)) / Fraction(rates[k])
        if rates[k] > 0 else None
        for k in range(K)
    ]
    out = []
    for y in sizes:
        best = None
        best_t = None
        for k in range(K):
            if rates[k] <= 0:
                continue
            t = finish[k] + Fraction(y) / Fraction(rates[k])
            if best_t is None or t < best_t:
                best, best_t = k, t
        if best is None:
            best, best_t = 0, None
        else:
            finish[best] = best_t
        out.append(best + 1)
    return out


def msplayer_step(
    slow_level: int,
    measured: float,
    estimate: float,
    ratio: float,
    ladder: Sequence[Fraction],
    delta: float = 0.05,
) -> tuple[int, int]:
    """Next (slow-link, fast-link) quality levels.

    The slow link's chunk size doubles when the measured throughput beats the
    estimate by more than ``delta`` and halves when it falls short by more
    than ``delta``; the fast link gets the slow size scaled by the predicted
    bandwidth ratio.  Both are snapped to the nearest ladder entry.
    """
    size = Fraction(ladder[slow_level])
    m, e = Fraction(measured), Fraction(estimate)
    d = Fraction(delta)
    if e > 0 and m > (1 + d) * e:
        size *= 2
    elif e > 0 and m < (1 - d) * e:
        size /= 2
    slow = nearest_level(size, ladder)
    fast = nearest_level(Fraction(ladder[slow]) * Fraction(ratio), ladder)
    return slow, fast


def predicted_rates(history: Sequence[Sequence[int]], beta: int) -> list[Fraction]:
    """Harmonic prediction per link; links without samples borrow the mean
    of the others (or 1 when nothing has been observed)."""
    rates = [harmonic_mean(h, beta) for h in history]
    known = [r for r in rates if r > 0]
    fill = sum(known) / len(known) if known else Fraction(1)
    return [r if r > 0 else fill for r in rates]


@dataclass(frozen=True)
class BaselineConfig:
    thresholds: tuple[float, float] = (30, 90)
    beta: int = 10
    buffer_max: int = 120
    delta: float = 0.05
    mode: str = "skip"
    max_horizon: Optional[int] = None


@dataclass
class _Part:
    n: int
    i: int
    link: int
    left: int


@dataclass
class _Sim:
    video: VideoSpec
    trace: BandwidthTrace
    cfg: BaselineConfig
    now: int = 0
    history: list = field(default_factory=list)
    consumed: list = field(default_factory=list)
    done: list = field(default_factory=list)
    link_of: list = field(default_factory=list)
    quality: list = field(default_factory=list)
    play_start: list = field(default_factory=list)
    finished: list = field(default_factory=list)  # chunk handled (played or skipped)
    stall_acc: int = 0
    stalls: list = field(default_factory=list)
    late: list = field(default_factory=list)

    def buffer_level(self) -> int:
        """Slots of downloaded, not yet played video at ``now``."""
        L = self.video.chunk_duration
        total = 0
        for i, start in enumerate(self.play_start):
            if start is None or self.quality[i] < 0:
                continue
            end = start + L
            if end > self.now:
                total += min(L, end - max(start, self.now))
        return total

    def chunk_deadline(self, i: int) -> int:
        v = self.video
        return (i - 1) * v.chunk_duration + v.startup_delay + self.stall_acc


def _simulate(
    video: VideoSpec,
    trace: BandwidthTrace,
    cfg: BaselineConfig,
    decide: Callable[["_Sim", int], list[_Part]],
    job_size: int = 1,
) -> DownloadLog:
    C, layers = video.chunk_count, video.layer_count
    links = trace.links
    nominal = make_deadlines(video)
    limit = nominal[-1] + (cfg.max_horizon if cfg.max_horizon is not None else 10 * video.duration)
    trace = trace.extended(limit)
    sim = _Sim(video, trace, cfg)
    sim.history = [[] for _ in range(links)]
    sim.consumed = [[0] * limit for _ in range(links)]
    sim.done = [[None] * C for _ in range(layers)]
    sim.link_of = [[SKIPPED] * C for _ in range(layers)]
    sim.quality = [-1] * C
    sim.play_start = [None] * C
    sim.finished = [False] * C
    next_chunk = 1
    job: list[_Part] = []
    job_chunks: list[int] = []

    def close(i: int, complete: bool) -> None:
        q = -1
        for n in range(layers):
            if sim.done[n][i - 1] is None:
                break
            q = n
        if cfg.mode == "skip":
            sim.play_start[i - 1] = nominal[i - 1]
            if not complete:
                for n in range(q + 1, layers):
                    if sim.link_of[n][i - 1] != SKIPPED:
                        sim.late.append((n, i))
            sim.quality[i - 1] = q
        else:
            prev_end = (
                sim.play_start[i - 2] + video.chunk_duration if i > 1 else video.startup_delay
            )
            start = max(prev_end, sim.now)
            if start > prev_end:
                sim.stalls.append((prev_end, start - prev_end))
                sim.stall_acc += start - prev_end
            sim.play_start[i - 1] = start
            sim.quality[i - 1] = q
        sim.finished[i - 1] = True

    while (next_chunk <= C or job) and sim.now < limit:
        slot = sim.now + 1
        caps = [trace.bw[k][slot - 1] for k in range(links)]
        busy = [False] * links
        while True:
            if not job:
                if cfg.mode == "skip":
                    while next_chunk <= C and nominal[next_chunk - 1] <= sim.now:
                        close(next_chunk, False)
                        next_chunk += 1
                if next_chunk > C or sim.buffer_level() >= cfg.buffer_max:
                    break
                job_chunks = list(range(next_chunk, min(C, next_chunk + job_size - 1) + 1))
                job = decide(sim, next_chunk)
                for p in job:
                    sim.link_of[p.n][p.i - 1] = p.link
                next_chunk = job_chunks[-1] + 1
            progressed = False
            for k in range(links):
                for p in job:
                    if p.link - 1 != k or p.left == 0:
                        continue
                    busy[k] = True
                    if caps[k] == 0:
                        break
                    take = min(caps[k], p.left)
                    p.left -= take
                    caps[k] -= take
                    sim.consumed[k][slot - 1] += take
                    progressed = True
                    if p.left == 0:
                        sim.done[p.n][p.i - 1] = slot
            remaining = [p for p in job if p.left > 0]
            for i in job_chunks:
                if sim.finished[i - 1]:
                    continue
                if any(p.i == i for p in remaining):
                    break  # chunks are handed to playback in order
                sim.now, saved = slot, sim.now
                close(i, True)
                sim.now = saved
            job = remaining
            if job or not progressed or not any(caps):
                break
        for k in range(links):
            if busy[k]:
                sim.history[k].append(trace.bw[k][slot - 1])
        sim.now = slot
        if cfg.mode == "skip" and job:
            for i in job_chunks:
                if not sim.finished[i - 1] and nominal[i - 1] <= sim.now:
                    close(i, False)
                    job = [p for p in job if p.i != i]
    for i in range(1, C + 1):
        if not sim.finished[i - 1]:
            sim.quality[i - 1] = -1
            sim.play_start[i - 1] = nominal[i - 1] + sim.stall_acc
            sim.finished[i - 1] = True
    end = max(sim.now, 1)
    return DownloadLog(
        video.chunk_duration,
        tuple(sim.play_start),
        tuple(map(tuple, sim.done)),
        tuple(map(tuple, sim.link_of)),
        tuple(tuple(r[:end]) for r in sim.consumed),
        tuple(sim.quality),
        tuple(sim.late),
        tuple(sim.stalls),
        {},
    )


def mp_bba_step(sim: "_Sim", i: int) -> list[_Part]:
    """BBA quality for chunk ``i``; layers split by earliest finish."""
    v = sim.video
    q = bba_quality(sim.buffer_level(), sim.cfg.thresholds, v.nominal_rates)
    rates = predicted_rates(sim.history, sim.cfg.beta)
    sizes = [v.layer_sizes[n][i - 1] for n in range(q + 1)]
    links = earliest_finish_split(sizes, rates)
    return [_Part(n, i, links[n], sizes[n]) for n in range(q + 1)]


def mptcp_bba_step(sim: "_Sim", i: int) -> list[_Part]:
    """BBA quality for chunk ``i`` on the aggregated pipe (link 1)."""
    v = sim.video
    q = bba_quality(sim.buffer_level(), sim.cfg.thresholds, v.nominal_rates)
    return [_Part(n, i, 1, v.layer_sizes[n][i - 1]) for n in range(q + 1)]


def mp_bba(video: VideoSpec, trace: BandwidthTrace, cfg: BaselineConfig = BaselineConfig()) -> DownloadLog:
    return _simulate(video, trace.with_links(2), cfg, mp_bba_step)


def attribute_aggregate(consumed_total: Sequence[int], trace: BandwidthTrace) -> tuple[tuple[int, ...], ...]:
    """Split per-slot pipe bytes across physical links in proportion to
    each link's capacity in that slot."""
    out = [[0] * len(consumed_total) for _ in range(trace.links)]
    t = trace.extended(len(consumed_total))
    for j, c in enumerate(consumed_total):
        caps = [t.bw[k][j] for k in range(trace.links)]
        total = sum(caps)
        if c == 0 or total == 0:
            continue
        given = 0
        for k in range(trace.links - 1):
            share = c * caps[k] // total
            out[k][j] = share
            given += share
        out[-1][j] = c - given
    return tuple(map(tuple, out))


def mptcp_bba(video: VideoSpec, trace: BandwidthTrace, cfg: BaselineConfig = BaselineConfig()) -> DownloadLog:
    from .mptcp import aggregate_trace

    trace = trace.with_links(2)
    log = _simulate(video, aggregate_trace(trace), cfg, mptcp_bba_step)
    log.consumed = attribute_aggregate(log.consumed[0], trace)
    return log


def msplayer(video: VideoSpec, trace: BandwidthTrace, cfg: BaselineConfig = BaselineConfig()) -> DownloadLog:
    """Odd chunks on link 1, even chunks on link 2, sizes adapted per pair."""
    state = {"slow": 0, "estimate": None, "slow_link": 2, "mark": [0, 0]}
    ladder = video.nominal_rates

    def decide(sim: _Sim, i: int) -> list[_Part]:
        v = sim.video
        rates = predicted_rates(sim.history, cfg.beta)
        slow_link = 1 if rates[0] < rates[1] else 2
        if state["estimate"] is None:
            slow_q = fast_q = 0
        else:
            k = state["slow_link"] - 1
            fresh = sim.history[k][state["mark"][k]:]
            measured = Fraction(sum(fresh), len(fresh)) if fresh else state["estimate"]
            fast_rate = rates[2 - slow_link]
            slow_rate = rates[slow_link - 1]
            ratio = fast_rate / slow_rate if slow_rate > 0 else Fraction(1)
            slow_q, fast_q = msplayer_step(
                state["slow"], measured, state["estimate"], ratio, ladder, cfg.delta
            )
        state.update(slow=slow_q, estimate=rates[slow_link - 1], slow_link=slow_link)
        state["mark"] = [len(h) for h in sim.history]
        parts = []
        for c in (i, i + 1):
            if c > v.chunk_count:
                break
            link = 1 if c % 2 == 1 else 2
            q = slow_q if link == slow_link else fast_q
            parts.extend(_Part(n, c, link, v.layer_sizes[n][c - 1]) for n in range(q + 1))
        return parts

    return _simulate(video, trace.with_links(2), cfg, decide, job_size=2)


__all__ = [
    "BaselineConfig",
    "attribute_aggregate",
    "bba_quality",
    "earliest_finish_split",
    "mp_bba",
    "mp_bba_step",
    "mptcp_bba",
    "mptcp_bba_step",
    "msplayer",
    "msplayer_step",
    "nearest_level",
    "predicted_rates",
]
