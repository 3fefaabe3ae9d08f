"""Online sliding-window controller.

The session advances one slot at a time.  Each link serves a queue of
(chunk, layer) fetches; every ``alpha`` slots, or as soon as every queue runs
dry, the next ``W`` chunks that still need data are re-planned with one of the
offline schedulers against predicted bandwidth.  Layers whose download has
begun keep their link (and so do the layers below them); everything else in
the window may be re-decided.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
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
from .kernels import make_row
from .noskip import base_fits
from .offline import (
    layer_candidates,
    reserve_backward,
    reserve_forward,
    run_layers,
)
from .playback import DownloadLog
from .pref import PreferenceConfig, avoid_skips_layers, pref_layers

ALGORITHMS = ("mp-svc", "pref-mp-svc", "avoid-skips")
PREDICTORS = ("harmonic", "oracle")


@dataclass(frozen=True)
class OnlineConfig:
    window: int = 10
    alpha: int = 2
    beta: int = 10
    buffer_max: int = 120
    buffer_min: int = 4
    mode: str = "skip"
    algorithm: str = "mp-svc"
    n2: Optional[int] = None
    predictor: str = "harmonic"
    max_horizon: Optional[int] = None

    def __post_init__(self) -> None:
        if self.window < 1 or self.alpha < 1 or self.beta < 1:
            raise ModelError("window, alpha and beta must be >= 1")
        if self.buffer_min < 0 or self.buffer_max < 1:
            raise ModelError("buffer bounds must be positive")
        if self.mode not in ("skip", "noskip"):
            raise ModelError(f"unknown mode {self.mode!r}")
        if self.algorithm not in ALGORITHMS:
            raise ModelError(f"unknown online algorithm {self.algorithm!r}")
        if self.predictor not in PREDICTORS:
            raise ModelError(f"unknown predictor {self.predictor!r}")

    def check(self, video: VideoSpec) -> None:
        if self.window > self.buffer_max // video.chunk_duration:
            raise ModelError("window must fit in the buffer cap (W <= B_max / L)")


def harmonic_mean(samples: Sequence[int], beta: int) -> Fraction:
    """Harmonic mean of the last ``beta`` non-zero samples (0 if none)."""
    recent = [x for x in samples if x > 0][-beta:]
    if not recent:
        return Fraction(0)
    return Fraction(len(recent)) / sum(Fraction(1, x) for x in recent)


def harmonic_predict(
    history: Sequence[Sequence[int]], beta: int, horizon: int
) -> BandwidthTrace:
    """Per-link constant prediction (floored to whole bytes) over ``horizon``."""
    rows = []
    for samples in history:
        rate = int(harmonic_mean(samples, beta))
        rows.append((rate,) * horizon)
    return BandwidthTrace(tuple(rows))


@dataclass
class SessionState:
    """Mutable state of one online session (slot ``now`` has just ended)."""

    video: VideoSpec
    links: int
    now: int = 0
    history: list = field(default_factory=list)
    link_of: list = field(default_factory=list)      # [n][i-1]
    remaining: list = field(default_factory=list)    # [n][i-1] bytes left, None if not queued
    done: list = field(default_factory=list)         # [n][i-1] completion slot
    queues: list = field(default_factory=list)       # per link: list of (n, i)
    finalized: list = field(default_factory=list)
    quality: list = field(default_factory=list)
    play_start: list = field(default_factory=list)
    next_play: int = 1
    stall_acc: int = 0
    stalling: bool = False
    stalls: list = field(default_factory=list)
    last_replan: Optional[int] = None
    replans: int = 0
    late: list = field(default_factory=list)
    first_plan: Optional[tuple] = None

    @classmethod
    def start(cls, video: VideoSpec, links: int) -> "SessionState":
        C, layers = video.chunk_count, video.layer_count
        return cls(
            video=video,
            links=links,
            history=[[] for _ in range(links)],
            link_of=[[SKIPPED] * C for _ in range(layers)],
            remaining=[[None] * C for _ in range(layers)],
            done=[[None] * C for _ in range(layers)],
            queues=[[] for _ in range(links)],
            finalized=[False] * C,
            quality=[-1] * C,
            play_start=[None] * C,
        )

    def is_done(self, n: int, i: int) -> bool:
        return self.done[n][i - 1] is not None

    def started(self, n: int, i: int) -> bool:
        r = self.remaining[n][i - 1]
        return r is not None and r < self.video.layer_sizes[n][i - 1]

    def in_flight(self, n: int, i: int) -> bool:
        return self.started(n, i) and not self.is_done(n, i)

    def playing(self) -> int:
        """Number of chunks whose playback has begun (or was skipped)."""
        return self.next_play - 1

    def queues_empty(self) -> bool:
        return all(not q for q in self.queues)

    def deadline(self, i: int) -> int:
        """Current deadline of chunk ``i`` (nominal plus accrued stall)."""
        v = self.video
        return (i - 1) * v.chunk_duration + v.startup_delay + self.stall_acc

    def enqueue(self, n: int, i: int, link: int) -> None:
        if self.remaining[n][i - 1] is None:
            self.remaining[n][i - 1] = self.video.layer_sizes[n][i - 1]
        self.link_of[n][i - 1] = link
        self.queues[link - 1].append((n, i))

    def purge_chunk(self, i: int) -> None:
        for k in range(self.links):
            self.queues[k] = [(n, c) for (n, c) in self.queues[k] if c != i]

    def sort_queues(self) -> None:
        for k in range(self.links):
            q = self.queues[k]
            head = [q[0]] if q and self.in_flight(*q[0]) else []
            rest = sorted(q[len(head):], key=lambda x: (x[1], x[0]))
            self.queues[k] = head + rest


def _window(state: SessionState, cfg: OnlineConfig) -> list[int]:
    v = state.video
    cap = state.playing() + cfg.buffer_max // v.chunk_duration
    out = []
    for i in range(state.next_play, min(v.chunk_count, cap) + 1):
        if state.finalized[i - 1] or state.deadline(i) <= state.now:
            continue
        if all(state.is_done(n, i) for n in range(v.layer_count)):
            continue
        out.append(i)
        if len(out) == cfg.window:
            break
    return out


def _predicted(state: SessionState, cfg: OnlineConfig, actual: BandwidthTrace, horizon: int):
    if cfg.predictor == "oracle":
        t = actual.extended(state.now + horizon)
        rows = [r[state.now : state.now + horizon] for r in t.bw]
        return BandwidthTrace(tuple(rows))
    return harmonic_predict(state.history, cfg.beta, horizon)


def plan_window(
    state: SessionState,
    cfg: OnlineConfig,
    actual: BandwidthTrace,
) -> Optional[dict]:
    """Re-plan the current window and rewrite the link queues.

    Returns the window decisions ``{(n, chunk): link}`` (None when the window
    is empty).
    """
    v = state.video
    chunks = _window(state, cfg)
    if not chunks:
        return None
    sub = v.subset(chunks)
    rel = [state.deadline(i) - state.now for i in chunks]
    layers = v.layer_count
    K = state.links

    secured: set = set()
    for w, i in enumerate(chunks, start=1):
        top = -1
        for n in range(layers):
            if state.is_done(n, i) or state.started(n, i):
                top = n
        for n in range(top + 1):
            if state.link_of[n][i - 1] == SKIPPED:
                break
            secured.add((n, w))

    def fresh(extra: int):
        horizon = max(rel) + extra
        pred = _predicted(state, cfg, actual, horizon)
        residual = Residual([make_row(r) for r in pred.with_links(K).bw])
        assignment = [[SKIPPED] * len(chunks) for _ in range(layers)]
        for n, w in sorted(secured, key=lambda x: (x[1], x[0])):
            i = chunks[w - 1]
            assignment[n][w - 1] = state.link_of[n][i - 1]
        for n, w in secured:
            i = chunks[w - 1]
            if state.in_flight(n, i):
                reserve_forward(residual, state.link_of[n][i - 1], state.remaining[n][i - 1])
        return residual, assignment

    shift = 0
    if cfg.mode == "noskip":
        # smallest extra delay for which the open base layers fit the prediction
        open_base = [w for w in range(1, len(chunks) + 1) if (0, w) not in secured]
        limit = cfg.max_horizon if cfg.max_horizon is not None else 10 * v.duration
        extra = max(rel)
        probe, _ = fresh(extra)
        while not base_fits(sub, probe.rows, [d + shift for d in rel], open_base):
            shift += 1
            if shift > limit:
                shift = 0
                break
            if shift > extra:
                extra *= 2
                probe, _ = fresh(extra)
    residual, assignment = fresh(shift)
    dl = [d + shift for d in rel]
    for n, w in sorted(secured, key=lambda x: (x[1], x[0])):
        i = chunks[w - 1]
        if not state.is_done(n, i) and not state.in_flight(n, i):
            reserve_backward(residual, state.link_of[n][i - 1], dl[w - 1], v.layer_sizes[n][i - 1])

    if cfg.algorithm == "mp-svc":
        every = tuple(range(1, K + 1))
        run_layers(sub, residual, dl, range(layers), lambda n: every, assignment, secured)
    elif cfg.algorithm == "pref-mp-svc":
        n2 = v.top_layer if cfg.n2 is None else min(cfg.n2, v.top_layer)
        pref_layers(sub, residual, dl, PreferenceConfig(n2), assignment, secured)
    else:
        keep = None
        if cfg.mode == "noskip":
            keep = layer_candidates(0, assignment, secured)
        avoid_skips_layers(sub, residual, dl, assignment, secured, keep=keep)

    if cfg.mode == "noskip":
        # every base layer must eventually arrive; park leftovers on the
        # link with the best prediction
        pred = _predicted(state, cfg, actual, 1)
        best = max(range(1, K + 1), key=lambda k: (pred.bw[k - 1][0] if k <= pred.links else 0, -k))
        for w in range(1, len(chunks) + 1):
            if assignment[0][w - 1] == SKIPPED:
                assignment[0][w - 1] = best

    decisions = {}
    for w, i in enumerate(chunks, start=1):
        for n in range(layers):
            if (n, w) in secured:
                continue
            link = assignment[n][w - 1]
            decisions[(n, i)] = link
            for k in range(K):
                state.queues[k] = [x for x in state.queues[k] if x != (n, i)]
            if link == SKIPPED:
                state.link_of[n][i - 1] = SKIPPED
                if not state.started(n, i):
                    state.remaining[n][i - 1] = None
            else:
                state.enqueue(n, i, link)
    state.sort_queues()
    if state.first_plan is None:
        state.first_plan = (tuple(chunks), tuple(map(tuple, assignment)))
    return decisions


def _bootstrap(state: SessionState) -> None:
    state.enqueue(0, 1, 1)
    if state.video.chunk_count >= 2 and state.links >= 2:
        state.enqueue(0, 2, 2)


def _transfer(state: SessionState, actual: BandwidthTrace, slot: int, consumed) -> None:
    for k in range(state.links):
        cap = actual.bw[k][slot - 1] if k < actual.links else 0
        q = state.queues[k]
        if q:
            state.history[k].append(cap)
        while cap > 0 and q:
            n, i = q[0]
            take = min(cap, state.remaining[n][i - 1])
            state.remaining[n][i - 1] -= take
            consumed[k][slot - 1] += take
            cap -= take
            if state.remaining[n][i - 1] == 0:
                state.done[n][i - 1] = slot
                q.pop(0)


def _finalize(state: SessionState, i: int, playable: bool) -> None:
    v = state.video
    q = -1
    if playable:
        for n in range(v.layer_count):
            d = state.done[n][i - 1]
            if d is None or d > state.now:
                break
            q = n
    for n in range(v.layer_count):
        if state.link_of[n][i - 1] != SKIPPED and n > q and state.remaining[n][i - 1] is not None:
            state.late.append((n, i))
    state.quality[i - 1] = q
    state.finalized[i - 1] = True
    state.play_start[i - 1] = state.now
    state.purge_chunk(i)
    state.next_play = i + 1


def _advance_playback(state: SessionState, cfg: OnlineConfig) -> None:
    v = state.video
    while state.next_play <= v.chunk_count:
        i = state.next_play
        if state.deadline(i) > state.now:
            return
        base_ready = state.done[0][i - 1] is not None
        if cfg.mode == "skip":
            _finalize(state, i, base_ready)
            continue
        if state.stalling:
            ready = 0
            for c in range(i, v.chunk_count + 1):
                if state.done[0][c - 1] is None:
                    break
                ready += 1
            need = min(cfg.buffer_min, (v.chunk_count - i + 1) * v.chunk_duration)
            if base_ready and ready * v.chunk_duration >= need:
                state.stalling = False
                _finalize(state, i, True)
                continue
        elif base_ready:
            _finalize(state, i, True)
            continue
        if not state.stalling:
            state.stalling = True
            state.stalls.append([state.now, 0])
        state.stall_acc += 1
        state.stalls[-1][1] += 1
        return


def run_online(
    video: VideoSpec,
    actual: BandwidthTrace,
    cfg: OnlineConfig = OnlineConfig(),
) -> DownloadLog:
    """Drive a full session and return what was downloaded and played."""
    cfg.check(video)
    links = max(2, actual.links)
    actual = actual.with_links(links)
    state = SessionState.start(video, links)
    C = video.chunk_count
    nominal_end = make_deadlines(video)[-1]
    limit = nominal_end + (cfg.max_horizon if cfg.max_horizon is not None else 10 * video.duration)
    consumed = [[0] * limit for _ in range(links)]
    actual = actual.extended(limit)
    if cfg.predictor == "harmonic":
        _bootstrap(state)
        state.last_replan = 0
    _advance_playback(state, cfg)
    replanned_at = None
    while state.next_play <= C and state.now < limit:
        due = state.last_replan is None or state.now - state.last_replan >= cfg.alpha
        idle = state.queues_empty() and replanned_at != state.now
        if due or idle:
            if plan_window(state, cfg, actual) is not None:
                state.replans += 1
            state.last_replan = state.now
            replanned_at = state.now
        slot = state.now + 1
        _transfer(state, actual, slot, consumed)
        state.now = slot
        _advance_playback(state, cfg)
    # starvation: whatever has not played by the horizon is dropped
    while state.next_play <= C:
        _finalize(state, state.next_play, False)
    end = max(state.now, 1)
    nominal = make_deadlines(video)
    stall_vec = [state.play_start[i] - nominal[i] for i in range(C)]
    stall_vec = [max(0, d) for d in stall_vec]
    for a in range(1, C):
        stall_vec[a] = max(stall_vec[a], stall_vec[a - 1])
    return DownloadLog(
        video.chunk_duration,
        tuple(state.play_start),
        tuple(map(tuple, state.done)),
        tuple(map(tuple, state.link_of)),
        tuple(tuple(r[:end]) for r in consumed),
        tuple(state.quality),
        tuple(state.late),
        tuple((s, l) for s, l in state.stalls),
        {
            "replans": state.replans,
            "first_plan": state.first_plan,
            "stall_vector": tuple(stall_vec),
        },
    )
