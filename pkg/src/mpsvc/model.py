"""Core domain types: video layout, bandwidth traces, fetch plans and weights.

Conventions used throughout the package:

* chunks and slots are 1-based in the public vocabulary, 0-based in tuples
  (chunk ``i`` lives at index ``i - 1``);
* link labels are ``1..K``; ``SKIPPED`` (0) marks a layer that is not fetched;
* sizes and bandwidth are integer bytes, one slot is one scheduling tick.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

SKIPPED = 0


class ModelError(ValueError):
    """Raised when a domain object violates one of its invariants."""


def _as_int_tuple(values: Iterable[int], what: str) -> tuple[int, ...]:
    out = []
    for v in values:
        if isinstance(v, bool) or int(v) != v:
            raise ModelError(f"{what}: expected integers, got {v!r}")
        out.append(int(v))
    return tuple(out)


@dataclass(frozen=True)
class VideoSpec:
    """A layered video.

    ``layer_sizes[n][i]`` is the size in bytes of layer ``n`` of chunk ``i+1``;
    ``nominal_rates[n]`` is the cumulative nominal rate of quality ``n`` in
    bytes per slot and is only used for metrics.
    """

    chunk_count: int
    chunk_duration: int
    startup_delay: int
    layer_sizes: tuple[tuple[int, ...], ...]
    nominal_rates: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        if self.chunk_count < 1:
            raise ModelError("chunk_count must be >= 1")
        if self.chunk_duration < 1:
            raise ModelError("chunk_duration must be >= 1")
        if self.startup_delay < 0:
            raise ModelError("startup_delay must be >= 0")
        sizes = tuple(_as_int_tuple(row, "layer_sizes") for row in self.layer_sizes)
        if not sizes:
            raise ModelError("at least one layer is required")
        for row in sizes:
            if len(row) != self.chunk_count:
                raise ModelError("every layer needs one size per chunk")
            if any(y <= 0 for y in row):
                raise ModelError("layer sizes must be positive")
        object.__setattr__(self, "layer_sizes", sizes)
        rates = tuple(Fraction(r) for r in self.nominal_rates)
        if rates:
            if len(rates) != len(sizes):
                raise ModelError("one nominal rate per layer is required")
            if any(b <= a for a, b in zip(rates, rates[1:])) or rates[0] <= 0:
                raise ModelError("nominal rates must be positive and increasing")
        else:
            # derive cumulative rates from the mean layer size
            acc = Fraction(0)
            derived = []
            for row in sizes:
                acc += Fraction(sum(row), len(row) * self.chunk_duration)
                derived.append(acc)
            rates = tuple(derived)
        object.__setattr__(self, "nominal_rates", rates)

    @classmethod
    def cbr(
        cls,
        chunk_count: int,
        chunk_duration: int,
        startup_delay: int,
        rates: Sequence[int | Fraction],
    ) -> "VideoSpec":
        """Constant bit-rate video: layer n has size L*(r_n - r_{n-1})."""
        rates = [Fraction(r) for r in rates]
        sizes = []
        prev = Fraction(0)
        for r in rates:
            y = chunk_duration * (r - prev)
            if y.denominator != 1:
                raise ModelError("CBR layer sizes must be whole bytes")
            sizes.append((int(y),) * chunk_count)
            prev = r
        return cls(chunk_count, chunk_duration, startup_delay, tuple(sizes), tuple(rates))

    @classmethod
    def uniform(
        cls,
        chunk_count: int,
        chunk_duration: int,
        startup_delay: int,
        sizes: Sequence[int],
    ) -> "VideoSpec":
        """CBR video given per-layer sizes instead of rates."""
        return cls(
            chunk_count,
            chunk_duration,
            startup_delay,
            tuple((int(y),) * chunk_count for y in sizes),
        )

    @property
    def layer_count(self) -> int:
        return len(self.layer_sizes)

    @property
    def top_layer(self) -> int:
        """N, the index of the highest enhancement layer."""
        return len(self.layer_sizes) - 1

    @property
    def is_cbr(self) -> bool:
        return all(len(set(row)) == 1 for row in self.layer_sizes)

    @property
    def duration(self) -> int:
        return self.chunk_count * self.chunk_duration

    def size(self, n: int, i: int) -> int:
        """Size of layer ``n`` of 1-based chunk ``i``."""
        return self.layer_sizes[n][i - 1]

    def max_layer_size(self) -> int:
        return max(max(row) for row in self.layer_sizes)

    def subset(self, chunks: Sequence[int]) -> "VideoSpec":
        """Video made of the listed 1-based chunks (used for sliding windows)."""
        return VideoSpec(
            len(chunks),
            self.chunk_duration,
            self.startup_delay,
            tuple(tuple(row[i - 1] for i in chunks) for row in self.layer_sizes),
            self.nominal_rates,
        )


@dataclass(frozen=True)
class BandwidthTrace:
    """Per-link, per-slot available bytes. ``bw[k-1][j-1]`` is B^{(k)}(j)."""

    bw: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(_as_int_tuple(r, "bandwidth") for r in self.bw)
        if not rows:
            raise ModelError("a trace needs at least one link")
        if len({len(r) for r in rows}) != 1:
            raise ModelError("all links must cover the same number of slots")
        if any(v < 0 for r in rows for v in r):
            raise ModelError("bandwidth must be non-negative")
        object.__setattr__(self, "bw", rows)

    @classmethod
    def from_lists(cls, *links: Sequence[int]) -> "BandwidthTrace":
        width = max(len(l) for l in links)
        return cls(tuple(tuple(l) + (0,) * (width - len(l)) for l in links))

    @property
    def links(self) -> int:
        return len(self.bw)

    @property
    def slots(self) -> int:
        return len(self.bw[0])

    def row(self, k: int) -> tuple[int, ...]:
        return self.bw[k - 1]

    def total(self, k: Optional[int] = None) -> int:
        if k is None:
            return sum(sum(r) for r in self.bw)
        return sum(self.bw[k - 1])

    def extended(self, slots: int) -> "BandwidthTrace":
        """Extend to ``slots`` slots by repeating each link's last value."""
        if slots <= self.slots:
            return self
        pad = slots - self.slots
        return BandwidthTrace(
            tuple(r + ((r[-1] if r else 0),) * pad for r in self.bw)
        )

    def truncated(self, slots: int) -> "BandwidthTrace":
        return BandwidthTrace(tuple(r[:slots] for r in self.bw))

    def with_links(self, links: int) -> "BandwidthTrace":
        """Pad with all-zero links up to ``links`` links."""
        if links <= self.links:
            return self
        zero = (0,) * self.slots
        return BandwidthTrace(self.bw + (zero,) * (links - self.links))


@dataclass(frozen=True)
class FetchPlan:
    """Decision variables of a schedule.

    ``assignment[n][i-1]`` is the link fetching layer ``n`` of chunk ``i`` or
    ``SKIPPED``; ``stall[i-1]`` is d(i).  ``split`` optionally records the
    per-link bytes of each layer when a layer may span links (MPTCP).
    """

    assignment: tuple[tuple[int, ...], ...]
    stall: tuple[int, ...] = ()
    n2: Optional[int] = None
    split: Optional[tuple[tuple[tuple[int, ...], ...], ...]] = None

    def __post_init__(self) -> None:
        a = tuple(tuple(int(x) for x in row) for row in self.assignment)
        object.__setattr__(self, "assignment", a)
        c = len(a[0]) if a else 0
        if any(len(row) != c for row in a):
            raise ModelError("ragged assignment")
        stall = tuple(int(d) for d in self.stall) if self.stall else (0,) * c
        if len(stall) != c:
            raise ModelError("stall vector length must equal chunk count")
        object.__setattr__(self, "stall", stall)
        self.check()

    def check(self) -> None:
        a = self.assignment
        for n in range(1, len(a)):
            for i, link in enumerate(a[n]):
                if link != SKIPPED and a[n - 1][i] == SKIPPED:
                    raise ModelError(
                        f"layer {n} of chunk {i + 1} fetched without layer {n - 1}"
                    )
        for row in a:
            if any(link < 0 for link in row):
                raise ModelError("link labels must be non-negative")
        if self.n2 is not None:
            for n in range(self.n2 + 1, len(a)):
                if any(link == 2 for link in a[n]):
                    raise ModelError(f"link 2 carries layer {n} above n2={self.n2}")
        if any(d < 0 for d in self.stall) or any(
            b < a_ for a_, b in zip(self.stall, self.stall[1:])
        ):
            raise ModelError("stall vector must be non-negative and non-decreasing")

    @classmethod
    def empty(cls, layers: int, chunks: int) -> "FetchPlan":
        return cls(tuple((SKIPPED,) * chunks for _ in range(layers)))

    @property
    def chunk_count(self) -> int:
        return len(self.assignment[0]) if self.assignment else 0

    @property
    def layer_count(self) -> int:
        return len(self.assignment)

    @property
    def total_stall(self) -> int:
        return self.stall[-1] if self.stall else 0

    def quality(self, i: int) -> int:
        """Highest fetched layer of 1-based chunk ``i``, or -1 if skipped."""
        q = -1
        for n in range(self.layer_count):
            if self.assignment[n][i - 1] == SKIPPED:
                break
            q = n
        return q

    def fetched(self, n: int) -> int:
        return sum(1 for x in self.assignment[n] if x != SKIPPED)

    def count(self, n: int, link: int) -> int:
        return sum(1 for x in self.assignment[n] if x == link)

    def skipped_chunks(self) -> list[int]:
        if not self.assignment:
            return []
        return [i + 1 for i, x in enumerate(self.assignment[0]) if x == SKIPPED]

    def link_bytes(self, video: VideoSpec, links: int = 2) -> tuple[int, ...]:
        """Bytes each link carries under the plan."""
        out = [0] * links
        for n, row in enumerate(self.assignment):
            for i, link in enumerate(row):
                if link == SKIPPED:
                    continue
                if self.split is not None:
                    for k, b in enumerate(self.split[n][i]):
                        if b:
                            out[k] += b
                else:
                    out[link - 1] += video.layer_sizes[n][i]
        return tuple(out)

    def with_stall(self, stall: Sequence[int]) -> "FetchPlan":
        return FetchPlan(self.assignment, tuple(stall), self.n2, self.split)


@dataclass(frozen=True)
class WeightTable:
    """Priority weights. ``lam[n][k-1]`` is lambda_n^{(k)}; ``mu`` weighs stalls."""

    lam: tuple[tuple[int, ...], ...]
    mu: int

    @property
    def layer_count(self) -> int:
        return len(self.lam)

    @property
    def links(self) -> int:
        return len(self.lam[0])


def build_weights(C: int, N: int, ymax: int, links: int = 2) -> WeightTable:
    """Lexicographic weights: base on link 1 first, then base on link 2, ...

    Walks the priority list from lowest to highest; each weight is
    ``1 + max(C, 2) * ymax * (sum of lower weights)``.
    """
    if C < 1 or N < 0 or ymax < 1:
        raise ModelError("build_weights needs C >= 1, N >= 0, ymax >= 1")
    factor = max(C, 2) * ymax
    lam = [[0] * links for _ in range(N + 1)]
    lower = 0
    for n in range(N, -1, -1):
        for k in range(links - 1, -1, -1):
            w = 1 + factor * lower
            lam[n][k] = w
            lower += w
    mu = (C + 1) * lam[0][0] + 1
    return WeightTable(tuple(tuple(r) for r in lam), mu)


def symmetric_weights(C: int, N: int, links: int = 2) -> WeightTable:
    """Link-blind weights: one more layer-n chunk outweighs every higher layer."""
    if C < 1 or N < 0:
        raise ModelError("symmetric_weights needs C >= 1, N >= 0")
    lam = []
    lower = 0
    for n in range(N, -1, -1):
        w = 1 + C * lower
        lam.append((w,) * links)
        lower += w
    lam.reverse()
    return WeightTable(tuple(lam), (C + 1) * lam[0][0] + 1)


def validate_weights(w: WeightTable, video: VideoSpec) -> bool:
    """True iff the weight inequalities hold strictly for this video."""
    if w.layer_count != video.layer_count:
        raise ModelError("weight table and video disagree on the layer count")
    C = video.chunk_count
    ymax = [max(row) for row in video.layer_sizes]
    lam = w.lam
    L = w.layer_count
    for a in range(L):
        others = sum(lam[n][k] for n in range(a, L) for k in range(1, w.links))
        higher = sum(lam[n][0] for n in range(a + 1, L))
        if not lam[a][0] > C * (others + higher):
            return False
        for k in range(1, w.links):
            tail = sum(lam[n][k] * ymax[n] for n in range(a + 1, L))
            if not lam[a][k] > C * tail:
                return False
    return w.mu > (C + 1) * lam[0][0]


def cumulative_bandwidth(trace: BandwidthTrace) -> tuple[tuple[int, ...], ...]:
    """Prefix sums R^{(k)}(j); index 0 holds R(0) = 0."""
    out = []
    for row in trace.bw:
        acc = [0]
        for v in row:
            acc.append(acc[-1] + v)
        out.append(tuple(acc))
    return tuple(out)


def deadlines(video: VideoSpec, stall: Optional[Sequence[int]] = None) -> tuple[int, ...]:
    """deadline(i) = (i-1)L + s + d(i), with d = 0 in skip mode."""
    C, L, s = video.chunk_count, video.chunk_duration, video.startup_delay
    if stall is None:
        return tuple((i - 1) * L + s for i in range(1, C + 1))
    stall = list(stall)
    if len(stall) != C:
        raise ModelError("stall vector length must equal chunk count")
    if any(d < 0 for d in stall) or any(b < a for a, b in zip(stall, stall[1:])):
        raise ModelError("stall vector must be non-negative and non-decreasing")
    return tuple((i - 1) * L + s + stall[i - 1] for i in range(1, C + 1))


@dataclass
class Residual:
    """Mutable per-link residual bandwidth rows (slot 0 is a zero sentinel)."""

    rows: list = field(default_factory=list)

    @classmethod
    def from_trace(cls, trace: BandwidthTrace, slots: Optional[int] = None) -> "Residual":
        from .kernels import make_row

        t = trace if slots is None else trace.extended(slots)
        return cls([make_row(r) for r in t.bw])

    @property
    def links(self) -> int:
        return len(self.rows)

    def copy(self) -> "Residual":
        from .kernels import make_row

        return Residual([make_row(r[1:]) for r in self.rows])

    def cumulative(self, k: int, j: int) -> int:
        row = self.rows[k - 1]
        return sum(row[1 : min(j, len(row) - 1) + 1])

    def totals_by(self, dl: Sequence[int]) -> list[int]:
        """Sum over links of remaining bytes by each deadline."""
        out = [0] * len(dl)
        for row in self.rows:
            acc = 0
            j = 0
            for idx, d in enumerate(dl):
                top = min(d, len(row) - 1)
                while j < top:
                    j += 1
                    acc += row[j]
                out[idx] += acc
        return out
