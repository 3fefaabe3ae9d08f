"""Trace and manifest files, synthetic traces, and report emission.

Files carry bits per second; everything in memory is bytes per slot.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .model import BandwidthTrace, FetchPlan, ModelError, VideoSpec

PathLike = Union[str, Path]
PROFILES = ("constant", "step", "markov-two-state")


def data_path(name: str) -> Path:
    """Path of a file bundled under ``mpsvc/data``."""
    return Path(__file__).with_name("data") / name


class TraceFormatError(ModelError):
    pass


class ManifestError(ModelError):
    pass


def bps_to_bytes(bps: Fraction, slot_seconds: Fraction) -> int:
    return round(Fraction(bps) * Fraction(slot_seconds) / 8)


def bytes_to_bps(nbytes: int, slot_seconds: Fraction) -> Fraction:
    return Fraction(nbytes) * 8 / Fraction(slot_seconds)


def _fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else repr(float(x))


def parse_trace(text: str, slot_seconds: float = 1, name: str = "<trace>") -> tuple[int, ...]:
    """Parse ``<slot> <bps>`` lines into bytes per slot."""
    secs = Fraction(str(slot_seconds))
    values = []
    expect = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise TraceFormatError(f"{name}:{lineno}: expected '<slot> <bps>', got {raw!r}")
        try:
            slot = int(fields[0])
            bps = Fraction(fields[1])
        except (ValueError, ZeroDivisionError):
            raise TraceFormatError(f"{name}:{lineno}: cannot parse {raw!r}") from None
        if bps < 0:
            raise TraceFormatError(f"{name}:{lineno}: negative bandwidth {fields[1]}")
        if expect is None:
            expect = slot
        if slot != expect:
            raise TraceFormatError(f"{name}:{lineno}: expected slot {expect}, got {slot}")
        expect += 1
        values.append(bps_to_bytes(bps, secs))
    if not values:
        raise TraceFormatError(f"{name}: no samples")
    return tuple(values)


def load_trace(path: PathLike, slot_seconds: float = 1) -> BandwidthTrace:
    """Single-link trace from a file; shorter-than-needed traces are later
    extended with their last value by ``BandwidthTrace.extended``."""
    path = Path(path)
    return BandwidthTrace((parse_trace(path.read_text(), slot_seconds, str(path)),))


def load_traces(paths: Sequence[PathLike], slot_seconds: float = 1) -> BandwidthTrace:
    """One file per link, padded to a common length with each link's last value."""
    rows = [load_trace(p, slot_seconds).bw[0] for p in paths]
    width = max(len(r) for r in rows)
    return BandwidthTrace(tuple(r + (r[-1],) * (width - len(r)) for r in rows))


def write_trace(path: PathLike, row: Sequence[int], slot_seconds: float = 1) -> None:
    secs = Fraction(str(slot_seconds))
    lines = [f"{j} {_fmt(bytes_to_bps(b, secs))}" for j, b in enumerate(row, 1)]
    Path(path).write_text("\n".join(lines) + "\n")


def _rates(text: str, secs: Fraction) -> list[Fraction]:
    out = []
    for tok in text.replace(",", " ").split():
        out.append(Fraction(tok) * secs / 8)
    return out


def load_manifest(path: PathLike, slot_seconds: float = 1) -> VideoSpec:
    """INI manifest: a ``[video]`` section with chunk_count,
    chunk_duration_slots, startup_delay_slots and ``rates`` (cumulative, bps),
    plus an optional ``[sizes]`` section whose ``table`` has one row of
    per-layer byte sizes per chunk."""
    cp = configparser.ConfigParser()
    path = Path(path)
    if not cp.read(path):
        raise ManifestError(f"{path}: cannot read manifest")
    if not cp.has_section("video"):
        raise ManifestError(f"{path}: missing [video] section")
    sec = cp["video"]
    secs = Fraction(str(slot_seconds))
    try:
        C = sec.getint("chunk_count")
        L = sec.getint("chunk_duration_slots")
        s = sec.getint("startup_delay_slots")
        rates_text = sec.get("rates")
    except ValueError as exc:
        raise ManifestError(f"{path}: {exc}") from None
    missing = [k for k, v in (("chunk_count", C), ("chunk_duration_slots", L),
                              ("startup_delay_slots", s), ("rates", rates_text)) if v is None]
    if missing:
        raise ManifestError(f"{path}: missing field(s) {', '.join(missing)}")
    rates = _rates(rates_text, secs)
    if not rates or rates[0] <= 0 or any(b <= a for a, b in zip(rates, rates[1:])):
        raise ManifestError(f"{path}: rates must be positive and strictly increasing")
    if cp.has_section("sizes"):
        rows = [r.split() for r in cp["sizes"].get("table", "").strip().splitlines() if r.strip()]
        if len(rows) != C:
            raise ManifestError(f"{path}: size table has {len(rows)} rows, expected {C}")
        if any(len(r) != len(rates) for r in rows):
            raise ManifestError(f"{path}: every size row needs {len(rates)} entries")
        sizes = tuple(tuple(int(r[n]) for r in rows) for n in range(len(rates)))
        return VideoSpec(C, L, s, sizes, tuple(rates))
    sizes = []
    prev = Fraction(0)
    for r in rates:
        sizes.append((round(L * (r - prev)),) * C)
        prev = r
    return VideoSpec(C, L, s, tuple(sizes), tuple(rates))


@dataclass(frozen=True)
class TraceProfile:
    """Synthetic trace recipe, values in bytes per slot.

    ``step`` switches from ``mean`` to ``step_to`` at ``step_at``;
    ``markov-two-state`` alternates between mean +/- sqrt(variance) with
    symmetric switch probability, so both moments match the configuration.
    """

    kind: str = "constant"
    mean: int = 250_000
    variance: float = 0.0
    switch_prob: float = 0.1
    slots: int = 600
    step_at: Optional[int] = None
    step_to: int = 0

    def check(self) -> None:
        if self.kind not in PROFILES:
            raise ModelError(f"profile must be one of {PROFILES}, got {self.kind!r}")
        if self.mean < 0 or self.variance < 0 or self.slots < 1:
            raise ModelError("mean, variance and slots must be non-negative")
        if not 0 <= self.switch_prob <= 1:
            raise ModelError("switch_prob must be within [0, 1]")
        if self.kind == "markov-two-state" and self.variance ** 0.5 > self.mean:
            raise ModelError("standard deviation above the mean would need negative bandwidth")


def synthetic_trace(seed: int, profile: TraceProfile) -> tuple[int, ...]:
    profile.check()
    if profile.kind == "constant":
        return (profile.mean,) * profile.slots
    if profile.kind == "step":
        at = profile.slots // 2 if profile.step_at is None else profile.step_at
        return tuple(profile.mean if j < at else profile.step_to for j in range(profile.slots))
    rng = random.Random(seed)
    sd = profile.variance ** 0.5
    levels = (round(profile.mean + sd), round(profile.mean - sd))
    state = rng.randrange(2)
    out = []
    for _ in range(profile.slots):
        out.append(levels[state])
        if rng.random() < profile.switch_prob:
            state ^= 1
    return tuple(out)


def gen_synthetic_traces(
    seed: int,
    profiles: Sequence[TraceProfile],
    count: int = 1,
    out_dir: Optional[PathLike] = None,
    slot_seconds: float = 1,
) -> list[BandwidthTrace]:
    """``count`` multi-link traces, one profile per link.  Each link of each
    trace gets its own seed derived from ``seed``; files are written as
    ``trace{m:03d}_link{k}.txt`` when ``out_dir`` is given."""
    traces = []
    for m in range(count):
        rows = tuple(
            synthetic_trace(seed * 1_000_003 + m * len(profiles) + k, p)
            for k, p in enumerate(profiles)
        )
        traces.append(BandwidthTrace(rows))
        if out_dir is not None:
            d = Path(out_dir)
            d.mkdir(parents=True, exist_ok=True)
            for k, row in enumerate(rows, 1):
                write_trace(d / f"trace{m:03d}_link{k}.txt", row, slot_seconds)
    return traces


def load_profiles(path: PathLike) -> list[TraceProfile]:
    """Profiles from INI sections ``[link1]``, ``[link2]``, ..."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ManifestError(f"{path}: cannot read profile file")
    out = []
    for name in sorted(s for s in cp.sections() if s.startswith("link")):
        sec = cp[name]
        out.append(TraceProfile(
            kind=sec.get("kind", "constant"),
            mean=sec.getint("mean", 250_000),
            variance=sec.getfloat("variance", 0.0),
            switch_prob=sec.getfloat("switch_prob", 0.1),
            slots=sec.getint("slots", 600),
            step_at=sec.getint("step_at", None),
            step_to=sec.getint("step_to", 0),
        ))
    return out


def plan_digest(plan: FetchPlan) -> str:
    payload = json.dumps(
        {"a": plan.assignment, "s": plan.stall, "x": plan.split}, separators=(",", ":")
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def append_records(path: PathLike, records: Iterable[dict]) -> None:
    with open(path, "a") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_records(path: PathLike) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _cdf(values: Sequence[float]) -> list[tuple[float, float]]:
    xs = sorted(values)
    n = len(xs)
    return [(x, (j + 1) / n) for j, x in enumerate(xs)]


def aggregate_rows(records: Sequence[dict]) -> list[dict]:
    """Plot-ready rows: mean layer PMF, LSR CDF and link-2 share CDF per algorithm."""
    by_algo: dict[str, list[dict]] = {}
    for r in records:
        by_algo.setdefault(r["algo"], []).append(r)
    rows = []
    for algo in sorted(by_algo):
        recs = by_algo[algo]
        width = len(recs[0]["pmf"])
        pmf = [sum(r["pmf"][c] for r in recs) / len(recs) for c in range(width)]
        for c, p in enumerate(pmf):
            rows.append({"table": "pmf", "algo": algo, "x": "skip" if c == 0 else f"L{c - 1}", "y": p})
        for x, y in _cdf([r["layer_switching_rate"] for r in recs]):
            rows.append({"table": "lsr_cdf", "algo": algo, "x": x, "y": y})
        for x, y in _cdf([r["link2_share"] for r in recs]):
            rows.append({"table": "link2_cdf", "algo": algo, "x": x, "y": y})
    return rows


def write_aggregate(records: Sequence[dict], path: PathLike) -> list[dict]:
    rows = aggregate_rows(records)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["table", "algo", "x", "y"])
        w.writeheader()
        w.writerows(rows)
    return rows


__all__ = [
    "ManifestError",
    "PROFILES",
    "TraceFormatError",
    "TraceProfile",
    "aggregate_rows",
    "append_records",
    "bps_to_bytes",
    "bytes_to_bps",
    "data_path",
    "gen_synthetic_traces",
    "load_manifest",
    "load_profiles",
    "load_trace",
    "load_traces",
    "parse_trace",
    "plan_digest",
    "read_records",
    "synthetic_trace",
    "write_aggregate",
    "write_trace",
]
