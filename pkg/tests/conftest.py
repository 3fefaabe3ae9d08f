import random
from fractions import Fraction

import pytest

from mpsvc.io import data_path, load_manifest, load_traces
from mpsvc.model import BandwidthTrace, VideoSpec

BBB_LADDER = (Fraction(75000), Fraction(123750), Fraction(187500), Fraction(259375))  # bytes/s


@pytest.fixture
def c3():
    """Three one-slot chunks, base layer only; link 1 early, link 2 late."""
    video = VideoSpec.uniform(3, 1, 1, [2])
    trace = BandwidthTrace.from_lists([2, 0, 0], [0, 0, 2])
    return video, trace


@pytest.fixture
def ten_chunk():
    video = load_manifest(data_path("ten_chunk_manifest.ini"))
    trace = load_traces([data_path("ten_chunk_link1.txt"), data_path("ten_chunk_link2.txt")])
    return video, trace


def random_instance(rng: random.Random, max_chunks=5, max_layers=3, slots=8, max_bw=3, sizes=(1, 3)):
    """Small CBR instance of the oracle sweep family."""
    C = rng.randint(1, max_chunks)
    layers = rng.randint(1, max_layers)
    L = rng.randint(1, 2)
    s = rng.randint(0, 2)
    while (C - 1) * L + s > slots:
        L, s = 1, rng.randint(0, 2)
    video = VideoSpec.uniform(C, L, s, [rng.randint(*sizes) for _ in range(layers)])
    trace = BandwidthTrace.from_lists(
        [rng.randint(0, max_bw) for _ in range(slots)],
        [rng.randint(0, max_bw) for _ in range(slots)],
    )
    return video, trace


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
