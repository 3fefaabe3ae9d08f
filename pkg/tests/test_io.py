import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpsvc.io import (
    ManifestError,
    TraceFormatError,
    TraceProfile,
    aggregate_rows,
    data_path,
    gen_synthetic_traces,
    load_manifest,
    load_trace,
    parse_trace,
    synthetic_trace,
    write_trace,
)
from mpsvc.model import ModelError, VideoSpec


def test_unit_conversion(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("1 16000000\n2 8000000")
    assert load_trace(p).bw == ((2_000_000, 1_000_000),)


def test_comments_and_slot_seconds():
    assert parse_trace("# header\n1 8000 # one kB\n\n2 16000\n", slot_seconds=2) == (2000, 4000)


@pytest.mark.parametrize(
    "text,msg",
    [
        ("", "no samples"),
        ("# only a comment\n", "no samples"),
        ("1 100\n2 abc\n", ":2:"),
        ("1 100 7\n", ":1:"),
        ("1 100\n3 100\n", "expected slot 2"),
        ("1 -5\n", "negative"),
    ],
)
def test_trace_errors(text, msg):
    with pytest.raises(TraceFormatError, match=msg):
        parse_trace(text)


def test_short_trace_extends_with_last_value(tmp_path):
    p = tmp_path / "six_minutes.txt"
    write_trace(p, [1000] * 359 + [777])
    t = load_trace(p).extended(600)
    assert t.slots == 600
    assert set(t.bw[0][360:]) == {777}


@settings(max_examples=50)
@given(st.lists(st.integers(0, 10**7), min_size=1, max_size=50))
def test_trace_round_trip(tmp_path_factory, row):
    p = tmp_path_factory.mktemp("rt") / "t.txt"
    write_trace(p, row)
    assert load_trace(p).bw == (tuple(row),)


def test_bbb_manifest():
    v = load_manifest(data_path("bbb_manifest.ini"))
    assert v.chunk_count == 299 and v.chunk_duration == 2
    assert [r * 8 for r in v.nominal_rates] == [600_000, 990_000, 1_500_000, 2_075_000]
    assert [row[0] for row in v.layer_sizes] == [150_000, 97_500, 127_500, 143_750]


def test_minimal_manifest(tmp_path):
    p = tmp_path / "m.ini"
    p.write_text("[video]\nchunk_count = 1\nchunk_duration_slots = 1\nstartup_delay_slots = 0\nrates = 800\n")
    assert load_manifest(p) == VideoSpec(1, 1, 0, ((100,),), (100,))


def test_vbr_manifest(tmp_path):
    p = tmp_path / "m.ini"
    p.write_text(
        "[video]\nchunk_count = 2\nchunk_duration_slots = 1\nstartup_delay_slots = 1\n"
        "rates = 800 1600\n[sizes]\ntable =\n  90 110\n  110 90\n"
    )
    v = load_manifest(p)
    assert v.layer_sizes == ((90, 110), (110, 90))
    assert not v.is_cbr


@pytest.mark.parametrize(
    "body,msg",
    [
        ("[video]\nchunk_count = 2\nchunk_duration_slots = 1\nrates = 8\n", "startup_delay_slots"),
        ("[video]\nchunk_count = 2\nchunk_duration_slots = 1\nstartup_delay_slots = 0\nrates = 16 8\n",
         "increasing"),
        ("[video]\nchunk_count = 2\nchunk_duration_slots = 1\nstartup_delay_slots = 0\nrates = 8\n"
         "[sizes]\ntable =\n  1\n", "rows"),
        ("[other]\n", "missing \\[video\\]"),
    ],
)
def test_manifest_errors(tmp_path, body, msg):
    p = tmp_path / "m.ini"
    p.write_text(body)
    with pytest.raises(ManifestError, match=msg):
        load_manifest(p)


def test_constant_profile():
    row = synthetic_trace(0, TraceProfile("constant", 2_000_000, slots=600))
    assert row == (2_000_000,) * 600


def test_step_profile():
    row = synthetic_trace(0, TraceProfile("step", 10, slots=6, step_at=4, step_to=3))
    assert row == (10, 10, 10, 10, 3, 3)


def test_same_seed_same_files(tmp_path):
    prof = [TraceProfile("markov-two-state", 1000, 250_000, 0.2, 100)] * 2
    gen_synthetic_traces(3, prof, 2, tmp_path / "a")
    gen_synthetic_traces(3, prof, 2, tmp_path / "b")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_markov_mean_within_five_percent():
    row = synthetic_trace(11, TraceProfile("markov-two-state", 200_000, 100_000**2, 0.1, 10_000))
    assert abs(statistics.fmean(row) - 200_000) <= 0.05 * 200_000


def test_profile_validation():
    with pytest.raises(ModelError):
        synthetic_trace(0, TraceProfile("sawtooth"))
    with pytest.raises(ModelError):
        synthetic_trace(0, TraceProfile("markov-two-state", 10, 400))


def test_aggregate_pmf_sums_to_one():
    recs = [
        {"algo": "a", "pmf": [0.25, 0.75], "layer_switching_rate": 1.0, "link2_share": 0.1},
        {"algo": "a", "pmf": [0.5, 0.5], "layer_switching_rate": 0.0, "link2_share": 0.3},
    ]
    rows = aggregate_rows(recs)
    pmf = [r["y"] for r in rows if r["table"] == "pmf"]
    assert pmf == [0.375, 0.625]
    cdf = [r for r in rows if r["table"] == "lsr_cdf"]
    assert [(r["x"], r["y"]) for r in cdf] == [(0.0, 0.5), (1.0, 1.0)]
