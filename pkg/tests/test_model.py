from fractions import Fraction

import pytest

from mpsvc.model import (
    SKIPPED,
    BandwidthTrace,
    FetchPlan,
    ModelError,
    VideoSpec,
    WeightTable,
    build_weights,
    cumulative_bandwidth,
    deadlines,
    symmetric_weights,
    validate_weights,
)


def test_build_weights_two_chunks_one_enhancement():
    w = build_weights(2, 1, 1)
    assert w.lam[1] == (3, 1)
    assert w.lam[0] == (27, 9)


def test_build_weights_single_chunk_single_layer():
    w = build_weights(1, 0, 1)
    assert w.lam == ((3, 1),)


@pytest.mark.parametrize("C,N,ymax", [(1, 0, 1), (2, 1, 1), (5, 2, 3), (6, 2, 1), (3, 0, 7)])
def test_built_weights_validate(C, N, ymax):
    video = VideoSpec.uniform(C, 1, 0, [ymax] * (N + 1))
    assert validate_weights(build_weights(C, N, ymax), video)


def test_all_equal_weights_rejected():
    video = VideoSpec.uniform(2, 1, 0, [1, 1])
    assert not validate_weights(WeightTable(((1, 1), (1, 1)), 100), video)


def test_weight_inequality_is_strict():
    video = VideoSpec.uniform(2, 1, 0, [1, 1])
    assert not validate_weights(WeightTable(((26, 9), (3, 1)), 10**6), video)
    assert validate_weights(WeightTable(((27, 9), (3, 1)), 10**6), video)


def test_symmetric_weights_are_lexicographic_in_layers():
    w = symmetric_weights(3, 2)
    assert w.lam[2] == (1, 1)
    assert w.lam[1][0] > 3 * w.lam[2][0]
    assert w.lam[0][0] > 3 * (w.lam[1][0] + w.lam[2][0])


def test_cumulative_bandwidth_prefix_sums():
    R = cumulative_bandwidth(BandwidthTrace.from_lists([2, 0, 2]))
    assert R[0][1:] == (2, 2, 4)
    R = cumulative_bandwidth(BandwidthTrace.from_lists([0, 0, 0], [0, 0, 0]))
    assert all(v == 0 for row in R for v in row)
    R = cumulative_bandwidth(BandwidthTrace.from_lists([2, 0, 0], [0, 0, 2]))
    assert R[0][3] == 2 and R[1][3] == 2


def test_deadlines():
    assert deadlines(VideoSpec.uniform(10, 1, 1, [2])) == tuple(range(1, 11))
    assert deadlines(VideoSpec.uniform(3, 2, 5, [1])) == (5, 7, 9)
    assert deadlines(VideoSpec.uniform(3, 1, 1, [1]), [2, 2, 2]) == (3, 4, 5)


def test_deadlines_reject_decreasing_stall():
    with pytest.raises(ModelError):
        deadlines(VideoSpec.uniform(2, 1, 1, [1]), [2, 1])


def test_cbr_sizes_from_cumulative_rates():
    v = VideoSpec.cbr(4, 2, 5, [75000, 123750, 187500, 259375])
    assert [row[0] for row in v.layer_sizes] == [150000, 97500, 127500, 143750]
    assert v.nominal_rates[-1] == Fraction(259375)
    assert v.is_cbr and v.top_layer == 3 and v.duration == 8


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(chunk_count=0, chunk_duration=1, startup_delay=0, layer_sizes=()),
        dict(chunk_count=1, chunk_duration=1, startup_delay=0, layer_sizes=((0,),)),
        dict(chunk_count=2, chunk_duration=1, startup_delay=0, layer_sizes=((1,),)),
        dict(chunk_count=1, chunk_duration=1, startup_delay=-1, layer_sizes=((1,),)),
    ],
)
def test_video_validation(kwargs):
    with pytest.raises(ModelError):
        VideoSpec(**kwargs)


def test_trace_validation_and_extension():
    with pytest.raises(ModelError):
        BandwidthTrace(((1, -1),))
    t = BandwidthTrace.from_lists([1, 2], [3])
    assert t.bw == ((1, 2), (3, 0))
    assert t.extended(4).bw == ((1, 2, 2, 2), (3, 0, 0, 0))
    assert t.with_links(3).bw[2] == (0, 0)


def test_plan_rejects_layer_gap_and_n2_violation():
    with pytest.raises(ModelError):
        FetchPlan(((SKIPPED,), (1,)))
    with pytest.raises(ModelError):
        FetchPlan(((1,), (2,)), n2=0)
    plan = FetchPlan(((1, 2, SKIPPED), (1, SKIPPED, SKIPPED)))
    assert plan.quality(1) == 1 and plan.quality(3) == -1
    assert plan.skipped_chunks() == [3]
    assert plan.count(0, 2) == 1
    assert plan.link_bytes(VideoSpec.uniform(3, 1, 0, [2, 1])) == (3, 2)
