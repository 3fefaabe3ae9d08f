import random
from fractions import Fraction

import pytest

from conftest import BBB_LADDER
from mpsvc.baselines import (
    BaselineConfig,
    attribute_aggregate,
    bba_quality,
    earliest_finish_split,
    mp_bba,
    mptcp_bba,
    msplayer,
    msplayer_step,
    nearest_level,
    predicted_rates,
)
from mpsvc.model import BandwidthTrace, VideoSpec
from mpsvc.playback import compute_metrics

MBPS = [Fraction(6, 10), Fraction(99, 100), Fraction(15, 10), Fraction(2075, 1000)]


def test_bba_branches():
    assert bba_quality(10, (30, 90), MBPS) == 0
    assert bba_quality(95, (30, 90), MBPS) == 3
    # 0.6 + 30/60 * 1.475 = 1.3375 Mbps, rounded down to the ladder: EL1
    assert bba_quality(60, (30, 90), MBPS) == 1


def test_bba_same_on_byte_ladder():
    assert bba_quality(60, (30, 90), BBB_LADDER) == 1


def test_earliest_finish_prefers_idle_link():
    assert earliest_finish_split([5, 5, 5], [1, 1], backlog=[1000, 0]) == [2, 2, 2]


def test_earliest_finish_splits_symmetric_links():
    assert earliest_finish_split([5, 5], [1, 1]) == [1, 2]


def test_earliest_finish_skips_dead_links():
    assert earliest_finish_split([5], [0, 3]) == [2]


def test_msplayer_dead_band():
    assert msplayer_step(1, 1.0, 1.0, 1.0, MBPS) == (1, 1)
    assert msplayer_step(1, 1.04, 1.0, 1.0, MBPS) == (1, 1)


def test_msplayer_doubles_to_nearest():
    # 0.6 doubled is 1.2, nearer to 0.99 than to 1.5
    slow, _ = msplayer_step(0, 1.10, 1.0, 1.0, MBPS)
    assert slow == 1


def test_msplayer_fast_link_scaled():
    # slow stays at 0.99; fast target 1.98 is nearest to 2.075
    assert msplayer_step(1, 1.0, 1.0, 2.0, MBPS) == (1, 3)


def test_msplayer_halves():
    assert msplayer_step(3, 0.5, 1.0, 1.0, MBPS)[0] == 1


def test_nearest_level_ties_go_down():
    assert nearest_level(Fraction(2), [Fraction(1), Fraction(3)]) == 0


def test_predicted_rates_fill_missing_links():
    assert predicted_rates([[4, 4], []], 10) == [4, 4]
    assert predicted_rates([[], []], 10) == [1, 1]


def test_low_buffer_keeps_base_layer():
    video = VideoSpec.cbr(10, 2, 4, BBB_LADDER)
    trace = BandwidthTrace.from_lists([100_000] * 40, [100_000] * 40)
    log = mp_bba(video, trace, BaselineConfig(thresholds=(10**6, 2 * 10**6)))
    assert all(q <= 0 for q in log.quality)
    assert max(log.quality) == 0


def test_attribution_is_proportional():
    trace = BandwidthTrace.from_lists([3, 0, 1], [1, 4, 1])
    assert attribute_aggregate([4, 2, 1], trace) == ((3, 0, 0), (1, 2, 1))


def _feasible(log, trace):
    for k, row in enumerate(log.consumed):
        ext = trace.extended(len(row))
        if any(c > b for c, b in zip(row, ext.bw[k])):
            return False
    return True


@pytest.mark.parametrize("runner", [mp_bba, mptcp_bba, msplayer])
@pytest.mark.parametrize("mode", ["skip", "noskip"])
def test_baselines_respect_capacity(runner, mode):
    rng = random.Random(f"{runner.__name__}-{mode}")
    video = VideoSpec.uniform(20, 2, 4, [100, 50, 50])
    trace = BandwidthTrace.from_lists(
        [rng.randint(0, 150) for _ in range(60)], [rng.randint(0, 70) for _ in range(60)]
    )
    log = runner(video, trace, BaselineConfig(thresholds=(4, 12), mode=mode))
    assert _feasible(log, trace)
    m = compute_metrics(log, video)
    assert sum(m.pmf) == 1
    if mode == "noskip":
        assert m.skip_count == 0


def test_msplayer_routes_by_parity():
    video = VideoSpec.uniform(6, 1, 2, [2])
    log = msplayer(video, BandwidthTrace.from_lists([5] * 10, [5] * 10))
    assert log.links_used[0] == (1, 2, 1, 2, 1, 2)


def test_mptcp_bba_attributes_bytes_to_both_links():
    video = VideoSpec.uniform(6, 1, 2, [4])
    log = mptcp_bba(video, BandwidthTrace.from_lists([2] * 10, [2] * 10))
    assert log.quality == (0,) * 6
    assert log.link_bytes() == (12, 12)
