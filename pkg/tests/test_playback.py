import random
from fractions import Fraction

import pytest

from conftest import BBB_LADDER, random_instance
from mpsvc.model import SKIPPED, FetchPlan, VideoSpec
from mpsvc.offline import mp_svc_offline
from mpsvc.playback import DownloadLog, compute_metrics, layer_switching_rate, simulate_download


def test_ten_chunk_enhancement_order_on_link2(ten_chunk):
    video, trace = ten_chunk
    plan = mp_svc_offline(video, trace)
    assert plan.assignment[1][3] == 2 and plan.assignment[1][5] == 2
    log = simulate_download(plan, trace, video)
    assert log.completion[1][3] < log.completion[1][5]
    assert log.late == ()


def test_empty_plan_gives_empty_log(c3):
    video, trace = c3
    log = simulate_download(FetchPlan.empty(1, 3), trace, video)
    assert log.quality == (-1, -1, -1)
    assert log.link_bytes() == (0, 0)
    assert all(c is None for row in log.completion for c in row)


def test_c3_replay(c3):
    video, trace = c3
    log = simulate_download(FetchPlan(((SKIPPED, 1, 2),)), trace, video)
    assert log.completion[0][1] in (1, 2)
    assert log.completion[0][2] == 3
    assert log.late == ()
    assert log.quality == (-1, 0, 0)


def test_constant_quality_has_zero_lsr():
    video = VideoSpec.cbr(4, 2, 5, BBB_LADDER)
    log = DownloadLog(2, (5, 7, 9, 11), (), (), ((),), (2, 2, 2, 2))
    assert compute_metrics(log, video).layer_switching_rate == 0


def test_base_to_top_jump_on_bbb_ladder():
    video = VideoSpec.cbr(2, 2, 5, BBB_LADDER)
    log = DownloadLog(2, (5, 7), (), (), ((),), (0, 3))
    lsr = compute_metrics(log, video).layer_switching_rate
    # 2.075 - 0.6 Mbps = 1.475 Mbps = 184375 bytes/s, one transition over C - 1 = 1
    assert lsr == Fraction(184375)
    assert layer_switching_rate([Fraction(75000), Fraction(259375)]) * 8 == 1_475_000


def test_all_skipped_log():
    video = VideoSpec.cbr(3, 1, 1, BBB_LADDER)
    m = compute_metrics(DownloadLog(1, (1, 2, 3), (), (), ((),), (-1, -1, -1)), video)
    assert m.avg_playback_rate == 0
    assert m.pmf[0] == 1 and sum(m.pmf) == 1
    assert m.skip_count == 3 and m.skip_duration == 3


def test_stall_is_reported():
    video = VideoSpec.uniform(3, 1, 1, [2])
    plan = FetchPlan(((1, 1, 1),), (2, 2, 2))
    from mpsvc.model import BandwidthTrace

    log = simulate_download(plan, BandwidthTrace.from_lists([2, 0, 0, 2, 2], [0] * 5), video)
    assert log.late == ()
    assert compute_metrics(log, video).stall_duration == 2


@pytest.mark.parametrize("seed", range(25))
def test_byte_conservation(seed):
    video, trace = random_instance(random.Random(800 + seed))
    plan = mp_svc_offline(video, trace)
    log = simulate_download(plan, trace, video)
    assert log.late == ()
    assert log.link_bytes() == plan.link_bytes(video)
    for k, row in enumerate(log.consumed):
        ext = trace.extended(len(row))
        assert all(c <= b for c, b in zip(row, ext.bw[k]))
    m = compute_metrics(log, video)
    assert sum(m.pmf) == 1
