"""Randomised invariants shared by every offline scheduler."""

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance
from mpsvc.model import SKIPPED
from mpsvc.mptcp import aggregate_trace, mptcp_svc, pref_mptcp_svc
from mpsvc.noskip import avoid_stalls_mp_svc, no_skip_mp_svc
from mpsvc.offline import mp_svc_offline
from mpsvc.oracle import plan_feasible
from mpsvc.playback import compute_metrics, simulate_download
from mpsvc.pref import PreferenceConfig, avoid_skips_mp_svc, pref_mp_svc

SCHEDULERS = {
    "mp-svc": mp_svc_offline,
    "avoid-skips": avoid_skips_mp_svc,
    "pref": lambda v, t: pref_mp_svc(v, t, PreferenceConfig(v.top_layer)),
    "pref-0": lambda v, t: pref_mp_svc(v, t, PreferenceConfig(0)),
    "no-skip": no_skip_mp_svc,
    "avoid-stalls": avoid_stalls_mp_svc,
    "mptcp": mptcp_svc,
    "pref-mptcp": pref_mptcp_svc,
}

seeds = st.integers(0, 2**32 - 1)
names = st.sampled_from(sorted(SCHEDULERS))


def _pipe(name, trace):
    # plain MPTCP plans are made for (and replayed on) the aggregated pipe
    return aggregate_trace(trace) if name == "mptcp" else trace


@settings(max_examples=150, deadline=None)
@given(seeds, names)
def test_plans_are_feasible_and_layered(seed, name):
    video, trace = random_instance(random.Random(seed))
    plan = SCHEDULERS[name](video, trace)
    plan.check()
    assert plan_feasible(plan, video, _pipe(name, trace))
    for i in range(video.chunk_count):
        links = [plan.assignment[n][i] for n in range(video.layer_count)]
        fetched = [k != SKIPPED for k in links]
        # an enhancement layer is never fetched without the layers below it
        assert fetched == sorted(fetched, reverse=True)


@settings(max_examples=100, deadline=None)
@given(seeds, names)
def test_replay_delivers_on_time(seed, name):
    video, trace = random_instance(random.Random(seed))
    plan = SCHEDULERS[name](video, trace)
    log = simulate_download(plan, _pipe(name, trace), video)
    assert log.late == ()
    m = compute_metrics(log, video)
    assert sum(m.pmf) == 1
    assert m.skip_count == len(plan.skipped_chunks())


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_noskip_modes_skip_nothing(seed):
    video, trace = random_instance(random.Random(seed))
    for fn in (no_skip_mp_svc, avoid_stalls_mp_svc):
        plan = fn(video, trace)
        assert plan.skipped_chunks() == []
