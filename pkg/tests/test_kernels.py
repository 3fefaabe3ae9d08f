import random

import pytest

from mpsvc import _kernels_py, kernels

needs_compiled = pytest.mark.skipif(
    "compiled" not in kernels.available_backends(), reason="extension not built"
)


@pytest.fixture
def restore_backend():
    prev = kernels.BACKEND
    yield
    kernels.set_backend(prev)


def test_probe_zero_need_costs_nothing():
    row = kernels.make_row([5, 5, 5])
    assert _kernels_py.backward_probe(row, 3, 1, 0) == (0, 3, 0)


def test_probe_charges_only_before_prev_deadline():
    row = kernels.make_row([4, 0, 3])
    # need 5: 3 from slot 3, 2 from slot 1 (slot 1 <= prev deadline 2)
    assert _kernels_py.backward_probe(row, 3, 2, 5) == (2, 1, 2)


def test_probe_reports_shortfall():
    assert _kernels_py.backward_probe(kernels.make_row([1, 1]), 2, 0, 3)[0] == -1


def test_commit_drains_tail():
    row = kernels.make_row([4, 0, 3])
    kernels.backward_commit(row, 3, 1, 2)
    assert list(row) == [0, 2, 0, 0]


def test_unknown_backend(restore_backend):
    with pytest.raises(ValueError):
        kernels.set_backend("gpu")


def test_python_backend_selectable(restore_backend):
    kernels.set_backend("python")
    assert kernels.BACKEND == "python"
    assert kernels.backward_probe is _kernels_py.backward_probe


@needs_compiled
@pytest.mark.parametrize("seed", range(20))
def test_probe_and_commit_parity(seed):
    from mpsvc import _kernels

    rng = random.Random(seed)
    vals = [rng.randint(0, 6) for _ in range(12)]
    for _ in range(30):
        d = rng.randint(0, 12)
        prev = rng.randint(0, d)
        need = rng.randint(0, 25)
        a, b = kernels.make_row(vals), kernels.make_row(vals)
        pa = _kernels_py.backward_probe(a, d, prev, need)
        pb = _kernels.backward_probe(b, d, prev, need)
        assert tuple(pa) == tuple(pb)
        if pa[0] >= 0:
            _kernels_py.backward_commit(a, d, pa[1], pa[2])
            _kernels.backward_commit(b, d, pb[1], pb[2])
            assert list(a) == list(b)


def _random_options(rng, C, links):
    opt_bytes, opt_value, opt_start = [], [], [0]
    for _ in range(C):
        for _ in range(rng.randint(1, 4)):
            opt_bytes.extend(rng.randint(0, 5) for _ in range(links))
            opt_value.append(rng.randint(-3, 20))
        opt_start.append(len(opt_value))
    caps, run = [], [0] * links
    for _ in range(C):
        run = [r + rng.randint(0, 6) for r in run]
        caps.extend(run)
    return opt_bytes, opt_value, opt_start, caps


@needs_compiled
@pytest.mark.parametrize("seed", range(30))
def test_best_assignment_parity(seed):
    from mpsvc import _kernels

    rng = random.Random(seed)
    args = _random_options(rng, rng.randint(0, 6), 2)
    py = _kernels_py.best_assignment(*args, 2)
    cc = _kernels.best_assignment(*args, 2)
    assert py[0] == cc[0]
    assert (py[1] is None) == (cc[1] is None)
    if py[1] is not None:
        assert list(py[1]) == list(cc[1])


@needs_compiled
def test_big_values_fall_back_to_python(restore_backend):
    kernels.set_backend("compiled")
    value, choice = kernels.best_assignment([0, 0, 1, 0], [0, 1 << 70], [0, 2], [1, 0], 2)
    assert value == 1 << 70 and list(choice) == [1]
