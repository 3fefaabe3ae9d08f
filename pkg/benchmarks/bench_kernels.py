"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--sizes 100 200 400 800] [--repeat 3]
"""

import argparse
import random
import time
from fractions import Fraction

from mpsvc import kernels
from mpsvc.model import BandwidthTrace, VideoSpec
from mpsvc.offline import mp_svc_offline
from mpsvc.oracle import brute_force_optimal

RATES = (Fraction(75000), Fraction(123750), Fraction(187500), Fraction(259375))


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def offline_case(C, seed):
    rng = random.Random(seed)
    video = VideoSpec.cbr(C, 1, 2, RATES)
    trace = BandwidthTrace.from_lists(
        [rng.randint(50_000, 300_000) for _ in range(C + 2)],
        [rng.randint(20_000, 150_000) for _ in range(C + 2)],
    )
    return lambda: mp_svc_offline(video, trace)


def oracle_case(seed):
    rng = random.Random(seed)
    video = VideoSpec.uniform(5, 1, 1, [2, 1, 1])
    trace = BandwidthTrace.from_lists([rng.randint(0, 3) for _ in range(8)], [rng.randint(0, 3) for _ in range(8)])
    return lambda: brute_force_optimal(video, trace)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400, 800])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the Python backend is timed")
    cases = [(f"mp_svc_offline C={C}", offline_case(C, args.seed)) for C in args.sizes]
    cases.append(("brute_force_optimal C=5 N=2", oracle_case(args.seed)))

    prev = kernels.BACKEND
    print(f"{'case':32s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    try:
        for name, fn in cases:
            times = []
            for b in backends:
                kernels.set_backend(b)
                times.append(best_of(fn, args.repeat))
            row = f"{name:32s}" + "".join(f"{t * 1000:10.1f}ms" for t in times)
            if len(times) > 1:
                row += f"{times[0] / times[1]:11.1f}x"
            print(row)
    finally:
        kernels.set_backend(prev)


if __name__ == "__main__":
    main()
