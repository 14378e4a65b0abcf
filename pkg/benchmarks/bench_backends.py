"""Benchmark the numba kernels against the pure-numpy fallback.

Streams a full synthetic dataset through the 1NN engine under each backend
and reports wall time, throughput, and the speedup. The two backends must
agree on the final error; the run aborts if they do not.

Usage:
    python benchmarks/bench_backends.py [--n-train 20000] [--n-test 2000]
                                        [--dim 16] [--batch-fraction 0.02]
                                        [--metric Euclidean]
"""

import argparse
import math
import time

from snoopy import _backend, engine, synth
from snoopy.datamodel import Metric, StudyLabels


def stream_once(train_x, test_x, labels, metric, batch):
    state = engine.ArmState("bench", metric, test_x.n_rows)
    while not state.finished:
        engine.pull(state, train_x, test_x, labels, batch)
    return state.curve[-1].err_1nn


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-train", type=int, default=20000)
    parser.add_argument("--n-test", type=int, default=2000)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--batch-fraction", type=float, default=0.02)
    parser.add_argument("--metric", default="Euclidean",
                        choices=[m.value for m in Metric])
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    metric = Metric(args.metric)
    batch = max(1, math.ceil(args.batch_fraction * args.n_train))
    # blob offset shrinks with dim so the 1NN error stays visibly non-zero
    offset = 0.5 / math.sqrt(args.dim)
    train_x, train_y = synth.gaussian_blobs(args.n_train, args.dim,
                                            offset, seed=1)
    test_x, test_y = synth.gaussian_blobs(args.n_test, args.dim,
                                          offset, seed=2)
    labels = StudyLabels(train_y, test_y)
    pair_ops = args.n_train * args.n_test * args.dim

    backends = ["numpy"] + (["numba"] if _backend.HAS_NUMBA else [])
    if not _backend.HAS_NUMBA:
        print("numba not importable; benchmarking the fallback only")

    results = {}
    for name in backends:
        _backend.use(name)
        stream_once(train_x, test_x, labels, metric, batch)  # warm (JIT, caches)
        best = math.inf
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            err = stream_once(train_x, test_x, labels, metric, batch)
            best = min(best, time.perf_counter() - t0)
        results[name] = (best, err)
        print(f"{name:>6}: {best:8.3f}s  "
              f"({pair_ops / best / 1e9:6.2f} Gdim-pairs/s)  err={err:.6f}")
    _backend.use(None)

    if len(results) == 2:
        if results["numpy"][1] != results["numba"][1]:
            raise SystemExit("backends disagree on the final 1NN error")
        speedup = results["numpy"][0] / results["numba"][0]
        print(f"numba speedup over numpy fallback: {speedup:.1f}x")


if __name__ == "__main__":
    main()
