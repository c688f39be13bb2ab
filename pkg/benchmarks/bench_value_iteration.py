"""Benchmark: numba kernels vs the pure-numpy fallback.

Builds a layered random MDP in CSR form (information crosses one layer
per Jacobi sweep, so convergence is depth-bounded and the benchmark
measures per-sweep throughput) and times extremal reachability and
expected cost on both kernel paths. Run:

    python benchmarks/bench_value_iteration.py [--states 200000] [--layers 50]

PCHART_PURE_NUMPY=1 selects the fallback inside the package; here both
implementations are timed explicitly and checked against each other.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pchart import _kernels


def layered_csr(n_states: int, layers: int, choices: int, outcomes: int, seed: int = 7):
    """Random layered MDP: every non-final state has `choices` actions,
    each a distribution over `outcomes` states of the next layer."""
    rng = np.random.default_rng(seed)
    per_layer = n_states // layers
    n = per_layer * layers
    choice_ptr = [0]
    out_ptr = [0]
    prob: list[np.ndarray] = []
    nxt: list[np.ndarray] = []
    cost: list[np.ndarray] = []
    n_choices = 0
    for layer in range(layers - 1):
        lo = (layer + 1) * per_layer
        for s in range(per_layer):
            for c in range(choices):
                targets = rng.integers(lo, lo + per_layer, size=outcomes)
                weights = rng.random(outcomes) + 0.1
                weights /= weights.sum()
                prob.append(weights)
                nxt.append(targets)
                cost.append(rng.random(outcomes))
                n_choices += 1
                out_ptr.append(out_ptr[-1] + outcomes)
            choice_ptr.append(n_choices)
    for s in range(per_layer):  # final layer: absorbing
        choice_ptr.append(n_choices)
    target = np.zeros(n, dtype=bool)
    target[-per_layer:] = rng.random(per_layer) < 0.5
    target[-1] = True
    return (
        np.array(choice_ptr, dtype=np.int64),
        np.array(out_ptr, dtype=np.int64),
        np.concatenate(prob),
        np.concatenate(nxt).astype(np.int64),
        np.concatenate(cost),
        target,
    )


def bench(fn, repeats: int):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--states", type=int, default=200_000)
    parser.add_argument("--layers", type=int, default=50)
    parser.add_argument("--choices", type=int, default=2)
    parser.add_argument("--outcomes", type=int, default=3)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--eps", type=float, default=1e-9)
    args = parser.parse_args()

    cp, op, prob, nxt, cost, target = layered_csr(
        args.states, args.layers, args.choices, args.outcomes)
    n = len(cp) - 1
    frozen = np.zeros(n, dtype=bool)
    max_iter = args.layers + 100

    runs = {}
    if _kernels.reach_values_numba is not None:
        _kernels.warm_up()
        runs["numba"] = (_kernels.reach_values_numba, _kernels.cost_values_numba)
    else:
        print("numba unavailable; timing the numpy path only")
    runs["numpy"] = (_kernels.reach_values_numpy, _kernels.cost_values_numpy)

    print(f"layered MDP: {n} states, {args.layers} layers, "
          f"{args.choices} choices x {args.outcomes} outcomes")
    reach_results = {}
    times = {}
    for name, (reach, _) in runs.items():
        t, (x, iters, resid) = bench(
            lambda reach=reach: reach(cp, op, prob, nxt, target, frozen, False,
                                      args.eps, max_iter),
            args.repeats,
        )
        reach_results[name] = x
        times[("reach", name)] = t
        print(f"  reach  {name:>5}: {t * 1000:8.1f} ms  ({iters} iterations, residual {resid:.1e})")

    cost_results = {}
    for name, (_, costk) in runs.items():
        t, (x, iters, resid) = bench(
            lambda costk=costk: costk(cp, op, prob, nxt, cost, target, True,
                                      args.eps, max_iter),
            args.repeats,
        )
        cost_results[name] = x
        times[("cost", name)] = t
        print(f"  cost   {name:>5}: {t * 1000:8.1f} ms  ({iters} iterations, residual {resid:.1e})")

    if len(runs) == 2:
        dr = float(np.max(np.abs(reach_results["numba"] - reach_results["numpy"])))
        dc = float(np.max(np.abs(cost_results["numba"] - cost_results["numpy"])))
        print(f"  paths agree: reach |delta| <= {dr:.2e}, cost |delta| <= {dc:.2e}")
        print(f"  speedup: reach x{times[('reach', 'numpy')] / times[('reach', 'numba')]:.1f}, "
              f"cost x{times[('cost', 'numpy')] / times[('cost', 'numba')]:.1f}")


if __name__ == "__main__":
    main()
