"""Value-iteration kernels over the flattened transition structure.

The flat space is stored CSR-style: states own a slice of choices
(choice_ptr), choices own a slice of outcomes (out_ptr), and outcomes are
parallel arrays (prob, nxt, cost). Both kernels run Jacobi sweeps so the
numba and numpy paths produce identical iterates.

The numba path is the default; set PCHART_PURE_NUMPY=1 to force the
plain-numpy fallback (or run anywhere numba cannot compile). Both are
exposed for the equivalence tests and the benchmark.
"""

from __future__ import annotations

import os

import numpy as np

_BIG = 1e300


def _reach_sweep_numpy(choice_ptr, out_ptr, prob, nxt, x, minimize, skip):
    """One Jacobi sweep of the reachability operator; returns (x_new, residual)."""
    n = len(choice_ptr) - 1
    if len(out_ptr) == 1:
        return x.copy(), 0.0
    contrib = prob * x[nxt]
    x_new = _reduce_choices(choice_ptr, out_ptr, contrib, x, minimize, skip)
    resid = float(np.max(np.abs(x_new - x))) if n else 0.0
    return x_new, resid


def _cost_sweep_numpy(choice_ptr, out_ptr, prob, nxt, cost, x, minimize, skip):
    n = len(choice_ptr) - 1
    if len(out_ptr) == 1:
        return x.copy(), 0.0
    contrib = prob * (cost + x[nxt])
    x_new = _reduce_choices(choice_ptr, out_ptr, contrib, x, minimize, skip)
    resid = float(np.max(np.abs(x_new - x))) if n else 0.0
    return x_new, resid


def _reduce_choices(choice_ptr, out_ptr, contrib, x, minimize, skip):
    """Per-choice sums, then min/max per state. The per-choice array is
    padded with a sentinel so empty state segments stay within reduceat
    bounds; their garbage values are masked out afterwards."""
    choice_val = np.add.reduceat(contrib, out_ptr[:-1])
    padded = np.append(choice_val, np.inf if minimize else -np.inf)
    has_choice = choice_ptr[:-1] < choice_ptr[1:]
    if minimize:
        state_val = np.minimum.reduceat(padded, choice_ptr[:-1])[: len(x)]
    else:
        state_val = np.maximum.reduceat(padded, choice_ptr[:-1])[: len(x)]
    x_new = np.where(has_choice, state_val, x)
    x_new[skip] = x[skip]
    return x_new


def _reach_numpy(choice_ptr, out_ptr, prob, nxt, target, frozen, minimize, eps, max_iter):
    x = np.where(target, 1.0, 0.0)
    x[frozen] = 0.0
    skip = target | frozen
    resid = 0.0
    for it in range(1, max_iter + 1):
        x_new, resid = _reach_sweep_numpy(choice_ptr, out_ptr, prob, nxt, x, minimize, skip)
        x = x_new
        if resid < eps:
            return x, it, resid
    return x, max_iter, resid


def _cost_numpy(choice_ptr, out_ptr, prob, nxt, cost, target, minimize, eps, max_iter):
    x = np.zeros(len(choice_ptr) - 1)
    resid = 0.0
    for it in range(1, max_iter + 1):
        x_new, resid = _cost_sweep_numpy(choice_ptr, out_ptr, prob, nxt, cost, x, minimize, target)
        x = x_new
        if resid < eps:
            return x, it, resid
    return x, max_iter, resid


def _make_numba_kernels():
    from numba import njit

    @njit(cache=True)
    def reach_kernel(choice_ptr, out_ptr, prob, nxt, target, frozen, minimize, eps, max_iter):
        n = choice_ptr.shape[0] - 1
        x = np.zeros(n)
        for s in range(n):
            if target[s]:
                x[s] = 1.0
        x_new = x.copy()
        resid = 0.0
        for it in range(1, max_iter + 1):
            resid = 0.0
            for s in range(n):
                if target[s] or frozen[s]:
                    x_new[s] = x[s]
                    continue
                c0, c1 = choice_ptr[s], choice_ptr[s + 1]
                if c0 == c1:
                    x_new[s] = x[s]
                    continue
                best = _BIG if minimize else -_BIG
                for c in range(c0, c1):
                    v = 0.0
                    for o in range(out_ptr[c], out_ptr[c + 1]):
                        v += prob[o] * x[nxt[o]]
                    if minimize:
                        if v < best:
                            best = v
                    else:
                        if v > best:
                            best = v
                d = abs(best - x[s])
                if d > resid:
                    resid = d
                x_new[s] = best
            tmp = x
            x = x_new
            x_new = tmp
            if resid < eps:
                return x, it, resid
        return x, max_iter, resid

    @njit(cache=True)
    def cost_kernel(choice_ptr, out_ptr, prob, nxt, cost, target, minimize, eps, max_iter):
        n = choice_ptr.shape[0] - 1
        x = np.zeros(n)
        x_new = x.copy()
        resid = 0.0
        for it in range(1, max_iter + 1):
            resid = 0.0
            for s in range(n):
                if target[s]:
                    x_new[s] = x[s]
                    continue
                c0, c1 = choice_ptr[s], choice_ptr[s + 1]
                if c0 == c1:
                    x_new[s] = x[s]
                    continue
                best = _BIG if minimize else -_BIG
                for c in range(c0, c1):
                    v = 0.0
                    for o in range(out_ptr[c], out_ptr[c + 1]):
                        v += prob[o] * (cost[o] + x[nxt[o]])
                    if minimize:
                        if v < best:
                            best = v
                    else:
                        if v > best:
                            best = v
                d = abs(best - x[s])
                if d > resid:
                    resid = d
                x_new[s] = best
            tmp = x
            x = x_new
            x_new = tmp
            if resid < eps:
                return x, it, resid
        return x, max_iter, resid

    return reach_kernel, cost_kernel


def reach_values_numpy(choice_ptr, out_ptr, prob, nxt, target, frozen, minimize, eps, max_iter):
    return _reach_numpy(choice_ptr, out_ptr, prob, nxt, target, frozen, minimize, eps, max_iter)


def cost_values_numpy(choice_ptr, out_ptr, prob, nxt, cost, target, minimize, eps, max_iter):
    return _cost_numpy(choice_ptr, out_ptr, prob, nxt, cost, target, minimize, eps, max_iter)


_FORCE_NUMPY = os.environ.get("PCHART_PURE_NUMPY", "") not in ("", "0")

reach_values_numba = None
cost_values_numba = None
if not _FORCE_NUMPY:
    try:
        reach_values_numba, cost_values_numba = _make_numba_kernels()
    except Exception:  # pragma: no cover - numba genuinely unavailable
        reach_values_numba = cost_values_numba = None

if reach_values_numba is not None:
    BACKEND = "numba"
    reach_values = reach_values_numba
    cost_values = cost_values_numba
else:
    BACKEND = "numpy"
    reach_values = reach_values_numpy
    cost_values = cost_values_numpy


def warm_up():
    """Trigger JIT compilation on a micro-instance (no-op on numpy)."""
    cp = np.array([0, 1, 1], dtype=np.int64)
    op = np.array([0, 1], dtype=np.int64)
    pr = np.array([1.0])
    nx = np.array([1], dtype=np.int64)
    co = np.array([0.5])
    tg = np.array([False, True])
    fz = np.array([False, False])
    reach_values(cp, op, pr, nx, tg, fz, False, 1e-9, 10)
    cost_values(cp, op, pr, nx, co, tg, False, 1e-9, 10)
