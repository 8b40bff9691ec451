"""Compiled decode loops shared by the three decoder variants.

Arrays follow the Python layer: ``L`` and ``R`` have shape ``(m + 1, n)`` with
row ``j - 1`` holding stage ``j``.  ``freeze_stage`` stores, per source index,
the 1-based stage of the shallowest frozen block covering it, or ``m + 1``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LLR_CAP = 1e30

MODE_BASELINE = 0
MODE_GMATRIX = 1
MODE_CSFG = 2

STOP_MAX_ITER = 0
STOP_GMATRIX = 1
STOP_CSFG = 2


@njit(cache=True, inline="always")
def _sgn(v):
    return 1.0 if v >= 0.0 else -1.0


@njit(cache=True, inline="always")
def _clamp(v):
    if v > LLR_CAP:
        return LLR_CAP
    if v < -LLR_CAP:
        return -LLR_CAP
    return v


@njit(cache=True, inline="always")
def _minsum(a, b, alpha):
    return alpha * (_sgn(a) * _sgn(b) * min(abs(a), abs(b)))


@njit(cache=True)
def sweep_stage(L, R, j, m, alpha, freeze_stage):
    """Run the stage-``j`` processing elements; returns how many executed."""
    n = R.shape[1]
    d = 1 << (m - j)
    lo = j - 1
    hi = j
    count = 0
    for base in range(0, n, 2 * d):
        for i in range(base, base + d):
            if freeze_stage[i] < j:
                continue
            lt = L[hi, i]
            lb = L[hi, i + d]
            rt = R[lo, i]
            rb = R[lo, i + d]
            t = lb + rb
            g = _minsum(lt, rt, alpha)
            L[lo, i] = _clamp(_minsum(lt, t, alpha))
            L[lo, i + d] = _clamp(lb + g)
            R[hi, i] = _clamp(_minsum(rt, t, alpha))
            R[hi, i + d] = _clamp(rb + g)
            count += 1
    return count


@njit(cache=True)
def transform_inplace(v):
    n = v.shape[0]
    d = 1
    while d < n:
        for base in range(0, n, 2 * d):
            for i in range(base, base + d):
                v[i] ^= v[i + d]
        d *= 2


@njit(cache=True)
def _hard_source(R, m, frozen, out):
    for i in range(R.shape[1]):
        out[i] = 0 if (frozen[i] or R[m, i] >= 0.0) else 1


@njit(cache=True)
def _gmatrix_converged(L, R, m, frozen, u_buf, x_buf):
    _hard_source(R, m, frozen, u_buf)
    for i in range(u_buf.shape[0]):
        x_buf[i] = u_buf[i]
    transform_inplace(x_buf)
    for i in range(x_buf.shape[0]):
        xh = 0 if R[0, i] + L[0, i] >= 0.0 else 1
        if xh != x_buf[i]:
            return False
    return True


@njit(cache=True)
def _freeze_block(L, j, start, size, x_buf, u_buf, freeze_stage, decided):
    for p in range(size):
        g = start + p
        L[j, g] = LLR_CAP if x_buf[p] == 0 else -LLR_CAP
        if freeze_stage[g] > j:
            freeze_stage[g] = j
        decided[g] = u_buf[p]


@njit(cache=True)
def _try_block(R, frozen, j, start, size, rate0_shortcut, x_buf, u_buf):
    """Fill ``x_buf``/``u_buf`` for the block.

    Returns 0 when the block cannot freeze, 1 for an accepted all-frozen block
    and 2 for an accepted block holding information bits.
    """
    all_frozen = True
    for p in range(size):
        if not frozen[start + p]:
            all_frozen = False
            break
    if all_frozen and rate0_shortcut:
        for p in range(size):
            x_buf[p] = 0
            u_buf[p] = 0
        return 1
    for p in range(size):
        x_buf[p] = 0 if R[j, start + p] >= 0.0 else 1
        u_buf[p] = x_buf[p]
    transform_inplace(u_buf[:size])
    for p in range(size):
        if frozen[start + p] and u_buf[p] != 0:
            return 0
    return 1 if all_frozen else 2


@njit(cache=True)
def decode_loop(
    L, R, frozen, alpha, max_iter, mode, trace, checks_per_stage, halt_after_freeze, rate0_shortcut
):
    """Iterate until the mode's stop rule fires.

    ``checks_per_stage`` bounds the CSFG checks per stage and iteration
    (0 means keep checking until one fails); with ``halt_after_freeze`` no
    further checks run in an iteration once a block holding information bits
    has been frozen.  ``trace`` receives freeze events
    as rows ``(iter, stage, block, start0)``.

    Returns ``(u_hat, iterations, activations, stop_code, n_trace)``.
    """
    n = R.shape[1]
    m = R.shape[0] - 1
    freeze_stage = np.full(n, m + 1, dtype=np.int64)
    decided = np.zeros(n, dtype=np.uint8)
    u_buf = np.zeros(n, dtype=np.uint8)
    x_buf = np.zeros(n, dtype=np.uint8)
    f = 0
    activations = 0
    n_trace = 0
    for t in range(1, max_iter + 1):
        halted = False
        for j in range(1, m + 1):
            activations += sweep_stage(L, R, j, m, alpha, freeze_stage)
            if mode != MODE_CSFG:
                continue
            size = 1 << (m - j)
            checks = 0
            while not halted and f < n and (checks_per_stage == 0 or checks < checks_per_stage):
                checks += 1
                start = (f // size) * size
                kind = _try_block(R, frozen, j, start, size, rate0_shortcut, x_buf, u_buf)
                if kind == 0:
                    break
                if kind == 2 and halt_after_freeze:
                    halted = True
                _freeze_block(L, j, start, size, x_buf, u_buf, freeze_stage, decided)
                f = start + size
                if n_trace < trace.shape[0]:
                    trace[n_trace, 0] = t
                    trace[n_trace, 1] = j
                    trace[n_trace, 2] = start // size + 1
                    trace[n_trace, 3] = start
                    n_trace += 1
            if f == n:
                return decided, t, activations, STOP_CSFG, n_trace
        if mode == MODE_GMATRIX and _gmatrix_converged(L, R, m, frozen, u_buf, x_buf):
            out = u_buf.copy()
            return out, t, activations, STOP_GMATRIX, n_trace
    out = np.zeros(n, dtype=np.uint8)
    _hard_source(R, m, frozen, out)
    for i in range(f):
        out[i] = decided[i]
    return out, max_iter, activations, STOP_MAX_ITER, n_trace
