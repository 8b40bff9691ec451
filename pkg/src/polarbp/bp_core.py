"""Min-sum belief propagation on the polar factor graph.

The graph has ``m + 1`` node columns.  Column 1 faces the channel and column
``m + 1`` the source word.  The processing element at stage ``j`` couples rows
``i`` and ``i + 2**(m - j)``; one left-to-right sweep per iteration updates
``R`` (stage ``j`` to ``j + 1``) and ``L`` (stage ``j + 1`` to ``j``) together,
reading ``L`` values left over from the previous iteration.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from ._kernels import LLR_CAP
from .polar_code import PolarCodeSpec, polar_transform

__all__ = [
    "LLR_CAP",
    "DecodeOutcome",
    "MessageState",
    "PeInputs",
    "PeOutputs",
    "StopReason",
    "decode_baseline",
    "decode_gmatrix",
    "gmatrix_stop_check",
    "hard_output",
    "init_state",
    "pe_update",
    "sweep",
]


class StopReason(str, enum.Enum):
    MAX_ITER = "max_iter"
    GMATRIX_CONVERGED = "gmatrix_converged"
    CSFG_COMPLETE = "csfg_complete"


_STOP_CODES = {
    _kernels.STOP_MAX_ITER: StopReason.MAX_ITER,
    _kernels.STOP_GMATRIX: StopReason.GMATRIX_CONVERGED,
    _kernels.STOP_CSFG: StopReason.CSFG_COMPLETE,
}


class PeInputs(NamedTuple):
    l_top: float
    l_bot: float
    r_top: float
    r_bot: float


class PeOutputs(NamedTuple):
    l_top: float
    l_bot: float
    r_top: float
    r_bot: float


@dataclass
class MessageState:
    """Right-to-left (``L``) and left-to-right (``R``) messages.

    Both arrays have shape ``(m + 1, n)``; ``L[j - 1, i - 1]`` is the message
    of node ``i`` at stage ``j``.
    """

    L: np.ndarray
    R: np.ndarray

    def copy(self) -> "MessageState":
        return MessageState(self.L.copy(), self.R.copy())


@dataclass(frozen=True)
class DecodeOutcome:
    u_hat: np.ndarray
    info_bits_hat: np.ndarray
    iterations_used: int
    pe_activations: int
    stop_reason: StopReason


def _sign(v):
    return np.where(v >= 0.0, 1.0, -1.0)


def _minsum(a, b, alpha):
    return alpha * (_sign(a) * _sign(b) * np.minimum(np.abs(a), np.abs(b)))


def _pe_arrays(lt, lb, rt, rb, alpha):
    t = lb + rb
    g = _minsum(lt, rt, alpha)
    out = (_minsum(lt, t, alpha), lb + g, _minsum(rt, t, alpha), rb + g)
    return tuple(np.clip(o, -LLR_CAP, LLR_CAP) for o in out)


def pe_update(inputs: PeInputs, alpha: float) -> PeOutputs:
    """Evaluate one processing element.

    ``alpha`` scales only the min-sum product; the additive pass-through
    terms of the lower outputs are not scaled.  ``sign(0)`` is +1.

    >>> pe_update(PeInputs(2.0, -3.0, 1.0, 0.5), 0.9375)
    PeOutputs(l_top=-1.875, l_bot=-2.0625, r_top=-0.9375, r_bot=1.4375)
    """
    vals = _pe_arrays(*(np.float64(v) for v in inputs), alpha)
    return PeOutputs(*(float(v) for v in vals))


def init_state(spec: PolarCodeSpec, channel_llrs) -> MessageState:
    llrs = np.asarray(channel_llrs, dtype=np.float64)
    if llrs.shape != (spec.n,):
        raise ValueError(f"expected {spec.n} channel LLRs, got shape {llrs.shape}")
    L = np.zeros((spec.m + 1, spec.n))
    R = np.zeros((spec.m + 1, spec.n))
    R[0] = np.clip(llrs, -LLR_CAP, LLR_CAP)
    L[spec.m] = np.where(spec.frozen_mask, LLR_CAP, 0.0)
    return MessageState(L, R)


def pe_top_rows(m: int, stage: int) -> np.ndarray:
    """0-based top row of every stage-``stage`` processing element."""
    d = 1 << (m - stage)
    n = 1 << m
    return (np.arange(n // 2) // d) * 2 * d + np.arange(n // 2) % d


def sweep(state: MessageState, spec: PolarCodeSpec, alpha: float, activity_mask=None) -> int:
    """One left-to-right pass over all stages.

    ``activity_mask`` is a boolean ``(m, n)`` array indexed by stage and 0-based
    top row (entries for bottom rows are ignored); ``None`` means every PE runs.
    Returns the number of PEs executed.
    """
    m = spec.m
    L, R = state.L, state.R
    count = 0
    for j in range(1, m + 1):
        d = 1 << (m - j)
        top = pe_top_rows(m, j)
        if activity_mask is not None:
            top = top[np.asarray(activity_mask[j - 1], dtype=bool)[top]]
        if top.size == 0:
            continue
        bot = top + d
        out = _pe_arrays(L[j, top], L[j, bot], R[j - 1, top], R[j - 1, bot], alpha)
        L[j - 1, top], L[j - 1, bot], R[j, top], R[j, bot] = out
        count += top.size
    return int(count)


def hard_output(state: MessageState, spec: PolarCodeSpec) -> np.ndarray:
    """Source-side decision: 0 at frozen positions, else the sign of ``R`` at stage m+1."""
    u = (state.R[spec.m] < 0.0).astype(np.uint8)
    u[spec.frozen_mask] = 0
    return u


def gmatrix_stop_check(state: MessageState, spec: PolarCodeSpec) -> bool:
    """True when the channel-side decision equals the re-encoded source decision."""
    u_hat = hard_output(state, spec)
    x_hat = ((state.R[0] + state.L[0]) < 0.0).astype(np.uint8)
    return bool(np.array_equal(polar_transform(u_hat), x_hat))


def _outcome(spec: PolarCodeSpec, u_hat, iters, acts, code) -> DecodeOutcome:
    u_hat = np.asarray(u_hat, dtype=np.uint8)
    return DecodeOutcome(
        u_hat=u_hat,
        info_bits_hat=u_hat[spec.info_positions].copy(),
        iterations_used=int(iters),
        pe_activations=int(acts),
        stop_reason=_STOP_CODES[int(code)],
    )


_NO_TRACE = np.zeros((0, 4), dtype=np.int64)


def run_decoder(
    spec: PolarCodeSpec,
    llrs,
    alpha: float,
    max_iter: int,
    mode: int,
    trace=None,
    checks_per_stage: int = 1,
    halt_after_freeze: bool = True,
    rate0_shortcut: bool = True,
) -> DecodeOutcome:
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    state = init_state(spec, llrs)
    buf = _NO_TRACE if trace is None else np.zeros((2 * spec.n, 4), dtype=np.int64)
    u, iters, acts, code, n_trace = _kernels.decode_loop(
        state.L,
        state.R,
        spec.frozen_mask,
        float(alpha),
        int(max_iter),
        mode,
        buf,
        int(checks_per_stage),
        bool(halt_after_freeze),
        bool(rate0_shortcut),
    )
    if trace is not None:
        trace.extend(tuple(int(v) for v in row) for row in buf[:n_trace])
    return _outcome(spec, u, iters, acts, code)


def decode_baseline(spec: PolarCodeSpec, llrs, alpha: float = 0.9375, max_iter: int = 40) -> DecodeOutcome:
    """Fixed-iteration BP: always ``max_iter`` full sweeps."""
    return run_decoder(spec, llrs, alpha, max_iter, _kernels.MODE_BASELINE)


def decode_gmatrix(spec: PolarCodeSpec, llrs, alpha: float = 0.9375, max_iter: int = 40) -> DecodeOutcome:
    """BP with G-matrix early stopping, checked after every full sweep."""
    return run_decoder(spec, llrs, alpha, max_iter, _kernels.MODE_GMATRIX)
