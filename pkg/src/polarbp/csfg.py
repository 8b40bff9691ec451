"""Connected sub-factor-graph (CSFG) freezing for BP decoding.

A stage-``j`` CSFG is the aligned block of ``2**(m - j)`` rows spanning stages
``j + 1 .. m + 1``; it is itself the factor graph of a shorter polar code whose
inputs are the ``R`` messages at stage ``j + 1``.  Blocks are frozen strictly in
source-bit order, so the decided positions always form a prefix ``1..f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .bp_core import (
    LLR_CAP,
    DecodeOutcome,
    MessageState,
    StopReason,
    hard_output,
    init_state,
    run_decoder,
    sweep,
)
from .polar_code import PolarCodeSpec, kronecker_generator, polar_transform

MLD_BUDGET = 1 << 20


@dataclass(frozen=True)
class BlockRef:
    """Stage-``stage`` CSFG number ``index`` (both 1-based) of an ``m``-stage graph."""

    m: int
    stage: int
    index: int

    def __post_init__(self) -> None:
        if not 1 <= self.stage <= self.m:
            raise ValueError(f"stage must be in 1..{self.m}, got {self.stage}")
        if not 1 <= self.index <= (1 << self.stage):
            raise ValueError(f"block index must be in 1..{1 << self.stage}, got {self.index}")

    @property
    def size(self) -> int:
        return 1 << (self.m - self.stage)

    @property
    def start(self) -> int:
        """First covered source index, 1-based."""
        return (self.index - 1) * self.size + 1

    @property
    def end(self) -> int:
        return self.index * self.size

    @property
    def rows(self) -> slice:
        """0-based row slice covered by the block."""
        return slice(self.start - 1, self.end)


@dataclass
class FreezeState:
    n: int
    m: int
    frontier: int = 0
    freeze_stage: np.ndarray = field(default=None)  # type: ignore[assignment]
    decided_u: np.ndarray = field(default=None)  # type: ignore[assignment]
    decided_x: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.freeze_stage is None:
            self.freeze_stage = np.full(self.n, self.not_frozen, dtype=np.int64)
        if self.decided_u is None:
            self.decided_u = np.zeros(self.n, dtype=np.uint8)

    @classmethod
    def for_spec(cls, spec: PolarCodeSpec) -> "FreezeState":
        return cls(n=spec.n, m=spec.m)

    @property
    def not_frozen(self) -> int:
        """Sentinel stored in ``freeze_stage`` for indices outside any frozen block."""
        return self.m + 1


def candidate_block(freeze: FreezeState, stage: int) -> BlockRef:
    """The stage-``stage`` block holding the first undecided source index."""
    if freeze.frontier >= freeze.n:
        raise ValueError("all source positions are already decided")
    size = 1 << (freeze.m - stage)
    return BlockRef(freeze.m, stage, freeze.frontier // size + 1)


def check_csfg(
    state: MessageState, spec: PolarCodeSpec, block: BlockRef
) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Hard-decide the block inputs and invert the constituent encoder.

    Returns ``(x_hat, u_hat)`` when ``u_hat`` is zero on every frozen position
    of the block, ``None`` otherwise.
    """
    r_in = state.R[block.stage, block.rows]
    x_hat = (r_in < 0.0).astype(np.uint8)
    u_hat = polar_transform(x_hat)
    if np.any(u_hat[spec.frozen_mask[block.rows]]):
        return None
    return x_hat, u_hat


def mld_oracle(r_block, local_frozen) -> np.ndarray:
    """Brute-force maximum-likelihood source word of a short polar code.

    Every source word that is 0 on ``local_frozen`` is encoded with the
    explicit generator matrix and scored by ``sum((1 - 2 x) * R)``; the
    lexicographically smallest maximiser wins.  Test oracle only.
    """
    r = np.asarray(r_block, dtype=np.float64)
    frozen = np.asarray(local_frozen, dtype=bool)
    if frozen.shape != r.shape:
        raise ValueError("frozen mask and LLR block differ in length")
    free = np.flatnonzero(~frozen)
    count = 1 << free.size
    if count > MLD_BUDGET:
        raise ValueError(f"{count} candidates exceed the enumeration budget")
    # candidate c sets free position free[q] to bit (free.size - 1 - q) of c,
    # so increasing c is increasing lexicographic order
    shifts = np.arange(free.size - 1, -1, -1)
    words = np.zeros((count, r.size), dtype=np.int64)
    words[:, free] = (np.arange(count)[:, None] >> shifts) & 1
    codewords = (words @ kronecker_generator(r.size).astype(np.int64)) & 1
    # sum((1-2x) R) = sum|R| - 2 * penalty; the penalty form keeps near-ties
    # that would round together in the direct sum apart
    hard = (r < 0.0).astype(np.int64)
    penalty = (codewords ^ hard) @ np.abs(r)
    return words[int(np.argmin(penalty))].astype(np.uint8)


def likelihood(r_block, u) -> float:
    return float(np.dot(1.0 - 2.0 * polar_transform(u), np.asarray(r_block, dtype=np.float64)))


def apply_freeze(state: MessageState, freeze: FreezeState, block: BlockRef, x_hat, u_hat) -> None:
    """Commit a block decision: saturate its feedback, mask its PEs, advance ``f``."""
    rows = block.rows
    x_hat = np.asarray(x_hat, dtype=np.uint8)
    state.L[block.stage, rows] = np.where(x_hat == 0, LLR_CAP, -LLR_CAP)
    fs = freeze.freeze_stage[rows]
    freeze.freeze_stage[rows] = np.minimum(fs, block.stage)
    freeze.decided_u[rows] = u_hat
    freeze.decided_x[(block.stage, block.index)] = x_hat.copy()
    freeze.frontier = block.end


def is_pe_active(freeze: FreezeState, stage: int, top: int) -> bool:
    """Whether the stage-``stage`` PE with 1-based top row ``top`` still runs.

    A PE stops once both of its rows sit inside a block frozen at a stage
    strictly before ``stage``.
    """
    d = 1 << (freeze.m - stage)
    fs = freeze.freeze_stage
    return not (fs[top - 1] < stage and fs[top - 1 + d] < stage)


def activity_mask(freeze: FreezeState) -> np.ndarray:
    """``(m, n)`` mask usable by :func:`polarbp.bp_core.sweep`."""
    stages = np.arange(1, freeze.m + 1)[:, None]
    return freeze.freeze_stage[None, :] >= stages


@dataclass(frozen=True)
class FreezePolicy:
    """Scheduling knobs of the freeze-aware decoder.

    checks_per_stage
        Candidate checks per stage and iteration; 0 keeps checking the next
        candidate after every success.
    halt_after_freeze
        Stop checking for the rest of the iteration once a block holding
        information bits froze, so the next candidate is judged only after
        the saturated feedback has passed through a full sweep.  Judging it on
        the stale inputs of the same sweep lets unconverged decisions through
        and raises the frame error rate.
    rate0_shortcut
        Commit blocks without information positions as all-zero immediately;
        their only valid source word is zero, so no check is needed.
    """

    checks_per_stage: int = 1
    halt_after_freeze: bool = True
    rate0_shortcut: bool = True

    def __post_init__(self) -> None:
        if self.checks_per_stage < 0:
            raise ValueError("checks_per_stage must be non-negative")


DEFAULT_POLICY = FreezePolicy()


def decode_csfg(
    spec: PolarCodeSpec,
    llrs,
    alpha: float = 0.9375,
    max_iter: int = 40,
    trace: Optional[list] = None,
    policy: FreezePolicy = DEFAULT_POLICY,
) -> DecodeOutcome:
    """BP with CSFG freezing.

    When ``trace`` is a list, one ``(iteration, stage, block, start0)`` tuple
    per freeze event is appended to it (``start0`` is the 0-based first row).
    """
    return run_decoder(
        spec,
        llrs,
        alpha,
        max_iter,
        _kernels.MODE_CSFG,
        trace,
        checks_per_stage=policy.checks_per_stage,
        halt_after_freeze=policy.halt_after_freeze,
        rate0_shortcut=policy.rate0_shortcut,
    )


def _try_candidate(state, spec, block, policy):
    if policy.rate0_shortcut and spec.frozen_mask[block.rows].all():
        zeros = np.zeros(block.size, dtype=np.uint8)
        return zeros, zeros.copy()
    return check_csfg(state, spec, block)


def decode_csfg_reference(
    spec: PolarCodeSpec,
    llrs,
    alpha: float = 0.9375,
    max_iter: int = 40,
    policy: FreezePolicy = DEFAULT_POLICY,
) -> tuple[DecodeOutcome, FreezeState]:
    """Same procedure as :func:`decode_csfg`, assembled from the Python primitives."""
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    state = init_state(spec, llrs)
    freeze = FreezeState.for_spec(spec)
    m, n = spec.m, spec.n
    acts = 0
    for t in range(1, max_iter + 1):
        halted = False
        for j in range(1, m + 1):
            mask = np.zeros((m, n), dtype=bool)
            mask[j - 1] = activity_mask(freeze)[j - 1]
            acts += sweep(state, spec, alpha, mask)
            checks = 0
            while not halted and freeze.frontier < n and (
                policy.checks_per_stage == 0 or checks < policy.checks_per_stage
            ):
                checks += 1
                block = candidate_block(freeze, j)
                found = _try_candidate(state, spec, block, policy)
                if found is None:
                    break
                apply_freeze(state, freeze, block, *found)
                if policy.halt_after_freeze and not spec.frozen_mask[block.rows].all():
                    halted = True
            if freeze.frontier == n:
                u = freeze.decided_u.copy()
                return _pack(spec, u, t, acts, StopReason.CSFG_COMPLETE), freeze
    u = hard_output(state, spec)
    u[: freeze.frontier] = freeze.decided_u[: freeze.frontier]
    return _pack(spec, u, max_iter, acts, StopReason.MAX_ITER), freeze


def _pack(spec, u, iters, acts, reason) -> DecodeOutcome:
    return DecodeOutcome(u, u[spec.info_positions].copy(), int(iters), int(acts), reason)


def format_trace_event(event, m: int) -> str:
    """Render a freeze event as ``iter=<t> stage=<j> block=<k> range=<a>-<b>``."""
    t, j, k, start0 = event
    size = 1 << (m - j)
    return f"iter={t} stage={j} block={k} range={start0 + 1}-{start0 + size}"
