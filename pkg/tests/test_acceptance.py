"""Acceptance gate: one PASS/FAIL line per criterion in the terminal summary.

Runs in a few minutes on one core.  ``pytest tests/test_acceptance.py -v``
runs the gate alone.
"""

import itertools

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, gf2_encode
from polarbp import csfg
from polarbp.bp_core import PeInputs, StopReason, pe_update
from polarbp.channel import ChannelConfig, modulate_bpsk, transmit_awgn
from polarbp.csfg import (
    DEFAULT_POLICY,
    BlockRef,
    FreezePolicy,
    check_csfg,
    decode_csfg,
    decode_csfg_reference,
    likelihood,
    mld_oracle,
)
from polarbp.bp_core import MessageState
from polarbp.polar_code import PolarCodeSpec, construct_frozen_set, encode, polar_transform
from polarbp.sim import SimConfig, run_point, run_sweep, to_csv

pytestmark = pytest.mark.slow

SEED = 20240611
CASES = 10_000
ALPHA = 0.9375
MAX_ITER = 40


def report(number, title, passed, detail):
    verdict = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"criterion {number} {verdict}: {title}; {detail}")
    assert passed, detail


def test_c1_accepted_blocks_are_mld():
    rng = np.random.default_rng(SEED + 1)
    accepted = mismatches = bad_likelihood = 0
    for _ in range(CASES):
        size = int(rng.choice([2, 4, 8, 16]))
        frozen_count = int(rng.integers(0, size + 1))
        local = np.zeros(size, bool)
        local[rng.choice(size, frozen_count, replace=False)] = True
        llr = rng.uniform(-5.0, 5.0, size)
        # the block is stage-1 block 1 of a code of twice its length
        spec = PolarCodeSpec.from_frozen_indices(2 * size, (np.flatnonzero(local) + 1).tolist())
        state = MessageState(np.zeros((spec.m + 1, spec.n)), np.zeros((spec.m + 1, spec.n)))
        state.R[1, :size] = llr
        got = check_csfg(state, spec, BlockRef(spec.m, 1, 1))
        if got is None:
            continue
        accepted += 1
        u_hat = got[1]
        mismatches += mld_oracle(llr, local).tolist() != u_hat.tolist()
        total = np.abs(llr).sum()
        bad_likelihood += abs(likelihood(llr, u_hat) - total) > 1e-9 * total
    passed = accepted > 0 and mismatches == 0 and bad_likelihood == 0
    report(
        1, "check acceptances equal brute-force MLD", passed,
        f"{CASES} blocks, {accepted} accepted, {mismatches} MLD mismatches, {bad_likelihood} likelihood misses",
    )


def test_c2_encoder_matches_kronecker():
    rng = np.random.default_rng(SEED + 2)
    checked = wrong = 0
    for n in (2, 4, 8):
        spec = PolarCodeSpec.from_frozen_indices(n, [])
        for bits in itertools.product((0, 1), repeat=n):
            u, x = encode(spec, np.array(bits, np.uint8))
            checked += 1
            wrong += x.tolist() != gf2_encode(u).tolist()
    for n in (16, 32, 1024):
        spec = PolarCodeSpec.from_frozen_indices(n, [])
        for _ in range(1000):
            u, x = encode(spec, rng.integers(0, 2, n, dtype=np.uint8))
            checked += 1
            wrong += x.tolist() != gf2_encode(u).tolist()
    report(2, "butterfly encoder equals explicit Kronecker product", wrong == 0, f"{checked} words, {wrong} mismatches")


def test_c3_no_fer_degradation(spec1024):
    cfg = SimConfig(spec1024, (2.0, 2.5, 3.0), ("baseline", "csfg"), ALPHA, MAX_ITER, 100, 100_000, SEED)
    parts, passed = [], True
    for snr in cfg.snr_points:
        b = run_point(cfg, "baseline", snr)
        c = run_point(cfg, "csfg", snr)
        (blo, bhi), (clo, chi) = b.fer_interval(), c.fer_interval()
        overlap = blo <= chi and clo <= bhi
        passed &= overlap
        parts.append(
            f"{snr:g} dB baseline {b.frame_errors}/{b.frames} csfg {c.frame_errors}/{c.frames} "
            f"{'overlap' if overlap else 'disjoint'}"
        )
    report(3, "csfg FER interval overlaps baseline at 2.0/2.5/3.0 dB", passed, ", ".join(parts))


BATCH = 5000
SUB_BATCHES = 5


@pytest.fixture(scope="module")
def paired_3db(spec1024):
    cfg = SimConfig(spec1024, (3.0,), alpha=ALPHA, max_iter=MAX_ITER, min_frame_errors=None,
                    max_frames=BATCH, seed=SEED + 3)
    return {d: run_point(cfg, d, 3.0) for d in ("baseline", "gmatrix", "csfg")}


def within(measured, target):
    return abs(measured - target) <= 0.10


def test_c4_iteration_savings(paired_3db):
    it = {d: s.avg_iters for d, s in paired_3db.items()}
    vs_base = 1 - it["csfg"] / it["baseline"]
    vs_gm = 1 - it["csfg"] / it["gmatrix"]
    ordered = it["csfg"] < it["gmatrix"] < MAX_ITER
    passed = within(vs_base, 0.46) and within(vs_gm, 0.17) and ordered
    report(
        4, "iteration savings 46%/17% +-10 pp with csfg < gmatrix < max_iter", passed,
        f"{BATCH} paired frames at 3 dB, mean iterations baseline {it['baseline']:.2f} "
        f"gmatrix {it['gmatrix']:.2f} csfg {it['csfg']:.2f}, savings {vs_base:.1%} vs baseline "
        f"{vs_gm:.1%} vs gmatrix, ordering {'holds' if ordered else 'violated'}",
    )


def test_c5_computation_savings(paired_3db):
    comp = {d: s.norm_computations for d, s in paired_3db.items()}
    vs_base = 1 - comp["csfg"] / comp["baseline"]
    vs_gm = 1 - comp["csfg"] / comp["gmatrix"]
    acts = {d: s.activations.reshape(SUB_BATCHES, -1).mean(axis=1) for d, s in paired_3db.items()}
    ordered = bool(np.all((acts["csfg"] < acts["gmatrix"]) & (acts["gmatrix"] < acts["baseline"])))
    passed = within(vs_base, 0.65) and within(vs_gm, 0.46) and ordered
    report(
        5, "computation savings 65%/46% +-10 pp with per-batch ordering", passed,
        f"normalized computations baseline {comp['baseline']:.3f} gmatrix {comp['gmatrix']:.3f} "
        f"csfg {comp['csfg']:.3f}, savings {vs_base:.1%} vs baseline {vs_gm:.1%} vs gmatrix, "
        f"ordering {'holds' if ordered else 'violated'} over {SUB_BATCHES} batches",
    )


class FreezeSpy:
    """Checks frontier, frozen-bit and deactivation invariants while a decode runs."""

    def __init__(self, spec):
        self.spec = spec
        self.prefix_bad = self.safety_bad = self.monotone_bad = 0
        self.freezes = self.masks = 0
        self.previous_mask = None

    def apply_freeze(self, state, freeze, block, x_hat, u_hat):
        self.freezes += 1
        before = freeze.frontier
        csfg_apply(state, freeze, block, x_hat, u_hat)
        f = freeze.frontier
        size = block.size
        aligned = (block.start - 1) % size == 0 and block.start - 1 <= before < block.end
        decided = freeze.freeze_stage <= self.spec.m
        self.prefix_bad += not (aligned and f == block.end and f > before and decided[:f].all() and not decided[f:].any())
        self.safety_bad += bool(np.any(freeze.decided_u[:f][self.spec.frozen_mask[:f]]))

    def activity_mask(self, freeze):
        self.masks += 1
        mask = csfg_mask(freeze)
        if self.previous_mask is not None:
            self.monotone_bad += bool(np.any(mask & ~self.previous_mask))
        self.previous_mask = mask
        return mask


csfg_apply = csfg.apply_freeze
csfg_mask = csfg.activity_mask


def kernel_trace_ok(spec, trace, res):
    f = 0
    for _, j, _, s0 in trace:
        size = 1 << (spec.m - j)
        if s0 % size or not s0 <= f < s0 + size:
            return False
        f = s0 + size
    done = res.stop_reason is StopReason.CSFG_COMPLETE
    return (f == spec.n) == done and not res.u_hat[spec.frozen_mask].any()


def test_c6_structural_invariants(monkeypatch):
    rng = np.random.default_rng(SEED + 6)
    policies = [DEFAULT_POLICY, FreezePolicy(0, False, False)]
    specs = [construct_frozen_set(8, 4), construct_frozen_set(16, 8), construct_frozen_set(16, 11)]
    totals = dict(prefix=0, safety=0, monotone=0)
    freezes = masks = 0
    for case in range(CASES):
        spec = specs[case % len(specs)]
        spy = FreezeSpy(spec)
        monkeypatch.setattr(csfg, "apply_freeze", spy.apply_freeze)
        monkeypatch.setattr(csfg, "activity_mask", spy.activity_mask)
        _, x = encode(spec, rng.integers(0, 2, spec.k))
        llr = transmit_awgn(modulate_bpsk(x), ChannelConfig(rng.uniform(0.0, 5.0), spec.rate), rng)
        res, _ = decode_csfg_reference(spec, llr, ALPHA, 20, policies[case % 2])
        spy.safety_bad += bool(res.u_hat[spec.frozen_mask].any())
        totals["prefix"] += spy.prefix_bad
        totals["safety"] += spy.safety_bad
        totals["monotone"] += spy.monotone_bad
        freezes += spy.freezes
        masks += spy.masks
    monkeypatch.undo()

    # the compiled decoder, checked through its freeze trace
    big = construct_frozen_set(128, 64)
    kernel_bad = 0
    for case in range(CASES):
        _, x = encode(big, rng.integers(0, 2, big.k))
        llr = transmit_awgn(modulate_bpsk(x), ChannelConfig(rng.uniform(0.0, 5.0), big.rate), rng)
        trace = []
        res = decode_csfg(big, llr, ALPHA, MAX_ITER, trace, policies[case % 2])
        kernel_bad += not kernel_trace_ok(big, trace, res)

    involution_bad = 0
    for _ in range(CASES):
        n = 1 << int(rng.integers(0, 11))
        v = rng.integers(0, 2, n, dtype=np.uint8)
        involution_bad += polar_transform(polar_transform(v)).tolist() != v.tolist()

    odd_bad = 0
    for _ in range(CASES):
        a = rng.uniform(-10, 10, 4)
        pos = pe_update(PeInputs(*a), ALPHA)
        neg = pe_update(PeInputs(*(-a)), ALPHA)
        odd_bad += any(p != -q for p, q in zip(pos, neg))

    passed = freezes > 0 and masks > 0 and not any(totals.values()) and kernel_bad == involution_bad == odd_bad == 0
    report(
        6, "structural invariants over 10000 cases each", passed,
        f"prefix {totals['prefix']} / safety {totals['safety']} / deactivation {totals['monotone']} "
        f"violations in {CASES} instrumented decodes ({freezes} freezes, {masks} masks), {kernel_bad} compiled-trace violations in {CASES}, "
        f"involution {involution_bad}/{CASES}, PE odd-symmetry {odd_bad}/{CASES}",
    )


def test_c7_determinism_across_workers(spec1024):
    base = dict(spec=spec1024, snr_points=(1.0, 1.5, 2.0, 2.5, 3.0, 3.5), alpha=ALPHA, max_iter=MAX_ITER,
                min_frame_errors=10, max_frames=96, seed=SEED + 7)
    one = to_csv(run_sweep(SimConfig(**base, workers=1)))
    eight = to_csv(run_sweep(SimConfig(**base, workers=8)))
    rows = len(one.splitlines()) - 1
    report(7, "sweep CSV identical for 1 and 8 workers", one == eight and rows == 18,
           f"{rows} rows, {'byte-identical' if one == eight else 'different'}")
