"""Monte Carlo comparison of the BP decoder variants over an Eb/N0 sweep."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from multiprocessing import get_context
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .bp_core import run_decoder
from .channel import ChannelConfig, modulate_bpsk, transmit_awgn, trial_rng
from .csfg import DEFAULT_POLICY, FreezePolicy
from .polar_code import PolarCodeSpec, encode

log = logging.getLogger(__name__)

DECODER_NAMES = ("baseline", "gmatrix", "csfg")
_MODES = {
    "baseline": _kernels.MODE_BASELINE,
    "gmatrix": _kernels.MODE_GMATRIX,
    "csfg": _kernels.MODE_CSFG,
}

CSV_FIELDS = (
    "decoder",
    "snr_db",
    "frames",
    "bit_errors",
    "frame_errors",
    "ber",
    "fer",
    "fer_ci95",
    "avg_iters",
    "iters_ci95",
    "avg_pe_activations",
    "norm_computations",
)

CHUNK = 32
Z95 = 1.959963984540054


@dataclass(frozen=True)
class SimConfig:
    spec: PolarCodeSpec
    snr_points: tuple[float, ...]
    decoders: tuple[str, ...] = DECODER_NAMES
    alpha: float = 0.9375
    max_iter: int = 40
    min_frame_errors: Optional[int] = 100
    max_frames: Optional[int] = 100_000
    seed: int = 0
    workers: int = 1
    noiseless: bool = False
    policy: FreezePolicy = DEFAULT_POLICY
    spec_source: str = ""

    def __post_init__(self) -> None:
        if not self.snr_points:
            raise ValueError("at least one SNR point is required")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.min_frame_errors is None and self.max_frames is None:
            raise ValueError("stop rule needs min_frame_errors and/or max_frames")
        for name in self.decoders:
            if name not in _MODES:
                raise ValueError(f"unknown decoder {name!r}; choose from {', '.join(DECODER_NAMES)}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def describe(self) -> dict:
        return {
            "n": self.spec.n,
            "k": self.spec.k,
            "frozen": self.spec.frozen_indices,
            "spec_source": self.spec_source,
            "snr_points": list(self.snr_points),
            "decoders": list(self.decoders),
            "alpha": self.alpha,
            "max_iter": self.max_iter,
            "min_frame_errors": self.min_frame_errors,
            "max_frames": self.max_frames,
            "seed": self.seed,
            "workers": self.workers,
            "noiseless": self.noiseless,
            "policy": asdict(self.policy),
        }


@dataclass
class PointStats:
    """Aggregates for one (decoder, SNR) pair plus the per-trial records."""

    decoder: str
    snr_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    max_iter: int
    full_sweep: int
    iterations: np.ndarray = field(repr=False)
    activations: np.ndarray = field(repr=False)
    frame_error_flags: np.ndarray = field(repr=False)
    info_bits: int = 1
    low_confidence: bool = False

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.info_bits)

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames

    @property
    def fer_ci95(self) -> float:
        p = self.fer
        return Z95 * math.sqrt(p * (1.0 - p) / self.frames)

    @property
    def avg_iters(self) -> float:
        return float(self.iterations.mean())

    @property
    def iters_ci95(self) -> float:
        if self.frames < 2:
            return 0.0
        return Z95 * float(self.iterations.std(ddof=1)) / math.sqrt(self.frames)

    @property
    def avg_pe_activations(self) -> float:
        return float(self.activations.mean())

    @property
    def norm_computations(self) -> float:
        return self.avg_pe_activations / (self.max_iter * self.full_sweep)

    def fer_interval(self) -> tuple[float, float]:
        return self.fer - self.fer_ci95, self.fer + self.fer_ci95

    def row(self) -> dict:
        return {
            "decoder": self.decoder,
            "snr_db": self.snr_db,
            "frames": self.frames,
            "bit_errors": self.bit_errors,
            "frame_errors": self.frame_errors,
            "ber": self.ber,
            "fer": self.fer,
            "fer_ci95": self.fer_ci95,
            "avg_iters": self.avg_iters,
            "iters_ci95": self.iters_ci95,
            "avg_pe_activations": self.avg_pe_activations,
            "norm_computations": self.norm_computations,
        }


def snr_stream(snr_db: float) -> int:
    """Stable non-negative RNG stream id for an SNR value (micro-dB resolution)."""
    return int(round(snr_db * 1e6)) & 0xFFFFFFFF


def _run_trials(job):
    """Decode trials ``[first, first + count)``; one record row per trial."""
    config, decoder, snr, first, count, want_trace = job
    spec = config.spec
    chan = ChannelConfig(snr, spec.rate, config.seed, config.noiseless)
    stream = snr_stream(snr)
    out = np.zeros((count, 3), dtype=np.int64)
    traces = []
    for off in range(count):
        trial = first + off
        rng = trial_rng(config.seed, trial, stream)
        info = rng.integers(0, 2, spec.k, dtype=np.uint8)
        _, x = encode(spec, info)
        llrs = transmit_awgn(modulate_bpsk(x), chan, rng)
        trace = [] if want_trace else None
        res = run_decoder(
            spec,
            llrs,
            config.alpha,
            config.max_iter,
            _MODES[decoder],
            trace,
            checks_per_stage=config.policy.checks_per_stage,
            halt_after_freeze=config.policy.halt_after_freeze,
            rate0_shortcut=config.policy.rate0_shortcut,
        )
        errs = int(np.count_nonzero(res.info_bits_hat != info))
        out[off] = (errs, res.iterations_used, res.pe_activations)
        if want_trace:
            traces.append((trial, trace))
    return out, traces


def _limit_reached(config: SimConfig, frames: int, frame_errors: int) -> bool:
    if config.max_frames is not None and frames >= config.max_frames:
        return True
    return config.min_frame_errors is not None and frame_errors >= config.min_frame_errors


def _jobs(config, decoder, snr, want_trace):
    first = 0
    while True:
        count = CHUNK
        if config.max_frames is not None:
            count = min(count, config.max_frames - first)
            if count <= 0:
                return
        yield (config, decoder, snr, first, count, want_trace)
        first += count


def _ordered_results(pool, jobs, depth: int):
    """Results of ``jobs`` in submission order with a bounded look-ahead."""
    window = []
    try:
        for job in jobs:
            window.append(pool.apply_async(_run_trials, (job,)))
            if len(window) >= depth:
                yield window.pop(0).get()
        while window:
            yield window.pop(0).get()
    finally:
        for pending in window:
            pending.wait()


def run_point(config: SimConfig, decoder: str, snr: float, pool=None, trace_sink=None) -> PointStats:
    """Simulate one (decoder, SNR) point until the stop rule fires.

    Trial ``t`` uses the same info bits and noise for every decoder.  Records
    are consumed strictly in trial order and the stop rule is evaluated after
    each trial, so the result does not depend on the worker count.
    """
    spec = config.spec
    want_trace = trace_sink is not None and decoder == "csfg"
    jobs = _jobs(config, decoder, snr, want_trace)
    chunks = _ordered_results(pool, jobs, 2 * config.workers) if pool is not None else map(_run_trials, jobs)
    records = []
    frames = frame_errors = 0
    done = False
    for out, traces in chunks:
        for idx, rec in enumerate(out):
            records.append(rec)
            frames += 1
            frame_errors += int(rec[0] > 0)
            if want_trace:
                trace_sink(decoder, snr, *traces[idx])
            if _limit_reached(config, frames, frame_errors):
                done = True
                break
        if done:
            break
    if pool is not None:
        chunks.close()
    rec = np.array(records, dtype=np.int64).reshape(-1, 3)
    low = config.min_frame_errors is not None and frame_errors < config.min_frame_errors
    if low:
        log.info("%s @ %.3g dB: only %d frame errors in %d frames", decoder, snr, frame_errors, frames)
    return PointStats(
        decoder=decoder,
        snr_db=float(snr),
        frames=frames,
        bit_errors=int(rec[:, 0].sum()),
        frame_errors=frame_errors,
        max_iter=config.max_iter,
        full_sweep=spec.m * spec.n // 2,
        iterations=rec[:, 1].copy(),
        activations=rec[:, 2].copy(),
        frame_error_flags=rec[:, 0] > 0,
        info_bits=spec.k,
        low_confidence=low,
    )


class _LazyPool:
    def __init__(self, workers: int):
        self.workers = workers
        self.pool = None

    def __enter__(self):
        if self.workers > 1:
            self.pool = get_context("fork").Pool(self.workers)
        return self.pool

    def __exit__(self, *exc):
        if self.pool is not None:
            self.pool.terminate()
            self.pool.join()


def run_sweep(config: SimConfig, trace_sink=None) -> list[PointStats]:
    """Every requested decoder at every SNR point, in (decoder, SNR) order."""
    results = []
    with _LazyPool(config.workers) as pool:
        for decoder in config.decoders:
            for snr in config.snr_points:
                t0 = time.perf_counter()
                stats = run_point(config, decoder, snr, pool, trace_sink)
                log.info(
                    "%s @ %.3g dB: %d frames, FER %.3g, %.1fs",
                    decoder, snr, stats.frames, stats.fer, time.perf_counter() - t0,
                )
                results.append(stats)
    return results


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def to_csv(stats: Sequence[PointStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for s in stats:
        row = s.row()
        w.writerow([_fmt(row[k]) for k in CSV_FIELDS])
    return buf.getvalue()


def to_json(stats: Sequence[PointStats], config: SimConfig) -> str:
    rows = []
    for s in stats:
        row = s.row()
        row["low_confidence"] = s.low_confidence
        rows.append(row)
    return json.dumps({"config": config.describe(), "results": rows}, indent=2) + "\n"


def read_csv(text: str) -> list[dict]:
    """Parse a results CSV back into typed rows."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise ValueError("unexpected results CSV header")
    rows = []
    for r in reader:
        typed = {"decoder": r["decoder"]}
        for k in CSV_FIELDS[1:]:
            typed[k] = int(r[k]) if k in ("frames", "bit_errors", "frame_errors") else float(r[k])
        rows.append(typed)
    return rows


def savings_report(rows, target: str = "csfg", versus: Sequence[str] = ("baseline", "gmatrix")) -> list[dict]:
    """Relative reductions ``1 - metric(target) / metric(other)`` per SNR.

    ``rows`` are result rows (dicts with the CSV fields) or :class:`PointStats`.
    """
    table = {}
    for r in rows:
        r = r.row() if isinstance(r, PointStats) else r
        table[(r["decoder"], float(r["snr_db"]))] = r
    snrs = sorted({snr for (dec, snr) in table if dec == target})
    if not snrs:
        raise ValueError(f"no rows for decoder {target!r}")
    report = []
    for snr in snrs:
        mine = table[(target, snr)]
        for other in versus:
            if (other, snr) not in table:
                raise ValueError(f"missing {other!r} row at {snr} dB")
            ref = table[(other, snr)]
            report.append(
                {
                    "snr_db": snr,
                    "versus": other,
                    "iteration_saving": 1.0 - mine["avg_iters"] / ref["avg_iters"],
                    "computation_saving": 1.0 - mine["norm_computations"] / ref["norm_computations"],
                }
            )
    return report


def report_csv(report: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ("snr_db", "versus", "iteration_saving", "computation_saving")
    w.writerow(cols)
    for r in report:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()
