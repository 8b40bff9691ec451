"""Command-line front end: ``polarbp {construct,encode,decode,simulate,report}``."""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .csfg import FreezePolicy, decode_csfg, format_trace_event
from .bp_core import decode_baseline, decode_gmatrix
from .polar_code import (
    PolarCodeError,
    PolarCodeSpec,
    construct_frozen_set,
    encode,
    load_frozen_set,
    save_frozen_set,
)
from . import sim

log = logging.getLogger("polarbp")


class CliError(Exception):
    pass


def parse_snr_list(text: str) -> tuple[float, ...]:
    """``start:stop:step`` ranges and/or comma-separated values.

    Range endpoints are inclusive within half a step.
    """
    points: list[float] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if ":" in item:
                parts = [float(p) for p in item.split(":")]
                if len(parts) != 3:
                    raise ValueError
                start, stop, step = parts
                if step <= 0 or stop < start:
                    raise CliError(f"invalid SNR range {item!r}")
                count = int(math.floor((stop - start) / step + 0.5)) + 1
                points.extend(round(start + i * step, 10) for i in range(count))
            else:
                points.append(float(item))
        except ValueError:
            raise CliError(f"invalid SNR specification {item!r}") from None
    if not points:
        raise CliError("empty SNR list")
    if any(not math.isfinite(p) for p in points):
        raise CliError("SNR values must be finite")
    return tuple(points)


def _default_seed() -> int:
    raw = os.environ.get("POLARBP_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"POLARBP_SEED must be an integer, got {raw!r}") from None


def _spec_from_args(args) -> tuple[PolarCodeSpec, str]:
    if args.frozen_file:
        if args.n is not None or args.k is not None:
            raise CliError("--frozen-file conflicts with --n/--k")
        text = Path(args.frozen_file).read_text()
        return load_frozen_set(text), f"file:{args.frozen_file}"
    n = 1024 if args.n is None else args.n
    k = n // 2 if args.k is None else args.k
    return construct_frozen_set(n, k, args.design_z), f"bhattacharyya:z={args.design_z}"


def _bits_from_text(text: str) -> np.ndarray:
    s = "".join(text.split()).replace(",", "")
    if not s or set(s) - {"0", "1"}:
        raise CliError(f"bit string must consist of 0/1 characters, got {text!r}")
    return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


def _bits_str(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def _write(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _policy(args) -> FreezePolicy:
    return FreezePolicy(
        checks_per_stage=args.checks_per_stage,
        halt_after_freeze=not args.no_halt_after_freeze,
        rate0_shortcut=not args.no_rate0_shortcut,
    )


def cmd_construct(args) -> None:
    if args.n is None or args.k is None:
        raise CliError("construct needs --n and --k")
    spec = construct_frozen_set(args.n, args.k, args.design_z)
    text = save_frozen_set(spec)
    if args.out:
        Path(args.out).write_text(text)
        print(",".join(str(i) for i in spec.frozen_indices))
    else:
        sys.stdout.write(text)


def cmd_encode(args) -> None:
    spec, _ = _spec_from_args(args)
    if args.info is not None:
        info = _bits_from_text(args.info)
    else:
        info = np.random.default_rng(args.seed).integers(0, 2, spec.k, dtype=np.uint8)
    u, x = encode(spec, info)
    _write(args, f"info={_bits_str(info)}\nu={_bits_str(u)}\nx={_bits_str(x)}\n")


def _read_llrs(path: str) -> np.ndarray:
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise CliError(f"{path}:{lineno}: not a number: {line!r}") from None
    arr = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise CliError(f"{path}: LLRs must be finite")
    return arr


def cmd_decode(args) -> None:
    spec, _ = _spec_from_args(args)
    llrs = _read_llrs(args.llr_file)
    if llrs.size != spec.n:
        raise CliError(f"LLR file holds {llrs.size} values, code length is {spec.n}")
    trace = [] if args.trace else None
    if args.decoder == "csfg":
        res = decode_csfg(spec, llrs, args.alpha, args.max_iter, trace, _policy(args))
    elif args.decoder == "gmatrix":
        res = decode_gmatrix(spec, llrs, args.alpha, args.max_iter)
    else:
        res = decode_baseline(spec, llrs, args.alpha, args.max_iter)
    for event in trace or ():
        print(format_trace_event(event, spec.m), file=sys.stderr)
    _write(
        args,
        f"u_hat={_bits_str(res.u_hat)}\n"
        f"info_bits={_bits_str(res.info_bits_hat)}\n"
        f"iterations_used={res.iterations_used} pe_activations={res.pe_activations} "
        f"stop_reason={res.stop_reason.value}\n",
    )


def cmd_simulate(args) -> None:
    spec, source = _spec_from_args(args)
    decoders = tuple(d.strip() for d in args.decoders.split(",") if d.strip())
    if not decoders:
        raise CliError("empty decoder list")
    if len(set(decoders)) != len(decoders):
        raise CliError("duplicate decoder names")
    config = sim.SimConfig(
        spec=spec,
        snr_points=parse_snr_list(args.snr),
        decoders=decoders,
        alpha=args.alpha,
        max_iter=args.max_iter,
        min_frame_errors=args.min_frame_errors or None,
        max_frames=args.max_frames or None,
        seed=args.seed,
        workers=args.workers,
        noiseless=args.noiseless,
        policy=_policy(args),
        spec_source=source,
    )

    sink = None
    if args.trace:
        def sink(decoder, snr, trial, events):
            for event in events:
                print(f"snr_db={snr:g} trial={trial} {format_trace_event(event, spec.m)}", file=sys.stderr)

    stats = sim.run_sweep(config, trace_sink=sink)
    _write(args, sim.to_csv(stats))
    if args.json:
        Path(args.json).write_text(sim.to_json(stats, config))


def cmd_report(args) -> None:
    rows = sim.read_csv(Path(args.results).read_text())
    versus = tuple(v.strip() for v in args.versus.split(","))
    _write(args, sim.report_csv(sim.savings_report(rows, args.target, versus)))


def _add_code_flags(p) -> None:
    p.add_argument("--n", type=int, help="code length (default 1024 unless --frozen-file)")
    p.add_argument("--k", type=int, help="information bits (default n/2)")
    p.add_argument("--design-z", type=float, default=0.5, help="Bhattacharyya design value in (0,1) (default 0.5)")
    p.add_argument("--frozen-file", help="load the frozen set from a file written by 'construct'")


def _add_decoder_flags(p) -> None:
    p.add_argument("--alpha", type=float, default=0.9375, help="min-sum scaling factor (default 0.9375)")
    p.add_argument("--max-iter", type=int, default=40, help="maximum BP iterations (default 40)")
    p.add_argument("--checks-per-stage", type=int, default=1,
                   help="CSFG checks per stage and iteration, 0 = unlimited (default 1)")
    p.add_argument("--no-halt-after-freeze", action="store_true",
                   help="keep checking deeper stages after a freeze within the same iteration")
    p.add_argument("--no-rate0-shortcut", action="store_true",
                   help="test all-frozen blocks by hard decision instead of committing them")
    p.add_argument("--trace", action="store_true",
                   help="write CSFG freeze events to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarbp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="progress logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a frozen set by Bhattacharyya ordering")
    _add_code_flags(p)
    p.add_argument("--out", help="write the frozen-set file here (default stdout)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("encode", help="encode information bits")
    _add_code_flags(p)
    p.add_argument("--info", help="information bits as a 0/1 string (default: random)")
    p.add_argument("--seed", type=int, default=None, help="seed for random info bits (default $POLARBP_SEED or 0)")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode one LLR vector (one value per line)")
    _add_code_flags(p)
    _add_decoder_flags(p)
    p.add_argument("llr_file", help="plain text, one LLR per line in source order")
    p.add_argument("--decoder", choices=sim.DECODER_NAMES, default="csfg", help="(default csfg)")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="Monte Carlo sweep; CSV on stdout or --out")
    _add_code_flags(p)
    _add_decoder_flags(p)
    p.add_argument("--snr", default="1.0:3.5:0.5", help="Eb/N0 points: start:stop:step and/or a,b,c (default 1.0:3.5:0.5)")
    p.add_argument("--decoders", default="baseline,gmatrix,csfg", help="comma-separated subset of baseline,gmatrix,csfg")
    p.add_argument("--seed", type=int, default=None, help="master seed (default $POLARBP_SEED or 0)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--min-frame-errors", type=int, default=100, help="stop a point after this many frame errors, 0 = off (default 100)")
    p.add_argument("--max-frames", type=int, default=100_000, help="stop a point after this many frames, 0 = off (default 100000)")
    p.add_argument("--noiseless", action="store_true", help="disable channel noise (test hook)")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--json", help="also write a JSON mirror with the full configuration")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="iteration/computation savings from a results CSV")
    p.add_argument("results", help="CSV written by 'simulate'")
    p.add_argument("--target", default="csfg", help="decoder whose savings are reported (default csfg)")
    p.add_argument("--versus", default="baseline,gmatrix", help="reference decoders (default baseline,gmatrix)")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        args.func(args)
    except (CliError, PolarCodeError, ValueError, OSError) as exc:
        print(f"polarbp: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
