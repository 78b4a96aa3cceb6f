"""Command-line pipeline: simulate -> compress -> encode/reconstruct -> pack.

Machine-readable results (info, verify-lemma, stats) are printed as one JSON
document on stdout; everything meant for humans goes to stderr.  Exit codes:
0 success, 1 usage error, 2 data or format error.  Output files are written
atomically (temp file + rename), so a failing command leaves nothing behind.
"""

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, compress, dataset, encode, simulate, storage

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _emit_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"invalid rational {text!r}: {exc}")


def _load_clip(args) -> simulate.IntensityClip:
    source = Path(args.input)
    if source.is_dir():
        return storage.load_pgm_clip(source, args.frame_interval_ns)
    values = storage.load_tensor(source)
    if values.ndim != 3:
        raise storage.FormatError(f"clip tensor must be rank 3, got rank {values.ndim}")
    if values.dtype.kind == "u":
        values = values.astype("float64") / 255.0
    return simulate.IntensityClip(values, args.frame_interval_ns)


def _cmd_simulate(args) -> int:
    config = simulate.CameraConfig(
        alpha=args.alpha, theta=args.theta, tau_ns=args.tau_ns, reset_mode=args.reset
    )
    clip = _load_clip(args)
    stream = simulate.simulate(clip, config)
    storage.save_stream(stream, args.output, entropy=args.entropy)
    _say(
        f"simulated {stream.height}x{stream.width}x{stream.num_steps} stream "
        f"({stream.count()} spikes) -> {args.output}"
    )
    return 0


def _cmd_compress(args) -> int:
    stream = storage.load_stream(args.input)
    dropped = compress.dropped_steps(stream.num_steps, args.d)
    if dropped:
        _say(f"warning: dropping {dropped} trailing steps not covered by d={args.d}")
    result = compress.compress_stream(stream, args.d)
    storage.save_stream(result, args.output, entropy=args.entropy)
    _say(
        f"compressed {stream.num_steps} -> {result.num_steps} steps "
        f"(tau {stream.tau_ns} -> {result.tau_ns} ns) -> {args.output}"
    )
    return 0


def _cmd_rate_encode(args) -> int:
    stream = storage.load_stream(args.input)
    tensor = encode.rate_encode(stream, args.frames, interleaved=args.interleaved)
    storage.save_tensor(tensor.values, args.output)
    _say(
        f"rate-encoded {args.frames} frames (chunk {tensor.chunk_len}) -> {args.output}"
    )
    return 0


def _cmd_reconstruct(args) -> int:
    stream = storage.load_stream(args.input)
    frames = encode.tfp_reconstruct(stream, args.window, stride=args.stride)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for index in range(frames.shape[0]):
        storage.write_pgm(frames[index], outdir / f"frame_{index:06d}.pgm")
    _say(f"wrote {frames.shape[0]} PGM frames to {outdir}")
    return 0


def _cmd_pack(args) -> int:
    stream = storage.load_stream(args.input)
    storage.save_stream(stream, args.output, entropy=True)
    _say(f"packed {args.input} -> {args.output}")
    return 0


def _cmd_unpack(args) -> int:
    stream = storage.load_stream(args.input)
    storage.save_stream(stream, args.output, entropy=False)
    _say(f"unpacked {args.input} -> {args.output}")
    return 0


def _cmd_import_raw(args) -> int:
    stream = storage.import_raw_stream(
        args.input,
        height=args.height,
        width=args.width,
        num_steps=args.steps,
        tau_ns=args.tau_ns,
        bit_order=args.bit_order,
        layout=args.layout,
    )
    storage.save_stream(stream, args.output, entropy=args.entropy)
    _say(f"imported {stream.height}x{stream.width}x{stream.num_steps} -> {args.output}")
    return 0


def _cmd_info(args) -> int:
    stream = storage.load_stream(args.input)
    total = stream.count()
    try:
        meta = json.loads(stream.meta) if stream.meta else None
    except json.JSONDecodeError:
        meta = stream.meta
    _emit_json(
        {
            "height": stream.height,
            "width": stream.width,
            "num_steps": stream.num_steps,
            "tau_ns": stream.tau_ns,
            "duration_s": stream.num_steps * stream.tau_ns * 1e-9,
            "total_spikes": total,
            "rate": total / stream.num_bits,
            "payload_bytes": stream.payload_bytes,
            "meta": meta,
        }
    )
    return 0


def _cmd_verify_lemma(args) -> int:
    report = compress.verify_rate_preservation(args.c, args.d, args.T)
    _emit_json(report.to_dict())
    return 0 if report.all_pass else DATA_ERROR


def _cmd_split(args) -> int:
    records = dataset.load_manifest(args.manifest)
    subjects = sorted({record.subject_id for record in records})
    assignment = dataset.split_subjects(subjects, args.seed)
    dataset.write_split_csv(assignment, args.output)
    counts = assignment.counts()
    _say(
        f"split {len(subjects)} subjects into "
        f"{counts['train']}/{counts['val']}/{counts['test']} (seed {args.seed}) "
        f"-> {args.output}"
    )
    return 0


def _cmd_stats(args) -> int:
    records = dataset.load_manifest(args.manifest)
    _emit_json(dataset.dataset_stats(records).to_dict())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spikeforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"spikeforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="intensity frames -> spike stream")
    p.add_argument("input", help="directory of PGM frames, or a .spkt clip tensor")
    p.add_argument("output", help="output .spks path")
    p.add_argument("--frame-interval-ns", type=_positive_int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--tau-ns", type=_positive_int, default=50_000)
    p.add_argument("--reset", choices=simulate.RESET_MODES, default="zero")
    p.add_argument("--entropy", action="store_true", help="xz-compress the payload")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("compress", help="interval-rate compression by factor d")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--d", type=_positive_int, required=True)
    p.add_argument("--entropy", action="store_true")
    p.set_defaults(handler=_cmd_compress)

    p = sub.add_parser("rate-encode", help="stream -> rate tensor (.spkt)")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--frames", type=_positive_int, required=True)
    p.add_argument("--interleaved", action="store_true",
                   help="strided chunking instead of contiguous")
    p.set_defaults(handler=_cmd_rate_encode)

    p = sub.add_parser("reconstruct", help="stream -> TFP gray frames (PGM)")
    p.add_argument("input")
    p.add_argument("outdir")
    p.add_argument("--window", type=_positive_int, required=True)
    p.add_argument("--stride", type=_positive_int, default=None)
    p.set_defaults(handler=_cmd_reconstruct)

    p = sub.add_parser("pack", help="rewrite container with the entropy stage on")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(handler=_cmd_pack)

    p = sub.add_parser("unpack", help="rewrite container with the entropy stage off")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(handler=_cmd_unpack)

    p = sub.add_parser("import-raw", help="headerless bit dump -> .spks")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--height", type=_positive_int, required=True)
    p.add_argument("--width", type=_positive_int, required=True)
    p.add_argument("--steps", type=_positive_int, required=True)
    p.add_argument("--tau-ns", type=_positive_int, default=50_000)
    p.add_argument("--bit-order", choices=("lsb", "msb"), default="lsb")
    p.add_argument("--layout", choices=("planar", "continuous"), default="planar")
    p.add_argument("--entropy", action="store_true")
    p.set_defaults(handler=_cmd_import_raw)

    p = sub.add_parser("info", help="stream facts as JSON")
    p.add_argument("input")
    p.set_defaults(handler=_cmd_info)

    p = sub.add_parser("verify-lemma",
                       help="exact rate-preservation check on a constant-rate train")
    p.add_argument("--c", type=_rational, required=True, metavar="P/Q")
    p.add_argument("--d", type=_positive_int, required=True)
    p.add_argument("--T", type=_positive_int, required=True)
    p.set_defaults(handler=_cmd_verify_lemma)

    p = sub.add_parser("split", help="subject-wise train/val/test split")
    p.add_argument("manifest")
    p.add_argument("output")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser("stats", help="manifest statistics as JSON")
    p.add_argument("manifest")
    p.set_defaults(handler=_cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    raw_threads = os.environ.get("SPIKEFORGE_THREADS")
    if raw_threads is not None and (not raw_threads.isdigit() or int(raw_threads) < 1):
        parser.print_usage(sys.stderr)
        _say(f"spikeforge: error: SPIKEFORGE_THREADS must be a positive integer, "
             f"got {raw_threads!r}")
        return USAGE_ERROR
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        _say(f"spikeforge: error: {exc}")
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
