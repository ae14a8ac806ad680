"""Command-line interface.

Exit codes: 0 success, 1 I/O or format error, 2 payload too large,
3 trailing saved bits, 4 corrupt envelope or unresolvable marks,
5 misaligned crop rectangle, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import codec
from .core import DomainSpec
from .envelope import envelope_decode
from .errors import (
    EnvelopeCorrupt,
    ImageFormatError,
    MisalignedCrop,
    OutOfBounds,
    PayloadTooLarge,
    TrailingSavedBits,
    TrailingUnresolvedPairs,
    TruncatedEnvelope,
)
from .imageio import crop, load_pgm, psnr, save_pgm
from .lut import throughput_bench

EXIT_OK = 0
EXIT_IO = 1
EXIT_TOO_LARGE = 2
EXIT_TRAILING = 3
EXIT_CORRUPT = 4
EXIT_MISALIGNED = 5
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return n


def _rect(text):
    try:
        parts = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rectangle {text!r}") from None
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("rectangle must be X0,Y0,W,H")
    return tuple(parts)


def _sweep(text):
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("sweep must be START:STOP[:STEP]")
    try:
        start, stop = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 2
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}") from None
    if step < 1 or start < 1 or stop < start:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}")
    return range(start, stop + 1, step)


def _json_float(v):
    return None if v is None or math.isinf(v) else round(v, 6)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rcm", description="Reversible contrast mapping watermarking")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--input", required=True, help="input PGM (P5)")
        sp.add_argument("--iterations", type=_positive, default=1)
        sp.add_argument("--threshold", type=int, default=None,
                        help="transform only pairs with |x - y| < THRESHOLD")
        sp.add_argument("--pairing", choices=("row", "col", "alt"), default="alt")
        sp.add_argument("--backend", choices=("direct", "lut"), default="lut")
        sp.add_argument("--strict-tail", action="store_true",
                        help="reject images whose last saved bits have no later slot")

    sp = sub.add_parser("embed", help="embed a payload file")
    common(sp)
    sp.add_argument("--output", required=True)
    sp.add_argument("--payload", required=True)

    sp = sub.add_parser("extract", help="extract the payload and restore the original")
    common(sp)
    sp.add_argument("--output", required=True)
    sp.add_argument("--payload-out", required=True)

    sp = sub.add_parser("capacity", help="capacity / PSNR table, optionally over a threshold sweep")
    common(sp)
    sp.add_argument("--sweep", type=_sweep, default=None, help="START:STOP[:STEP] (default step 2)")
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("croptest", help="recover a crop of a marked image and score it")
    common(sp)
    sp.add_argument("--original", required=True, help="unmarked original PGM")
    sp.add_argument("--crop", type=_rect, required=True, help="X0,Y0,W,H")

    sp = sub.add_parser("bench", help="direct vs lookup-table throughput")
    sp.add_argument("--input", required=True)
    sp.add_argument("--threshold", type=int, default=None)
    sp.add_argument("--reps", type=_positive, default=5)
    sp.add_argument("--seed", type=int, default=0)
    return p


def _spec(image, threshold):
    if threshold is not None and not 1 <= threshold <= image.max_value + 1:
        raise UsageError(f"threshold must lie in [1, {image.max_value + 1}]")
    try:
        return DomainSpec(image.max_value, threshold)
    except ValueError as e:
        raise ImageFormatError(str(e)) from None


def _print_json(obj):
    print(json.dumps(obj, sort_keys=False))


def cmd_embed(args) -> int:
    image = load_pgm(args.input)
    spec = _spec(image, args.threshold)
    payload = Path(args.payload).read_bytes()
    plan = codec.make_plan(args.iterations, args.pairing)
    marked, stats = codec.embed_multi(image, payload, plan, spec, args.backend, args.strict_tail)
    save_pgm(marked, args.output)
    pixels = image.width * image.height
    total = sum(s.capacity_bits for s in stats)
    envelope_bits = 8 * (12 + len(payload))
    _print_json({
        "command": "embed",
        "width": image.width,
        "height": image.height,
        "iterations": [s.as_dict() for s in stats],
        "capacity_bits": total,
        "bitrate_bpp": total / pixels,
        "payload_bytes": len(payload),
        "envelope_bits": envelope_bits,
        "payload_bpp": envelope_bits / pixels,
        "psnr_db": _json_float(psnr(image, marked)),
    })
    return EXIT_OK


def cmd_extract(args) -> int:
    marked = load_pgm(args.input)
    spec = _spec(marked, args.threshold)
    plan = codec.make_plan(args.iterations, args.pairing)
    original, payload = codec.extract_multi(marked, plan, spec, args.backend, args.strict_tail)
    save_pgm(original, args.output)
    Path(args.payload_out).write_bytes(payload)
    _print_json({
        "command": "extract",
        "original_recovered": True,
        "crc_ok": True,
        "payload_bytes": len(payload),
        "psnr_marked_db": _json_float(psnr(original, marked)),
    })
    return EXIT_OK


def _capacity_row(image, spec, plan, seed, backend, strict_tail):
    marked, stats = codec.capacity_chain(image, spec, plan, np.random.default_rng(seed),
                                         backend, strict_tail)
    if not stats:
        stats = [codec.capacity(image, spec, plan[0], backend)]
    total = sum(s.capacity_bits for s in stats)
    quality = psnr(image, marked)
    return {
        "P": sum(s.P for s in stats),
        "T": sum(s.T for s in stats),
        "capacity_bits": total,
        "bitrate_bpp": f"{total / (image.width * image.height):.6f}",
        "psnr_if_embedded": "inf" if math.isinf(quality) else f"{quality:.4f}",
    }


def cmd_capacity(args) -> int:
    image = load_pgm(args.input)
    plan = codec.make_plan(args.iterations, args.pairing)
    if args.sweep is not None:
        deltas = list(args.sweep)
    else:
        deltas = [args.threshold]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["delta", "P", "T", "capacity_bits", "bitrate_bpp", "psnr_if_embedded"])
    for delta in deltas:
        spec = _spec(image, delta)
        row = _capacity_row(image, spec, plan, args.seed, args.backend, args.strict_tail)
        writer.writerow(["none" if delta is None else delta, *row.values()])
    return EXIT_OK


def cmd_croptest(args) -> int:
    marked = load_pgm(args.input)
    original = load_pgm(args.original)
    spec = _spec(marked, args.threshold)
    plan = codec.make_plan(args.iterations, args.pairing)
    rect = args.crop
    if marked.pixels.shape != original.pixels.shape:
        raise ImageFormatError("marked and original images differ in size")
    for order in set(plan):
        codec.check_alignment(marked, rect, order)
    x0, y0, w, h = rect
    current, region = marked, rect
    fragments = []
    unresolved = 0
    report = None
    for order in reversed(plan):
        report = codec.crop_recover(current, region, spec, order, backend=args.backend,
                                    strict_tail=args.strict_tail)
        fragments.append(report.watermark_fragment)
        unresolved += report.unresolved
        current, region = report.recovered, (0, 0, w, h)
    fragments.reverse()
    truth = crop(original, *rect).pixels.astype(np.int32)
    got = current.pixels.astype(np.int32)
    diff = np.abs(got - truth)
    try:
        envelope_decode(np.concatenate(fragments))
        crc = "ok"
    except TruncatedEnvelope:
        crc = "truncated"
    except EnvelopeCorrupt:
        crc = "corrupt"
    _print_json({
        "command": "croptest",
        "rect": list(rect),
        "pixels": int(diff.size),
        "exact_fraction": float(np.mean(diff == 0)),
        "mismatched_pixels": int(np.count_nonzero(diff)),
        "lsb_only_errors": int(np.count_nonzero(diff == 1)),
        "max_error": int(diff.max()),
        "slot_pixels_exact": bool(np.all(diff[report.slot_mask] == 0)),
        "unresolved_pairs": unresolved,
        "payload_crc": crc,
    })
    return EXIT_OK


def cmd_bench(args) -> int:
    image = load_pgm(args.input)
    spec = _spec(image, args.threshold)
    order = codec.PairingOrder.ROW
    cap = codec.capacity(image, spec, order).capacity_bits
    bits = np.random.default_rng(args.seed).integers(0, 2, max(cap, 0), dtype=np.uint8)
    outputs = {b: codec.embed(image, bits, spec, order, backend=b)[0] for b in ("direct", "lut")}
    if outputs["direct"] != outputs["lut"]:
        raise RuntimeError("backends disagree on the marked image")
    marked = outputs["lut"]
    result = {}
    for backend in ("direct", "lut"):
        result[backend] = {
            "embed": round(throughput_bench(image, spec, backend, args.reps, bits, "embed"), 3),
            "extract": round(throughput_bench(marked, spec, backend, args.reps,
                                              operation="extract"), 3),
        }
    _print_json({
        "command": "bench",
        "pixels": image.width * image.height,
        "capacity_bits": cap,
        "reps": args.reps,
        "identical_outputs": True,
        "mpix_per_s": result,
    })
    return EXIT_OK


COMMANDS = {
    "embed": cmd_embed,
    "extract": cmd_extract,
    "capacity": cmd_capacity,
    "croptest": cmd_croptest,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"rcm: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except PayloadTooLarge as e:
        print(f"rcm: {e}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except TrailingSavedBits as e:
        print(f"rcm: {e}", file=sys.stderr)
        return EXIT_TRAILING
    except (EnvelopeCorrupt, TrailingUnresolvedPairs) as e:
        print(f"rcm: watermark invalid: {e}", file=sys.stderr)
        return EXIT_CORRUPT
    except (MisalignedCrop, OutOfBounds) as e:
        print(f"rcm: {e}", file=sys.stderr)
        return EXIT_MISALIGNED
    except (OSError, ImageFormatError) as e:
        print(f"rcm: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
