"""Command-line driver.

Every stage takes ``--seed``; the per-stage seeds (permutation key,
subsampler, channel, full-redundancy permutation) are derived from it, so the
same ``--seed`` must be given to ``encrypt`` and ``decode``.  Output goes to
``--out``, else ``$SMCODEC_OUT``, else ``./results``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from ..channel import ChannelConfig, LossModel, transmit
from ..cipher import CipherKey, encrypt
from ..codec import (RowOrder, SamplingConfig, SamplingMode, encode, read_packets, sample_any,
                     write_packets)
from ..keyed import derive_seed
from ..recon import DEFAULT_SOLVER, joint_decode
from .pgm import load_pgm, resolve_image, save_pgm
from .stats import measurement_histogram
from .sweep import ExperimentSpec, Trial, run_sweep, run_trial

OUT_ENV = "SMCODEC_OUT"
_MODES = {"standard": SamplingMode.STANDARD, "fullred": SamplingMode.FULL_REDUNDANCY}


def out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(OUT_ENV) or "results")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _common(multi: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    many = {"nargs": "+"} if multi else {}
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sr", type=float, default=[0.6] if multi else 0.6, **many)
    p.add_argument("--plr", type=float, default=[0.0] if multi else 0.0, **many)
    p.add_argument("--transform", choices=("bdct", "bwht"), default=["bdct"] if multi else "bdct", **many)
    p.add_argument("--block-size", type=int, default=[32] if multi else 32, **many)
    p.add_argument("--packet-size", type=int, default=[100] if multi else 100, **many)
    p.add_argument("--levels", type=int, default=None, help="wavelet levels (default log2(min side) - 3)")
    p.add_argument("--tau", type=float, default=None, help="absolute l1 weight (default: relative)")
    p.add_argument("--tau-factor", type=float, default=DEFAULT_SOLVER.tau_factor,
                   help="tau as a fraction of ||A^T y||_inf")
    p.add_argument("--max-iters", type=int, default=DEFAULT_SOLVER.max_iters)
    p.add_argument("--continuation", type=int, default=DEFAULT_SOLVER.continuation_steps,
                   help="number of tau continuation stages")
    p.add_argument("--debias", action="store_true")
    p.add_argument("--no-quantize", action="store_true", help="send raw float64 measurements")
    p.add_argument("--mode", choices=tuple(_MODES), default="standard")
    p.add_argument("--channel", choices=("count", "iid"), default="count")
    p.add_argument("--row-order", choices=[r.value for r in RowOrder], default=RowOrder.SORTED.value)
    p.add_argument("--out", default=None, help=f"output directory (env {OUT_ENV})")
    return p


def _solver(args):
    return replace(DEFAULT_SOLVER, tau=args.tau, tau_factor=args.tau_factor, max_iters=args.max_iters,
                   continuation_steps=args.continuation, debias=args.debias)


def _key(args) -> CipherKey:
    return CipherKey(derive_seed(args.seed, "R"))


def _sampling(args) -> SamplingConfig:
    mode = _MODES[args.mode]
    return SamplingConfig(
        kind=args.transform, block_size=args.block_size,
        sr=1.0 if mode is SamplingMode.FULL_REDUNDANCY else args.sr,
        d_seed=derive_seed(args.seed, "D"), packet_size=args.packet_size, mode=mode,
        rprime_seed=derive_seed(args.seed, "R'"), row_order=args.row_order,
    )


def _channel(args) -> ChannelConfig:
    return ChannelConfig(args.plr, LossModel(args.channel), derive_seed(args.seed, "channel"))


def cmd_encrypt(args):
    img = resolve_image(args.image)
    path = out_dir(args) / "cipher.pgm"
    save_pgm(encrypt(img, _key(args)), path)
    print(path)


def cmd_encode(args):
    packets = encode(load_pgm(args.cipher), _sampling(args), quantized=not args.no_quantize)
    path = out_dir(args) / "packets.bin"
    write_packets(path, packets)
    h = packets[0].header
    print(f"{path}: M={h.M} packets={len(packets)}")


def cmd_channel(args):
    packets = read_packets(args.packets)
    received = transmit(packets, _channel(args))
    path = out_dir(args) / "received.bin"
    write_packets(path, received)
    print(f"{path}: {len(received)}/{len(packets)} packets delivered")


def cmd_decode(args):
    packets = read_packets(args.packets)
    original = resolve_image(args.original) if args.original else None
    res = joint_decode(packets, _key(args), _solver(args), original=original, levels=args.levels)
    path = out_dir(args) / "decoded.pgm"
    save_pgm(res.image, path)
    line = f"{path}: iterations={res.iterations} gamma={res.gamma:.5f}"
    if res.psnr_vs_original is not None:
        line += f" psnr={res.psnr_vs_original:.3f} dB"
    print(line)


def _spec(args, **kw) -> ExperimentSpec:
    return ExperimentSpec(
        mode=args.mode, channel=args.channel, row_order=args.row_order, levels=args.levels,
        solver=_solver(args), base_seed=args.seed, **kw,
    )


def cmd_roundtrip(args):
    img = resolve_image(args.image)
    spec = _spec(args, images=(args.image,), trials=1)
    t = Trial(Path(args.image).stem, args.transform, args.block_size, args.sr, args.plr,
              args.packet_size, not args.no_quantize, 0, args.seed)
    row, image, seconds = run_trial(img, t, spec)
    if row.error:
        print(f"roundtrip failed: {row.error}", file=sys.stderr)
        return 1
    path = out_dir(args) / "roundtrip.pgm"
    save_pgm(image, path)
    print(f"{path}: psnr={row.psnr_db:.3f} dB gamma={row.gamma:.5f} actual_sr={row.actual_sr:.4f} "
          f"actual_plr={row.actual_plr:.4f} iterations={row.iterations} time={seconds:.1f}s")
    return 0


def cmd_sweep(args):
    spec = _spec(
        args, images=tuple(args.images), transforms=tuple(args.transform),
        block_sizes=tuple(args.block_size), srs=tuple(args.sr), plrs=tuple(args.plr),
        packet_sizes=tuple(args.packet_size),
        quantize=(True, False) if args.both_quantize else (not args.no_quantize,),
        trials=args.trials, out_dir=str(out_dir(args)), save_images=not args.no_images,
        jobs=args.jobs,
    )

    def report(row):
        status = row.error or f"{row.psnr_db:.3f} dB"
        print(f"{row.image} {row.transform}{row.block_size} sr={row.sr:g} plr={row.plr:g} "
              f"m={row.packet_size} q={row.quantized} t={row.trial}: {status}", flush=True)

    out = run_sweep(spec, progress=report)
    print(out.csv_path)
    return 1 if any(r.error for r in out.rows) else 0


def cmd_histogram(args):
    img = resolve_image(args.image)
    cfg = _sampling(args)
    y, _ = sample_any(encrypt(img, _key(args)), cfg)
    st = measurement_histogram(y, bins=args.bins, limit=args.limit)
    d = out_dir(args)
    stem = f"hist_{Path(args.image).stem}_{args.transform}{args.block_size}_sr{args.sr:g}"
    with open(d / f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_low", "bin_high", "count"])
        for lo, hi, c in zip(st.edges[:-1], st.edges[1:], st.counts):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
    moments = {
        "mean": st.mean, "std": st.std, "skewness": st.skewness,
        "excess_kurtosis": st.excess_kurtosis, "degenerate": st.degenerate,
        "bulk_99_low": st.bulk_low, "bulk_99_high": st.bulk_high,
    }
    text = json.dumps({k: (None if isinstance(v, float) and math.isnan(v) else v)
                       for k, v in moments.items()}, indent=2)
    (d / f"{stem}.json").write_text(text + "\n")
    print(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smcodec", description="Compressive codec for permuted images")
    sub = p.add_subparsers(dest="command", required=True)
    single, multi = _common(False), _common(True)

    s = sub.add_parser("encrypt", parents=[single], help="permute an image")
    s.add_argument("image", help="PGM path or bundled image name")
    s.set_defaults(func=cmd_encrypt)

    s = sub.add_parser("encode", parents=[single], help="sample, quantise and packetise a cipher image")
    s.add_argument("cipher", help="encrypted PGM")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("channel", parents=[single], help="drop packets")
    s.add_argument("packets", help="packet file")
    s.set_defaults(func=cmd_channel)

    s = sub.add_parser("decode", parents=[single], help="joint decryption and reconstruction")
    s.add_argument("packets", help="packet file")
    s.add_argument("--original", help="reference image for PSNR")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("roundtrip", parents=[single], help="all stages on one image")
    s.add_argument("image", nargs="?", default="lena")
    s.set_defaults(func=cmd_roundtrip)

    s = sub.add_parser("sweep", parents=[multi], help="factorial sweep to CSV")
    s.add_argument("--images", nargs="+", default=["lena"])
    s.add_argument("--trials", type=int, default=3)
    s.add_argument("--both-quantize", action="store_true", help="run each cell with and without quantisation")
    s.add_argument("--no-images", action="store_true", help="skip writing reconstructed PGMs")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("histogram", parents=[single], help="measurement histogram and moments")
    s.add_argument("image", nargs="?", default="lena")
    s.add_argument("--bins", type=int, default=100)
    s.add_argument("--limit", type=float, default=None, help="histogram half-range")
    s.set_defaults(func=cmd_histogram)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"smcodec {args.command}: {exc}", file=sys.stderr)
        return 2
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
