"""Factorial experiment sweeps over the full encrypt/encode/channel/decode chain.

``results.csv`` holds one :class:`ResultRow` per (cell, trial), sorted by cell
coordinates and byte-identical across runs with the same spec.  Wall-clock
times are not reproducible, so they go to a ``timings.csv`` sidecar keyed by
the same coordinates.  ``summary.csv`` gives per-cell mean and std of PSNR.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from itertools import product
from pathlib import Path

import numpy as np

from ..channel import ChannelConfig, LossModel, transmit
from ..cipher import CipherKey, ImageBuffer, encrypt
from ..codec import RowOrder, SamplingConfig, SamplingMode, encode
from ..gpsr import SolverOptions
from ..keyed import derive_seed
from ..linops import TransformKind
from ..recon import DEFAULT_SOLVER, joint_decode
from ..wavelet import geometry_for
from .pgm import resolve_image, save_pgm

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentSpec:
    images: tuple[str, ...] = ("lena",)
    transforms: tuple[str, ...] = ("bdct",)
    block_sizes: tuple[int, ...] = (32,)
    srs: tuple[float, ...] = (0.6,)
    plrs: tuple[float, ...] = (0.0,)
    packet_sizes: tuple[int, ...] = (100,)
    quantize: tuple[bool, ...] = (True,)
    trials: int = 3
    base_seed: int = 0
    mode: str = "standard"
    channel: str = "count"
    row_order: str = "sorted"
    levels: int | None = None
    solver: SolverOptions = DEFAULT_SOLVER
    out_dir: str | None = None
    save_images: bool = True
    jobs: int = 1

    def __post_init__(self):
        for name in ("images", "transforms", "block_sizes", "srs", "plrs", "packet_sizes", "quantize"):
            v = tuple(getattr(self, name))
            if not v:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, v)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        for t in self.transforms:
            TransformKind.parse(t)
        SamplingMode[_MODES.get(self.mode, self.mode).upper()]
        LossModel(self.channel)
        RowOrder(self.row_order)

    def cells(self):
        return product(self.images, self.transforms, self.block_sizes, self.srs, self.plrs,
                       self.packet_sizes, self.quantize)


_MODES = {"standard": "standard", "fullred": "full_redundancy"}


@dataclass(frozen=True)
class ResultRow:
    """One trial.  Field order is the CSV column order."""

    schema: int
    image: str
    transform: str
    block_size: int
    sr: float
    plr: float
    packet_size: int
    quantized: int
    mode: str
    channel: str
    row_order: str
    trial: int
    seed: int
    psnr_db: float
    gamma: float
    actual_sr: float
    actual_plr: float
    iterations: int
    tau_factor: float
    tau: float
    max_iters: int
    rel_tol: float
    debias: int
    continuation_steps: int
    levels: int
    error: str = ""

    def key(self) -> tuple:
        return (self.image, self.transform, self.block_size, self.sr, self.plr,
                self.packet_size, self.quantized, self.trial)


CSV_COLUMNS = tuple(f.name for f in fields(ResultRow))


def trial_seed(base_seed: int, image: str, transform: str, block_size: int, sr: float,
               plr: float, packet_size: int, mode: str, channel: str, trial: int) -> int:
    """Hash of the base seed and the cell coordinates.

    Quantisation on/off is deliberately not part of the hash, so the two
    variants of a cell see the same keys and loss pattern.
    """
    return derive_seed(base_seed, image, transform, block_size, repr(float(sr)),
                       repr(float(plr)), packet_size, mode, channel, trial)


@dataclass(frozen=True)
class Trial:
    image_name: str
    transform: str
    block_size: int
    sr: float
    plr: float
    packet_size: int
    quantized: bool
    trial: int
    seed: int


def run_trial(img: ImageBuffer, t: Trial, spec: ExperimentSpec,
              original: ImageBuffer | None = None):
    """Run one trial; returns ``(row, decoded image or None, seconds)``."""
    original = img if original is None else original
    solver = spec.solver
    mode = SamplingMode[_MODES.get(spec.mode, spec.mode).upper()]
    base = dict(
        schema=SCHEMA_VERSION, image=t.image_name, transform=t.transform, block_size=t.block_size,
        sr=float(t.sr), plr=float(t.plr), packet_size=t.packet_size, quantized=int(t.quantized),
        mode=spec.mode, channel=spec.channel, row_order=spec.row_order, trial=t.trial, seed=t.seed,
        tau_factor=solver.tau_factor, max_iters=solver.max_iters, rel_tol=solver.rel_tol,
        debias=int(solver.debias), continuation_steps=solver.continuation_steps,
    )
    t0 = time.perf_counter()
    try:
        key = CipherKey(derive_seed(t.seed, "R"))
        cfg = SamplingConfig(
            kind=t.transform, block_size=t.block_size,
            sr=1.0 if mode is SamplingMode.FULL_REDUNDANCY else t.sr,
            d_seed=derive_seed(t.seed, "D"), packet_size=t.packet_size, mode=mode,
            rprime_seed=derive_seed(t.seed, "R'"), row_order=spec.row_order,
        )
        packets = encode(encrypt(img, key), cfg, quantized=t.quantized)
        channel = ChannelConfig(t.plr, LossModel(spec.channel), derive_seed(t.seed, "channel"))
        received = transmit(packets, channel)
        if not received:
            raise RuntimeError("every packet was lost")
        res = joint_decode(received, key, solver, original=original, levels=spec.levels)
        arrived = sum(p.payload.size for p in received)
        row = ResultRow(
            **base, psnr_db=float(res.psnr_vs_original), gamma=res.gamma,
            actual_sr=arrived / img.n, actual_plr=1.0 - len(received) / len(packets),
            iterations=res.iterations, tau=res.tau, levels=_levels(img, spec.levels),
        )
        return row, res.image, time.perf_counter() - t0
    except Exception as exc:  # recorded per row; the sweep carries on
        row = ResultRow(
            **base, psnr_db=math.nan, gamma=math.nan, actual_sr=math.nan, actual_plr=math.nan,
            iterations=0, tau=math.nan, levels=-1 if spec.levels is None else spec.levels,
            error=f"{type(exc).__name__}: {exc}".replace("\n", " "),
        )
        return row, None, time.perf_counter() - t0


def _levels(img: ImageBuffer, levels: int | None) -> int:
    return geometry_for(img.width, img.height, levels).levels


def _image_name(spec_entry: str) -> str:
    return Path(spec_entry).stem


def plan(spec: ExperimentSpec) -> list[Trial]:
    trials = []
    for image, tr, B, sr, plr, m, q in spec.cells():
        name = _image_name(image)
        tr = TransformKind.parse(tr).name.lower()
        for k in range(spec.trials):
            seed = trial_seed(spec.base_seed, name, tr, B, sr, plr, m, spec.mode, spec.channel, k)
            trials.append(Trial(name, tr, int(B), float(sr), float(plr), int(m), bool(q), k, seed))
    return trials


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in sorted(rows, key=ResultRow.key):
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass(frozen=True)
class CellSummary:
    image: str
    transform: str
    block_size: int
    sr: float
    plr: float
    packet_size: int
    quantized: int
    trials: int
    psnr_mean: float
    psnr_std: float
    gamma_max: float
    failures: int


def summarize(rows) -> list[CellSummary]:
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        groups.setdefault(r.key()[:-1], []).append(r)
    out = []
    for k in sorted(groups):
        rs = groups[k]
        ok = [r for r in rs if not r.error]
        p = np.array([r.psnr_db for r in ok], dtype=float)
        out.append(CellSummary(
            *k, trials=len(rs),
            psnr_mean=float(p.mean()) if p.size else math.nan,
            psnr_std=float(p.std()) if p.size else math.nan,
            gamma_max=max((r.gamma for r in ok), default=math.nan),
            failures=len(rs) - len(ok),
        ))
    return out


def _write_dataclass_csv(path: Path, items, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for it in items:
            w.writerow([_fmt(getattr(it, c)) for c in columns])


def _recon_name(t: Trial) -> str:
    q = "q" if t.quantized else "raw"
    return f"{t.image_name}_{t.transform}{t.block_size}_sr{t.sr:g}_plr{t.plr:g}_m{t.packet_size}_{q}_t{t.trial}.pgm"


def _worker(args):
    t, spec = args
    img = resolve_image(_lookup(spec, t.image_name))
    return (t,) + run_trial(img, t, spec)


def _lookup(spec: ExperimentSpec, name: str) -> str:
    for entry in spec.images:
        if _image_name(entry) == name:
            return entry
    raise KeyError(name)


@dataclass
class SweepOutput:
    rows: list[ResultRow]
    seconds: dict[tuple, float] = field(default_factory=dict)
    csv_path: Path | None = None


def run_sweep(spec: ExperimentSpec, progress=None) -> SweepOutput:
    """Run every trial of ``spec``; writes CSVs (and images) when ``out_dir`` is set.

    ``progress`` is called with each finished row.
    """
    trials = plan(spec)
    cache: dict[str, ImageBuffer] = {}
    results = []
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as ex:
            for item in ex.map(_worker, [(t, spec) for t in trials]):
                results.append(item)
                if progress:
                    progress(item[1])
    else:
        for t in trials:
            if t.image_name not in cache:
                cache[t.image_name] = resolve_image(_lookup(spec, t.image_name))
            item = (t,) + run_trial(cache[t.image_name], t, spec)
            results.append(item)
            if progress:
                progress(item[1])

    rows = [r for _, r, _, _ in results]
    seconds = {r.key(): s for _, r, _, s in results}
    out = SweepOutput(rows, seconds)
    if spec.out_dir is not None:
        d = Path(spec.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        out.csv_path = d / "results.csv"
        out.csv_path.write_text(rows_to_csv(rows))
        _write_dataclass_csv(d / "summary.csv", summarize(rows), [f.name for f in fields(CellSummary)])
        with open(d / "timings.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["image", "transform", "block_size", "sr", "plr", "packet_size", "quantized",
                        "trial", "wall_time_s"])
            for k in sorted(seconds):
                w.writerow([_fmt(v) for v in k] + [f"{seconds[k]:.3f}"])
        if spec.save_images:
            (d / "images").mkdir(exist_ok=True)
            for t, _, image, _ in results:
                if image is not None:
                    save_pgm(image, d / "images" / _recon_name(t))
    return out
