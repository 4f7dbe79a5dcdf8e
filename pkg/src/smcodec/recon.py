"""Bob's joint decryption and decoding.

The received measurements satisfy ``y = D_r F R Psi s`` where ``D_r`` keeps
the rows that arrived (and survived quantisation), ``R`` is the secret
permutation and ``Psi`` the wavelet synthesis.  Solving for sparse ``s``
undoes sampling and encryption in one step; ``Psi s + mu`` is the plain image.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cipher import CipherKey, ImageBuffer, KeyMode, key_permutation
from .codec import MEASUREMENT_SCALE, StreamHeader, depacketize, dequantize, measurement_selector
from .gpsr import SolverOptions, gpsr_solve
from .linops import ScaledOperator, srm_adjoint, srm_apply
from .wavelet import CoeffVector, WaveletGeometry, dwt2_inverse, geometry_for, synthesis_adjoint

# tau = 3e-4 * ||A^T y||_inf reached through six continuation stages
DEFAULT_SOLVER = SolverOptions(tau_factor=3e-4, continuation_steps=6, max_iters=400, rel_tol=1e-5)


@dataclass(frozen=True)
class EffectiveOperator:
    """``s -> scale * D_r F R Psi s`` and its adjoint."""

    srm: ScaledOperator
    geometry: WaveletGeometry

    @property
    def shape(self) -> tuple[int, int]:
        return (self.srm.selector.m, self.geometry.size)

    def apply(self, s: np.ndarray) -> np.ndarray:
        x = dwt2_inverse(CoeffVector(np.asarray(s, dtype=np.float64), self.geometry))
        return srm_apply(self.srm, x.reshape(-1))

    def adjoint(self, r: np.ndarray) -> np.ndarray:
        return synthesis_adjoint(srm_adjoint(self.srm, r), self.geometry).values


def build_effective_operator(header: StreamHeader, received_indices, key: CipherKey,
                             levels: int | None = None) -> EffectiveOperator:
    received = np.asarray(received_indices, dtype=np.int64)
    if received.size == 0:
        raise ValueError("no measurements received")
    d_seed = key.d_seed if key.mode is not KeyMode.STANDARD else None
    sel = measurement_selector(header, d_seed=d_seed).restrict(received)
    srm = ScaledOperator(transform=header.transform, selector=sel, scale=MEASUREMENT_SCALE,
                         permutation=key_permutation(key, header.n))
    return EffectiveOperator(srm, geometry_for(header.width, header.height, levels))


@dataclass
class DecodeResult:
    image: ImageBuffer
    psnr_vs_original: float | None
    iterations: int
    objective_trace: list[float] = field(default_factory=list)
    received: int = 0
    gamma: float = 0.0
    tau: float = 0.0
    direct: bool = False
    seconds: float = 0.0


def to_image(x: np.ndarray, width: int, height: int) -> ImageBuffer:
    """Clip to [0, 255] and round to 8 bits."""
    px = np.clip(np.round(np.asarray(x, dtype=np.float64).reshape(-1)), 0, 255).astype(np.uint8)
    return ImageBuffer(width, height, px)


def joint_decode(packets, key: CipherKey, opts: SolverOptions = DEFAULT_SOLVER,
                 original: ImageBuffer | None = None, levels: int | None = None) -> DecodeResult:
    t0 = time.perf_counter()
    qs, _ = depacketize(packets)
    h = qs.header
    values, kept = dequantize(qs)
    y = values[kept]
    theta = build_effective_operator(h, kept, key, levels)
    if kept.size == h.n:
        # square orthonormal system: invert directly
        x = srm_adjoint(theta.srm, y) / MEASUREMENT_SCALE**2
        iterations, trace, tau, direct = 0, [], 0.0, True
    else:
        res = gpsr_solve(theta.apply, theta.adjoint, y, opts)
        x = dwt2_inverse(CoeffVector(res.x, theta.geometry)).reshape(-1)
        iterations, trace, tau, direct = res.iterations, res.objective_trace, res.tau, False
    img = to_image(x + h.mean_mu, h.width, h.height)
    return DecodeResult(
        image=img,
        psnr_vs_original=psnr(img, original) if original is not None else None,
        iterations=iterations,
        objective_trace=trace,
        received=int(kept.size),
        gamma=qs.gamma,
        tau=tau,
        direct=direct,
        seconds=time.perf_counter() - t0,
    )


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """``10 log10(255^2 / MSE)``; ``inf`` for identical images."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("images differ in size")
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)
