"""Random packet-loss channel."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._backend import kernels
from .keyed import check_seed, uniforms


class LossModel(Enum):
    COUNT_EXACT = "count"
    BERNOULLI_IID = "iid"


@dataclass(frozen=True)
class ChannelConfig:
    """``COUNT_EXACT`` drops exactly ``round(P * plr)`` packets chosen uniformly;
    ``BERNOULLI_IID`` drops packet ``i`` iff the ``i``-th keyed uniform is below ``plr``."""

    plr: float
    model: LossModel = LossModel.COUNT_EXACT
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.model, str):
            object.__setattr__(self, "model", LossModel(self.model))
        if not 0.0 <= self.plr <= 1.0:
            raise ValueError(f"packet loss rate must lie in [0, 1], got {self.plr}")
        check_seed(self.seed)


def lost_count(P: int, plr: float) -> int:
    return int(math.floor(P * plr + 0.5))


def survivors_mask(P: int, cfg: ChannelConfig) -> np.ndarray:
    """Boolean mask over packet positions ``0..P-1``; True = delivered."""
    keep = np.ones(P, dtype=bool)
    if P == 0:
        return keep
    if cfg.model is LossModel.COUNT_EXACT:
        lost = lost_count(P, cfg.plr)
        if lost:
            keep[kernels.partial_fisher_yates(cfg.seed, P, lost)] = False
    else:
        keep = uniforms(cfg.seed, P) >= cfg.plr
    return keep


def transmit(packets, cfg: ChannelConfig) -> list:
    """Surviving packets in their original order."""
    packets = list(packets)
    keep = survivors_mask(len(packets), cfg)
    return [p for p, k in zip(packets, keep) if k]
