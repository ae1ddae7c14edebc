"""Seeded per-trial random streams and residual statistics."""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

__all__ = ["trial_rng", "ResidualStats", "NumericalFailure"]


class NumericalFailure(RuntimeError):
    """Raised on conditioning or projection failures; carries the seed path of the sample."""

    def __init__(self, message: str, seed_path: tuple | None = None):
        super().__init__(message if seed_path is None else f"{message} [seed path {seed_path}]")
        self.seed_path = seed_path


def trial_rng(seed: int, tag: str, k: int) -> np.random.Generator:
    """Generator for trial ``k`` of the check named ``tag``.

    Streams are spawned from a SeedSequence by counter, so any single trial can
    be reproduced in isolation from (seed, tag, k).
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(tag.encode()), int(k)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class ResidualStats:
    """Summary of a residual check over many trials."""

    max: float
    mean: float
    trials: int
    relative_max: float | None = None
    worst_trial: int = 0

    @classmethod
    def from_samples(cls, residuals, scales=None) -> "ResidualStats":
        r = np.abs(np.asarray(residuals, dtype=float)).ravel()
        if r.size == 0:
            return cls(0.0, 0.0, 0)
        rel = None
        if scales is not None:
            s = np.maximum(np.abs(np.asarray(scales, dtype=float)).ravel(), np.finfo(float).tiny)
            rel = float((r / s).max())
        return cls(float(r.max()), float(r.mean()), int(r.size), rel, int(r.argmax()))

    def merged(self, other: "ResidualStats") -> "ResidualStats":
        n = self.trials + other.trials
        rel = None
        if self.relative_max is not None or other.relative_max is not None:
            rel = max(self.relative_max or 0.0, other.relative_max or 0.0)
        worst = self.worst_trial if self.max >= other.max else other.worst_trial
        mean = (self.mean * self.trials + other.mean * other.trials) / max(n, 1)
        return ResidualStats(max(self.max, other.max), mean, n, rel, worst)
