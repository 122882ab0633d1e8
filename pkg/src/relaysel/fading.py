"""Nakagami-m power gains and per-trial random streams.

Each trial owns a counter-based stream: uniform number ``j`` of trial ``t``
is a hash of ``(master_seed, t, j)``.  Results therefore never depend on
which worker ran a trial or in which order.  Power gains are drawn by
inverting the Gamma CDF, one uniform per gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincinv

from .params import MIN_SHAPE

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_DRAW_STRIDE = np.uint64(0xD1B54A32D192ED03)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps modulo 2**64; the mix is a bijection.
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _as_u64(values) -> np.ndarray:
    if isinstance(values, np.ndarray) and values.dtype.kind in "iu":
        return values.astype(np.uint64, copy=False)
    return np.array([int(v) & _MASK64 for v in values], dtype=np.uint64)


def trial_uniforms(master_seed: int, trial_indices, n_draws: int, start: int = 0) -> np.ndarray:
    """Uniforms in (0, 1) for a batch of trials, shape ``(len(trial_indices), n_draws)``.

    Column ``k`` holds draw number ``start + k`` of each trial's stream.
    """
    trials = _as_u64(np.atleast_1d(trial_indices))
    seed_key = _splitmix64(_as_u64([master_seed]))[0]
    with np.errstate(over="ignore"):
        keys = _splitmix64(trials ^ seed_key)
        draws = np.arange(start, start + n_draws, dtype=np.uint64) * _DRAW_STRIDE
        bits = _splitmix64(keys[:, None] + draws[None, :])
    # 52 significant bits centred in their cells: never exactly 0 or 1.
    return ((bits >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52


@dataclass(frozen=True)
class TrialRng:
    """Random stream of one trial, a pure function of ``(master_seed, trial_index)``."""

    master_seed: int
    trial_index: int

    def __post_init__(self):
        for name in ("master_seed", "trial_index"):
            value = getattr(self, name)
            if not 0 <= int(value) <= _MASK64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {value!r}")

    def uniforms(self, start: int, count: int) -> np.ndarray:
        return trial_uniforms(self.master_seed, [self.trial_index], count, start)[0]

    def uniform(self, index: int) -> float:
        return float(self.uniforms(index, 1)[0])


def derive_trial_stream(master_seed: int, trial_index: int) -> TrialRng:
    return TrialRng(int(master_seed), int(trial_index))


@dataclass(frozen=True)
class GammaSampler:
    """Gamma(shape=m, scale=mean/m): the instantaneous SNR of a Nakagami-m link."""

    shape: float
    mean: float

    def __post_init__(self):
        if not self.shape >= MIN_SHAPE:
            raise ValueError(f"shape must be ≥ {MIN_SHAPE}, got {self.shape!r}")
        if not (np.isfinite(self.mean) and self.mean > 0):
            raise ValueError(f"mean must be positive, got {self.mean!r}")

    def from_uniform(self, u):
        """Inverse-CDF transform of uniforms in (0, 1)."""
        u = np.asarray(u, dtype=np.float64)
        if self.shape == 1:
            return -np.log1p(-u) * self.mean
        return gammaincinv(self.shape, u) * (self.mean / self.shape)

    def sample(self, master_seed: int, n: int, trial_offset: int = 0) -> np.ndarray:
        """``n`` i.i.d. draws, taking draw 0 of trials ``trial_offset .. trial_offset+n-1``."""
        trials = np.arange(trial_offset, trial_offset + n, dtype=np.uint64)
        return self.from_uniform(trial_uniforms(master_seed, trials, 1)[:, 0])


def sample_power(sampler: GammaSampler, rng: TrialRng, index: int = 0) -> float:
    """Draw number ``index`` of the trial stream, mapped to a Gamma power gain."""
    return float(sampler.from_uniform(rng.uniform(index)))
