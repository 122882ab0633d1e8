"""Deterministic Monte Carlo engine for reactive vs proactive selection.

Trials are processed in fixed blocks of consecutive trial indices.  Every
block is a pure function of ``(params, master_seed, block range,
thresholds)``, and per-block tallies are reduced in block order.  The
worker count therefore cannot change any result.

A trial's channel is drawn once and re-used for every threshold on the
grid, and both strategies see the same draws.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import erfc

from .analytic import CdfEvaluator, e2e_cdf_prs, outage_probability
from .network import mld_decoded_block, prs_choice_block, realize_block, rrs_block
from .params import DecodingPolicy, NetworkParams, validate

WILSON_Z = 1.959963984540054
DEFAULT_BLOCK_SIZE = 1 << 16


class SimulationError(RuntimeError):
    pass


def ser_map(gamma):
    """Symbol error probability of antipodal signaling, Q(sqrt(2*gamma)); 1/2 at gamma = 0."""
    g = np.asarray(gamma, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("SINR must be non-negative")
    out = 0.5 * erfc(np.sqrt(g))
    return float(out) if np.ndim(gamma) == 0 else out


@dataclass(frozen=True)
class Proportion:
    estimate: float
    ci_lo: float
    ci_hi: float


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    std_error: float


def wilson_interval(successes: int, n: int, z: float = WILSON_Z) -> Proportion:
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n))
    # Clamp to the point estimate so rounding cannot leave it outside its own interval.
    return Proportion(p, min(p, max(0.0, center - half)), max(p, min(1.0, center + half)))


def _mean_estimate(total: float, total_sq: float, n: int) -> MeanEstimate:
    mean = total / n
    if n < 2:
        return MeanEstimate(mean, math.nan)
    var = max(total_sq - total * total / n, 0.0) / (n - 1)
    return MeanEstimate(mean, math.sqrt(var / n))


@dataclass(frozen=True)
class TrialReport:
    threshold: float
    n_trials: int
    outage_rrs: Proportion
    outage_prs: Proportion
    ser_rrs: MeanEstimate
    ser_prs: MeanEstimate
    pathwise_outage_mismatches: int
    pathwise_dominance_violations: int
    decoding_set_histogram: tuple
    ks_distance_prs: Optional[float]

    @property
    def paired_gap(self) -> MeanEstimate:
        """PRS-minus-RRS outage difference with its paired standard error."""
        # Under pathwise dominance every mismatch is a PRS-only outage.
        d = self.pathwise_outage_mismatches
        return _mean_estimate(float(d), float(d), self.n_trials)


@dataclass
class _BlockTally:
    out_rrs: np.ndarray
    out_prs: np.ndarray
    mismatches: np.ndarray
    violations: np.ndarray
    histogram: np.ndarray  # (n_thresholds, N + 1)
    ser_rrs: np.ndarray
    ser_rrs_sq: np.ndarray
    ser_prs: np.ndarray
    ser_prs_sq: np.ndarray
    max_min: np.ndarray


def _run_block(params, master_seed, start, stop, thresholds, ser) -> _BlockTally:
    block = realize_block(params, master_seed, np.arange(start, stop, dtype=np.uint64))
    first, second = block.first_hop_sinr, block.second_hop_sinr
    n_rows = first.shape[0]
    prs_relay, max_min = prs_choice_block(first, second)
    prs_first = first[np.arange(n_rows), prs_relay]
    prs_second = second[np.arange(n_rows), prs_relay]
    mld = params.decoding_policy is DecodingPolicy.MLD_PROXY
    if mld:
        decoded_mld = mld_decoded_block(block, params.packet_length)
        prs_ok_mld = decoded_mld[np.arange(n_rows), prs_relay]

    k = len(thresholds)
    tally = _BlockTally(
        *(np.zeros(k, dtype=np.int64) for _ in range(4)),
        np.zeros((k, params.n_branches + 1), dtype=np.int64),
        *(np.zeros(k) for _ in range(4)),
        max_min,
    )
    for t, th in enumerate(thresholds):
        decoded = decoded_mld if mld else first > th
        _, eff_rrs = rrs_block(second, decoded)
        prs_ok = prs_ok_mld if mld else prs_first > th
        eff_prs = np.where(prs_ok, prs_second, 0.0)
        out_rrs = ~(eff_rrs > th)
        out_prs = ~(eff_prs > th)
        tally.out_rrs[t] = np.count_nonzero(out_rrs)
        tally.out_prs[t] = np.count_nonzero(out_prs)
        tally.mismatches[t] = np.count_nonzero(out_rrs != out_prs)
        tally.violations[t] = np.count_nonzero(eff_rrs < eff_prs)
        tally.histogram[t] = np.bincount(decoded.sum(axis=1), minlength=params.n_branches + 1)
        s_rrs, s_prs = ser(eff_rrs), ser(eff_prs)
        tally.ser_rrs[t] = np.sum(s_rrs)
        tally.ser_rrs_sq[t] = np.sum(s_rrs * s_rrs)
        tally.ser_prs[t] = np.sum(s_prs)
        tally.ser_prs_sq[t] = np.sum(s_prs * s_prs)
    return tally


def ks_statistic(samples, cdf: Callable) -> float:
    """Two-sided Kolmogorov-Smirnov distance between sorted samples and a CDF."""
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    if n == 0:
        raise ValueError("ks_statistic needs at least one sample")
    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def _max_min_cdf(evaluator: CdfEvaluator, samples: np.ndarray) -> Callable:
    """CDF of the max-min statistic, exact for integer shapes, else interpolated from quadrature."""
    closed = evaluator.first_hop.integer_shape and evaluator.second_hop.integer_shape
    if closed and not evaluator.shared_dest_interference:
        return lambda x: e2e_cdf_prs(evaluator, x)
    # Quadrature per sample is too slow; interpolate a dense quadrature grid.
    grid = np.unique(np.quantile(samples, np.linspace(0.0, 1.0, 2049)))
    values = np.asarray(outage_probability(evaluator, grid))
    return lambda x: np.interp(x, grid, values)


def run_trials(
    params: NetworkParams,
    n_trials: int,
    master_seed: int,
    threshold_grid: Sequence[float],
    threads: int = 1,
    ser: Callable = ser_map,
    block_size: int = DEFAULT_BLOCK_SIZE,
    compute_ks: bool = True,
) -> list[TrialReport]:
    """One :class:`TrialReport` per threshold, in grid order.

    ``params.outage_threshold`` is ignored; every grid value acts as both
    the decoding and the outage threshold.
    """
    validate(params)
    if n_trials < 1:
        raise ValueError("n_trials must be ≥ 1")
    thresholds = [float(t) for t in threshold_grid]
    if not thresholds or any(not (math.isfinite(t) and t > 0) for t in thresholds):
        raise ValueError("threshold grid must be nonempty with positive finite values")
    bounds = [(s, min(s + block_size, n_trials)) for s in range(0, n_trials, block_size)]

    def work(bound):
        return _run_block(params, master_seed, bound[0], bound[1], thresholds, ser)

    try:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                tallies = list(pool.map(work, bounds))
        else:
            tallies = [work(b) for b in bounds]
    except MemoryError as exc:
        raise SimulationError(f"out of memory running {n_trials} trials; reduce n_trials or block_size") from exc

    ks = None
    if compute_ks:
        samples = np.sort(np.concatenate([t.max_min for t in tallies]))
        evaluator = CdfEvaluator.from_params(params)
        ks = ks_statistic(samples, _max_min_cdf(evaluator, samples))

    reports = []
    for k, th in enumerate(thresholds):
        def total(name):
            return int(sum(int(getattr(t, name)[k]) for t in tallies))

        def fsum(name):
            return math.fsum(float(getattr(t, name)[k]) for t in tallies)

        hist = np.sum([t.histogram[k] for t in tallies], axis=0)
        reports.append(
            TrialReport(
                threshold=th,
                n_trials=n_trials,
                outage_rrs=wilson_interval(total("out_rrs"), n_trials),
                outage_prs=wilson_interval(total("out_prs"), n_trials),
                ser_rrs=_mean_estimate(fsum("ser_rrs"), fsum("ser_rrs_sq"), n_trials),
                ser_prs=_mean_estimate(fsum("ser_prs"), fsum("ser_prs_sq"), n_trials),
                pathwise_outage_mismatches=total("mismatches"),
                pathwise_dominance_violations=total("violations"),
                decoding_set_histogram=tuple(int(v) for v in hist),
                ks_distance_prs=ks,
            )
        )
    return reports
