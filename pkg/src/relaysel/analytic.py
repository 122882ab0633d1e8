"""Outage CDFs of Nakagami-m links under Gamma-distributed aggregate interference.

Two independent routes are provided for the per-hop SINR CDF:

* ``sinr_cdf_closed`` -- finite series valid for integer link shapes.
  Writing ``a = m/mean_snr``, ``b = m_I/mean_inr`` and ``s = m_I*L``,
  conditioning on the interference sum ``Y`` and expanding ``(1+Y)**i``
  binomially gives::

      1 - F(x) = sum_{i<m} e^{-a x} (a x)^i / i!
                 * b^s / Gamma(s) * sum_{j<=i} C(i,j) Gamma(j+s) (a x + b)^{-(j+s)}

  This is P(K < m) for a count K = Poisson(a x) + NegBin(s, q) with
  ``q = a x / (a x + b)``.  Grouping the double sum by the negative-binomial
  term gives::

      1 - F = sum_{j<m} NB(j) Q(m-j, a x)
      F     = sum_{j<m} NB(j) P(m-j, a x) + I_q(m, s)

  with P and Q the regularized incomplete Gamma functions and I the
  regularized incomplete Beta.  Both sides are sums of positive terms,
  so small CDF values keep full relative precision, which ``1 - tail``
  would not.  NB weights are formed in log space.
* ``sinr_cdf_quadrature`` -- adaptive quadrature of the conditional CDF
  against the interference density, valid for any real shapes.

The end-to-end outage probability of both selection rules is
``[F_S + F_D - F_S F_D]**N``.  For reactive selection this is not the CDF
of a single random variable: the same ``gamma`` is used both as the relay
decoding threshold and as the destination outage threshold.

The product form needs second-hop SINRs that are independent across
branches.  When a single destination interference sum is common to all
second hops, ``e2e_cdf_shared`` averages the conditional product over it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import betainc, gammainc, gammaincc, gammaincinv, gammaln

from .params import MIN_SHAPE, NetworkParams


class QuadratureError(RuntimeError):
    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class LinkFading:
    shape: float
    mean_snr: float

    def __post_init__(self):
        if not self.shape >= MIN_SHAPE:
            raise ValueError(f"shape must be ≥ {MIN_SHAPE}, got {self.shape!r}")
        if not (math.isfinite(self.mean_snr) and self.mean_snr > 0):
            raise ValueError(f"mean_snr must be positive, got {self.mean_snr!r}")

    @property
    def rate(self) -> float:
        return self.shape / self.mean_snr

    @property
    def integer_shape(self) -> bool:
        return float(self.shape).is_integer()


@dataclass(frozen=True)
class InterferenceProfile:
    """``count`` i.i.d. Nakagami interferers; ``mean_inr`` is ignored when ``count`` is 0."""

    count: int
    shape: float = 1.0
    mean_inr: float = 1.0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.count and not self.shape >= MIN_SHAPE:
            raise ValueError(f"shape must be ≥ {MIN_SHAPE}, got {self.shape!r}")
        if self.count and not (math.isfinite(self.mean_inr) and self.mean_inr > 0):
            raise ValueError(f"mean_inr must be positive, got {self.mean_inr!r}")

    @property
    def total_shape(self) -> float:
        return self.shape * self.count

    @property
    def rate(self) -> float:
        return self.shape / self.mean_inr


def _nonnegative(gamma) -> np.ndarray:
    g = np.asarray(gamma, dtype=np.float64)
    if np.any(g < 0) or np.any(np.isnan(g)):
        raise ValueError("gamma must be non-negative")
    return g


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _require_integer_shape(link: LinkFading):
    if not link.integer_shape:
        raise ValueError(
            f"closed form needs an integer shape, got {link.shape!r}; "
            "use sinr_cdf_quadrature or snr_cdf_regularized instead"
        )


def snr_pdf(link: LinkFading, gamma):
    g = _nonnegative(gamma)
    m, rate = link.shape, link.rate
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = m * np.log(rate) + (m - 1) * np.log(g) - rate * g - gammaln(m)
    out = np.exp(logpdf)
    if m == 1:
        out = np.where(g == 0, rate, out)
    return _scalar_or_array(out, gamma)


def _snr_tail(link: LinkFading, g: np.ndarray) -> np.ndarray:
    x = link.rate * g
    term = np.exp(-x)
    tail = term.copy()
    for i in range(1, int(link.shape)):
        term = term * x / i
        tail = tail + term
    return tail


def snr_cdf(link: LinkFading, gamma):
    """Finite-series Gamma CDF for integer shapes."""
    _require_integer_shape(link)
    return _scalar_or_array(1.0 - _snr_tail(link, _nonnegative(gamma)), gamma)


def snr_cdf_regularized(link: LinkFading, gamma):
    """Gamma CDF through the regularized lower incomplete Gamma function; any real shape."""
    return _scalar_or_array(gammainc(link.shape, link.rate * _nonnegative(gamma)), gamma)


def interference_sum_pdf(interf: InterferenceProfile, y):
    if interf.count == 0:
        raise ValueError("interference sum is identically 0 when count = 0")
    yy = _nonnegative(y)
    s, b = interf.total_shape, interf.rate
    with np.errstate(divide="ignore"):
        logpdf = s * np.log(b) + (s - 1) * np.log(yy) - b * yy - gammaln(s)
    out = np.exp(logpdf)
    if s == 1:
        out = np.where(yy == 0, b, out)
    return _scalar_or_array(out, y)


def _sinr_closed_pair(link: LinkFading, interf: InterferenceProfile, g: np.ndarray):
    """(CDF, survival) of the per-hop SINR for an integer link shape.

    Both are sums of non-negative terms, so neither loses relative
    precision in its small tail.
    """
    if interf.count == 0:
        tail = _snr_tail(link, g)
        return 1.0 - tail, tail
    m = int(link.shape)
    s, b = interf.total_shape, interf.rate
    x = link.rate * g
    q = x / (x + b)
    with np.errstate(divide="ignore"):
        log_q = np.log(q)
    log_p = np.log(b / (x + b))
    cdf = betainc(m, s, q)
    sf = np.zeros_like(x)
    for j in range(m):
        # Negative-binomial weight of j, computed in log space.
        weight = np.exp(gammaln(j + s) - gammaln(s) - math.lgamma(j + 1) + s * log_p + (j * log_q if j else 0.0))
        cdf = cdf + weight * gammainc(m - j, x)
        sf = sf + weight * gammaincc(m - j, x)
    return np.clip(cdf, 0.0, 1.0), np.clip(sf, 0.0, 1.0)


def sinr_cdf_closed(link: LinkFading, interf: InterferenceProfile, gamma):
    _require_integer_shape(link)
    if interf.count == 0:
        return snr_cdf(link, gamma)
    return _scalar_or_array(_sinr_closed_pair(link, interf, _nonnegative(gamma))[0], gamma)


def _interference_breakpoints(interf: InterferenceProfile):
    q = gammaincinv(interf.total_shape, [1e-6, 0.5, 1.0 - 1e-6]) / interf.rate
    return [float(v) for v in q]


def sinr_cdf_quadrature(
    link: LinkFading,
    interf: InterferenceProfile,
    gamma: float,
    epsabs: float = 0.0,
    epsrel: float = 1e-12,
    limit: int = 200,
) -> float:
    """P(link SNR / (1 + Y) < gamma) by adaptive quadrature over the interference sum Y."""
    g = float(_nonnegative(gamma))
    if g == 0:
        return 0.0
    if interf.count == 0:
        return float(snr_cdf_regularized(link, g))
    m, a = link.shape, link.rate

    def integrand(y):
        return gammainc(m, a * g * (1.0 + y)) * interference_sum_pdf(interf, y)

    return _integrate_over_interference(integrand, interf, g, epsabs, epsrel, limit)


def _integrate_over_interference(integrand, interf, g, epsabs, epsrel, limit=200) -> float:
    # Split at quantiles of Y so that peaked densities (large m_I * L) are resolved.
    edges = [0.0, *_interference_breakpoints(interf), np.inf]
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        # Convergence is judged below from the summed error estimate.
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, e = integrate.quad(integrand, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit)
            total += val
            err += e
    if err > 10 * max(epsabs, epsrel * abs(total)):
        raise QuadratureError(f"quadrature did not converge at gamma={g!r}", err)
    return min(max(total, 0.0), 1.0)


def sinr_cdf(link: LinkFading, interf: InterferenceProfile, gamma):
    """Closed series for integer shapes, quadrature otherwise (elementwise)."""
    return _scalar_or_array(_hop_cdf_sf(link, interf, gamma, quadrature=False)[0], gamma)


def _hop_cdf_sf(link, interf, gamma, quadrature):
    """(CDF, survival) pair; the survival comes straight from the series where one exists."""
    g = _nonnegative(gamma)
    if link.integer_shape and not quadrature:
        return _sinr_closed_pair(link, interf, g)
    if interf.count == 0:
        return gammainc(link.shape, link.rate * g), gammaincc(link.shape, link.rate * g)
    cdf = np.array([sinr_cdf_quadrature(link, interf, v) for v in np.ravel(g)]).reshape(g.shape)
    return cdf, 1.0 - cdf


@dataclass(frozen=True)
class CdfEvaluator:
    first_hop: LinkFading
    second_hop: LinkFading
    interf: InterferenceProfile
    n_branches: int
    shared_dest_interference: bool = False

    @classmethod
    def from_params(cls, params: NetworkParams) -> "CdfEvaluator":
        return cls(
            LinkFading(params.m_first, params.avg_snr_first),
            LinkFading(params.m_second, params.avg_snr_second),
            InterferenceProfile(params.n_interferers, params.m_interf, params.avg_inr),
            params.n_branches,
            params.shared_dest_interference,
        )

    def hop_cdfs(self, gamma, quadrature: bool = False):
        fs, _ = _hop_cdf_sf(self.first_hop, self.interf, gamma, quadrature)
        fd, _ = _hop_cdf_sf(self.second_hop, self.interf, gamma, quadrature)
        return _scalar_or_array(fs, gamma), _scalar_or_array(fd, gamma)

    def branch_cdf(self, gamma, quadrature: bool = False):
        """CDF of min(first-hop SINR, second-hop SINR) on one branch, F_S + F_D - F_S F_D.

        Evaluated as F_S + F_D S_S below 1/2 and as 1 - S_S S_D above, so
        that neither tail loses precision to cancellation.
        """
        fs, ss = _hop_cdf_sf(self.first_hop, self.interf, gamma, quadrature)
        fd, sd = _hop_cdf_sf(self.second_hop, self.interf, gamma, quadrature)
        both_survive = ss * sd
        out = np.where(both_survive < 0.5, 1.0 - both_survive, fs + fd * ss)
        return _scalar_or_array(out, gamma)


def _e2e(evaluator: CdfEvaluator, gamma, quadrature: bool):
    out = np.asarray(evaluator.branch_cdf(gamma, quadrature)) ** evaluator.n_branches
    return _scalar_or_array(out, gamma)


def e2e_cdf_rrs(evaluator: CdfEvaluator, gamma, quadrature: bool = False):
    """Reactive-selection outage probability when the decoding and outage thresholds both equal gamma."""
    return _e2e(evaluator, gamma, quadrature)


def e2e_cdf_prs(evaluator: CdfEvaluator, gamma, quadrature: bool = False):
    """CDF of the max-min statistic max_n min(first-hop SINR, second-hop SINR)."""
    return _e2e(evaluator, gamma, quadrature)


def _e2e_shared_scalar(evaluator: CdfEvaluator, g: float, epsabs: float, epsrel: float) -> float:
    if g == 0:
        return 0.0
    interf, second, n = evaluator.interf, evaluator.second_hop, evaluator.n_branches
    if interf.count == 0:
        return float(_e2e(evaluator, g, quadrature=False))
    fs = float(sinr_cdf(evaluator.first_hop, interf, g))

    def integrand(y):
        fd = gammainc(second.shape, second.rate * g * (1.0 + y))
        return (fs + fd - fs * fd) ** n * interference_sum_pdf(interf, y)

    return _integrate_over_interference(integrand, interf, g, epsabs, epsrel)


def e2e_cdf_shared(evaluator: CdfEvaluator, gamma, epsabs: float = 0.0, epsrel: float = 1e-10):
    """Outage probability when all second hops share one destination interference sum Y.

    Given Y the branches are independent, so the product form holds
    conditionally and is integrated against the density of Y.
    """
    g = _nonnegative(gamma)
    out = np.array([_e2e_shared_scalar(evaluator, float(v), epsabs, epsrel) for v in np.ravel(g)])
    return _scalar_or_array(out.reshape(g.shape), gamma)


def outage_probability(evaluator: CdfEvaluator, gamma):
    """Analytic outage probability of either rule for the evaluator's interference model."""
    if evaluator.shared_dest_interference:
        return e2e_cdf_shared(evaluator, gamma)
    return e2e_cdf_rrs(evaluator, gamma)
