import math

import numpy as np
import pytest
from scipy import stats

from relaysel.analytic import CdfEvaluator, e2e_cdf_rrs, e2e_cdf_shared
from relaysel.montecarlo import (
    SimulationError,
    ks_statistic,
    run_trials,
    ser_map,
    wilson_interval,
)
from relaysel.params import DecodingPolicy, NetworkParams, db_to_linear

Q_SQRT2 = 0.0786496035251425653293896824587  # Q(sqrt(2)), mpmath


def make_params(**kw):
    base = dict(
        n_branches=3,
        n_interferers=2,
        m_first=1,
        m_second=1,
        m_interf=1,
        avg_snr_first=10.0,
        avg_snr_second=10.0,
        avg_inr=1.0,
        outage_threshold=1.0,
    )
    base.update(kw)
    return NetworkParams(**base)


GRID = [db_to_linear(x) for x in (-10, -5, 0, 5, 10)]


# -- ser_map ------------------------------------------------------------------


def test_ser_map_values():
    assert ser_map(0.0) == 0.5
    assert ser_map(1.0) == pytest.approx(Q_SQRT2, rel=1e-14)
    assert ser_map(np.inf) == 0.0


def test_ser_map_monotone_and_vectorized():
    g = np.logspace(-6, 2, 500)
    s = ser_map(g)
    assert isinstance(s, np.ndarray)
    assert np.all(np.diff(s) <= 0)
    assert np.all((s >= 0) & (s <= 0.5))


def test_ser_map_rejects_negative():
    with pytest.raises(ValueError):
        ser_map(-1e-3)


# -- Wilson interval ----------------------------------------------------------


def test_wilson_interval_reference():
    # Reference: statsmodels proportion_confint(method='wilson').
    p = wilson_interval(10, 100)
    assert p.estimate == 0.1
    assert p.ci_lo == pytest.approx(0.0552291370606751, rel=1e-9)
    assert p.ci_hi == pytest.approx(0.17436566150491348, rel=1e-9)


@pytest.mark.parametrize("k", [0, 1, 50, 99, 100])
def test_wilson_interval_brackets(k):
    p = wilson_interval(k, 100)
    assert 0.0 <= p.ci_lo <= p.estimate <= p.ci_hi <= 1.0
    assert p.ci_hi > p.ci_lo


# -- KS statistic -------------------------------------------------------------


def test_ks_single_sample_at_median():
    assert ks_statistic([0.0], stats.norm.cdf) == pytest.approx(0.5)


def test_ks_constant_samples():
    c = 0.3
    d = ks_statistic(np.full(50, c), stats.expon.cdf)
    assert d >= 1 - stats.expon.cdf(c) - 1e-15


def test_ks_empty_raises():
    with pytest.raises(ValueError):
        ks_statistic([], stats.norm.cdf)


def test_ks_matches_scipy():
    x = np.sort(stats.expon.rvs(size=2000, random_state=np.random.default_rng(5)))
    ours = ks_statistic(x, stats.expon.cdf)
    ref = stats.kstest(x, stats.expon.cdf).statistic
    assert ours == pytest.approx(ref, abs=1e-15)


# -- run_trials ---------------------------------------------------------------


def test_run_trials_pathwise_invariants():
    reports = run_trials(make_params(), 50_000, 3, GRID)
    assert [r.threshold for r in reports] == GRID
    for r in reports:
        assert r.pathwise_outage_mismatches == 0
        assert r.pathwise_dominance_violations == 0
        assert r.outage_rrs.estimate == r.outage_prs.estimate
        assert r.ser_prs.mean >= r.ser_rrs.mean
        assert sum(r.decoding_set_histogram) == r.n_trials
        assert len(r.decoding_set_histogram) == 4


def test_tiny_threshold_means_no_outage():
    (r,) = run_trials(make_params(), 20_000, 4, [1e-9])
    assert r.outage_rrs.estimate == pytest.approx(0.0, abs=1e-3)
    assert r.decoding_set_histogram[-1] > 0.99 * r.n_trials


@pytest.mark.slow
def test_million_trials_match_e2e_cdf():
    p = make_params()
    (r,) = run_trials(p, 1_000_000, 11, [1.0])
    ref = float(e2e_cdf_rrs(CdfEvaluator.from_params(p), 1.0))
    se = math.sqrt(ref * (1 - ref) / r.n_trials)
    assert abs(r.outage_rrs.estimate - ref) < 3 * se
    assert r.ks_distance_prs < 1.63 / math.sqrt(r.n_trials)


def test_shared_interference_matches_its_oracle():
    p = make_params(n_branches=4, shared_dest_interference=True)
    grid = [0.5, 1.0, 2.0]
    reports = run_trials(p, 200_000, 21, grid)
    ev = CdfEvaluator.from_params(p)
    for r in reports:
        ref = float(e2e_cdf_shared(ev, r.threshold))
        se = math.sqrt(ref * (1 - ref) / r.n_trials)
        assert abs(r.outage_rrs.estimate - ref) < 4 * se
    assert reports[0].ks_distance_prs < 1.63 / math.sqrt(200_000)


@pytest.mark.parametrize("threads", [2, 8])
def test_thread_count_does_not_change_results(threads):
    p = make_params(m_first=2, m_second=3)
    one = run_trials(p, 70_000, 9, GRID, threads=1, block_size=8192)
    many = run_trials(p, 70_000, 9, GRID, threads=threads, block_size=8192)
    assert one == many


def test_block_size_does_not_change_counts():
    p = make_params()
    a = run_trials(p, 30_000, 9, GRID, block_size=1000, compute_ks=False)
    b = run_trials(p, 30_000, 9, GRID, block_size=30_000, compute_ks=False)
    for x, y in zip(a, b):
        assert x.outage_rrs == y.outage_rrs
        assert x.decoding_set_histogram == y.decoding_set_histogram
        assert x.ser_rrs.mean == pytest.approx(y.ser_rrs.mean, rel=1e-12)


def test_seed_changes_results():
    p = make_params()
    a = run_trials(p, 10_000, 1, [1.0], compute_ks=False)
    b = run_trials(p, 10_000, 2, [1.0], compute_ks=False)
    assert a != b


def test_mld_proxy_prs_not_worse():
    p = make_params(n_branches=4, decoding_policy=DecodingPolicy.MLD_PROXY)
    reports = run_trials(p, 100_000, 5, GRID, compute_ks=False)
    for r in reports:
        assert r.pathwise_dominance_violations == 0
        assert r.outage_prs.estimate >= r.outage_rrs.estimate
        gap = r.paired_gap
        assert gap.mean == pytest.approx(r.outage_prs.estimate - r.outage_rrs.estimate, abs=1e-12)
    # Some threshold shows a real gap.
    assert max(r.paired_gap.mean / r.paired_gap.std_error for r in reports if r.paired_gap.std_error > 0) > 5


def test_no_interferers():
    p = make_params(n_interferers=0, avg_inr=0.0, m_first=2, m_second=2)
    reports = run_trials(p, 50_000, 8, GRID)
    ev = CdfEvaluator.from_params(p)
    for r in reports:
        ref = float(e2e_cdf_rrs(ev, r.threshold))
        se = max(math.sqrt(ref * (1 - ref) / r.n_trials), 1e-12)
        assert abs(r.outage_rrs.estimate - ref) < 4 * se + 1e-12


def test_custom_ser_callable():
    (r,) = run_trials(make_params(), 5_000, 1, [1.0], ser=lambda g: (g > 0).astype(float), compute_ks=False)
    assert r.ser_rrs.mean == pytest.approx(1 - r.decoding_set_histogram[0] / r.n_trials)


@pytest.mark.parametrize(
    "kwargs",
    [dict(n_trials=0), dict(threshold_grid=[]), dict(threshold_grid=[0.0]), dict(threshold_grid=[math.inf])],
)
def test_run_trials_argument_errors(kwargs):
    args = dict(params=make_params(), n_trials=10, master_seed=1, threshold_grid=[1.0])
    args.update(kwargs)
    with pytest.raises(ValueError):
        run_trials(**args)


def test_invalid_params_rejected():
    from relaysel.params import ParamsError

    with pytest.raises(ParamsError):
        run_trials(make_params(n_branches=0), 10, 1, [1.0])


def test_memory_error_becomes_simulation_error(monkeypatch):
    import relaysel.montecarlo as mc

    def boom(*a, **k):
        raise MemoryError

    monkeypatch.setattr(mc, "_run_block", boom)
    with pytest.raises(SimulationError):
        run_trials(make_params(), 10, 1, [1.0])
