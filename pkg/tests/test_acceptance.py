"""Acceptance criteria.  Each test prints one PASS/FAIL line, then asserts.

The eight Monte Carlo points are run once per session and shared between
the criteria that read them.
"""

import itertools
import math

import numpy as np
import pytest

from relaysel import cli
from relaysel.analytic import (
    CdfEvaluator,
    InterferenceProfile,
    LinkFading,
    e2e_cdf_prs,
    e2e_cdf_rrs,
    sinr_cdf_closed,
    sinr_cdf_quadrature,
    snr_cdf,
)
from relaysel.config import parse_config
from relaysel.montecarlo import run_trials
from relaysel.params import DecodingPolicy, NetworkParams, db_to_linear

pytestmark = pytest.mark.slow

N_TRIALS = 1_000_000
SEED = 1
GRID_DB = list(range(-10, 11, 2))
GRID = [db_to_linear(x) for x in GRID_DB]
KS_COEFF = 1.63  # alpha = 0.01

# (N, L, m, mean SNR in dB); mean INR 0 dB throughout.  Every level of
# every factor appears at least twice.
POINTS = [
    (1, 0, 1, 0),
    (1, 2, 2, 10),
    (2, 0, 2, 10),
    (2, 2, 1, 0),
    (4, 0, 1, 10),
    (4, 2, 2, 0),
    (4, 2, 1, 10),
    (4, 2, 2, 10),
]


def _params(n, l, m, snr_db, **kw):
    snr = db_to_linear(snr_db)
    return NetworkParams(
        n_branches=n,
        n_interferers=l,
        m_first=m,
        m_second=m,
        m_interf=m,
        avg_snr_first=snr,
        avg_snr_second=snr,
        avg_inr=1.0,
        outage_threshold=GRID[0],
        **kw,
    )


def _report(capsys, number, passed, detail):
    with capsys.disabled():
        print(f"\n[acceptance {number}] {'PASS' if passed else 'FAIL'}: {detail}")


@pytest.fixture(scope="session")
def mc_runs():
    return {pt: run_trials(_params(*pt), N_TRIALS, SEED, GRID) for pt in POINTS}


def test_1_outage_equivalence(mc_runs, capsys):
    pairs = len(POINTS) * N_TRIALS * len(GRID)
    mismatches = sum(r.pathwise_outage_mismatches for reports in mc_runs.values() for r in reports)
    passed = mismatches == 0
    _report(capsys, 1, passed, f"{mismatches} RRS/PRS outage mismatches in {pairs} (trial, threshold) pairs")
    assert passed


def test_2_sinr_dominance(mc_runs, capsys):
    violations = sum(r.pathwise_dominance_violations for reports in mc_runs.values() for r in reports)
    bad_rows = sum(not r.ser_rrs.mean <= r.ser_prs.mean for reports in mc_runs.values() for r in reports)
    passed = violations == 0 and bad_rows == 0
    _report(capsys, 2, passed, f"{violations} dominance violations, {bad_rows} rows with ser_rrs > ser_prs")
    assert passed


def test_3_closed_form_vs_quadrature(capsys):
    worst = 0.0
    count = 0
    for m, m_i, l, (snr, inr) in itertools.product(range(1, 5), range(1, 5), range(1, 5), [(1.0, 0.5), (10.0, 2.0)]):
        link, interf = LinkFading(m, snr), InterferenceProfile(l, m_i, inr)
        for frac in (0.01, 0.1, 0.5, 1.0, 3.0):
            g = frac * snr
            quad = sinr_cdf_quadrature(link, interf, g)
            worst = max(worst, abs(sinr_cdf_closed(link, interf, g) - quad) / quad)
            count += 1

    g = np.logspace(-3, 2, 200)
    ulps = 0.0
    for m in range(1, 5):
        link = LinkFading(m, 3.0)
        reduced = sinr_cdf_closed(link, InterferenceProfile(0), g)
        direct = snr_cdf(link, g)
        ulps = max(ulps, float(np.max(np.abs(reduced - direct) / np.spacing(direct))))

    passed = count >= 500 and worst <= 1e-9 and ulps <= 2
    _report(capsys, 3, passed, f"max relative error {worst:.3g} over {count} points; no-interference reduction within {ulps:g} ulp")
    assert passed


def test_4_e2e_identity(capsys):
    g = np.logspace(-3, 3, 400)
    worst = 0.0
    for n, l, m, snr_db in itertools.product([1, 2, 4], [0, 2], [1, 2, 3], [0, 10, 20]):
        ev = CdfEvaluator.from_params(_params(n, l, m, snr_db))
        a, b = e2e_cdf_rrs(ev, g), e2e_cdf_prs(ev, g)
        scale = np.spacing(np.maximum(np.abs(a), np.finfo(float).tiny))
        worst = max(worst, float(np.max(np.abs(a - b) / scale)))
    passed = worst <= 1
    _report(capsys, 4, passed, f"max RRS/PRS outage-formula gap {worst:g} ulp")
    assert passed


def test_5_simulation_vs_analytic(mc_runs, capsys):
    bound = KS_COEFF / math.sqrt(N_TRIALS)
    lines = []
    passed = True
    for pt, reports in mc_runs.items():
        ev = CdfEvaluator.from_params(_params(*pt))
        within = 0
        for r in reports:
            p = float(e2e_cdf_rrs(ev, r.threshold))
            se = math.sqrt(p * (1.0 - p) / N_TRIALS)
            within += abs(r.outage_rrs.estimate - p) <= 3 * se
        ks = reports[0].ks_distance_prs
        ok = within >= 0.95 * len(reports) and ks < bound
        passed &= ok
        lines.append(f"{pt}: {within}/{len(reports)} within 3 SE, KS {ks:.2e}")
    _report(capsys, 5, passed, f"KS bound {bound:.2e}; " + "; ".join(lines))
    assert passed


def test_6_mld_proxy_direction(capsys):
    params = _params(4, 2, 1, 10, decoding_policy=DecodingPolicy.MLD_PROXY, packet_length=128)
    reports = run_trials(params, N_TRIALS, SEED, GRID, compute_ks=False)
    never_worse = all(
        r.pathwise_dominance_violations == 0 and r.paired_gap.mean >= -3 * r.paired_gap.std_error for r in reports
    )
    band = [r for th_db, r in zip(GRID_DB, reports) if -5 <= th_db <= 5]
    z_scores = [r.paired_gap.mean / r.paired_gap.std_error if r.paired_gap.std_error > 0 else 0.0 for r in band]
    passed = never_worse and max(z_scores) > 5
    _report(capsys, 6, passed, f"PRS >= RRS at all {len(reports)} thresholds: {never_worse}; largest gap in -5..5 dB {max(z_scores):.1f} SE")
    assert passed


def test_7_validate_is_thread_independent(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(cli.default_config_text())
    outputs = {}
    for threads in (1, 2, 8):
        out = tmp_path / f"t{threads}.csv"
        code = cli.main(["validate", "--config", str(cfg), "--out", str(out), "--threads", str(threads), "--seed", "1"])
        assert code == cli.EXIT_OK
        outputs[threads] = out.read_bytes() + (tmp_path / f"t{threads}.csv.summary.txt").read_bytes()
    capsys.readouterr()
    passed = outputs[1] == outputs[2] == outputs[8]
    trials = parse_config(cli.default_config_text()).n_trials
    _report(capsys, 7, passed, f"validate output bytewise identical for threads 1, 2, 8 ({trials} trials)")
    assert passed
