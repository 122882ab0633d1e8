"""``relaysel-sim``: batch outage sweeps and validation of the selection invariants.

Exit status: 0 success, 1 invariant failure, 2 config error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from importlib import resources
from typing import Optional

import numpy as np

from .analytic import CdfEvaluator, e2e_cdf_prs, e2e_cdf_rrs, outage_probability
from .config import ConfigError, Mode, RunConfig, parse_config
from .montecarlo import SimulationError, run_trials
from .params import DecodingPolicy, ParamsError, db_to_linear, validate

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

KS_COEFF_ALPHA_01 = 1.63
CLOSED_FORM_RTOL = 1e-9
SE_MULTIPLE = 3.0
SE_PASS_FRACTION = 0.95

SIM_COLUMNS = [
    "threshold_db",
    "outage_rrs", "outage_rrs_ci_lo", "outage_rrs_ci_hi",
    "outage_prs", "outage_prs_ci_lo", "outage_prs_ci_hi",
    "ser_rrs", "ser_rrs_se", "ser_prs", "ser_prs_se",
    "mismatches", "violations", "ks_distance_prs", "n_trials",
]
ANALYTIC_COLUMNS = ["threshold_db", "cdf_rrs", "cdf_prs", "cdf_quadrature"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    # repr gives the shortest string that round-trips.
    return repr(float(value))


def _simulate_rows(reports, grid_db):
    for th_db, r in zip(grid_db, reports):
        yield {
            "threshold_db": th_db,
            "outage_rrs": r.outage_rrs.estimate,
            "outage_rrs_ci_lo": r.outage_rrs.ci_lo,
            "outage_rrs_ci_hi": r.outage_rrs.ci_hi,
            "outage_prs": r.outage_prs.estimate,
            "outage_prs_ci_lo": r.outage_prs.ci_lo,
            "outage_prs_ci_hi": r.outage_prs.ci_hi,
            "ser_rrs": r.ser_rrs.mean,
            "ser_rrs_se": r.ser_rrs.std_error,
            "ser_prs": r.ser_prs.mean,
            "ser_prs_se": r.ser_prs.std_error,
            "mismatches": r.pathwise_outage_mismatches,
            "violations": r.pathwise_dominance_violations,
            "ks_distance_prs": r.ks_distance_prs,
            "n_trials": r.n_trials,
        }


def _analytic_columns(params, grid):
    ev = CdfEvaluator.from_params(params)
    g = np.asarray(grid)
    cols = {
        "cdf_rrs": np.asarray(e2e_cdf_rrs(ev, g)),
        "cdf_prs": np.asarray(e2e_cdf_prs(ev, g)),
        "cdf_quadrature": np.asarray(e2e_cdf_rrs(ev, g, quadrature=True)),
    }
    if params.shared_dest_interference:
        cols["outage_model"] = np.asarray(outage_probability(ev, g))
    return cols


def _checks_for_point(params, rows, n_trials, label) -> list[Check]:
    """Invariant checks for one sweep point; ``rows`` carry simulation and analytic columns."""
    suffix = f" [{label}]" if label else ""
    checks = []
    have_sim = "outage_rrs" in rows[0]
    have_analytic = "cdf_rrs" in rows[0]
    outage_rule = params.decoding_policy is DecodingPolicy.OUTAGE_THRESHOLD

    if have_sim:
        if outage_rule:
            total = sum(r["mismatches"] for r in rows)
            checks.append(Check("outage_equivalence" + suffix, total == 0, f"{total} RRS/PRS outage mismatches"))
        else:
            worse = [r["threshold_db"] for r in rows if r["outage_rrs"] > r["outage_prs"]]
            checks.append(Check("mld_rrs_not_worse" + suffix, not worse, f"RRS outage above PRS at {worse or 'no'} thresholds"))
        total = sum(r["violations"] for r in rows)
        checks.append(Check("sinr_dominance" + suffix, total == 0, f"{total} trials with RRS SINR below PRS"))
        bad = [r["threshold_db"] for r in rows if not r["ser_rrs"] <= r["ser_prs"]]
        checks.append(Check("ser_ordering" + suffix, not bad, f"ser_rrs > ser_prs at {bad or 'no'} thresholds"))
        ks = rows[0]["ks_distance_prs"]
        bound = KS_COEFF_ALPHA_01 / math.sqrt(n_trials)
        checks.append(Check("ks_max_min" + suffix, ks < bound, f"D={ks:.6g} vs bound {bound:.6g}"))

    if have_analytic:
        same = all(r["cdf_rrs"] == r["cdf_prs"] for r in rows)
        checks.append(Check("e2e_identity" + suffix, same, "RRS and PRS outage formulas agree" if same else "formulas differ"))
        worst = max(abs(r["cdf_rrs"] - r["cdf_quadrature"]) / max(r["cdf_quadrature"], 1e-300) for r in rows)
        checks.append(Check("closed_vs_quadrature" + suffix, worst <= CLOSED_FORM_RTOL, f"max relative gap {worst:.3g}"))

    if have_sim and have_analytic and outage_rule:
        key = "outage_model" if "outage_model" in rows[0] else "cdf_rrs"
        ok = 0
        for r in rows:
            p = r[key]
            se = math.sqrt(p * (1.0 - p) / n_trials)
            if abs(r["outage_rrs"] - p) <= SE_MULTIPLE * se:
                ok += 1
        passed = ok >= SE_PASS_FRACTION * len(rows)
        checks.append(Check("simulation_vs_analytic" + suffix, passed, f"{ok}/{len(rows)} thresholds within 3 SE"))
    return checks


def execute(config: RunConfig, threads: int = 1):
    """Run every sweep point; returns ``(columns, rows, checks)``."""
    mode = config.mode
    rows, checks = [], []
    sweep_col = [config.sweep.field] if config.sweep and config.sweep.field != "outage_threshold_db" else []
    for sweep_value, params, grid_db in config.sweep_points():
        validate(params)
        grid = [db_to_linear(x) for x in grid_db]
        point_rows = [{"threshold_db": x} for x in grid_db]
        if mode in (Mode.SIMULATE, Mode.VALIDATE):
            reports = run_trials(params, config.n_trials, config.master_seed, grid, threads=threads)
            for row, sim in zip(point_rows, _simulate_rows(reports, grid_db)):
                row.update(sim)
        if mode in (Mode.ANALYTIC, Mode.VALIDATE):
            cols = _analytic_columns(params, grid)
            for k, row in enumerate(point_rows):
                row.update({name: float(v[k]) for name, v in cols.items()})
        if mode is Mode.VALIDATE:
            label = f"{sweep_col[0]}={sweep_value!r}" if sweep_col else ""
            checks.extend(_checks_for_point(params, point_rows, config.n_trials, label))
        for row in point_rows:
            if sweep_col:
                row[sweep_col[0]] = sweep_value
            rows.append(row)

    columns = list(sweep_col)
    if mode in (Mode.SIMULATE, Mode.VALIDATE):
        columns += SIM_COLUMNS
    if mode in (Mode.ANALYTIC, Mode.VALIDATE):
        columns += [c for c in ANALYTIC_COLUMNS if c not in columns]
        if config.params.shared_dest_interference:
            columns.append("outage_model")
    return columns, rows, checks


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(config, columns, rows, checks) -> str:
    doc = {
        "mode": config.mode.value,
        "master_seed": config.master_seed,
        "n_trials": config.n_trials,
        "columns": columns,
        "rows": [[row.get(c) for c in columns] for row in rows],
    }
    if config.mode is Mode.VALIDATE:
        doc["summary"] = [{"check": c.name, "passed": c.passed, "detail": c.detail} for c in checks]
    return json.dumps(doc, indent=2) + "\n"


def render_summary(checks) -> str:
    failed = sum(not c.passed for c in checks)
    lines = [c.line() for c in checks]
    lines.append(f"{len(checks) - failed}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"


def run(config: RunConfig, threads: int = 1, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        columns, rows, checks = execute(config, threads)
    except (ParamsError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_IO

    if config.output_format == "json":
        payload = render_json(config, columns, rows, checks)
    else:
        payload = render_csv(columns, rows)
    summary = render_summary(checks) if config.mode is Mode.VALIDATE else ""
    try:
        if config.output_path:
            with open(config.output_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(payload)
            if summary and config.output_format == "csv":
                with open(config.output_path + ".summary.txt", "w", encoding="utf-8") as fh:
                    fh.write(summary)
        else:
            stdout.write(payload)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=stderr)
        return EXIT_IO
    if summary:
        stderr.write(summary)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print(f"invariant failure: {', '.join(failed)}", file=stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def default_config_text() -> str:
    return resources.files("relaysel").joinpath("default.cfg").read_text(encoding="utf-8")


def _resolve_threads(flag: Optional[int]) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("RELAYSEL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"RELAYSEL_THREADS must be an integer, got {env!r}") from None
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaysel-sim",
        description="Outage and SER of reactive vs proactive relay selection under co-channel interference.",
    )
    parser.add_argument("mode", choices=[m.value for m in Mode], help="what to compute")
    parser.add_argument("--config", help="run configuration (key = value lines); built-in default if omitted")
    parser.add_argument("--out", help="output file (stdout if omitted)")
    parser.add_argument("--seed", type=int, help="override master_seed")
    parser.add_argument("--trials", type=int, help="override n_trials")
    parser.add_argument("--threads", type=int, help="worker threads (default: $RELAYSEL_THREADS or 1)")
    parser.add_argument("--format", choices=["csv", "json"], help="override output format")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = default_config_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        config = parse_config(text)
        overrides = {"mode": Mode(args.mode)}
        if args.out:
            overrides["output_path"] = args.out
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be a 64-bit unsigned integer")
            overrides["master_seed"] = args.seed
        if args.trials is not None:
            if args.trials < 1:
                raise ConfigError("--trials must be ≥ 1")
            overrides["n_trials"] = args.trials
        if args.format:
            overrides["output_format"] = args.format
        threads = _resolve_threads(args.threads)
        if threads < 1:
            raise ConfigError("--threads must be ≥ 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(replace(config, **overrides), threads=threads)


if __name__ == "__main__":
    sys.exit(main())
