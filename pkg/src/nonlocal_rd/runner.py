"""Plan execution, time-series persistence and the dichotomy preset."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import monitors
from .config import ExperimentPlan, RunConfig
from .errors import NotApplicableError, UnsupportedPresetError
from .exponents import RegimeReport, classify
from .field import Gaussian
from .monitors import TimeSeriesRecord, lookup
from .stepper import Inconclusive, advance, verdict_from_dict, verdict_to_dict

log = logging.getLogger(__name__)

FIXED_COLUMNS = (
    "t", "dt", "mass_beta", "norm_beta", "norm_crit", "sup",
    "clipped_mass_cum", "boundary_shell_mass",
)


def _fmt(x):
    return format(x, ".17g")


# -- CSV time series ------------------------------------------------------


def write_series(path, series, beta, crit):
    """Fixed columns, then ``norm_<k>`` for each extra k and ``grad_<k>`` for every k."""
    ks = list(series[0].norm_k) if series else []
    extra = [k for k in ks if not (math.isclose(k, beta) or math.isclose(k, crit))]
    header = list(FIXED_COLUMNS) + [f"norm_{k!r}" for k in extra] + [f"grad_{k!r}" for k in ks]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in series:
            row = [getattr(r, c) for c in FIXED_COLUMNS]
            row += [lookup(r.norm_k, k) for k in extra]
            row += [lookup(r.grad_energy_k, k) for k in ks]
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_series(path, beta, crit):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        vals = {c: float(row[c]) for c in FIXED_COLUMNS}
        norm_k = {float(beta): vals["mass_beta"], float(crit): vals["norm_crit"]}
        grad = {}
        for col, v in row.items():
            if col.startswith("norm_") and col not in FIXED_COLUMNS:
                norm_k[float(col[5:])] = float(v)
            elif col.startswith("grad_"):
                grad[float(col[5:])] = float(v)
        out.append(TimeSeriesRecord(**vals, norm_k=norm_k, grad_energy_k=grad))
    return out


# -- summaries ------------------------------------------------------------


@dataclass
class RunSummary:
    name: str
    spec: dict
    regime: RegimeReport
    verdict: object
    invariants: list = field(default_factory=list)
    wall_time: float = 0.0
    truncation: dict = field(default_factory=dict)
    steps: int = 0
    rejected: int = 0

    @property
    def violated(self):
        return any(not r["holds"] for r in self.invariants)

    def to_dict(self):
        return {
            "name": self.name,
            "spec": self.spec,
            "regime": self.regime.to_dict(),
            "verdict": verdict_to_dict(self.verdict),
            "invariants": self.invariants,
            "wall_time": self.wall_time,
            "truncation": self.truncation,
            "steps": self.steps,
            "rejected": self.rejected,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["regime"] = RegimeReport.from_dict(d["regime"])
        d["verdict"] = verdict_from_dict(d["verdict"])
        return cls(**d)


def invariant_reports(series, verdict, sigma, beta, ks=()):
    """Every check that applies to a run with this verdict."""
    reports = []
    if verdict.kind != "Global":
        return reports
    if sigma > 0:
        reports.append(monitors.lbeta_cap_check(series, sigma, beta))
        reports.append(monitors.lbeta_decrease_check(series, sigma))
    try:
        reports.append(monitors.uniform_bound_check(series, ks, verdict=verdict))
    except NotApplicableError as exc:
        log.info("uniform bound check skipped: %s", exc)
    return [r.to_dict() for r in reports]


def execute_run(run: RunConfig, out_dir=None):
    """Run one configuration; write ``<name>.csv`` and ``<name>.json`` if ``out_dir``."""
    start = time.perf_counter()
    regime = classify(run.n, run.alpha, run.beta)
    prob = run.problem()
    try:
        outcome = advance(prob, run.controls(), ks=run.ks)
        series, verdict = outcome.series, outcome.verdict
        steps, rejected = outcome.steps, outcome.rejected
    except Exception as exc:  # recorded, never propagated: one bad run must not sink a plan
        log.exception("run %s failed", run.name)
        series, verdict, steps, rejected = [], Inconclusive(f"{type(exc).__name__}: {exc}"), 0, 0
    crit = prob.crit_exponent
    summary = RunSummary(
        name=run.name,
        spec=run.to_dict(),
        regime=regime,
        verdict=verdict,
        invariants=invariant_reports(series, verdict, run.sigma, run.beta, run.ks)
        if series else [],
        truncation={
            "boundary_shell_mass_max": max((r.boundary_shell_mass for r in series), default=0.0),
            "boundary_shell_mass_final": series[-1].boundary_shell_mass if series else 0.0,
            "clipped_mass_cum": series[-1].clipped_mass_cum if series else 0.0,
        },
        steps=steps,
        rejected=rejected,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            if series:
                write_series(out_dir / f"{run.name}.csv", series, run.beta, crit)
            summary.wall_time = time.perf_counter() - start
            (out_dir / f"{run.name}.json").write_text(
                json.dumps(summary.to_dict(), indent=2, sort_keys=True)
            )
        except OSError as exc:
            summary.verdict = Inconclusive(f"IO failure: {exc}")
    summary.wall_time = time.perf_counter() - start
    return summary


def _execute(args):
    return execute_run(*args)


def run_plan(plan: ExperimentPlan, workers=1, output_dir=None):
    """Execute every run of ``plan`` and write the plan index.

    Runs are independent; with ``workers > 1`` they fan out over processes.
    Results keep plan order, so outputs do not depend on scheduling.
    """
    out_dir = Path(output_dir or plan.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = plan.expanded_runs()
    jobs = [(run, out_dir) for run in runs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_execute, jobs))
    else:
        summaries = [_execute(j) for j in jobs]
    index = {
        "plan": plan.to_dict(),
        "runs": [
            {"name": s.name, "verdict": s.verdict.kind, "covered": s.regime.covered,
             "invariants_hold": not s.violated,
             "csv": f"{s.name}.csv", "summary": f"{s.name}.json"}
            for s in summaries
        ],
    }
    (out_dir / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True))
    return summaries


# -- presets --------------------------------------------------------------

DICHOTOMY = {
    # n: (alpha, beta, L, m, t_end)
    1: (1.5, 1.0, 20.0, 2001, 20.0),
    2: (1.8, 1.0, 10.0, 257, 20.0),
}


def calibrate_amplitude(base: RunConfig, start=2.0, factor=2.0, attempts=8):
    """Smallest amplitude start*factor^j for which the σ = 0 run blows up.

    Returns (amplitude, trial log).
    """
    trials = []
    amp = start
    for _ in range(attempts):
        trial = replace(base, sigma=0.0, init=replace(base.init, amplitude=amp))
        outcome = advance(trial.problem(), trial.controls())
        trials.append({"amplitude": amp, "verdict": outcome.verdict.kind})
        if outcome.verdict.kind == "BlowUp":
            return amp, trials
        amp *= factor
    raise RuntimeError(f"no blow-up up to amplitude {amp / factor} for {base.name}")


def dichotomy_preset(n, m=None, calibrate=True, output_dir=None):
    """Paired runs σ = 0 / σ = 1 sharing a large Gaussian datum.

    Both members sit in the Fujita range α < 1 + 2/n and in the
    global-existence range α < 1 + β.
    """
    if n not in DICHOTOMY:
        raise UnsupportedPresetError(f"dichotomy preset exists for n in (1, 2), not {n}")
    alpha, beta, L, m_default, t_end = DICHOTOMY[n]
    m = m or m_default
    base = RunConfig(
        name=f"dichotomy_n{n}", n=n, alpha=alpha, beta=beta, sigma=0.0, L=L, m=m,
        bc="dirichlet", init=Gaussian(4.0, 0.0, 1.0), t_end=t_end,
    )
    meta = {"fujita_exponent": 1.0 + 2.0 / n, "threshold": 1.0 + beta}
    if calibrate:
        amp, trials = calibrate_amplitude(base)
        base = replace(base, init=replace(base.init, amplitude=amp))
        meta["calibration"] = trials
    runs = (
        replace(base, name=f"dichotomy_n{n}_sigma0", sigma=0.0),
        replace(base, name=f"dichotomy_n{n}_sigma1", sigma=1.0),
    )
    return ExperimentPlan(
        name=f"dichotomy_n{n}",
        runs=runs,
        output_dir=str(output_dir or f"runs/dichotomy_n{n}"),
        meta=meta,
    )


def check_series(path, alpha, beta, sigma, verdict=None, ks=()):
    """Re-run the monitors on a persisted CSV series."""
    crit = beta + alpha - 1.0
    series = read_series(path, beta, crit)
    reports = []
    if verdict is None or verdict == "Global":
        if sigma > 0:
            reports.append(monitors.lbeta_cap_check(series, sigma, beta))
            reports.append(monitors.lbeta_decrease_check(series, sigma))
        reports.append(monitors.uniform_bound_check(series, ks))
    return reports
