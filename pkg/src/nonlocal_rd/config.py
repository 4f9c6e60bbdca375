"""Experiment plans and their JSON notation.

A config is a single JSON object.  It either describes one run directly
(required keys ``n, alpha, beta, sigma, L, m, bc, init, t_end``) or a plan::

    {"name": "demo", "output_dir": "out",
     "runs": [{...run...}, ...],
     "sweep": {"alpha": [1.2, 1.5, 1.8]}}

Initial data objects carry a ``type`` of ``gaussian`` (amplitude, center,
width), ``bump`` (amplitude, center, radius), ``constant`` (value) or
``sum`` (terms).  ``center`` is a number or a list with one entry per axis.

Optional run keys and defaults: dt_init 1e-3, dt_min 1e-9, dt_max 0.05,
growth_cap 2.0, u_max 1e8, linear_tol 1e-10, observe_every 1, ks [] (extra
exponents to track) and reaction_off false (pure heat flow, for validation).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ConfigError
from .exponents import classify
from .field import BC, Bump, Constant, Gaussian, Grid, Sum
from .stepper import ProblemSpec, StepControls

REQUIRED = ("n", "alpha", "beta", "sigma", "L", "m", "bc", "init", "t_end")
SWEEPABLE = ("alpha", "beta", "sigma")


@dataclass(frozen=True)
class RunConfig:
    name: str
    n: int
    alpha: float
    beta: float
    sigma: float
    L: float
    m: int
    bc: str
    init: object
    t_end: float
    dt_init: float = 1e-3
    dt_min: float = 1e-9
    dt_max: float = 0.05
    growth_cap: float = 2.0
    u_max: float = 1e8
    linear_tol: float = 1e-10
    observe_every: int = 1
    ks: tuple = ()
    reaction_off: bool = False

    def grid(self):
        return Grid(self.n, self.L, self.m, BC(self.bc))

    def problem(self):
        return ProblemSpec(self.alpha, self.beta, self.sigma, self.grid(), self.init,
                           reaction_off=self.reaction_off)

    def controls(self):
        return StepControls(
            t_end=self.t_end, dt_init=self.dt_init, dt_min=self.dt_min,
            dt_max=self.dt_max, growth_cap=self.growth_cap, u_max=self.u_max,
            linear_tol=self.linear_tol, observe_every=self.observe_every,
        )

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["init"] = init_to_dict(self.init)
        d["ks"] = list(self.ks)
        return d


OPTIONAL = {f.name: f.default for f in fields(RunConfig) if f.name not in REQUIRED + ("name",)}


@dataclass(frozen=True)
class ExperimentPlan:
    name: str
    runs: tuple
    sweep: dict | None = None
    output_dir: str = "runs"
    meta: dict = field(default_factory=dict)

    def expanded_runs(self):
        """Base runs crossed with the cartesian sweep, in a fixed order."""
        if not self.sweep:
            return list(self.runs)
        keys = [k for k in SWEEPABLE if k in self.sweep]
        out = []
        for run in self.runs:
            for combo in itertools.product(*(self.sweep[k] for k in keys)):
                tag = "_".join(f"{k}={v!r}" for k, v in zip(keys, combo))
                out.append(replace(run, name=f"{run.name}_{tag}", **dict(zip(keys, combo))))
        return out

    def to_dict(self):
        d = {"name": self.name, "output_dir": self.output_dir,
             "runs": [r.to_dict() for r in self.runs]}
        if self.sweep:
            d["sweep"] = {k: list(v) for k, v in self.sweep.items()}
        if self.meta:
            d["meta"] = self.meta
        return d


def init_to_dict(init):
    if isinstance(init, Sum):
        return {"type": "sum", "terms": [init_to_dict(t) for t in init.terms]}
    kind = {Gaussian: "gaussian", Bump: "bump", Constant: "constant"}[type(init)]
    d = {"type": kind, **asdict(init)}
    if isinstance(d.get("center"), tuple):
        d["center"] = list(d["center"])
    return d


def init_from_dict(d, key="init"):
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError(key, "initial data must be an object with a 'type'")
    kind = d["type"]
    try:
        if kind == "sum":
            return Sum(tuple(init_from_dict(t, f"{key}.terms") for t in d["terms"]))
        if kind == "constant":
            return Constant(float(d["value"]))
        cls, size = {"gaussian": (Gaussian, "width"), "bump": (Bump, "radius")}[kind]
    except KeyError as exc:
        raise ConfigError(key, f"missing or unknown entry {exc}") from None
    center = d.get("center", 0.0)
    center = tuple(float(c) for c in center) if isinstance(center, list) else float(center)
    if "amplitude" not in d:
        raise ConfigError(f"{key}.amplitude", "required")
    return cls(float(d["amplitude"]), center, float(d.get(size, 1.0)))


def _number(d, key, cast=float):
    try:
        return cast(d[key])
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {d[key]!r}") from None


def run_from_dict(d, default_name="run"):
    for key in REQUIRED:
        if key not in d:
            raise ConfigError(key, "missing required key")
    unknown = set(d) - set(REQUIRED) - set(OPTIONAL) - {"name"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    vals = {"name": str(d.get("name", default_name))}
    for key in ("alpha", "beta", "sigma", "L", "t_end"):
        vals[key] = _number(d, key)
    for key in ("n", "m"):
        vals[key] = _number(d, key, int)
    if vals["alpha"] < 1:
        raise ConfigError("alpha", "alpha, beta >= 1 violated")
    if vals["beta"] < 1:
        raise ConfigError("beta", "alpha, beta >= 1 violated")
    if vals["sigma"] < 0:
        raise ConfigError("sigma", "sigma must be >= 0")
    if d["bc"] not in [b.value for b in BC]:
        raise ConfigError("bc", f"expected 'dirichlet' or 'periodic', got {d['bc']!r}")
    vals["bc"] = d["bc"]
    vals["init"] = init_from_dict(d["init"])
    for key, default in OPTIONAL.items():
        if key not in d:
            continue
        if key == "ks":
            vals[key] = tuple(float(k) for k in d[key])
        elif key == "reaction_off":
            if not isinstance(d[key], bool):
                raise ConfigError(key, f"expected true or false, got {d[key]!r}")
            vals[key] = d[key]
        else:
            vals[key] = _number(d, key, type(default))
    run = RunConfig(**vals)
    try:
        run.grid()
        run.controls()
    except ValueError as exc:
        raise ConfigError("grid/controls", str(exc)) from None
    return run


def plan_from_dict(d):
    if "runs" in d:
        runs = tuple(run_from_dict(r, f"run{i}") for i, r in enumerate(d["runs"]))
    else:
        body = {k: v for k, v in d.items() if k not in ("sweep", "output_dir", "meta")}
        runs = (run_from_dict(body),)
    sweep = d.get("sweep")
    if sweep is not None:
        bad = set(sweep) - set(SWEEPABLE)
        if bad:
            raise ConfigError(f"sweep.{sorted(bad)[0]}", "only alpha, beta, sigma can be swept")
        sweep = {k: tuple(float(v) for v in vals) for k, vals in sweep.items()}
    plan = ExperimentPlan(
        name=str(d.get("name", runs[0].name if runs else "plan")),
        runs=runs,
        sweep=sweep,
        output_dir=str(d.get("output_dir", "runs")),
        meta=dict(d.get("meta", {})),
    )
    validate_plan(plan)
    return plan


def validate_plan(plan):
    names = set()
    for run in plan.expanded_runs():
        if run.name in names:
            raise ConfigError("name", f"duplicate run name {run.name!r}")
        names.add(run.name)
        try:
            classify(run.n, run.alpha, run.beta)
        except ValueError as exc:
            raise ConfigError("alpha" if run.alpha < 1 else "beta", str(exc)) from None


def parse_config(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError("<document>", "top level must be an object")
    return plan_from_dict(d)


def serialize_plan(plan):
    return json.dumps(plan.to_dict(), indent=2, sort_keys=True)
