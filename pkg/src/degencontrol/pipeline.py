"""Scenario files and the synthesize -> evolve -> verify pipeline.

A scenario is a flat ``key = value`` text file; ``#`` starts a comment::

    coefficient     = legendre
    initial_state   = affine:1,0.5
    target_state    = const:1
    epsilon         = 1e-2
    mode            = T1
    n_cells         = 2000
    dt              = 1e-4
    mollifier_delta = 0.02
    margin_constant = 1.0
    output_dir      = out/legendre_t1

State presets: ``const:<c>``, ``affine:<a>,<b>`` (a + b x),
``bump:<center>,<width>`` (smooth compactly supported bump of height 1),
``legendre:<k>`` (Legendre polynomial P_k) and ``csv:<path>``.
"""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .coefficient import DiffusionCoefficient, parse_coefficient
from .control import ControlPlan, build_plan
from .discretization import (Grid, StateField, assemble, b_norm, build_grid, norm,
                             read_field_csv, write_field_csv)
from .errors import (BadInsolationFile, BadTable, DegenControlError,
                     DegenerateTarget, GroundModeMismatch, InconclusiveIntegrability,
                     NegativeTarget, NonPositiveInterior, NonpositiveOverlap,
                     NotNonnegative, ScenarioError, StepTooLarge, TooFewCells,
                     ZeroInitialState)
from .evolution import (EvolutionTrace, check_nonnegativity, evolve_implicit,
                        evolve_spectral, gronwall_envelope, remainder_decay,
                        steering_error)
from .spectral import parseval_defect, rayleigh_check

PARSEVAL_RTOL = 1e-8
RAYLEIGH_SAMPLES = 200

# which scenario key an error most likely points at
_ERROR_KEYS = {
    NotNonnegative: "initial_state",
    ZeroInitialState: "initial_state",
    NonpositiveOverlap: "initial_state",
    NegativeTarget: "target_state",
    DegenerateTarget: "target_state",
    GroundModeMismatch: "target_state",
    StepTooLarge: "dt",
    TooFewCells: "n_cells",
    NonPositiveInterior: "coefficient",
    BadTable: "coefficient",
    InconclusiveIntegrability: "coefficient",
}


@dataclass(frozen=True)
class Scenario:
    coefficient: str = "legendre"
    initial_state: str = "affine:1,0.5"
    target_state: str = "const:1"
    epsilon: float = 1e-2
    mode: str = "T1"
    n_cells: int = 2000
    dt: float = 1e-4
    mollifier_delta: float = 0.02
    margin_constant: float = 1.0
    output_dir: str = "out"
    name: str = "scenario"
    source: str | None = field(default=None, compare=False)
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for key in ("epsilon", "n_cells", "dt", "mollifier_delta"):
            if not getattr(self, key) > 0:
                raise ScenarioError(self.where(key) + f"{key} must be positive")
        if self.margin_constant < 0:
            raise ScenarioError(self.where("margin_constant") + "must be nonnegative")
        if self.mode.upper() not in ("T1", "C1"):
            raise ScenarioError(self.where("mode") + f"mode must be T1 or C1, got {self.mode!r}")
        object.__setattr__(self, "mode", self.mode.upper())

    @property
    def base_dir(self) -> Path:
        return Path(self.source).parent if self.source else Path.cwd()

    def where(self, key: str) -> str:
        if self.source and key in self.lines:
            return f"{self.source}:{self.lines[key]} ({key}): "
        if self.source:
            return f"{self.source} ({key}): "
        return f"({key}): "

    def context_for(self, exc: Exception) -> str:
        if isinstance(exc, ScenarioError):
            return ""  # already located
        for cls in type(exc).__mro__:
            if cls in _ERROR_KEYS:
                return self.where(_ERROR_KEYS[cls])
        return f"{self.source}: " if self.source else ""

    def with_overrides(self, **kw) -> "Scenario":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


_FIELD_TYPES = {f.name: f.type for f in fields(Scenario)}
_KEYS = [f.name for f in fields(Scenario) if f.name not in ("source", "lines")]


def parse_scenario_text(text: str, source: str | None = None) -> Scenario:
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        loc = f"{source or '<scenario>'}:{lineno}: "
        if not sep:
            raise ScenarioError(loc + f"expected 'key = value', got {raw.strip()!r}")
        if key not in _KEYS:
            raise ScenarioError(loc + f"unknown key {key!r}")
        if key in values:
            raise ScenarioError(loc + f"duplicate key {key!r}")
        kind = _FIELD_TYPES[key]
        try:
            if kind == "int":
                values[key] = int(value)
            elif kind == "float":
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError:
            raise ScenarioError(loc + f"{key} expects {kind}, got {value!r}") from None
        lines[key] = lineno
    return Scenario(**values, source=source, lines=lines)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    sc = parse_scenario_text(text, source=str(path))
    if "name" not in sc.lines:
        sc = replace(sc, name=path.stem)
    return sc


def bundled_scenario(name: str) -> Path:
    """Path of a scenario shipped in ``degencontrol/examples``."""
    ref = resources.files("degencontrol") / "examples" / f"{name}.cfg"
    return Path(str(ref))


def state_from_preset(text: str, grid: Grid, base_dir: Path | None = None) -> StateField:
    kind, _, arg = text.strip().partition(":")
    kind = kind.strip().lower()
    x = grid.centers
    try:
        if kind == "const":
            return StateField.constant(grid, float(arg))
        if kind == "affine":
            a, b = (float(t) for t in arg.split(","))
            return StateField(grid, a + b * x)
        if kind == "bump":
            center, width = (float(t) for t in arg.split(","))
            if not width > 0:
                raise ValueError("bump width must be positive")
            s = (x - center) / width
            inside = np.abs(s) < 1.0
            vals = np.zeros_like(x)
            vals[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
            return StateField(grid, vals)
        if kind == "legendre":
            k = int(arg)
            return StateField(grid, np.polynomial.legendre.Legendre.basis(k)(x))
        if kind == "csv":
            path = Path(arg.strip())
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return read_field_csv(path, grid)
    except (ValueError, OSError) as exc:
        raise ValueError(f"bad state preset {text!r}: {exc}") from exc
    raise ValueError(f"unknown state preset {text!r}")


# --------------------------------------------------------------------------
# pipeline

@dataclass(frozen=True, eq=False)
class Solution:
    """Everything one pipeline run computes, before any reporting."""

    scenario: Scenario
    coeff: DiffusionCoefficient
    grid: Grid
    v0: StateField
    plan: ControlPlan
    spectral: EvolutionTrace
    implicit: EvolutionTrace


def resolve_scenario(scenario: Scenario):
    def guarded(key, fn):
        try:
            return fn()
        except ValueError as exc:
            raise ScenarioError(scenario.where(key) + str(exc)) from exc

    grid = build_grid(scenario.n_cells)
    coeff = guarded("coefficient", lambda: parse_coefficient(scenario.coefficient,
                                                             scenario.base_dir))
    v0 = guarded("initial_state", lambda: state_from_preset(scenario.initial_state, grid,
                                                            scenario.base_dir))
    vd = guarded("target_state", lambda: state_from_preset(scenario.target_state, grid,
                                                           scenario.base_dir))
    return grid, coeff, v0, vd


def solve(scenario: Scenario) -> Solution:
    grid, coeff, v0, vd = resolve_scenario(scenario)
    plan = build_plan(coeff, v0, vd, scenario.epsilon, scenario.mode,
                      mollifier_delta=scenario.mollifier_delta)
    op = assemble(coeff, plan.alpha_star, grid)
    T = plan.horizon_T
    spec_trace = evolve_spectral(plan.spectrum, plan.beta, v0, T)
    impl_trace = evolve_implicit(op, plan.beta, v0, T, scenario.dt,
                                 certify_positivity=scenario.mode == "T1")
    return Solution(scenario, coeff, grid, v0, plan, spec_trace, impl_trace)


@dataclass
class RunReport:
    scenario: dict
    plan: dict
    steering_error: dict
    checks: dict
    diagnostics: dict
    grid: dict
    passed: bool
    metadata: dict = field(default_factory=dict)
    wall_clock_s: float | None = None
    timestamp: str | None = None

    def to_dict(self) -> dict:
        d = {
            "scenario": self.scenario,
            "plan": self.plan,
            "steering_error": self.steering_error,
            "checks": self.checks,
            "diagnostics": self.diagnostics,
            "grid": self.grid,
            "passed": self.passed,
            "metadata": self.metadata,
        }
        if self.timestamp is not None:
            d["timestamp"] = self.timestamp
            d["wall_clock_s"] = self.wall_clock_s
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def margin(scenario: Scenario) -> float:
    return scenario.margin_constant * 2.0 / scenario.n_cells


def verify(sol: Solution, seed: int = 0) -> tuple[dict, dict, dict]:
    """Run every check on a solution; returns (errors, checks, diagnostics)."""
    sc, plan, v0 = sol.scenario, sol.plan, sol.v0
    target = plan.target
    err_spec = steering_error(sol.spectral, target)
    err_impl = steering_error(sol.implicit, target)
    tol = sc.epsilon + margin(sc)
    errors = {
        "spectral": err_spec,
        "implicit": err_impl,
        "tolerance": tol,
        "within_tolerance": max(err_spec, err_impl) <= tol,
    }

    alpha_sup = float(np.max(np.abs(plan.control.values)))
    v0_sq = norm(v0) ** 2
    defect = parseval_defect(plan.spectrum, v0)
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(RAYLEIGH_SAMPLES):
        u = StateField(sol.grid, rng.standard_normal(sol.grid.n_cells))
        violations += not rayleigh_check(sol.coeff, plan.alpha_star, u)

    nonneg = check_nonnegativity(sol.implicit)
    checks = {
        # sign preservation is only claimed for nonnegative data
        "positivity": nonneg.passed if sc.mode == "T1" else None,
        "gronwall": gronwall_envelope(sol.spectral, alpha_sup),
        "remainder": remainder_decay(plan.spectrum, plan.beta, v0, sol.spectral.times),
        "parseval": defect <= PARSEVAL_RTOL * v0_sq,
        "rayleigh": violations == 0,
        "identity": plan.clamped or plan.identity_residual() <= 1e-9,
    }
    diagnostics = {
        "integrator_gap": norm(sol.spectral.final - sol.implicit.final),
        "integrator_gap_relative": norm(sol.spectral.final - sol.implicit.final) / norm(v0),
        "min_value_implicit": nonneg.min_value,
        "min_value_spectral": float(np.min(sol.spectral.min_values)),
        "negative_values_observed": bool(nonneg.min_value < -nonneg.tolerance),
        "max_negative_part_norm": nonneg.max_negative_part_norm,
        "b_norm_squared": b_norm(sol.implicit, sol.coeff),
        "alpha_sup": alpha_sup,
        "parseval_defect": defect,
        "rayleigh_violations": violations,
        "rayleigh_samples": RAYLEIGH_SAMPLES,
        "identity_residual": None if plan.clamped else plan.identity_residual(),
        "mollification_error": target.mollification_error,
        "implicit_dt": sol.implicit.dt,
        "seed": seed,
    }
    return errors, checks, diagnostics


def _scenario_dict(sc: Scenario) -> dict:
    return {k: getattr(sc, k) for k in _KEYS}


def build_report(sol: Solution, seed: int = 0, metadata: dict | None = None) -> RunReport:
    errors, checks, diagnostics = verify(sol, seed)
    applicable = [v for v in checks.values() if v is not None]
    passed = bool(errors["within_tolerance"] and all(applicable))
    sc = sol.scenario
    return RunReport(
        scenario=_scenario_dict(sc),
        plan=sol.plan.summary(),
        steering_error=errors,
        checks=checks,
        diagnostics=diagnostics,
        grid={"n_cells": sc.n_cells, "h": sol.grid.h, "dt": sc.dt,
              "snapshots": len(sol.spectral.times)},
        passed=passed,
        metadata=metadata or {},
    )


def write_trace_csv(path, trace: EvolutionTrace):
    """Long-format (t, x, v) dump of a trace."""
    x = trace.grid.centers
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "x", "v"))
        for t, row in zip(trace.times, trace.states):
            ts = repr(float(t))
            w.writerows((ts, repr(float(xi)), repr(float(vi))) for xi, vi in zip(x, row))


def write_artifacts(sol: Solution, report: RunReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_field_csv(out / "alpha_star.csv", sol.plan.alpha_star, ("x", "alpha_star"))
    write_field_csv(out / "target.csv", sol.plan.target.field, ("x", "v_d"))
    write_trace_csv(out / "trace_spectral.csv", sol.spectral)
    write_trace_csv(out / "trace_implicit.csv", sol.implicit)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    return out


def run_pipeline(scenario: Scenario, *, out_dir=None, write: bool = True,
                 timestamp: bool = True, seed: int = 0,
                 metadata: dict | None = None) -> RunReport:
    """Plan, evolve with both integrators, verify, and optionally write artifacts."""
    start = time.perf_counter()
    sol = solve(scenario)
    report = build_report(sol, seed, metadata)
    if timestamp:
        report.timestamp = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        report.wall_clock_s = time.perf_counter() - start
    if write:
        out = Path(out_dir) if out_dir is not None else Path(scenario.output_dir)
        write_artifacts(sol, report, out)
    return report


def _sweep_one(args):
    scenario, seed = args
    return run_pipeline(scenario, write=False, timestamp=False, seed=seed)


def run_sweep(scenarios, seed: int = 0, workers: int | None = 1) -> list:
    """Run independent scenarios, optionally across worker processes.

    Reports come back in input order and carry no timestamps, so the result
    does not depend on ``workers``.
    """
    jobs = [(sc, seed + i) for i, sc in enumerate(scenarios)]
    if workers == 1 or len(jobs) < 2:
        return [_sweep_one(job) for job in jobs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, jobs))


# --------------------------------------------------------------------------
# Budyko-Sellers demonstration

def read_insolation(path) -> dict:
    """Validate an (x, Q) insolation CSV and summarize it.

    x is the sine of latitude and must increase across [-1, 1].
    """
    xs, qs = [], []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    if len(row) != 2:
                        raise ValueError
                    x, q = float(row[0]), float(row[1])
                except ValueError:
                    if lineno == 1 and not xs:
                        continue
                    raise BadInsolationFile(
                        f"{path}:{lineno}: expected two numbers, got {row!r}") from None
                if not (math.isfinite(x) and math.isfinite(q)):
                    raise BadInsolationFile(f"{path}:{lineno}: non-finite value")
                xs.append(x)
                qs.append(q)
    except OSError as exc:
        raise BadInsolationFile(f"cannot read {path}: {exc}") from exc
    xs, qs = np.array(xs), np.array(qs)
    if len(xs) < 2:
        raise BadInsolationFile(f"{path}: need at least two samples")
    if np.any(np.diff(xs) <= 0) or xs[0] < -1.0 or xs[-1] > 1.0:
        raise BadInsolationFile(f"{path}: x must increase within [-1, 1]")
    mean = float(np.sum(0.5 * (qs[1:] + qs[:-1]) * np.diff(xs)) / (xs[-1] - xs[0]))
    return {
        "path": str(path),
        "samples": int(len(xs)),
        "x_range": [float(xs[0]), float(xs[-1])],
        "Q_min": float(qs.min()),
        "Q_max": float(qs.max()),
        "Q_mean": mean,
    }


def budyko_sellers_scenario() -> Scenario:
    sc = load_scenario(bundled_scenario("legendre_t1"))
    return replace(sc, name="budyko-sellers", output_dir="out/budyko_sellers")


def run_budyko_sellers_demo(insolation_csv=None, **kwargs) -> RunReport:
    """Legendre-coefficient pipeline framed as the 1-D energy balance model.

    The controlled equation is the linear principal part
    ``u_t - ((1 - x^2) u_x)_x = alpha u`` with x the sine of latitude.  An
    insolation table, if given, is validated and echoed in the report only.
    """
    meta = {
        "model": "budyko-sellers",
        "x": "sine of latitude",
        "equation": "u_t - ((1-x^2) u_x)_x = alpha(x) u, (1-x^2) u_x = 0 at x = +-1",
        "insolation": read_insolation(insolation_csv) if insolation_csv else None,
    }
    scenario = kwargs.pop("scenario", None) or budyko_sellers_scenario()
    return run_pipeline(scenario, metadata=meta, **kwargs)


# --------------------------------------------------------------------------
# convergence study

@dataclass
class ConvergenceTable:
    rows: list
    orders: dict
    margin_estimate: float

    COLUMNS = ("n_cells", "h", "dt", "lambda2", "lambda2_error", "steering_error",
               "integrator_gap")

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS + ("order_lambda2", "order_gap"))
            for i, row in enumerate(self.rows):
                o1 = self.orders["lambda2_error"][i - 1] if i else None
                o2 = self.orders["integrator_gap"][i - 1] if i else None
                w.writerow([repr(row[c]) for c in self.COLUMNS]
                           + ["" if o1 is None else repr(o1), "" if o2 is None else repr(o2)])


def observed_orders(hs, errors, floor: float = 1e-13) -> list:
    """Log-ratio orders between successive refinements; None below ``floor``."""
    out = []
    for (h1, e1), (h2, e2) in zip(zip(hs, errors), zip(hs[1:], errors[1:])):
        if e1 > floor and e2 > floor:
            out.append(math.log(e1 / e2) / math.log(h1 / h2))
        else:
            out.append(None)
    return out


def run_convergence_study(scenario: Scenario, n_cells_list, dt_list,
                          lambda2_exact: float | None = None) -> ConvergenceTable:
    """Refine space and time together and tabulate errors and observed orders.

    ``dt_list`` may have one entry (shared) or one per grid.  The lambda_2
    error is measured against ``lambda2_exact`` when given, otherwise against
    the finest grid.
    """
    n_cells_list = [int(n) for n in n_cells_list]
    dt_list = [float(d) for d in dt_list]
    if not n_cells_list or not dt_list:
        raise ValueError("refinement lists must be nonempty")
    if len(dt_list) == 1:
        dt_list = dt_list * len(n_cells_list)
    if len(dt_list) != len(n_cells_list):
        raise ValueError("dt_list must have one entry or one per grid")
    if any(b <= a for a, b in zip(n_cells_list, n_cells_list[1:])):
        raise ValueError("n_cells_list must be strictly increasing")

    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n, dt in zip(n_cells_list, dt_list):
            sol = solve(replace(scenario, n_cells=n, dt=dt))
            rows.append({
                "n_cells": n,
                "h": 2.0 / n,
                "dt": dt,
                "lambda2": sol.plan.lambda2,
                "steering_error": max(steering_error(sol.spectral, sol.plan.target),
                                      steering_error(sol.implicit, sol.plan.target)),
                "integrator_gap": norm(sol.spectral.final - sol.implicit.final),
            })
    ref = lambda2_exact if lambda2_exact is not None else rows[-1]["lambda2"]
    for row in rows:
        row["lambda2_error"] = abs(row["lambda2"] - ref)
    hs = [r["h"] for r in rows]
    orders = {
        "lambda2_error": observed_orders(hs, [r["lambda2_error"] for r in rows]),
        "integrator_gap": observed_orders(hs, [r["integrator_gap"] for r in rows]),
    }
    margin_est = max(max(0.0, r["steering_error"] - scenario.epsilon) / r["h"] for r in rows)
    return ConvergenceTable(rows, orders, margin_est)


__all__ = [
    "ConvergenceTable", "DegenControlError", "RunReport", "Scenario", "Solution",
    "budyko_sellers_scenario", "bundled_scenario", "load_scenario", "margin",
    "observed_orders", "parse_scenario_text", "read_insolation", "resolve_scenario", "run_budyko_sellers_demo",
    "run_convergence_study", "run_pipeline", "run_sweep", "solve", "state_from_preset", "verify",
]
