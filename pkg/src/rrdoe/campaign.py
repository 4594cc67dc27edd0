"""End-to-end experiment campaigns: design, simulate, fit, check, zoom.

The default factor space is the six-factor randomized-response study:

=========  ======  =======  =========
factor     -1      +1       kind
=========  ======  =======  =========
truth      0.1     0.9      fraction
depth      1       5        integer
alts       2       10       integer
weight     0.1     0.9      fraction
pop        1000    100000   integer
answers    0.1     0.9      fraction
=========  ======  =======  =========

Per-row seeds are derived from ``(config.seed, std_order)`` so a campaign's
table does not depend on the order (or the process) in which rows run.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Optional, Sequence

import numpy as np

from .doe import Factor, FactorSpace, diagonal_probe, full_factorial
from .poll import ScenarioParams
from .regression import (ExperimentTable, FittedModel, all_terms, expand_formula, fit_ols,
                         predict)
from .simulator import SimulationError, run_setting
from .diagnostics import pareto_effects

FACTOR_NAMES = ("truth", "depth", "alts", "weight", "pop", "answers")
SCENARIO_FIELDS = {
    "truth": "pr_truth",
    "depth": "depth",
    "alts": "n_alts",
    "weight": "target_weight",
    "pop": "population",
    "answers": "answers_fraction",
}

DEFAULT_SPACE = FactorSpace((
    Factor("truth", 0.1, 0.9, "fraction"),
    Factor("depth", 1, 5, "integer"),
    Factor("alts", 2, 10, "integer"),
    Factor("weight", 0.1, 0.9, "fraction"),
    Factor("pop", 1000, 100000, "integer"),
    Factor("answers", 0.1, 0.9, "fraction"),
))

PAPER_FORMULA = ("MAPE ~ truth + alts + weight + truth*depth + depth*weight"
                 " + truth*depth*weight + depth*weight*answers")

FIXTURES = ("exp1", "exp2", "validation")


class CampaignError(RuntimeError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    space: FactorSpace = DEFAULT_SPACE
    scale: float = 1.0
    reps: int = 30
    seed: int = 0
    formula: Optional[str] = None
    refine_threshold: float = 10.0
    max_zooms: int = 3
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.scale <= 1:
            raise CampaignError(f"scale must be in (0, 1], got {self.scale}")
        if self.reps < 1:
            raise CampaignError("reps must be at least 1")
        missing = set(FACTOR_NAMES) - set(self.space.names)
        if missing:
            raise CampaignError(f"factor space lacks {sorted(missing)}")
        unknown = set(self.overrides) - set(FACTOR_NAMES)
        if unknown:
            raise CampaignError(f"unknown overrides {sorted(unknown)}")

    def to_dict(self) -> dict:
        return {
            "factors": [f.to_dict() for f in self.space],
            "scale": self.scale,
            "reps": self.reps,
            "seed": self.seed,
            "formula": self.formula,
            "refine_threshold": self.refine_threshold,
            "max_zooms": self.max_zooms,
            "overrides": dict(self.overrides),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        kw = {k: d[k] for k in ("scale", "reps", "seed", "formula", "refine_threshold",
                                "max_zooms", "overrides") if k in d}
        if "factors" in d:
            kw["space"] = FactorSpace(tuple(Factor.from_dict(f) for f in d["factors"]))
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "CampaignConfig":
        return cls.from_dict(json.loads(text))


def derive_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


def scenario_at(config: CampaignConfig, coded: Sequence[float]) -> ScenarioParams:
    """Actual simulator settings for a coded point, after overrides."""
    values = dict(zip(config.space.names, config.space.to_actual(coded)))
    values.update(config.overrides)
    return ScenarioParams(**{SCENARIO_FIELDS[n]: values[n] for n in FACTOR_NAMES})


def measure(config: CampaignConfig, coded: Sequence[float], seed: int) -> float:
    """Simulated MAPE at one coded point."""
    return run_setting(scenario_at(config, coded), config.reps, seed).mape


def _measure_row(args):
    config, label, coded, seed = args
    try:
        return label, measure(config, coded, seed), None
    except (SimulationError, ValueError) as e:
        return label, None, str(e)


def run_campaign(config: CampaignConfig, workers: int = 1,
                 known: Optional[dict] = None) -> ExperimentTable:
    """Baseline plus a full two-level factorial at ``+-config.scale``.

    ``known`` maps coded tuples to already measured responses (e.g. probe
    points from a previous round) that are reused instead of re-simulated.
    The first failing row aborts the campaign with its standard order.
    """
    k = len(config.space)
    design = full_factorial(k, config.scale)
    labels = [0] + list(design.order_labels)
    points = [tuple([0.0] * k)] + [p.coded for p in design.points]
    known = {tuple(float(c) for c in key): float(v) for key, v in (known or {}).items()}

    tasks = [(config, label, pt, derive_seed(config.seed, label))
             for label, pt in zip(labels, points) if pt not in known]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_measure_row, tasks))
    else:
        outcomes = []
        for task in tasks:
            outcomes.append(_measure_row(task))
            if outcomes[-1][2] is not None:
                break
    results = {}
    for label, value, err in outcomes:
        if err is not None:
            raise CampaignError(f"std_order {label}: {err}")
        results[label] = value

    response = [known[pt] if pt in known else results[label] for label, pt in zip(labels, points)]
    return ExperimentTable(config.space.names, [str(l) for l in labels], np.array(points),
                           response)


@dataclass(frozen=True)
class RefineDecision:
    action: str
    scale: float
    new_scale: Optional[float]
    threshold: float
    probes: tuple[tuple[float, ...], ...]
    predicted: tuple[float, ...]
    measured: tuple[float, ...]
    residuals: tuple[float, ...]
    extrapolated: tuple[bool, ...]

    @property
    def max_abs_residual(self) -> float:
        return max(abs(r) for r in self.residuals)

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "scale": self.scale,
            "new_scale": self.new_scale,
            "threshold": self.threshold,
            "max_abs_residual": self.max_abs_residual,
            "probes": [
                {"point": list(p), "predicted": y, "measured": s, "residual": r, "extrapolated": e}
                for p, y, s, r, e in zip(self.probes, self.predicted, self.measured,
                                         self.residuals, self.extrapolated)
            ],
        }

    def reusable(self) -> dict:
        """Probe measurements keyed by coded point, for the next campaign round."""
        return {p: s for p, s in zip(self.probes, self.measured)}


def table_lookup(table: ExperimentTable, atol: float = 1e-9) -> Callable[[Sequence[float]], float]:
    """A measure function answering from rows already in ``table``."""
    def lookup(point):
        hits = np.all(np.abs(table.coded - np.asarray(point, float)) <= atol, axis=1)
        if not hits.any():
            raise CampaignError(f"no measurement at {tuple(point)} in the table")
        return float(table.response[np.argmax(hits)])
    return lookup


def refine_step(model: FittedModel, config: CampaignConfig,
                measure_fn: Optional[Callable[[Sequence[float]], float]] = None) -> RefineDecision:
    """Check the model on the baseline and the two half-way diagonal points.

    If the largest absolute residual exceeds ``config.refine_threshold`` the
    decision is to zoom in to half the current scale; otherwise accept.
    Without ``measure_fn`` the probes are simulated.
    """
    k = len(model.factor_names)
    probes = [p.coded for p in diagonal_probe(k)]
    measured, predicted, extrap = [], [], []
    for i, pt in enumerate(probes):
        y, flag = predict(model, pt)
        predicted.append(y)
        extrap.append(flag)
        if measure_fn is None:
            measured.append(measure(config, pt, derive_seed(config.seed, 10_000 + i)))
        else:
            measured.append(float(measure_fn(pt)))
    resid = tuple(y - s for y, s in zip(predicted, measured))
    worst = max(abs(r) for r in resid)
    if worst <= config.refine_threshold:
        action, new_scale = "accept", None
    else:
        action, new_scale = "zoom", config.scale / 2
    return RefineDecision(action, config.scale, new_scale, config.refine_threshold,
                          tuple(probes), tuple(predicted), tuple(measured), resid, tuple(extrap))


@dataclass
class RefineOutcome:
    converged: bool
    config: CampaignConfig
    table: ExperimentTable
    model: FittedModel
    decisions: list[RefineDecision]


def fit_campaign_table(table: ExperimentTable, formula: Optional[str] = None) -> FittedModel:
    """Fit corners only (the baseline row is held out as a check point)."""
    corners = table.without_label("0")
    terms = all_terms(len(table.factor_names)) if formula is None else \
        expand_formula(formula, table.factor_names)
    return fit_ols(corners, terms)


def refine(config: CampaignConfig, workers: int = 1,
           measure_fn: Optional[Callable[[Sequence[float]], float]] = None) -> RefineOutcome:
    """Run campaigns, halving the scale until the probes fit or zooms run out."""
    decisions: list[RefineDecision] = []
    known: dict = {}
    cfg = config
    while True:
        table = run_campaign(cfg, workers, known)
        model = fit_campaign_table(table, cfg.formula)
        decision = refine_step(model, cfg, measure_fn)
        decisions.append(decision)
        if decision.action == "accept":
            return RefineOutcome(True, cfg, table, model, decisions)
        if len(decisions) > config.max_zooms:
            return RefineOutcome(False, cfg, table, model, decisions)
        known = decision.reusable()
        cfg = replace(cfg, scale=decision.new_scale)


@dataclass(frozen=True)
class ValidationSample:
    set_label: str
    point: tuple[float, ...]
    measured: float = math.nan


def _snap_to_whole(factor: Factor, c: float) -> float:
    actual = factor.center + factor.half_range * c
    candidates = {math.floor(actual), math.ceil(actual)}
    coded = [(x - factor.center) / factor.half_range for x in sorted(candidates)]
    return min(coded, key=lambda v: (abs(v - c), abs(v)))


def sample_validation_points(count_per_set: int = 20, seed: int = 0,
                             discrete_factors: Optional[Sequence[str]] = None,
                             space: FactorSpace = DEFAULT_SPACE) -> list[ValidationSample]:
    """Pick validation coordinates from two sets.

    ``mid_corners``: the center plus ``count_per_set - 1`` distinct random
    corners of the +-0.25 cube; a discrete factor whose +-0.25 level is not
    a whole actual value is fixed at its baseline (depth 2.5/3.5 becomes 3).
    ``random_space``: uniform points in [-0.5, 0.5]^k with discrete factors
    moved to the nearest coded value that is a whole actual value.
    """
    if count_per_set < 1:
        raise CampaignError("count_per_set must be at least 1")
    k = len(space)
    if discrete_factors is None:
        discrete_factors = [f.name for f in space if f.kind == "integer"]
    discrete = [space.index(n) for n in discrete_factors]
    corners = full_factorial(k, 0.25).as_array()
    if count_per_set - 1 > len(corners):
        raise CampaignError(f"only {len(corners)} distinct corners available")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7]))

    out = [ValidationSample("mid_corners", tuple([0.0] * k))]
    picks = rng.choice(len(corners), size=count_per_set - 1, replace=False)
    for idx in picks:
        pt = corners[idx].copy()
        for j in discrete:
            f = space[j]
            if not float(f.center + f.half_range * pt[j]).is_integer():
                pt[j] = 0.0
        out.append(ValidationSample("mid_corners", tuple(float(v) + 0.0 for v in pt)))

    for _ in range(count_per_set):
        pt = rng.uniform(-0.5, 0.5, size=k)
        for j in discrete:
            pt[j] = _snap_to_whole(space[j], float(pt[j]))
        out.append(ValidationSample("random_space", tuple(float(v) + 0.0 for v in pt)))
    return out


def measure_validation(samples: Sequence[ValidationSample], config: CampaignConfig
                       ) -> ExperimentTable:
    """Simulate each validation point; labels are the sample indices."""
    values = [measure(config, s.point, derive_seed(config.seed, 20_000 + i))
              for i, s in enumerate(samples)]
    return ExperimentTable(config.space.names, [str(i) for i in range(len(samples))],
                           np.array([s.point for s in samples]), values)


def load_fixture(name: str) -> ExperimentTable:
    """Published measurement tables bundled with the package.

    ``exp1``: 64 corners at +-1 plus baseline (label 0).  ``exp2``: the same
    at +-0.5.  ``validation``: 40 check points, label 0 the center.
    """
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; expected one of {FIXTURES}")
    text = resources.files("rrdoe").joinpath("data", f"{name}.csv").read_text(encoding="utf-8")
    return ExperimentTable.from_csv(text)


def paper_fit_table() -> ExperimentTable:
    """Experiment-2 corners joined with the 40 validation points (104 rows)."""
    return load_fixture("exp2").without_label("0").concat(load_fixture("validation"))


PUBLISHED = {
    "exp1_probe_predictions": (418.7087, 124.8765, 731.8813),
    "exp1_probe_samples": (34.04411, 14.41732, 38.23649),
    "exp1_probe_residuals": (384.6646, 110.4592, 693.6448),
    "exp2_origin_prediction": 32.89371,
    "full_r_squared": 0.8419,
    "full_adj_r_squared": 0.5929,
    "simplified_r_squared": 0.7846,
    "simplified_adj_r_squared": 0.7562,
    "simplified_coefficients": {
        "(Intercept)": 32.501266,
        "truth": -29.023493,
        "alts": 5.037411,
        "weight": -16.562410,
        "depth": 1.449934,
        "answers": 1.856916,
        "truth:depth": 10.044302,
        "depth:weight": -28.397984,
        "truth:weight": 4.175231,
        "depth:answers": 8.535667,
        "weight:answers": -8.402531,
        "truth:depth:weight": 51.134829,
        "depth:weight:answers": 25.945740,
    },
}


@dataclass(frozen=True)
class Check:
    name: str
    observed: object
    expected: object
    tolerance: Optional[float]
    passed: bool

    def line(self) -> str:
        tol = "" if self.tolerance is None else f" (tol {self.tolerance:g})"
        obs = f"{self.observed:.6f}" if isinstance(self.observed, float) else str(self.observed)
        exp = f"{self.expected:.6f}" if isinstance(self.expected, float) else str(self.expected)
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {obs} vs {exp}{tol}"


@dataclass
class ReplicationReport:
    checks: list[Check]
    models: dict
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks] + [f"note: {n}" for n in self.notes]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "observed": c.observed, "expected": c.expected,
                 "tolerance": c.tolerance, "passed": c.passed}
                for c in self.checks
            ],
            "notes": list(self.notes),
        }


def _close(name, observed, expected, tol) -> Check:
    return Check(name, float(observed), float(expected), tol, abs(observed - expected) <= tol)


def replicate_paper() -> ReplicationReport:
    """Re-run the published analysis on the bundled tables and compare."""
    checks: list[Check] = []
    notes: list[str] = []
    origin = [0.0] * 6

    exp1 = load_fixture("exp1")
    m1 = fit_ols(exp1.without_label("0"), all_terms(6))
    probes = [p.coded for p in diagonal_probe(6)]
    for pt, y_pub, s, r_pub in zip(probes, PUBLISHED["exp1_probe_predictions"],
                                   PUBLISHED["exp1_probe_samples"],
                                   PUBLISHED["exp1_probe_residuals"]):
        y = predict(m1, pt)[0]
        checks.append(_close(f"exp1 prediction at {pt[0]:+g}", y, y_pub, 0.01))
        checks.append(_close(f"exp1 residual at {pt[0]:+g}", y - s, r_pub, 0.01))

    exp2 = load_fixture("exp2")
    corners2 = exp2.without_label("0")
    m2 = fit_ols(corners2, all_terms(6))
    y0 = predict(m2, origin)[0]
    checks.append(_close("exp2 prediction at origin", y0, PUBLISHED["exp2_origin_prediction"], 0.001))
    checks.append(_close("exp2 origin equals corner mean", y0, float(corners2.response.mean()), 1e-9))

    data = paper_fit_table()
    checks.append(Check("full-model observation count", len(data), 104, None, len(data) == 104))
    m_full = fit_ols(data, all_terms(6))
    checks.append(_close("full-model R^2", m_full.r_squared, PUBLISHED["full_r_squared"], 0.001))
    checks.append(_close("full-model adjusted R^2", m_full.adj_r_squared,
                         PUBLISHED["full_adj_r_squared"], 0.002))
    if not (checks[-1].passed and checks[-2].passed):
        alt = fit_ols(data.concat(exp2.subset(np.array([l == "0" for l in exp2.labels]))),
                      all_terms(6))
        notes.append(f"105-point variant: R^2 {alt.r_squared:.4f}, "
                     f"adjusted {alt.adj_r_squared:.4f}")

    terms = expand_formula(PAPER_FORMULA, FACTOR_NAMES)
    checks.append(Check("simplified term count", len(terms), 13, None, len(terms) == 13))
    m_s = fit_ols(data, terms)
    checks.append(_close("simplified R^2", m_s.r_squared, PUBLISHED["simplified_r_squared"], 0.001))
    checks.append(_close("simplified adjusted R^2", m_s.adj_r_squared,
                         PUBLISHED["simplified_adj_r_squared"], 0.002))
    for name, value in PUBLISHED["simplified_coefficients"].items():
        checks.append(_close(f"coefficient {name}", m_s.coefficient(name), value, 0.01))
    top = pareto_effects(m_s)[0].term
    checks.append(Check("largest Pareto effect", top, "truth:depth:weight", None,
                        top == "truth:depth:weight"))

    models = {"exp1": m1, "exp2": m2, "full_104": m_full, "simplified": m_s}
    return ReplicationReport(checks, models, notes)
