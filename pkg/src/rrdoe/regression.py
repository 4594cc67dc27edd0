"""Least-squares prediction models with interaction terms.

Terms are products of coded factor values (``truth:depth`` is the product
of the two columns), and formulas use R's operators: ``+`` joins terms,
``:`` forms a pure interaction and ``*`` crosses factors, so ``a*b*c``
expands to ``a + b + c + a:b + a:c + b:c + a:b:c``.  The intercept is
always included.

Residuals follow one convention throughout the package: prediction minus
measurement.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from ._special import t_two_sided_p

INTERCEPT_NAME = "(Intercept)"
RANK_RTOL = 1e-10


class RegressionError(ValueError):
    pass


class FormulaError(RegressionError):
    pass


class SingularDesignError(RegressionError):
    def __init__(self, term_name: str):
        self.term_name = term_name
        super().__init__(f"design matrix is rank deficient: column {term_name!r} "
                         "is a linear combination of earlier columns")


class UnderdeterminedError(RegressionError):
    pass


class StatisticsUnavailableError(RegressionError):
    pass


@dataclass(frozen=True, order=True)
class Term:
    factors: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(sorted(set(int(i) for i in self.factors))))

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def is_intercept(self) -> bool:
        return not self.factors

    def name(self, factor_names: Sequence[str]) -> str:
        if self.is_intercept:
            return INTERCEPT_NAME
        return ":".join(factor_names[i] for i in self.factors)


INTERCEPT = Term(())


def all_terms(k: int) -> list[Term]:
    """Every product of distinct factors, intercept first then by order."""
    return [Term(c) for r in range(k + 1) for c in itertools.combinations(range(k), r)]


def parse_term_name(name: str, factor_names: Sequence[str]) -> Term:
    if name in (INTERCEPT_NAME, "1"):
        return INTERCEPT
    idx = []
    for part in name.split(":"):
        part = part.strip()
        if part not in factor_names:
            raise FormulaError(f"unknown factor {part!r} in term {name!r}")
        idx.append(list(factor_names).index(part))
    return Term(idx)


def expand_formula(spec: str, factor_names: Sequence[str]) -> list[Term]:
    """Expand an R-style right-hand side into an ordered, deduplicated term list.

    A left-hand side (``MAPE ~ ...``) is ignored.  Terms come back intercept
    first, then by interaction order, ties broken by first appearance.
    """
    if "~" in spec:
        spec = spec.split("~", 1)[1]
    if not spec.strip():
        raise FormulaError("empty formula")
    seen: dict[Term, int] = {}
    for chunk in spec.split("+"):
        chunk = chunk.strip()
        if not chunk:
            raise FormulaError(f"empty term in formula {spec!r}")
        if chunk == "1":
            continue
        groups = []
        for g in chunk.split("*"):
            g = g.strip()
            if not g:
                raise FormulaError(f"dangling '*' in {chunk!r}")
            groups.append(parse_term_name(g, factor_names).factors)
        for r in range(1, len(groups) + 1):
            for combo in itertools.combinations(groups, r):
                term = Term([i for g in combo for i in g])
                seen.setdefault(term, len(seen))
    ordered = sorted(seen, key=lambda t: (t.order, seen[t]))
    return [INTERCEPT] + [t for t in ordered if not t.is_intercept]


@dataclass
class ExperimentTable:
    """Coded factor settings and the measured response for each run."""

    factor_names: list[str]
    labels: list[str]
    coded: np.ndarray
    response: np.ndarray
    response_name: str = "mape"

    def __post_init__(self):
        self.factor_names = list(self.factor_names)
        self.labels = [str(s) for s in self.labels]
        self.coded = np.atleast_2d(np.asarray(self.coded, dtype=float))
        self.response = np.asarray(self.response, dtype=float).ravel()
        n = len(self.response)
        if self.coded.shape != (n, len(self.factor_names)) and not (n == 0):
            raise RegressionError(f"coded matrix shape {self.coded.shape} does not match "
                                  f"{n} rows x {len(self.factor_names)} factors")
        if len(self.labels) != n:
            raise RegressionError("one label per row is required")
        if not np.all(np.isfinite(self.response)):
            raise RegressionError("responses must be finite")

    def __len__(self) -> int:
        return len(self.response)

    def subset(self, mask) -> "ExperimentTable":
        mask = np.asarray(mask)
        labels = [l for l, m in zip(self.labels, mask) if m] if mask.dtype == bool else \
            [self.labels[i] for i in mask]
        return ExperimentTable(self.factor_names, labels, self.coded[mask], self.response[mask],
                               self.response_name)

    def without_label(self, label: str) -> "ExperimentTable":
        return self.subset(np.array([l != label for l in self.labels]))

    def concat(self, other: "ExperimentTable") -> "ExperimentTable":
        if other.factor_names != self.factor_names:
            raise RegressionError("cannot join tables with different factors")
        return ExperimentTable(self.factor_names, self.labels + other.labels,
                               np.vstack([self.coded, other.coded]),
                               np.concatenate([self.response, other.response]),
                               self.response_name)

    def row(self, label: str) -> tuple[np.ndarray, float]:
        i = self.labels.index(str(label))
        return self.coded[i], float(self.response[i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["std_order", *self.factor_names, self.response_name])
        for label, x, y in zip(self.labels, self.coded, self.response):
            w.writerow([label, *(format(v, ".10g") for v in x), repr(float(y))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ExperimentTable":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows or rows[0][0].strip() != "std_order" or len(rows[0]) < 3:
            raise RegressionError("experiment CSV header must be std_order,<factors...>,<response>")
        header = [h.strip() for h in rows[0]]
        body = rows[1:]
        for i, r in enumerate(body, start=2):
            if len(r) != len(header):
                raise RegressionError(f"line {i}: expected {len(header)} fields, got {len(r)}")
        return cls(header[1:-1], [r[0].strip() for r in body],
                   np.array([[float(v) for v in r[1:-1]] for r in body]).reshape(len(body), -1),
                   [float(r[-1]) for r in body], header[-1])


def design_matrix(coded: np.ndarray | ExperimentTable, terms: Sequence[Term]) -> np.ndarray:
    """One column per term: the row-wise product of the term's coded factors."""
    if isinstance(coded, ExperimentTable):
        coded = coded.coded
    coded = np.atleast_2d(np.asarray(coded, dtype=float))
    cols = [np.prod(coded[:, list(t.factors)], axis=1) if t.factors else np.ones(len(coded))
            for t in terms]
    return np.column_stack(cols) if cols else np.empty((len(coded), 0))


@dataclass
class FittedModel:
    factor_names: list[str]
    terms: list[Term]
    coefficients: np.ndarray
    r_squared: float
    adj_r_squared: float
    n_obs: int
    df_residual: int
    residuals: np.ndarray
    fitted: np.ndarray
    span: np.ndarray
    std_errors: Optional[np.ndarray] = None
    t_values: Optional[np.ndarray] = None
    p_values: Optional[np.ndarray] = None
    observed: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def term_names(self) -> list[str]:
        return [t.name(self.factor_names) for t in self.terms]

    @property
    def has_statistics(self) -> bool:
        return self.p_values is not None

    def coefficient(self, name: str) -> float:
        term = parse_term_name(name, self.factor_names)
        return float(self.coefficients[self.terms.index(term)])

    def summary(self) -> str:
        lines = [f"{'term':<28}{'estimate':>14}{'std.err':>12}{'t':>10}{'p':>12}"]
        for i, name in enumerate(self.term_names):
            if self.has_statistics:
                lines.append(f"{name:<28}{self.coefficients[i]:>14.6f}{self.std_errors[i]:>12.4g}"
                             f"{self.t_values[i]:>10.3f}{self.p_values[i]:>12.4g}")
            else:
                lines.append(f"{name:<28}{self.coefficients[i]:>14.6f}")
        lines.append(f"n = {self.n_obs}, residual df = {self.df_residual}, "
                     f"R^2 = {self.r_squared:.4f}, adjusted R^2 = {self.adj_r_squared:.4f}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else [None if not math.isfinite(v) else float(v) for v in a]
        return {
            "factor_names": self.factor_names,
            "terms": self.term_names,
            "coefficients": [float(c) for c in self.coefficients],
            "std_errors": arr(self.std_errors),
            "t_values": arr(self.t_values),
            "p_values": arr(self.p_values),
            "r_squared": self.r_squared,
            "adj_r_squared": None if math.isnan(self.adj_r_squared) else self.adj_r_squared,
            "n_obs": self.n_obs,
            "df_residual": self.df_residual,
            "span": [float(s) for s in self.span],
            "fitted": [float(v) for v in self.fitted],
            "residuals": [float(v) for v in self.residuals],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "FittedModel":
        names = list(d["factor_names"])

        def arr(key):
            v = d.get(key)
            return None if v is None else np.array([math.nan if x is None else x for x in v], float)

        adj = d.get("adj_r_squared")
        return cls(
            factor_names=names,
            terms=[parse_term_name(t, names) for t in d["terms"]],
            coefficients=np.array(d["coefficients"], float),
            r_squared=float(d["r_squared"]),
            adj_r_squared=math.nan if adj is None else float(adj),
            n_obs=int(d["n_obs"]),
            df_residual=int(d["df_residual"]),
            residuals=np.array(d.get("residuals", []), float),
            fitted=np.array(d.get("fitted", []), float),
            span=np.array(d.get("span", [1.0] * len(names)), float),
            std_errors=arr("std_errors"),
            t_values=arr("t_values"),
            p_values=arr("p_values"),
        )

    @classmethod
    def from_json(cls, text: str) -> "FittedModel":
        return cls.from_dict(json.loads(text))


def _first_dependent_column(X: np.ndarray) -> int:
    for j in range(1, X.shape[1] + 1):
        s = np.linalg.svd(X[:, :j], compute_uv=False)
        if s[-1] <= RANK_RTOL * s[0] or s[0] == 0:
            return j - 1
    return X.shape[1] - 1


def fit_ols(table: ExperimentTable, terms: Sequence[Term] | str) -> FittedModel:
    """Ordinary least squares via Householder QR.

    With zero residual degrees of freedom the fit is exact, R^2 is 1 and no
    standard errors, t or p values are reported.
    """
    if isinstance(terms, str):
        terms = expand_formula(terms, table.factor_names)
    terms = list(terms)
    for t in terms:
        if t.factors and max(t.factors) >= len(table.factor_names):
            raise RegressionError(f"term {t} references a factor outside the table")
    X = design_matrix(table, terms)
    y = table.response
    n, p = X.shape
    if n < p:
        raise UnderdeterminedError(f"{n} observations cannot determine {p} coefficients")
    s = np.linalg.svd(X, compute_uv=False)
    if s[-1] <= RANK_RTOL * s[0]:
        j = _first_dependent_column(X)
        raise SingularDesignError(terms[j].name(table.factor_names))

    Q, R = np.linalg.qr(X)
    coef = solve_triangular(R, Q.T @ y)
    fitted = X @ coef
    resid = fitted - y
    ss_res = float(resid @ resid)
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    df = n - p

    if df == 0:
        r2, adj = 1.0, math.nan
        se = tv = pv = None
    else:
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        r2 = min(max(r2, 0.0), 1.0)
        adj = 1.0 - (1.0 - r2) * (n - 1) / df
        sigma2 = ss_res / df
        r_inv = solve_triangular(R, np.eye(p))
        se = np.sqrt(sigma2 * np.sum(r_inv * r_inv, axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            tv = coef / se
        pv = np.array([t_two_sided_p(float(t), df) for t in tv])

    span = np.max(np.abs(table.coded), axis=0) if n else np.zeros(len(table.factor_names))
    return FittedModel(list(table.factor_names), terms, coef, r2, adj, n, df, resid, fitted,
                       span, se, tv, pv, observed=y.copy())


def significant_terms(model: FittedModel, alpha: float = 0.05) -> list[Term]:
    """Terms with p below ``alpha``; the intercept is always kept."""
    if not model.has_statistics:
        raise StatisticsUnavailableError(
            "model has no residual degrees of freedom; add observations to test significance")
    keep = []
    for term, p in zip(model.terms, model.p_values):
        if term.is_intercept or (not math.isnan(p) and p < alpha):
            keep.append(term)
    if INTERCEPT not in keep:
        keep.insert(0, INTERCEPT)
    return keep


def predict(model: FittedModel, point: Sequence[float]) -> tuple[float, bool]:
    """Model value at a coded point and whether the point leaves the fitted span."""
    x = np.asarray(getattr(point, "coded", point), dtype=float)
    if x.shape != (len(model.factor_names),):
        raise RegressionError(f"point has {x.size} coordinates, model has "
                              f"{len(model.factor_names)} factors")
    row = design_matrix(x[None, :], model.terms)[0]
    value = float(row @ model.coefficients)
    extrapolated = bool(np.any(np.abs(x) > model.span + 1e-12))
    return value, extrapolated


def predict_many(model: FittedModel, coded: np.ndarray) -> np.ndarray:
    return design_matrix(coded, model.terms) @ model.coefficients
