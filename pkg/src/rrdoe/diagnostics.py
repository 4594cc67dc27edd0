"""Residual diagnostics for fitted prediction models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._special import norm_ppf
from .regression import FittedModel, predict


class DiagnosticsError(ValueError):
    pass


@dataclass(frozen=True)
class ResidualSet:
    fitted: np.ndarray
    samples: np.ndarray
    residuals: np.ndarray

    def __len__(self) -> int:
        return len(self.residuals)


def residuals(model: FittedModel, samples) -> ResidualSet:
    """``prediction - measurement`` for each ``(point, measured)`` pair."""
    preds, meas = [], []
    for point, measured in samples:
        preds.append(predict(model, point)[0])
        meas.append(float(measured))
    y = np.array(preds, dtype=float)
    s = np.array(meas, dtype=float)
    return ResidualSet(y, s, y - s)


@dataclass(frozen=True)
class HistogramBin:
    lower: float
    width: float
    count: int


def sturges_bins(n: int) -> int:
    return int(math.ceil(math.log2(n))) + 1 if n > 1 else 1


def histogram(values, bins: int | str = "sturges") -> list[HistogramBin]:
    """Equal-width bins over [min, max]; the last bin is closed on the right."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DiagnosticsError("histogram needs at least one value")
    k = sturges_bins(v.size) if bins == "sturges" else int(bins)
    if k < 1:
        raise DiagnosticsError("bin count must be positive")
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        return [HistogramBin(lo - 0.5, 1.0, int(v.size))]
    width = (hi - lo) / k
    idx = np.floor((v - lo) / width).astype(int)
    idx = np.clip(idx, 0, k - 1)
    counts = np.bincount(idx, minlength=k)
    return [HistogramBin(lo + i * width, width, int(c)) for i, c in enumerate(counts)]


def _local_linear(x, y, w, x0) -> float:
    sw = w.sum()
    if sw <= 0:
        return math.nan
    xm = (w @ x) / sw
    ym = (w @ y) / sw
    sxx = w @ ((x - xm) ** 2)
    if sxx <= 1e-12 * max(1.0, (w @ (x * x)) / sw):
        return float(ym)
    slope = (w @ ((x - xm) * (y - ym))) / sxx
    return float(ym + slope * (x0 - xm))


def lowess(x, y, span: float = 2.0 / 3.0, iterations: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Cleveland's robust locally weighted linear smoother.

    Each point gets a tricube-weighted straight-line fit over its
    ``ceil(span * n)`` nearest neighbours; ``iterations`` further passes
    downweight outliers with bisquare weights on the residuals.  Returns the
    x values sorted ascending and the smoothed y at each.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DiagnosticsError("x and y must have the same length")
    if not 0 < span <= 1:
        raise DiagnosticsError("span must be in (0, 1]")
    if np.unique(x).size < 2:
        raise DiagnosticsError("lowess needs at least two distinct x values")
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    n = x.size
    r = min(n, max(2, int(math.ceil(span * n))))

    dist = np.abs(x[:, None] - x[None, :])
    h = np.sort(dist, axis=1)[:, r - 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(h[:, None] > 0, dist / h[:, None], np.where(dist == 0, 0.0, 1.0))
    tricube = (1 - np.clip(u, 0, 1) ** 3) ** 3

    robust = np.ones(n)
    fit = np.empty(n)
    for it in range(iterations + 1):
        for i in range(n):
            fit[i] = _local_linear(x, y, tricube[i] * robust, x[i])
        if it == iterations:
            break
        resid = y - fit
        s = np.median(np.abs(resid))
        if s <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
            break
        robust = (1 - np.clip(resid / (6.0 * s), -1, 1) ** 2) ** 2
    return x, fit


@dataclass(frozen=True)
class QQResult:
    theoretical: np.ndarray
    sample: np.ndarray
    slope: float
    intercept: float


def qq_normal(values) -> QQResult:
    """Sorted sample against normal quantiles at plotting positions (i - 0.5)/n.

    The reference line passes through the first and third quartiles.
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    n = v.size
    if n < 2:
        raise DiagnosticsError("a Q-Q plot needs at least two values")
    theo = np.array([norm_ppf((i - 0.5) / n) for i in range(1, n + 1)])
    q1, q3 = np.quantile(v, [0.25, 0.75])
    z1, z3 = norm_ppf(0.25), norm_ppf(0.75)
    slope = (q3 - q1) / (z3 - z1)
    return QQResult(theo, v, float(slope), float(q1 - slope * z1))


@dataclass(frozen=True)
class Effect:
    term: str
    coefficient: float

    @property
    def magnitude(self) -> float:
        return abs(self.coefficient)

    @property
    def sign(self) -> str:
        return "+" if self.coefficient >= 0 else "-"


def pareto_effects(model: FittedModel) -> list[Effect]:
    effects = [Effect(t.name(model.factor_names), float(c))
               for t, c in zip(model.terms, model.coefficients) if not t.is_intercept]
    return sorted(effects, key=lambda e: -e.magnitude)


@dataclass
class DiagnosticsReport:
    residual_set: ResidualSet
    histogram: list[HistogramBin]
    lowess_curve: list[tuple[float, float]]
    qq: QQResult
    pareto: list[Effect]
    r_squared: Optional[float] = None
    adj_r_squared: Optional[float] = None
    notes: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        r = self.residual_set.residuals
        return {
            "r_squared": self.r_squared,
            "adj_r_squared": self.adj_r_squared,
            "n_residuals": int(r.size),
            "residual_min": float(r.min()),
            "residual_max": float(r.max()),
            "residual_max_abs": float(np.abs(r).max()),
            "residual_mean": float(r.mean()),
            "notes": list(self.notes),
        }


def build_report(model: FittedModel, residual_set: Optional[ResidualSet] = None,
                 bins: int | str = "sturges", span: float = 2.0 / 3.0,
                 iterations: int = 3) -> DiagnosticsReport:
    """Assemble every diagnostic; defaults to the model's own training residuals."""
    if residual_set is None:
        if len(model.fitted) == 0:
            raise DiagnosticsError("model carries no training data; pass sample residuals")
        observed = model.observed if model.observed is not None else model.fitted - model.residuals
        residual_set = ResidualSet(model.fitted, observed, model.fitted - observed)
    notes = []
    try:
        lx, ly = lowess(residual_set.fitted, residual_set.residuals, span, iterations)
        curve = list(zip(lx.tolist(), ly.tolist()))
    except DiagnosticsError as e:
        curve = []
        notes.append(f"lowess skipped: {e}")
    adj = None if math.isnan(model.adj_r_squared) else model.adj_r_squared
    return DiagnosticsReport(residual_set, histogram(residual_set.residuals, bins), curve,
                             qq_normal(residual_set.residuals), pareto_effects(model),
                             model.r_squared, adj, notes)
