"""Two-level factorial designs and coded/actual value conversion.

A factor with levels ``low`` and ``high`` is coded as ``(v - a) / b`` where
``a`` is the level midpoint and ``b`` the half-range, so the low level maps
to -1, the high level to +1 and the midpoint (the baseline) to 0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

KINDS = ("continuous", "integer", "fraction")
MAX_FACTORS = 20


class DesignError(ValueError):
    """Invalid factor, factor space or design."""


def _round_half_away(x: float) -> float:
    return math.copysign(math.floor(abs(x) + 0.5), x)


@dataclass(frozen=True)
class Factor:
    name: str
    low_actual: float
    high_actual: float
    kind: str = "continuous"
    baseline_actual: float | None = None

    def __post_init__(self):
        if not self.name:
            raise DesignError("factor name must be non-empty")
        if self.kind not in KINDS:
            raise DesignError(f"factor {self.name!r}: unknown kind {self.kind!r}")
        if not self.low_actual < self.high_actual:
            raise DesignError(f"factor {self.name!r}: low must be below high")
        if self.kind == "fraction" and not (0 <= self.low_actual and self.high_actual <= 1):
            raise DesignError(f"factor {self.name!r}: fraction levels must lie in [0, 1]")
        if self.kind == "integer" and not (
            float(self.low_actual).is_integer() and float(self.high_actual).is_integer()
        ):
            raise DesignError(f"factor {self.name!r}: integer levels must be whole numbers")
        if self.baseline_actual is None:
            object.__setattr__(self, "baseline_actual", self.center)

    @property
    def center(self) -> float:
        return (self.high_actual + self.low_actual) / 2

    @property
    def half_range(self) -> float:
        return (self.high_actual - self.low_actual) / 2

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "low": self.low_actual,
            "high": self.high_actual,
            "kind": self.kind,
            "baseline": self.baseline_actual,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Factor":
        return cls(d["name"], float(d["low"]), float(d["high"]), d.get("kind", "continuous"),
                   d.get("baseline"))


@dataclass(frozen=True)
class FactorSpace:
    factors: tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 1:
            raise DesignError("a factor space needs at least one factor")
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise DesignError(f"duplicate factor names in {names}")

    def __len__(self) -> int:
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __getitem__(self, key: int | str) -> Factor:
        if isinstance(key, str):
            return self.factors[self.index(key)]
        return self.factors[key]

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.factors]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown factor {name!r}") from None

    def to_actual(self, coded: Sequence[float]) -> list[float]:
        if len(coded) != len(self.factors):
            raise DesignError(f"expected {len(self.factors)} coded values, got {len(coded)}")
        return [to_actual(f, c) for f, c in zip(self.factors, coded)]

    def to_coded(self, actual: Sequence[float]) -> list[float]:
        if len(actual) != len(self.factors):
            raise DesignError(f"expected {len(self.factors)} actual values, got {len(actual)}")
        return [to_coded(f, v) for f, v in zip(self.factors, actual)]


def to_coded(factor: Factor, actual: float) -> float:
    """Map an actual factor value onto the coded scale.

    Values outside the factor's levels are allowed and give ``|coded| > 1``.

    >>> to_coded(Factor("n", 100, 1000), 550)
    0.0
    """
    return (actual - factor.center) / factor.half_range


def to_actual(factor: Factor, coded: float) -> float:
    """Map a coded value back to the factor's units.

    Integer factors are rounded to the nearest whole number, halves away
    from zero (coded +0.25 on a 1..5 depth gives 3.5, reported as 4).
    """
    value = float(factor.center + factor.half_range * coded)
    if factor.kind == "integer":
        return _round_half_away(value)
    return value


@dataclass(frozen=True)
class DesignPoint:
    coded: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coded", tuple(float(c) for c in self.coded))

    def __len__(self) -> int:
        return len(self.coded)

    def __iter__(self):
        return iter(self.coded)


@dataclass(frozen=True)
class Design:
    points: tuple[DesignPoint, ...]
    order_labels: tuple[int, ...] = field(default=())

    def __post_init__(self):
        pts = tuple(p if isinstance(p, DesignPoint) else DesignPoint(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not self.order_labels:
            object.__setattr__(self, "order_labels", tuple(range(1, len(pts) + 1)))
        else:
            object.__setattr__(self, "order_labels", tuple(int(i) for i in self.order_labels))
        if len(self.order_labels) != len(pts):
            raise DesignError("one order label per point is required")
        if pts:
            k = len(pts[0])
            for p in pts:
                if len(p) != k:
                    raise DesignError("design points have mixed arity")
                if any(abs(c) > 1 for c in p.coded):
                    raise DesignError(f"coded value outside [-1, 1] in {p.coded}")

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array([p.coded for p in self.points], dtype=float)

    def to_csv(self, factor_names: Sequence[str]) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["std_order", *factor_names])
        for label, p in zip(self.order_labels, self.points):
            w.writerow([label, *(format(c, ".10g") for c in p.coded)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> tuple["Design", list[str]]:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][0] != "std_order":
            raise DesignError("design CSV must start with a 'std_order' header column")
        names = rows[0][1:]
        body = [r for r in rows[1:] if r]
        return cls([DesignPoint([float(v) for v in r[1:]]) for r in body],
                   [int(r[0]) for r in body]), names


def full_factorial(k: int, scale: float = 1.0) -> Design:
    """All ``2**k`` corners at ``+-scale`` in Yates standard order.

    Factor 1 alternates fastest, factor 2 every second run, and so on.
    """
    if not 1 <= k <= MAX_FACTORS:
        raise DesignError(f"k must be in [1, {MAX_FACTORS}], got {k}")
    if not 0 < scale <= 1:
        raise DesignError(f"scale must be in (0, 1], got {scale}")
    runs = np.arange(2 ** k)[:, None]
    bits = (runs >> np.arange(k)[None, :]) & 1
    coded = np.where(bits == 1, scale, -scale)
    return Design([DesignPoint(row) for row in coded.tolist()])


def diagonal_probe(k: int) -> list[DesignPoint]:
    """Baseline plus the two half-way diagonal points, used as a quick fit check."""
    if k < 1:
        raise DesignError("k must be at least 1")
    return [DesignPoint([0.0] * k), DesignPoint([0.5] * k), DesignPoint([-0.5] * k)]


def design_from_points(points: Iterable[Sequence[float]]) -> Design:
    return Design([DesignPoint(p) for p in points])
