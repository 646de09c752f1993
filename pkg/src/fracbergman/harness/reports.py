"""Structured results of inequality checks and their JSON / CSV forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..geometry import DyadicIndex

__all__ = [
    "json_number",
    "measured",
    "to_measured_tree",
    "CaseResult",
    "InequalityReport",
    "LevelSetReport",
    "CSV_HEADER",
    "format_float",
]

CSV_HEADER = ("experiment", "parameter", "lhs", "rhs", "ratio", "tolerance", "pass")


def json_number(x):
    """Floats as JSON-safe values; non-finite ones become strings."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def format_float(x) -> str:
    v = json_number(x)
    return v if isinstance(v, str) else repr(v)


def measured(value, tolerance) -> dict:
    return {"value": json_number(value), "tolerance": json_number(tolerance)}


def _is_measured(obj) -> bool:
    return isinstance(obj, dict) and set(obj) == {"value", "tolerance"}


def to_measured_tree(obj, tolerance: float):
    """Recursively wrap every bare float as {"value", "tolerance"}."""
    if _is_measured(obj):
        return obj
    if isinstance(obj, dict):
        return {str(k): to_measured_tree(v, tolerance) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_measured_tree(v, tolerance) for v in obj]
    if isinstance(obj, DyadicIndex):
        return index_to_json(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return measured(obj, tolerance)
    return obj


def index_to_json(idx: DyadicIndex) -> dict:
    return {"beta": str(idx.beta), "j": idx.j, "m": idx.m,
            "interval": [str(idx.exact_left), str(idx.exact_right)]}


def _ratio(lhs: float, rhs: float) -> float:
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    return lhs / rhs


@dataclass
class CaseResult:
    """One row: a measured left side against the right side it must not exceed."""

    parameter: str
    lhs: float
    rhs: float
    tolerance: float
    slack: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return _ratio(self.lhs, self.rhs)

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.lhs) and self.lhs <= self.rhs * (1 + self.slack) + self.tolerance)

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "lhs": measured(self.lhs, self.tolerance),
            "rhs": measured(self.rhs, self.tolerance),
            "ratio": measured(self.ratio, self.tolerance),
            "pass": self.passed,
            "details": to_measured_tree(self.details, self.tolerance),
        }


@dataclass
class InequalityReport:
    """Aggregate check: pass iff lhs <= rhs within the declared slack.

    For constant-exponent experiments lhs is the largest normalized ratio
    and rhs the suite constant; for property checks lhs counts violations
    or measures drift against a threshold.
    """

    experiment: str
    lhs: float
    rhs: float
    constant_used: float
    exponent_used: float
    tolerance: float = 0.0
    slack: float = 0.0
    cases: list[CaseResult] = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return _ratio(self.lhs, self.rhs)

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.lhs) and self.lhs <= self.rhs * (1 + self.slack) + self.tolerance)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "pass": self.passed,
            "lhs": measured(self.lhs, self.tolerance),
            "rhs": measured(self.rhs, self.tolerance),
            "ratio": measured(self.ratio, self.tolerance),
            "constant_used": measured(self.constant_used, 0.0),
            "exponent_used": measured(self.exponent_used, 0.0),
            "slack": measured(self.slack, 0.0),
            "inputs": to_measured_tree(self.inputs, 0.0),
            "witnesses": to_measured_tree(self.witnesses, self.tolerance),
            "notes": list(self.notes),
            "cases": [c.to_dict() for c in self.cases],
        }

    def csv_rows(self) -> list[tuple[str, ...]]:
        rows = [(self.experiment, c.parameter, format_float(c.lhs), format_float(c.rhs),
                 format_float(c.ratio), format_float(c.tolerance), str(c.passed).lower())
                for c in self.cases]
        rows.append((self.experiment, "aggregate", format_float(self.lhs), format_float(self.rhs),
                     format_float(self.ratio), format_float(self.tolerance), str(self.passed).lower()))
        return rows


@dataclass
class LevelSetReport:
    lam: float
    super_level_measure: float
    maximal_squares: list[DyadicIndex]
    tolerance: float = 0.0
    parent_witnesses: list[dict] = field(default_factory=list)
    mesh_points_checked: int = 0
    mesh_violations: int = 0
    parent_failures: int = 0
    nested_pairs: int = 0
    classification: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.mesh_violations == 0 and self.parent_failures == 0 and self.nested_pairs == 0

    def to_dict(self) -> dict:
        return {
            "lambda": measured(self.lam, 0.0),
            "super_level_measure": measured(self.super_level_measure, self.tolerance),
            "maximal_squares": [index_to_json(i) for i in self.maximal_squares],
            "parent_witnesses": to_measured_tree(self.parent_witnesses, self.tolerance),
            "mesh_points_checked": self.mesh_points_checked,
            "mesh_violations": self.mesh_violations,
            "parent_failures": self.parent_failures,
            "nested_pairs": self.nested_pairs,
            "classification": to_measured_tree(self.classification, self.tolerance),
            "pass": self.passed,
        }
