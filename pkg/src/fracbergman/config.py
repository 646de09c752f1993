"""Run configuration: a single JSON document, validated field by field."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .geometry import Rectangle
from .harness import HarnessConfig, TestFunctionSpec, default_suite, function_spec_from_json
from .measure import Weight, weight_from_json
from .operators import OperatorConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "parse_mesh", "DEFAULTS"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field or JSON position."""


DEFAULTS: dict[str, Any] = {
    "window": [-1.5, 2.5, 0.0, 4.0],
    "mesh": [128, 128],
    "functionMesh": [32, 32],
    "scaleWindow": [-12, 8],
    "quadTol": 1e-6,
    "evalFloor": 2.0 ** -10,
    "weights": [{"kind": "power", "s": 0.0}, {"kind": "power", "s": 0.125}, {"kind": "power", "s": -0.125}],
    "functions": [f.to_json() for f in default_suite()],
    "exponentGrid": [[0.0, 1.0, 1.5]],
    "lambdaGridSize": 64,
    "seed": 0,
    "cMax": 1e3,
    "nSamples": 500,
    "familyScales": [-6, 6],
    "familyRandom": 1000,
    "necessityS": 1.0,
}


@dataclass(frozen=True)
class RunConfig:
    window: Rectangle
    mesh: tuple[int, int]
    function_mesh: tuple[int, int]
    scale_window: tuple[int, int]
    quad_tol: float
    eval_floor: float
    weights: tuple[Weight, ...]
    functions: tuple[TestFunctionSpec, ...]
    exponent_grid: tuple[tuple[float, float, float], ...]
    lambda_grid_size: int
    seed: int
    c_max: float
    n_samples: int = 500
    family_scales: tuple[int, int] = (-6, 6)
    family_random: int = 1000
    necessity_s: float = 1.0
    raw: dict = field(default_factory=dict, compare=False)

    def operator(self) -> OperatorConfig:
        return OperatorConfig(self.quad_tol, self.scale_window, self.eval_floor)

    def harness(self) -> HarnessConfig:
        return HarnessConfig(self.window, self.mesh, self.function_mesh, self.operator(), self.c_max,
                             self.lambda_grid_size, self.family_scales, self.family_random, self.n_samples,
                             self.seed, 0.15, self.functions)

    def override(self, **changes) -> "RunConfig":
        raw = dict(self.raw)
        keymap = {"seed": "seed", "mesh": "mesh", "quad_tol": "quadTol"}
        for k, v in changes.items():
            raw[keymap.get(k, k)] = list(v) if isinstance(v, tuple) else v
        return replace(self, raw=raw, **changes)


def _num(d: dict, key: str, *, integer: bool = False, positive: bool = False):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    if integer and (not isinstance(v, int)):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{key}: must be positive, got {v!r}")
    return v


def _pair(d: dict, key: str, *, positive: bool = False) -> tuple[int, int]:
    v = d[key]
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(a, int) and not isinstance(a, bool) for a in v)):
        raise ConfigError(f"{key}: expected a pair of integers, got {v!r}")
    if positive and min(v) < 1:
        raise ConfigError(f"{key}: entries must be at least 1, got {v!r}")
    return int(v[0]), int(v[1])


def parse_mesh(text: str) -> tuple[int, int]:
    try:
        nx, ny = (int(a) for a in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"mesh: expected <nx>x<ny>, got {text!r}") from None
    if nx < 1 or ny < 1:
        raise ConfigError(f"mesh: entries must be at least 1, got {text!r}")
    return nx, ny


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = sorted(set(doc) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field")
    d = {**DEFAULTS, **doc}

    w = d["window"]
    if not (isinstance(w, list) and len(w) == 4 and all(isinstance(a, (int, float)) for a in w)):
        raise ConfigError(f"window: expected [x0, x1, y0, y1], got {w!r}")
    try:
        window = Rectangle(*map(float, w))
    except ValueError as exc:
        raise ConfigError(f"window: {exc}") from None

    mesh = _pair(d, "mesh", positive=True)
    function_mesh = _pair(d, "functionMesh", positive=True)
    scale_window = _pair(d, "scaleWindow")
    if scale_window[0] > scale_window[1]:
        raise ConfigError("scaleWindow: needs j_min <= j_max")
    if not (-40 <= scale_window[0] and scale_window[1] <= 40):
        raise ConfigError("scaleWindow: scales must lie in [-40, 40]")
    quad_tol = float(_num(d, "quadTol", positive=True))
    eval_floor = float(_num(d, "evalFloor", positive=True))
    lam_n = _num(d, "lambdaGridSize", integer=True)
    if lam_n < 2:
        raise ConfigError("lambdaGridSize: needs at least 2")
    seed = _num(d, "seed", integer=True)
    c_max = float(_num(d, "cMax", positive=True))
    n_samples = _num(d, "nSamples", integer=True, positive=True)
    family_scales = _pair(d, "familyScales")
    family_random = _num(d, "familyRandom", integer=True)
    necessity_s = float(_num(d, "necessityS"))

    if not isinstance(d["weights"], list):
        raise ConfigError("weights: expected a list")
    weights = []
    for i, spec in enumerate(d["weights"]):
        try:
            weights.append(weight_from_json(spec))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"weights[{i}]: {exc}") from None

    if not isinstance(d["functions"], list):
        raise ConfigError("functions: expected a list")
    functions = []
    for i, spec in enumerate(d["functions"]):
        try:
            fn = function_spec_from_json(spec)
            fn.realize(window, function_mesh, 0.0)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"functions[{i}]: {exc}") from None
        functions.append(fn)
    names = [f.name for f in functions]
    if len(set(names)) != len(names):
        raise ConfigError("functions: names must be unique")

    grid = []
    if not isinstance(d["exponentGrid"], list) or not d["exponentGrid"]:
        raise ConfigError("exponentGrid: expected a nonempty list of [alpha, gamma, p]")
    for i, row in enumerate(d["exponentGrid"]):
        if not (isinstance(row, list) and len(row) == 3 and all(isinstance(a, (int, float)) for a in row)):
            raise ConfigError(f"exponentGrid[{i}]: expected [alpha, gamma, p], got {row!r}")
        a, g, p = map(float, row)
        if not a > -1:
            raise ConfigError(f"exponentGrid[{i}]: alpha must exceed -1")
        if not 0 <= g < 2 + a:
            raise ConfigError(f"exponentGrid[{i}]: gamma must lie in [0, 2+alpha)")
        if not (p >= 1 and (g == 0 or p < (2 + a) / g)):
            raise ConfigError(f"exponentGrid[{i}]: p must satisfy 1 <= p < (2+alpha)/gamma")
        grid.append((a, g, p))

    return RunConfig(window, mesh, function_mesh, scale_window, quad_tol, eval_floor, tuple(weights),
                     tuple(functions), tuple(grid), int(lam_n), int(seed), c_max, int(n_samples),
                     family_scales, int(family_random), necessity_s, raw=d)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return parse_config({})
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(doc)
