"""Test-function specifications and their realization as grid functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..geometry import Rectangle
from ..measure import GridFunction, dv_alpha_many

__all__ = [
    "TestFunctionSpec",
    "IndicatorSpec",
    "TentSpec",
    "FloorPlusSpec",
    "function_spec_from_json",
    "default_suite",
    "floored_suite",
]


class TestFunctionSpec:
    """A nonnegative bounded compactly supported test function."""

    __test__ = False  # not a pytest class
    name: str

    def realize(self, window: Rectangle, mesh: tuple[int, int], alpha: float) -> GridFunction:
        raise NotImplementedError

    def bounding_box(self) -> Rectangle:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


def _cell_edges(window: Rectangle, mesh):
    nx, ny = mesh
    if nx < 1 or ny < 1:
        raise ValueError("mesh must have at least one cell in each direction")
    xe = np.linspace(window.x0, window.x1, nx + 1)
    ye = np.linspace(window.y0, window.y1, ny + 1)
    X0, Y0 = np.meshgrid(xe[:-1], ye[:-1], indexing="ij")
    X1, Y1 = np.meshgrid(xe[1:], ye[1:], indexing="ij")
    return X0, X1, Y0, Y1


def _require_inside(box: Rectangle, window: Rectangle, name: str) -> None:
    if not window.contains_rect(box):
        raise ValueError(f"test function {name!r} is not supported inside the window {window.as_tuple()}")


@dataclass(frozen=True)
class IndicatorSpec(TestFunctionSpec):
    """sum_k heights[k] * 1_{Q_{I_k}}, with I_k = [left, left + length)."""

    squares: tuple[tuple[float, float], ...]
    heights: tuple[float, ...] = ()
    name: str = "indicator"

    def __post_init__(self):
        sq = tuple((float(a), float(b)) for a, b in self.squares)
        if not sq or any(b <= 0 for _, b in sq):
            raise ValueError("indicator needs at least one square of positive side")
        h = tuple(float(v) for v in self.heights) or (1.0,) * len(sq)
        if len(h) != len(sq) or any(v < 0 for v in h):
            raise ValueError("indicator heights must be nonnegative, one per square")
        object.__setattr__(self, "squares", sq)
        object.__setattr__(self, "heights", h)

    def bounding_box(self) -> Rectangle:
        return Rectangle(min(a for a, _ in self.squares), max(a + b for a, b in self.squares),
                         0.0, max(b for _, b in self.squares))

    def realize(self, window, mesh, alpha):
        _require_inside(self.bounding_box(), window, self.name)
        X0, X1, Y0, Y1 = _cell_edges(window, mesh)
        cell = dv_alpha_many(X0.ravel(), X1.ravel(), Y0.ravel(), Y1.ravel(), alpha)
        vals = np.zeros(X0.size)
        for (a, b), h in zip(self.squares, self.heights):
            ox0 = np.maximum(X0.ravel(), a)
            ox1 = np.minimum(X1.ravel(), a + b)
            oy1 = np.minimum(Y1.ravel(), b)
            hit = (ox1 > ox0) & (oy1 > Y0.ravel())
            if np.any(hit):
                part = dv_alpha_many(ox0[hit], ox1[hit], Y0.ravel()[hit], oy1[hit], alpha)
                vals[hit] += h * part / cell[hit]
        return GridFunction(window, vals.reshape(X0.shape))

    def to_json(self):
        return {"kind": "indicator", "name": self.name,
                "squares": [list(s) for s in self.squares], "heights": list(self.heights)}


@dataclass(frozen=True)
class TentSpec(TestFunctionSpec):
    """amplitude * max(0, 1 - max(|x-cx|/width, |y-cy|/height))."""

    center: tuple[float, float]
    width: float
    height: float
    amplitude: float = 1.0
    name: str = "tent"

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not (self.width > 0 and self.height > 0 and self.amplitude >= 0):
            raise ValueError("tent needs positive width/height and nonnegative amplitude")
        if self.center[1] - self.height < 0:
            raise ValueError("tent must stay in the closed upper half-plane")

    def bounding_box(self) -> Rectangle:
        cx, cy = self.center
        return Rectangle(cx - self.width, cx + self.width, cy - self.height, cy + self.height)

    def realize(self, window, mesh, alpha):
        _require_inside(self.bounding_box(), window, self.name)
        X0, X1, Y0, Y1 = _cell_edges(window, mesh)
        cx, cy = self.center
        xm, ym = 0.5 * (X0 + X1), 0.5 * (Y0 + Y1)
        r = np.maximum(np.abs(xm - cx) / self.width, np.abs(ym - cy) / self.height)
        return GridFunction(window, self.amplitude * np.clip(1 - r, 0, None))

    def to_json(self):
        return {"kind": "tent", "name": self.name, "center": list(self.center),
                "width": self.width, "height": self.height, "amplitude": self.amplitude}


@dataclass(frozen=True)
class FloorPlusSpec(TestFunctionSpec):
    """base + floor on the whole realization window, so strictly positive there."""

    base: TestFunctionSpec
    floor: float
    name: str = "floor_plus"

    def __post_init__(self):
        if not self.floor > 0:
            raise ValueError("floor must be positive")

    def bounding_box(self) -> Rectangle:
        return self.base.bounding_box()

    def realize(self, window, mesh, alpha):
        base = self.base.realize(window, mesh, alpha)
        return GridFunction(window, base.values + self.floor)

    def to_json(self):
        return {"kind": "floor_plus", "name": self.name, "base": self.base.to_json(), "floor": self.floor}


def function_spec_from_json(spec: dict) -> TestFunctionSpec:
    kind = spec.get("kind")
    name = spec.get("name", kind)
    if kind == "indicator":
        return IndicatorSpec(tuple(tuple(s) for s in spec["squares"]), tuple(spec.get("heights", ())), name)
    if kind == "tent":
        return TentSpec(tuple(spec["center"]), float(spec["width"]), float(spec["height"]),
                        float(spec.get("amplitude", 1.0)), name)
    if kind in ("floor_plus", "floorPlus"):
        return FloorPlusSpec(function_spec_from_json(spec["base"]), float(spec["floor"]), name)
    raise ValueError(f"unknown test function kind {kind!r}")


def default_suite() -> list[TestFunctionSpec]:
    """Stacked dyadic indicators over [0, 1) and a tent."""
    return [
        IndicatorSpec(((0.0, 1.0),), name="indicator-1"),
        IndicatorSpec(((0.0, 1.0), (0.0, 0.5)), name="indicator-2"),
        IndicatorSpec(((0.0, 1.0), (0.0, 0.5), (0.0, 0.25), (0.0, 0.125)), name="indicator-4"),
        TentSpec((0.5, 0.5), 0.25, 0.25, name="tent"),
    ]


def floored_suite(suite: Sequence[TestFunctionSpec], floor: float = 1e-6) -> list[TestFunctionSpec]:
    return [FloorPlusSpec(f, floor, name=f"{f.name}+floor") for f in suite]
