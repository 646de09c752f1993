"""Shared harness settings, evaluation meshes and sample points."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import Interval, Rectangle
from ..measure import PowerWeight, ScaledWeight, Weight, interval_family
from ..operators import OperatorConfig, apply_T
from .functions import TestFunctionSpec, default_suite

__all__ = ["HarnessConfig", "EvalMesh", "sample_points", "weight_label", "OperatorCache"]


@dataclass(frozen=True)
class HarnessConfig:
    """Numerical settings shared by all experiments.

    ``mesh`` is the evaluation mesh for norms and level sets;
    ``function_mesh`` is the grid on which test functions are realized.
    """

    window: Rectangle = Rectangle(-1.5, 2.5, 0.0, 4.0)
    mesh: tuple[int, int] = (128, 128)
    function_mesh: tuple[int, int] = (32, 32)
    operator: OperatorConfig = field(default_factory=OperatorConfig)
    c_max: float = 1e3
    lambda_grid_size: int = 64
    family_scales: tuple[int, int] = (-6, 6)
    family_random: int = 1000
    n_samples: int = 500
    seed: int = 0
    drift_limit: float = 0.15
    functions: tuple[TestFunctionSpec, ...] = field(default_factory=lambda: tuple(default_suite()))

    def __post_init__(self):
        if min(self.mesh) < 1 or min(self.function_mesh) < 1:
            raise ValueError("meshes need at least one cell per direction")
        if not self.c_max > 0:
            raise ValueError("c_max must be positive")
        if self.lambda_grid_size < 2:
            raise ValueError("lambda grid needs at least two points")

    def with_mesh(self, mesh: tuple[int, int]) -> "HarnessConfig":
        return replace(self, mesh=mesh)

    def family(self) -> list[Interval]:
        j0, j1 = self.family_scales
        return interval_family(self.window.x0, self.window.x1, j0, j1, self.family_random, self.seed)


@dataclass(frozen=True)
class EvalMesh:
    window: Rectangle
    nx: int
    ny: int

    @property
    def xedges(self) -> np.ndarray:
        return np.linspace(self.window.x0, self.window.x1, self.nx + 1)

    @property
    def yedges(self) -> np.ndarray:
        return np.linspace(self.window.y0, self.window.y1, self.ny + 1)

    def cells(self):
        xe, ye = self.xedges, self.yedges
        X0, Y0 = np.meshgrid(xe[:-1], ye[:-1], indexing="ij")
        X1, Y1 = np.meshgrid(xe[1:], ye[1:], indexing="ij")
        return X0.ravel(), X1.ravel(), Y0.ravel(), Y1.ravel()

    def centers(self) -> np.ndarray:
        x0, x1, y0, y1 = self.cells()
        return 0.5 * (x0 + x1) + 0.5j * (y0 + y1)

    def cell_measures(self, weight: Weight, alpha: float) -> np.ndarray:
        """int_cell weight dV_alpha for every cell (inf where divergent)."""
        x0, x1, y0, y1 = self.cells()
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return weight.integrate_many(x0, x1, y0, y1, alpha)

    def refined(self) -> "EvalMesh":
        return EvalMesh(self.window, 2 * self.nx, 2 * self.ny)


def sample_points(window: Rectangle, n: int, floor: float, seed: int) -> np.ndarray:
    """x uniform on the window, y log-uniform on [floor, window top]."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(window.x0, window.x1, n)
    y = np.exp(rng.uniform(np.log(floor), np.log(window.y1), n))
    return x + 1j * y


def weight_label(w: Weight) -> str:
    base = w._resolved if isinstance(w, ScaledWeight) else w
    if isinstance(base, PowerWeight):
        return f"y^{base.s:g}"
    return type(base).__name__


class OperatorCache:
    """Memo of operator values keyed by (function, alpha, gamma, points tag)."""

    def __init__(self):
        self._store: dict = {}

    def apply_T(self, spec: TestFunctionSpec, f, alpha: float, gamma: float, points: np.ndarray,
                tag, cfg: OperatorConfig) -> np.ndarray:
        key = (spec.name, repr(spec.to_json()), alpha, gamma, tag, cfg)
        if key not in self._store:
            self._store[key] = np.asarray(apply_T(f, alpha, gamma, points, cfg))
        return self._store[key]
