"""Weighted discrete L^p spaces on finite grids and their mixed l^s norms."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

__all__ = [
    "MeasureGrid",
    "GridFunction",
    "FunctionStack",
    "x_norm",
    "mixed_norm",
    "lp_norm",
    "layer_power_sum",
    "pointwise_lsum",
    "stack_to_json",
    "stack_from_json",
]


def _check_exponent(value: float, name: str) -> float:
    value = float(value)
    if math.isnan(value) or value < 1.0:
        raise ValueError(f"{name} must lie in [1, inf], got {value}")
    return value


@dataclass(frozen=True, eq=False)
class MeasureGrid:
    """Finite point set with positive quadrature weights and an exponent p."""

    weights: np.ndarray
    p: float = 2.0

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float).ravel()
        if w.size < 1:
            raise ValueError("a grid needs at least one point")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("grid weights must be positive and finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "p", _check_exponent(self.p, "p"))

    @classmethod
    def uniform(cls, n: int, p: float = 2.0, total: float = 1.0) -> "MeasureGrid":
        return cls(np.full(int(n), total / int(n)), p)

    @classmethod
    def counting(cls, n: int, p: float = 2.0) -> "MeasureGrid":
        return cls(np.ones(int(n)), p)

    @property
    def n(self) -> int:
        return self.weights.size

    def with_p(self, p: float) -> "MeasureGrid":
        return MeasureGrid(self.weights, p)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MeasureGrid):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash((self.p, self.weights.tobytes()))


def _as_values(values: Any, n: int) -> np.ndarray:
    v = np.array(values, dtype=complex)
    if v.ndim != 1 or v.size != n:
        raise ValueError(f"expected {n} values, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("grid function values must be finite (NaN/Inf found)")
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: MeasureGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _as_values(self.values, self.grid.n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class FunctionStack:
    """Ordered layers over one grid, optionally carrying quadrature weights."""

    grid: MeasureGrid
    layers: np.ndarray
    layer_weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        layers = np.array(self.layers, dtype=complex)
        if layers.ndim == 1:
            layers = layers[None, :]
        if layers.ndim != 2 or layers.shape[1] != self.grid.n:
            raise ValueError(f"layers must have shape (J, {self.grid.n}), got {layers.shape}")
        if not np.all(np.isfinite(layers)):
            raise ValueError("stack layers must be finite (NaN/Inf found)")
        layers.setflags(write=False)
        object.__setattr__(self, "layers", layers)
        if self.layer_weights is not None:
            lw = np.array(self.layer_weights, dtype=float).ravel()
            if lw.size != layers.shape[0]:
                raise ValueError("one layer weight per layer is required")
            if not np.all(np.isfinite(lw)) or np.any(lw <= 0):
                raise ValueError("layer weights must be positive and finite")
            lw.setflags(write=False)
            object.__setattr__(self, "layer_weights", lw)

    @property
    def n_layers(self) -> int:
        return self.layers.shape[0]

    def layer(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.layers[j])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FunctionStack):
            return NotImplemented
        lw_eq = (self.layer_weights is None and other.layer_weights is None) or (
            self.layer_weights is not None
            and other.layer_weights is not None
            and np.array_equal(self.layer_weights, other.layer_weights)
        )
        return self.grid == other.grid and lw_eq and np.array_equal(self.layers, other.layers)

    __hash__ = None  # type: ignore[assignment]


# -- array level kernels ---------------------------------------------------


def lp_norm(values: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """Weighted L^p norm along axis 0; trailing axes are independent inputs."""
    a = np.abs(values)
    if math.isinf(p):
        return a.max(axis=0)
    w = weights.reshape((-1,) + (1,) * (a.ndim - 1))
    if p == 1.0:
        return (w * a).sum(axis=0)
    peak = a.max() if a.size else 0.0
    if 0 < peak and (peak > 1e100 or peak < 1e-100):
        return peak * lp_norm(a / peak, weights, p)
    return ((w * a**p).sum(axis=0)) ** (1.0 / p)


def layer_power_sum(layers: np.ndarray, s: float, layer_weights: np.ndarray | None = None) -> np.ndarray:
    """Sequential sum over axis 0 of lambda_j |layer_j|^s (s finite).

    Layers are added one at a time in order, so a prefix of the stack always
    yields a partial sum that is bitwise <= the full sum.
    """
    acc = np.zeros(layers.shape[1:], dtype=float)
    for j in range(layers.shape[0]):
        term = np.abs(layers[j])
        if s == 2.0:
            np.multiply(term, term, out=term)
        elif s != 1.0:
            np.power(term, s, out=term)
        if layer_weights is not None:
            term *= layer_weights[j]
        acc += term
    return acc


def pointwise_lsum(layers: np.ndarray, s: float, layer_weights: np.ndarray | None = None) -> np.ndarray:
    """g = (sum_j lambda_j |layer_j|^s)^(1/s) pointwise; s = inf is the max."""
    s = _check_exponent(s, "s")
    if math.isinf(s):
        return np.abs(layers).max(axis=0)
    peak = np.abs(layers).max() if layers.size else 0.0
    if 0 < peak and (peak > 1e100 or peak < 1e-100):
        return peak * pointwise_lsum(layers / peak, s, layer_weights)
    return layer_power_sum(layers, s, layer_weights) ** (1.0 / s)


# -- public norms ----------------------------------------------------------


def x_norm(f: GridFunction) -> float:
    return float(lp_norm(f.values, f.grid.weights, f.grid.p))


def mixed_norm(stack: FunctionStack, s: float) -> float:
    """Norm of the stack in X(l^s): x_norm of the pointwise l^s combination."""
    lw = None if math.isinf(float(s)) else stack.layer_weights
    g = pointwise_lsum(stack.layers, s, lw)
    return float(lp_norm(g, stack.grid.weights, stack.grid.p))


# -- JSON ------------------------------------------------------------------


def _p_to_json(p: float) -> float | str:
    return "inf" if math.isinf(p) else p


def _p_from_json(p: Any) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return math.inf
        raise ValueError(f"bad exponent {p!r}")
    return float(p)


def _pairs(values: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in values]


def stack_to_json(obj: GridFunction | FunctionStack) -> dict:
    """Document form shared by single functions and stacks."""
    if isinstance(obj, GridFunction):
        layers: Sequence[np.ndarray] = [obj.values]
        lw = None
    else:
        layers = list(obj.layers)
        lw = None if obj.layer_weights is None else [float(v) for v in obj.layer_weights]
    return {
        "n": obj.grid.n,
        "p": _p_to_json(obj.grid.p),
        "weights": [float(v) for v in obj.grid.weights],
        "layers": [_pairs(layer) for layer in layers],
        "layer_weights": lw,
    }


def stack_from_json(doc: dict | str) -> GridFunction | FunctionStack:
    """Inverse of stack_to_json; a single unweighted layer becomes a GridFunction."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    missing = [k for k in ("n", "layers") if k not in doc]
    if missing:
        raise ValueError(f"function JSON lacks {', '.join(missing)}; expected n, layers and optional weights, p")
    n = int(doc["n"])
    weights = doc.get("weights")
    grid = MeasureGrid(np.ones(n) if weights is None else weights, _p_from_json(doc.get("p", 2)))
    raw = doc["layers"]
    layers = []
    for layer in raw:
        arr = np.array(layer, dtype=float)
        if arr.ndim == 1:
            arr = np.stack([arr, np.zeros_like(arr)], axis=1)
        if arr.shape != (n, 2):
            raise ValueError(f"layer must be {n} [re, im] pairs")
        layers.append(arr[:, 0] + 1j * arr[:, 1])
    lw = doc.get("layer_weights")
    if len(layers) == 1 and lw is None:
        return GridFunction(grid, layers[0])
    return FunctionStack(grid, np.array(layers), lw)
