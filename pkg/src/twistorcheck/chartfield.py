"""Coordinate charts, evaluable fields and finite-difference Cartan calculus.

Everything here works in the coordinate basis ``d/dx_i``, ``dx_i`` of a box
chart.  Derivatives are second-order central differences; a step ``h`` is
always passed explicitly so that callers control the truncation/rounding
balance (``DEFAULT_STEP`` for first derivatives, ``CURVATURE_STEP`` for
anything that differentiates twice).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import FrameDegenerate, OutOfChart

DEFAULT_STEP = 1e-4
CURVATURE_STEP = 1e-3
GRAM_DET_MIN = 1e-6


@dataclass(frozen=True)
class Chart:
    """A closed coordinate box ``prod_i [lo_i, hi_i]``."""

    dim: int
    bounds: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.shape != (self.dim, 2):
            raise ValueError(f"bounds must have shape ({self.dim}, 2), got {b.shape}")
        if np.any(b[:, 1] <= b[:, 0]):
            raise ValueError("chart box is empty")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def box(cls, lo, hi, dim: int, label: str = "") -> "Chart":
        return cls(dim, np.tile([float(lo), float(hi)], (dim, 1)), label)

    def contains(self, p, margin: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.bounds[:, 0] + margin) and np.all(p <= self.bounds[:, 1] - margin))

    def check(self, p, margin: float = 0.0) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise OutOfChart(f"point has shape {p.shape}, chart {self.label!r} has dim {self.dim}")
        if not self.contains(p, margin):
            raise OutOfChart(f"point {p.tolist()} outside chart {self.label!r} (margin {margin:g})")
        return p

    def rescale(self, unit_points: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Map points of the unit cube into the box shrunk by ``margin``."""
        lo = self.bounds[:, 0] + margin
        hi = self.bounds[:, 1] - margin
        return lo + np.asarray(unit_points) * (hi - lo)


class Field:
    """An evaluable map from chart coordinates to a fixed-shape array."""

    shape: tuple = ()

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], chart: Optional[Chart] = None):
        self.fn = fn
        self.chart = chart

    def __call__(self, p) -> np.ndarray:
        return eval_field(self, p)


class ScalarField(Field):
    pass


class VectorField(Field):
    """Components in the coordinate basis ``d/dx_i``."""


class OneFormField(Field):
    """Components in the coordinate basis ``dx_i``."""


def eval_field(field: Field, point) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if field.chart is not None:
        field.chart.check(p)
    return np.asarray(field.fn(p), dtype=float)


def _raw(f) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, Field):
        return f.fn
    return f


def _chart_of(*fields) -> Optional[Chart]:
    for f in fields:
        if isinstance(f, Field) and f.chart is not None:
            return f.chart
    return None


def jacobian(fn, p, h: float = DEFAULT_STEP) -> np.ndarray:
    """Central-difference derivative of ``fn`` at ``p``.

    Returns an array of shape ``fn(p).shape + (dim,)`` whose last axis holds
    the partial derivatives.
    """
    fn = _raw(fn)
    p = np.asarray(p, dtype=float)
    cols = []
    for k in range(p.size):
        e = np.zeros_like(p)
        e[k] = h
        cols.append((np.asarray(fn(p + e), dtype=float) - np.asarray(fn(p - e), dtype=float)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def gradient(f, p, h: float = DEFAULT_STEP) -> np.ndarray:
    """Components of ``df`` for a scalar function."""
    return jacobian(f, p, h)


def lie_bracket(X, Y, p, h: float = DEFAULT_STEP) -> np.ndarray:
    """``[X,Y]^k = X^i d_i Y^k - Y^i d_i X^k`` by central differences."""
    chart = _chart_of(X, Y)
    if chart is not None:
        chart.check(p, 2 * h)
    Xf, Yf = _raw(X), _raw(Y)
    p = np.asarray(p, dtype=float)
    return jacobian(Yf, p, h) @ Xf(p) - jacobian(Xf, p, h) @ Yf(p)


def d_oneform(xi, p, h: float = DEFAULT_STEP) -> np.ndarray:
    """``(d xi)_ij = d_i xi_j - d_j xi_i`` as an antisymmetric matrix."""
    chart = _chart_of(xi)
    if chart is not None:
        chart.check(p, 2 * h)
    # jac[j, i] = d_i xi_j
    jac = jacobian(xi, p, h)
    return jac.T - jac


def interior(X, two_form) -> np.ndarray:
    """``(i_X w)_j = X^i w_ij``."""
    return np.asarray(X) @ np.asarray(two_form)


def lie_derivative_oneform(X, eta, p, h: float = DEFAULT_STEP) -> np.ndarray:
    """Cartan's formula ``L_X eta = i_X d eta + d(i_X eta)``."""
    Xf, ef = _raw(X), _raw(eta)
    p = np.asarray(p, dtype=float)
    return interior(Xf(p), d_oneform(ef, p, h)) + gradient(lambda q: Xf(q) @ ef(q), p, h)


class FrameField:
    """A frame ``(theta_1, ..., theta_dim)`` declared orthonormal.

    ``fn(p)`` returns the matrix ``M`` whose column ``i`` holds the
    coordinate components of ``theta_i``.  The frame *defines* the metric:
    ``g = M^{-T} M^{-1}`` in coordinates.
    """

    metric_flag = "orthonormal-by-declaration"

    def __init__(self, chart: Chart, fn: Callable[[np.ndarray], np.ndarray], label: str = ""):
        self.chart = chart
        self.fn = fn
        self.label = label or chart.label

    @property
    def dim(self) -> int:
        return self.chart.dim

    def matrix(self, p, margin: float = 0.0) -> np.ndarray:
        p = self.chart.check(p, margin)
        M = np.asarray(self.fn(p), dtype=float)
        if np.linalg.det(M.T @ M) < GRAM_DET_MIN:
            raise FrameDegenerate(f"frame {self.label!r} degenerate at {p.tolist()}")
        return M

    def coframe(self, p) -> np.ndarray:
        """Rows are the coordinate components of the dual coframe."""
        return np.linalg.inv(self.matrix(p))

    def metric(self, p) -> np.ndarray:
        Minv = self.coframe(p)
        return Minv.T @ Minv

    def theta(self, i: int) -> VectorField:
        return VectorField(lambda q, i=i: np.asarray(self.fn(q), dtype=float)[:, i], self.chart)

    def thetas(self) -> Sequence[VectorField]:
        return [self.theta(i) for i in range(self.dim)]

    def structure_constants(self, p, h: float = DEFAULT_STEP) -> np.ndarray:
        """``c[i, j, k]`` with ``[theta_i, theta_j] = sum_k c[i, j, k] theta_k``."""
        p = self.chart.check(p, 2 * h)
        M = self.matrix(p)
        dM = jacobian(self.fn, p, h)  # dM[a, j, c] = d_c M[a, j]
        # [theta_i, theta_j]^a = theta_i(M[a, j]) - theta_j(M[a, i])
        D = np.einsum("ajc,ci->aji", dM, M)  # D[a, j, i] = theta_i(M[a, j])
        br = np.transpose(D, (2, 1, 0)) - np.transpose(D, (1, 2, 0))  # [i, j, a]
        return br @ np.linalg.inv(M).T
