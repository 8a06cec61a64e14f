"""Levi-Civita connection of an orthonormal frame and its curvature.

Index conventions (all components are taken in the frame basis):

* ``gamma[i, j, k]``: ``nabla_{theta_i} theta_j = sum_k gamma[i, j, k] theta_k``.
* ``Rm[i, j]``: the skew matrix of ``R(theta_i, theta_j)`` with the sign
  ``R(X, Y) = [nabla_Y, nabla_X] + nabla_[X,Y]``.  With the identification
  ``g(phi(u), X^Y) = g(uX, Y)`` this makes the operator on 2-vectors
  positive on round spheres.
* skew endomorphisms are paired by ``<A, B> = tr(A^T B) / 2`` so that
  ``theta_i ^ theta_j`` (i < j) is orthonormal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .chartfield import CURVATURE_STEP, DEFAULT_STEP, FrameField, jacobian
from .errors import DimensionError

CONVENTIONS = {
    "curvature": "R(X,Y) = [nabla_Y, nabla_X] + nabla_[X,Y]",
    "lambda2_identification": "g(phi(u), X^Y) = g(uX, Y); operator positive on round spheres",
    "lambda2_inner_product": "<A,B> = tr(A^T B)/2",
    "lambda_orientation": "I+ = t1^t2 + t3^t4, J+ = t1^t3 - t2^t4, K+ = t1^t4 + t2^t3 (frame order defines orientation)",
}


def wedge(X, Y) -> np.ndarray:
    """Skew endomorphism of ``X ^ Y``: it sends ``X`` to ``|X|^2 Y`` for ``X`` orthogonal to ``Y``."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    return np.multiply.outer(Y, X) - np.multiply.outer(X, Y)


def skew_inner(A, B) -> float:
    return 0.5 * float(np.sum(A * B))


def christoffel(frame: FrameField, p, h: float = DEFAULT_STEP) -> np.ndarray:
    """Levi-Civita symbols of an orthonormal frame (Koszul formula).

    ``gamma[i, j, k] = (c[i, j, k] - c[j, k, i] + c[k, i, j]) / 2`` where
    ``c`` are the structure constants from finite-difference Lie brackets.
    """
    c = frame.structure_constants(p, h)
    return 0.5 * (c - np.transpose(c, (2, 0, 1)) + np.transpose(c, (1, 2, 0)))


class Connection:
    """A linear connection on TM given by its symbols in an orthonormal frame.

    It acts on 1-forms by duality and on generalized vectors by
    ``nabla_{X + xi} = nabla_X``.
    """

    def __init__(self, frame: FrameField, gamma_fn: Callable[[np.ndarray], np.ndarray], label: str = ""):
        self.frame = frame
        self.gamma_fn = gamma_fn
        self.label = label

    def gamma(self, p) -> np.ndarray:
        return np.asarray(self.gamma_fn(np.asarray(p, dtype=float)))

    def perturbed(self, extra: np.ndarray, label: str = "") -> "Connection":
        """Return the connection with symbols ``gamma + extra`` (``extra`` constant)."""
        extra = np.asarray(extra, dtype=float)
        return Connection(self.frame, lambda p: self.gamma_fn(p) + extra, label or self.label + "+perturbation")


def levi_civita(frame: FrameField, h: float = DEFAULT_STEP) -> Connection:
    return Connection(frame, lambda p: christoffel(frame, p, h), "levi-civita")


def connection_matrix(gamma: np.ndarray, x) -> np.ndarray:
    """``(Gamma_x)[k, j] = sum_i x_i gamma[i, j, k]``."""
    return np.einsum("i,ijk->kj", np.asarray(x, dtype=float), gamma)


def nabla_endo(frame: FrameField, gamma: np.ndarray, psi, i: int, p, h: float = DEFAULT_STEP) -> np.ndarray:
    """Matrix of ``nabla_{theta_i} psi`` in the frame basis.

    ``psi`` is either a constant matrix or a callable returning the frame
    matrix of the endomorphism at a point.
    """
    Gi = np.asarray(gamma)[i].T  # Gi[k, j] = gamma[i, j, k]
    if callable(psi):
        M = frame.matrix(p)
        dpsi = jacobian(psi, p, h) @ M[:, i]
        val = np.asarray(psi(np.asarray(p, dtype=float)))
    else:
        val = np.asarray(psi, dtype=float)
        dpsi = np.zeros_like(val)
    return dpsi + Gi @ val - val @ Gi


@dataclass
class CurvatureOperator:
    """Curvature at a point, ``Rm[i, j]`` being the matrix of ``R(theta_i, theta_j)``."""

    Rm: np.ndarray

    @property
    def dim(self) -> int:
        return self.Rm.shape[0]

    def endo(self, X, Y) -> np.ndarray:
        return np.einsum("i,j,ijab->ab", X, Y, self.Rm)

    def on_bivector(self, V) -> np.ndarray:
        """``R(V)`` for a 2-vector given as a skew matrix (``X^Y -> wedge(X, Y)``)."""
        return 0.5 * np.einsum("ji,ijab->ab", V, self.Rm)

    def lambda2_matrix(self, basis=None) -> np.ndarray:
        """Matrix ``<E_a, R(E_b)>`` of the operator on 2-vectors.

        ``basis`` defaults to ``theta_i ^ theta_j`` for ``i < j``; any basis
        passed in should be orthonormal for :func:`skew_inner`.
        """
        if basis is None:
            d = self.dim
            basis = [wedge(np.eye(d)[i], np.eye(d)[j]) for i in range(d) for j in range(i + 1, d)]
        images = [self.on_bivector(E) for E in basis]
        return np.array([[skew_inner(Ea, Rb) for Rb in images] for Ea in basis])

    def sectional(self, i: int, j: int) -> float:
        return float(self.Rm[i, j, j, i])

    def ricci(self) -> np.ndarray:
        return np.einsum("ijki->jk", self.Rm)

    def scalar(self) -> float:
        return float(np.einsum("ijji->", self.Rm))


def curvature(frame: FrameField, p, h: float = CURVATURE_STEP, connection: Optional[Connection] = None) -> CurvatureOperator:
    """Curvature of the Levi-Civita connection (or ``connection``) at ``p``.

    Derivatives of the symbols are taken by a second central difference
    nested around the one used for the symbols themselves.
    """
    p = frame.chart.check(p, 3 * h)
    if connection is None:
        gfn = lambda q: christoffel(frame, q, h)
    else:
        gfn = connection.gamma
    M = frame.matrix(p)
    G = gfn(p)
    dG = jacobian(gfn, p, h)  # dG[j, k, m, a] = d_a gamma[j, k, m]
    thG = np.einsum("jkma,ai->ijkm", dG, M)  # theta_i(gamma[j, k, m])
    c = G - np.transpose(G, (1, 0, 2))
    std = (
        np.einsum("ijkm->ijmk", thG)
        - np.einsum("jikm->ijmk", thG)
        + np.einsum("jkl,ilm->ijmk", G, G)
        - np.einsum("ikl,jlm->ijmk", G, G)
        - np.einsum("ijl,lkm->ijmk", c, G)
    )
    return CurvatureOperator(-std)


@dataclass
class Dim4Blocks:
    """``R = [[W+ + s/12, B], [B*, W- + s/12]]`` in the basis ``(I+, J+, K+, I-, J-, K-)/sqrt 2``."""

    Wplus: np.ndarray
    Wminus: np.ndarray
    s: float
    B: np.ndarray
    asymmetry: float = 0.0

    @property
    def Bstar(self) -> np.ndarray:
        return self.B.T

    def assemble(self) -> np.ndarray:
        top = np.hstack([self.Wplus + self.s / 12 * np.eye(3), self.B])
        bottom = np.hstack([self.Bstar, self.Wminus + self.s / 12 * np.eye(3)])
        return np.vstack([top, bottom])

    def norms(self) -> dict:
        return {
            "Wplus": float(np.linalg.norm(self.Wplus)),
            "Wminus": float(np.linalg.norm(self.Wminus)),
            "B": float(np.linalg.norm(self.B)),
            "s": float(self.s),
        }


def split_blocks(mat6: np.ndarray) -> Dim4Blocks:
    """Block decomposition of a 6x6 operator already written in a Lambda+/- basis."""
    mat6 = np.asarray(mat6, dtype=float)
    asym = float(np.max(np.abs(mat6 - mat6.T)))
    m = 0.5 * (mat6 + mat6.T)
    A, B, C = m[:3, :3], m[:3, 3:], m[3:, 3:]
    s = 2.0 * (np.trace(A) + np.trace(C))
    return Dim4Blocks(A - s / 12 * np.eye(3), C - s / 12 * np.eye(3), float(s), B.copy(), asym)


def blocks_dim4(R: CurvatureOperator, lambda_bases=None) -> Dim4Blocks:
    if R.dim != 4:
        raise DimensionError(f"block decomposition needs dim 4, got {R.dim}")
    if lambda_bases is None:
        from .quaternion import lambda_bases as _lb

        lambda_bases = _lb()
    basis = [E / np.sqrt(2.0) for E in lambda_bases.all()]
    return split_blocks(R.lambda2_matrix(basis))


def lemma1_residual(R: CurvatureOperator, triple, s: float, n: int, X, Y) -> float:
    """Norm of ``[I, R(X,Y)] + c g(KX,Y) J - c g(JX,Y) K`` with ``c = s / (2n(n+2))``."""
    I, J, K = triple
    c = s / (2 * n * (n + 2))
    RXY = R.endo(X, Y)
    lhs = I @ RXY - RXY @ I
    res = lhs + c * float(Y @ (K @ X)) * J - c * float(Y @ (J @ X)) * K
    return float(np.linalg.norm(res))
