"""Generalized tangent bundle TM + T*M: pairing, Courant bracket, structures.

Generalized vectors are stored as flat arrays ``(a, alpha)`` of length
``2 * dim``: ``a`` are the components of the vector part in the frame
``theta`` and ``alpha`` those of the form part in the dual coframe.
Generalized almost complex structures are ``2dim x 2dim`` matrix fields in
the same split basis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .chartfield import DEFAULT_STEP, FrameField, gradient, jacobian, lie_bracket, lie_derivative_oneform
from .connection import Connection, connection_matrix
from .errors import DegenerateEigenspace, DimensionMismatch

RANK_TOL = 1e-8
EIG_TOL = 1e-8


@dataclass
class GenVector:
    vec: np.ndarray
    form: np.ndarray

    @classmethod
    def from_flat(cls, x) -> "GenVector":
        x = np.asarray(x)
        d = x.shape[0] // 2
        return cls(x[:d], x[d:])

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.vec, self.form])

    def __add__(self, other: "GenVector") -> "GenVector":
        return GenVector(self.vec + other.vec, self.form + other.form)

    def __sub__(self, other: "GenVector") -> "GenVector":
        return GenVector(self.vec - other.vec, self.form - other.form)

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat))


def _flat(x) -> np.ndarray:
    return x.flat if isinstance(x, GenVector) else np.asarray(x)


def eta(dim: int) -> np.ndarray:
    """Matrix of the pairing, ``1/2 [[0, I], [I, 0]]``."""
    e = np.eye(dim)
    z = np.zeros((dim, dim))
    return 0.5 * np.block([[z, e], [e, z]])


def pairing(A, B) -> float:
    """``<X + xi, Y + eta> = (xi(Y) + eta(X)) / 2``."""
    a, b = _flat(A), _flat(B)
    if a.shape != b.shape or a.shape[0] % 2:
        raise DimensionMismatch(f"cannot pair shapes {a.shape} and {b.shape}")
    d = a.shape[0] // 2
    return 0.5 * float(a[d:] @ b[:d] + b[d:] @ a[:d])


class GenSection:
    """A smooth section of TM + T*M in frame/coframe components."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], frame: FrameField, label: str = ""):
        self.fn = fn
        self.frame = frame
        self.label = label

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(p, dtype=float)), dtype=float)

    @classmethod
    def constant(cls, value, frame: FrameField, label: str = "") -> "GenSection":
        v = np.asarray(value, dtype=float)
        return cls(lambda p: v, frame, label)

    @classmethod
    def basis(cls, frame: FrameField) -> list:
        """The ``2 dim`` sections ``theta_1, ..., theta_d, theta_1*, ..., theta_d*``."""
        return [cls.constant(e, frame, f"e{k}") for k, e in enumerate(np.eye(2 * frame.dim))]

    def scaled(self, f: Callable[[np.ndarray], float]) -> "GenSection":
        return GenSection(lambda p: f(p) * self.fn(p), self.frame, f"f*{self.label}")

    def transformed(self, J: "Gacs") -> "GenSection":
        """The section ``p -> J(p) A(p)``."""
        return GenSection(lambda p: J.fn(p) @ self.fn(p), self.frame, f"J{self.label}")

    # coordinate-basis parts, used by the calculus
    def vector_coords(self, p) -> np.ndarray:
        d = self.frame.dim
        return np.asarray(self.frame.fn(p)) @ self.fn(p)[:d]

    def form_coords(self, p) -> np.ndarray:
        d = self.frame.dim
        return np.linalg.solve(np.asarray(self.frame.fn(p)).T, self.fn(p)[d:])


class Gacs:
    """Generalized almost complex structure ``p -> J(p)`` in the split basis."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], frame: FrameField, label: str = ""):
        self.fn = fn
        self.frame = frame
        self.label = label

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(p, dtype=float)), dtype=float)

    def defects(self, p) -> tuple:
        """``(max|J^2 + 1|, max|J^T eta J - eta|)`` at ``p``."""
        J = self(p)
        n = J.shape[0]
        E = eta(n // 2)
        return float(np.max(np.abs(J @ J + np.eye(n)))), float(np.max(np.abs(J.T @ E @ J - E)))


def courant_bracket(A: GenSection, B: GenSection, p, h: float = DEFAULT_STEP) -> GenVector:
    """``[X+xi, Y+eta] = [X,Y] + L_X eta - L_Y xi - d(i_X eta - i_Y xi)/2`` at ``p``."""
    frame = A.frame
    p = frame.chart.check(p, 2 * h)
    X, xi = A.vector_coords, A.form_coords
    Y, et = B.vector_coords, B.form_coords
    vec = lie_bracket(X, Y, p, h)
    form = (
        lie_derivative_oneform(X, et, p, h)
        - lie_derivative_oneform(Y, xi, p, h)
        - 0.5 * gradient(lambda q: X(q) @ et(q) - Y(q) @ xi(q), p, h)
    )
    M = frame.matrix(p)
    return GenVector(np.linalg.solve(M, vec), M.T @ form)


def gen_nijenhuis(J: Gacs, A: GenSection, B: GenSection, p, h: float = DEFAULT_STEP) -> GenVector:
    """``N(A,B) = [JA,JB] - J[JA,B] - J[A,JB] - [A,B]`` at ``p``."""
    JA, JB = A.transformed(J), B.transformed(J)
    Jp = J(p)
    out = (
        courant_bracket(JA, JB, p, h).flat
        - Jp @ courant_bracket(JA, B, p, h).flat
        - Jp @ courant_bracket(A, JB, p, h).flat
        - courant_bracket(A, B, p, h).flat
    )
    return GenVector.from_flat(out)


@dataclass
class TypeInfo:
    type: int
    singular_values: np.ndarray
    threshold: float

    @property
    def margin(self) -> float:
        """Distance (in log10 units) of the nearest singular value to the threshold."""
        sv = self.singular_values
        gaps = np.abs(np.log10(np.maximum(sv, 1e-300)) - np.log10(self.threshold))
        return float(np.min(gaps))


def type_info(Jm: np.ndarray, rank_tol: float = RANK_TOL, eig_tol: float = EIG_TOL) -> TypeInfo:
    """Type of a generalized complex structure given as a matrix.

    The ``+i`` eigenspace ``E`` is spanned by the columns of the projector
    ``(1 - iJ)/2``; the type is ``dim - rank(pr_1 E)``.
    """
    Jm = np.asarray(Jm, dtype=float)
    n = Jm.shape[0]
    d = n // 2
    scale = max(1.0, float(np.linalg.norm(Jm, 2)))
    lam = np.linalg.eigvals(Jm)
    count = int(np.sum(np.abs(lam - 1j) <= eig_tol * scale))
    if count != d:
        raise DegenerateEigenspace(f"+i eigenspace has dimension {count}, expected {d}")
    P = 0.5 * (np.eye(n) - 1j * Jm)
    U, _, _ = np.linalg.svd(P)
    E = U[:, :d]
    sv = np.linalg.svd(E[:d, :], compute_uv=False)
    thr = rank_tol * sv[0]
    return TypeInfo(int(d - np.sum(sv > thr)), sv, thr)


def gacs_type(J, p=None) -> int:
    Jm = J(p) if callable(J) else J
    return type_info(Jm).type


def b_field_matrix(B: np.ndarray) -> np.ndarray:
    """Matrix of ``e^B : X + xi -> X + xi + i_X B``."""
    B = np.asarray(B, dtype=float)
    d = B.shape[0]
    return np.block([[np.eye(d), np.zeros((d, d))], [B.T, np.eye(d)]])


def b_transform(J: Gacs, B) -> Gacs:
    """``e^{-B} J e^{B}`` for a 2-form field ``B`` (callable or constant frame matrix)."""
    Bf = B if callable(B) else (lambda p, B0=np.asarray(B, dtype=float): B0)

    def fn(p):
        b = Bf(p)
        return b_field_matrix(-b) @ J.fn(p) @ b_field_matrix(b)

    return Gacs(fn, J.frame, f"e^-B {J.label} e^B")


def j_complex(Jfield, frame: FrameField, label: str = "J_J") -> Gacs:
    """``diag(J, -J*)`` for an almost complex structure given in the frame."""
    Jf = Jfield if callable(Jfield) else (lambda p, J0=np.asarray(Jfield, dtype=float): J0)

    def fn(p):
        J = Jf(p)
        z = np.zeros_like(J)
        return np.block([[J, z], [z, -J.T]])

    return Gacs(fn, frame, label)


def j_symplectic(w, frame: FrameField, label: str = "J_w") -> Gacs:
    """``[[0, -w^-1], [w, 0]]`` with ``w : X -> i_X w``."""
    wf = w if callable(w) else (lambda p, w0=np.asarray(w, dtype=float): w0)

    def fn(p):
        wflat = wf(p).T
        z = np.zeros_like(wflat)
        return np.block([[z, -np.linalg.inv(wflat)], [wflat, z]])

    return Gacs(fn, frame, label)


def covariant_derivative(conn: Connection, A: GenSection, B: GenSection, p, h: float = DEFAULT_STEP) -> GenVector:
    """``nabla_A B = nabla_{vec A} B``; forms are differentiated by duality."""
    frame = conn.frame
    d = frame.dim
    p = np.asarray(p, dtype=float)
    x = A(p)[:d]
    v = frame.matrix(p) @ x
    dB = jacobian(B.fn, p, h) @ v
    val = B(p)
    Gx = connection_matrix(conn.gamma(p), x)
    return GenVector(dB[:d] + Gx @ val[:d], dB[d:] - Gx.T @ val[d:])


def gen_torsion(conn: Connection, X1: GenSection, X2: GenSection, X3: GenSection, p, h: float = DEFAULT_STEP) -> float:
    """Generalized torsion ``T(X1, X2, X3)`` of the extension of ``conn``."""
    n12 = covariant_derivative(conn, X1, X2, p, h)
    n21 = covariant_derivative(conn, X2, X1, p, h)
    br = courant_bracket(X1, X2, p, h)
    x3 = X3(p)
    first = pairing(n12 - n21 - br, x3)
    second = 0.5 * (
        pairing(covariant_derivative(conn, X3, X1, p, h), X2(p))
        - pairing(covariant_derivative(conn, X3, X2, p, h), X1(p))
    )
    return first + second


def gen_torsion_tensor(conn: Connection, sections: list, p, h: float = DEFAULT_STEP) -> np.ndarray:
    """``T[a, b, c]`` for all triples of ``sections``, reusing each bracket and derivative once."""
    N = len(sections)
    vals = np.array([s(p) for s in sections])
    nab = np.array([[covariant_derivative(conn, A, B, p, h).flat for B in sections] for A in sections])
    br = np.zeros_like(nab)
    for a in range(N):
        for b in range(a + 1, N):
            br[a, b] = courant_bracket(sections[a], sections[b], p, h).flat
            br[b, a] = -br[a, b]
    E = eta(vals.shape[1] // 2)
    first = np.einsum("abk,kl,cl->abc", nab - np.swapaxes(nab, 0, 1) - br, E, vals)
    # pair(nabla_c X_a, X_b) - pair(nabla_c X_b, X_a)
    m = np.einsum("cak,kl,bl->abc", nab, E, vals)
    return first + 0.5 * (m - np.swapaxes(m, 0, 1))
