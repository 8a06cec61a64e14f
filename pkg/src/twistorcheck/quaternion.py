"""Quaternionic linear structures and the generalized distribution D_f.

A generalized almost quaternionic hermitian structure is handled through
its two shadows on TM: quaternionic triples spanning D+ and D-, and an
algebra isomorphism ``f : D- -> D+`` stored as a 3x3 rotation acting on
triple coordinates.  Elements of D_f are written ``diag(f(u), u)`` in the
basis ``(theta_i + theta_i*, theta_i - theta_i*)`` of C+ (+) C-.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .chartfield import DEFAULT_STEP, FrameField
from .connection import nabla_endo, skew_inner, wedge
from .errors import DegenerateEigenspace, DimensionError, NotAlgebraIso

Matrix = np.ndarray
EndoField = Union[Matrix, Callable[[np.ndarray], Matrix]]


def _w(a: int, b: int) -> Matrix:
    e = np.eye(4)
    return wedge(e[a - 1], e[b - 1])


@dataclass(frozen=True)
class LambdaBases:
    Ip: Matrix
    Jp: Matrix
    Kp: Matrix
    Im: Matrix
    Jm: Matrix
    Km: Matrix

    def plus(self) -> tuple:
        return (self.Ip, self.Jp, self.Kp)

    def minus(self) -> tuple:
        return (self.Im, self.Jm, self.Km)

    def all(self) -> tuple:
        return self.plus() + self.minus()


def lambda_bases(frame: Optional[FrameField] = None) -> LambdaBases:
    """Self-dual and anti-self-dual triples of a 4-dimensional frame.

    The matrices are constant in the frame basis, e.g. ``I+`` sends
    ``theta_1 -> theta_2`` and ``theta_3 -> theta_4``.
    """
    if frame is not None and frame.dim != 4:
        raise DimensionError(f"Lambda+- bases need dim 4, got {frame.dim}")
    return LambdaBases(
        Ip=_w(1, 2) + _w(3, 4),
        Jp=_w(1, 3) - _w(2, 4),
        Kp=_w(1, 4) + _w(2, 3),
        Im=_w(1, 2) - _w(3, 4),
        Jm=_w(1, 3) + _w(2, 4),
        Km=-_w(1, 4) + _w(2, 3),
    )


def product_triple(first: Sequence[Matrix], second: Sequence[Matrix]) -> tuple:
    """Block-diagonal triple on a product of two 4n-dimensional factors."""
    out = []
    for A, B in zip(first, second):
        n1, n2 = A.shape[0], B.shape[0]
        C = np.zeros((n1 + n2, n1 + n2))
        C[:n1, :n1] = A
        C[n1:, n1:] = B
        out.append(C)
    return tuple(out)


def quaternion_defect(triple: Sequence[Matrix]) -> float:
    """Max deviation from ``I^2 = J^2 = K^2 = -1``, ``IJ = K`` and orthogonality."""
    I, J, K = (np.asarray(t) for t in triple)
    e = np.eye(I.shape[0])
    checks = [I @ I + e, J @ J + e, K @ K + e, I @ J - K, J @ K - I, K @ I - J, I + I.T, J + J.T, K + K.T]
    return float(max(np.max(np.abs(c)) for c in checks))


def triple_coords(triple: Sequence[Matrix], A: Matrix) -> np.ndarray:
    """Coordinates of the projection of ``A`` on the span of an orthogonal triple."""
    return np.array([skew_inner(B, A) / skew_inner(B, B) for B in triple])


def rotate_triple(triple: Sequence[Matrix], R: Matrix) -> tuple:
    """New triple ``B'_m = sum_l R[l, m] B_l``; quaternionic again when ``R`` is in SO(3)."""
    return tuple(sum(R[l, m] * triple[l] for l in range(3)) for m in range(3))


def rotation_axis_angle(axis, angle: float) -> Matrix:
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    Kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * Kx + (1 - np.cos(angle)) * Kx @ Kx


class AlgebraIso:
    """``f : D- -> D+`` as the matrix sending D- coordinates to D+ coordinates."""

    def __init__(self, F, tol: float = 1e-10):
        F = np.asarray(F, dtype=float)
        if F.shape != (3, 3):
            raise NotAlgebraIso(f"expected a 3x3 matrix, got shape {F.shape}")
        if np.max(np.abs(F.T @ F - np.eye(3))) > tol or np.linalg.det(F) < 0:
            raise NotAlgebraIso("f must be a rotation (orthogonal, det +1) to preserve the quaternion relations")
        self.F = F

    @classmethod
    def identity(cls) -> "AlgebraIso":
        return cls(np.eye(3))

    @classmethod
    def axis_angle(cls, axis, angle: float) -> "AlgebraIso":
        return cls(rotation_axis_angle(axis, angle))

    def is_identity(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.F - np.eye(3))) <= tol)

    def compose(self, other: "AlgebraIso") -> "AlgebraIso":
        return AlgebraIso(self.F @ other.F)

    def __repr__(self) -> str:
        return f"AlgebraIso({np.round(self.F, 12).tolist()})"


def f_theta(theta: float) -> AlgebraIso:
    """Rotation by ``theta`` about the I axis, in the ordered basis (I, J, K)."""
    c, s = np.cos(theta), np.sin(theta)
    return AlgebraIso(np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]))


def cplus_cminus_split(dim: int) -> Matrix:
    """Change of basis ``P`` from ``(theta_i + theta_i*, theta_i - theta_i*)`` to ``(theta, theta*)``.

    ``P^{-1} = P / 2``; in the new basis the pairing becomes ``diag(1, -1)``.
    """
    e = np.eye(dim)
    return np.block([[e, e], [e, -e]])


def project_plus(v) -> np.ndarray:
    """``p+``: vector part of a C+ element given by its C+ coordinates."""
    return np.asarray(v)


def project_minus(v) -> np.ndarray:
    return np.asarray(v)


@dataclass
class QuatStructure:
    """Two quaternionic triples and the algebra isomorphism relating them.

    The triple entries may be constant frame matrices or callables of the
    point (for bundles that are not constant in the frame).
    """

    dplus: tuple
    dminus: tuple
    f: AlgebraIso = field(default_factory=AlgebraIso.identity)
    label: str = ""

    def at(self, p=None) -> tuple:
        def ev(t):
            return tuple(np.asarray(x(p)) if callable(x) else np.asarray(x) for x in t)

        return ev(self.dplus), ev(self.dminus)

    def element(self, abc, p=None) -> "GenQuatElement":
        return assemble_Df(self, abc, p)


@dataclass
class GenQuatElement:
    abc: np.ndarray
    uminus: Matrix
    uplus: Matrix
    matrix: Matrix  # in the (theta, theta*) basis
    cpm: Matrix  # diag(u+, u-) in the C+ (+) C- basis

    @property
    def dim(self) -> int:
        return self.uplus.shape[0]


def assemble_Df(Q: QuatStructure, abc, p=None) -> GenQuatElement:
    """``u- = a I- + b J- + c K-``, ``u+ = f(u-)`` and the generalized matrix ``P diag(u+, u-) P^-1``."""
    abc = np.asarray(abc, dtype=float)
    dp, dm = Q.at(p)
    um = sum(x * B for x, B in zip(abc, dm))
    up = sum(x * B for x, B in zip(Q.f.F @ abc, dp))
    d = um.shape[0]
    cpm = np.zeros((2 * d, 2 * d))
    cpm[:d, :d] = up
    cpm[d:, d:] = um
    P = cplus_cminus_split(d)
    return GenQuatElement(abc, um, up, P @ cpm @ P / 2.0, cpm)


@dataclass
class Prop3Result:
    commutation: float
    stability_plus: float
    stability_minus: float
    witness: dict

    @property
    def value(self) -> float:
        return max(self.commutation, self.stability_plus, self.stability_minus)


def prop3_check(Q: QuatStructure, frame: FrameField, gamma: np.ndarray, p, h: float = DEFAULT_STEP) -> Prop3Result:
    """Parallelism of D_f for the connection with symbols ``gamma`` at ``p``.

    For each direction ``theta_i`` measures the defect of
    ``nabla f(u-) = f(nabla u-)`` and how far ``nabla u+-`` leaves the span of
    D+-.  Each defect is a root-sum-square over the basis of D-, so it does
    not depend on which orthonormal basis of D- is used; the maximum is taken
    over directions.
    """
    dp, dm = Q.at(p)
    F = Q.f.F
    comm = stab_p = stab_m = 0.0
    witness = {"direction": 0, "basis": 0}
    for i in range(frame.dim):
        nab_p = [nabla_endo(frame, gamma, B, i, p, h) for B in Q.dplus]
        nab_m = [nabla_endo(frame, gamma, B, i, p, h) for B in Q.dminus]
        r = np.zeros(3)
        sp = sm = 0.0
        for m in range(3):
            cp = triple_coords(dp, nab_p[m])
            cm = triple_coords(dm, nab_m[m])
            sp += float(np.linalg.norm(nab_p[m] - sum(x * B for x, B in zip(cp, dp)))) ** 2
            sm += float(np.linalg.norm(nab_m[m] - sum(x * B for x, B in zip(cm, dm)))) ** 2
            lhs = sum(F[k, m] * nab_p[k] for k in range(3))
            rhs = sum(x * B for x, B in zip(F @ cm, dp))
            r[m] = float(np.linalg.norm(lhs - rhs))
        stab_p, stab_m = max(stab_p, np.sqrt(sp)), max(stab_m, np.sqrt(sm))
        total = float(np.sqrt(r @ r))
        if total > comm:
            comm, witness = total, {"direction": i, "basis": int(np.argmax(r))}
    return Prop3Result(comm, float(stab_p), float(stab_m), witness)


def prop3_residual(Q: QuatStructure, frame: FrameField, gamma: np.ndarray, p, h: float = DEFAULT_STEP) -> float:
    return prop3_check(Q, frame, gamma, p, h).value


def lemma4_nabla(gamma: np.ndarray, lb: Optional[LambdaBases] = None) -> dict:
    """Closed-form ``nabla_{theta_i}`` of the six Lambda+- basis elements.

    Returns a dict keyed by ``"I+", ..., "K-"``; each value has shape
    ``(4, 4, 4)`` with the direction index first.
    """
    gamma = np.asarray(gamma)
    if gamma.shape != (4, 4, 4):
        raise DimensionError("closed-form derivatives of Lambda+- need dim 4")
    lb = lb or lambda_bases()

    def G(j, k):
        # gamma_{ij}^k for every direction i, 1-based j, k
        return gamma[:, j - 1, k - 1][:, None, None]

    return {
        "I+": (G(1, 4) + G(2, 3)) * lb.Jp + (-G(1, 3) + G(2, 4)) * lb.Kp,
        "J+": (G(3, 2) - G(1, 4)) * lb.Ip + (G(3, 4) + G(1, 2)) * lb.Kp,
        "K+": (G(4, 2) + G(1, 3)) * lb.Ip + (G(4, 3) - G(1, 2)) * lb.Jp,
        "I-": (-G(1, 4) + G(2, 3)) * lb.Jm + (-G(1, 3) - G(2, 4)) * lb.Km,
        "J-": (G(3, 2) + G(1, 4)) * lb.Im + (-G(3, 4) + G(1, 2)) * lb.Km,
        "K-": (-G(4, 2) + G(1, 3)) * lb.Im + (-G(4, 3) - G(1, 2)) * lb.Jm,
    }


def _plane_rotation(a: np.ndarray, b: np.ndarray, phi: float):
    c, s = np.cos(phi), np.sin(phi)
    return c * a + s * b, -s * a + c * b


def adapt_basis(plus: Sequence[Matrix], minus: Sequence[Matrix], tol: float = 1e-8) -> Matrix:
    """Orthonormal basis in which the Lambda+- bases equal the given triples.

    ``plus`` and ``minus`` are quaternionic triples (frame matrices) with
    ``plus[m] = f(minus[m])``.  Returns ``Q`` whose columns are the new frame
    vectors, so that ``Q @ I+ @ Q.T == plus[0]`` and so on.  Raises
    :class:`DegenerateEigenspace` unless ``plus[0] @ minus[0]`` has the
    eigenvalues -1 and +1 with two-dimensional eigenspaces, which happens
    exactly when D+ and D- are the two different Lambda's.
    """
    Ip, Jp, Kp = (np.asarray(x, dtype=float) for x in plus)
    Im, Jm, Km = (np.asarray(x, dtype=float) for x in minus)
    if Ip.shape != (4, 4):
        raise DimensionError("frame adaptation is a dimension 4 construction")
    S = Ip @ Im
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    if not (np.allclose(vals[:2], -1.0, atol=tol) and np.allclose(vals[2:], 1.0, atol=tol)):
        raise DegenerateEigenspace(f"I+ I- must have eigenvalues (-1,-1,1,1), got {np.round(vals, 10).tolist()}")
    t1, t3 = vecs[:, 0], vecs[:, 2]
    t2, t4 = Ip @ t1, Ip @ t3
    lb = lambda_bases()

    def bases(t):
        Q = np.column_stack(t)
        return Q, [Q @ B @ Q.T for B in lb.all()]

    # relative angle of f in the (J, K) planes; rotating inside E_{+1} turns
    # the J+ and J- axes in opposite senses, inside E_{-1} in the same sense
    _, cur = bases((t1, t2, t3, t4))
    beta = np.arctan2(skew_inner(Jm, cur[5]), skew_inner(Jm, cur[4]))
    gamma_ = np.arctan2(skew_inner(Jp, cur[2]), skew_inner(Jp, cur[1]))
    alpha = gamma_ - beta
    t3, t4 = _plane_rotation(t3, t4, alpha / 2)
    _, cur = bases((t1, t2, t3, t4))
    beta = np.arctan2(skew_inner(Jm, cur[5]), skew_inner(Jm, cur[4]))
    t1, t2 = _plane_rotation(t1, t2, beta)
    Q, cur = bases((t1, t2, t3, t4))
    target = [Ip, Jp, Kp, Im, Jm, Km]
    err = max(float(np.max(np.abs(a - b))) for a, b in zip(cur, target))
    if err > 1e3 * tol:
        raise DegenerateEigenspace(f"could not adapt the frame (residual {err:.3g})")
    return Q


def adapt_frame(frame: FrameField, plus: Callable, minus: Callable) -> FrameField:
    """Frame field ``theta' = theta Q(p)`` adapted pointwise to the given triples."""

    def fn(p):
        Q = adapt_basis(plus(p), minus(p))
        return np.asarray(frame.fn(p)) @ Q

    return FrameField(frame.chart, fn, frame.label + " (adapted)")
