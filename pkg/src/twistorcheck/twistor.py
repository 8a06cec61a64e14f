"""Integrability of the twistor structure: obstruction tensors and verdicts.

The three tensors are evaluated for every sphere sample and every ordered
frame pair at once.  With ``R(X ^ Y)`` the curvature operator applied to a
2-vector (a skew endomorphism) they read

    G(u; a, b)(X, Y) = [u, R(X^Y - aX^bY) + u R(aX^Y + X^bY)]

with ``(u, a, b) = (u+, u+, u+)``, ``(u+, u+, u-)`` and ``(u-, u-, u-)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .connection import CurvatureOperator, Dim4Blocks
from .errors import InconclusiveThresholds
from .genlin import gacs_type, type_info
from .quaternion import GenQuatElement, QuatStructure, assemble_Df, lambda_bases, triple_coords

VANISH = 1e-4
NONZERO = 1e-2
CURVATURE_ZERO = 1e-3
IDENTITY_TOL = 1e-10
PAIR_KINDS = ("C+C+", "C+C-", "C-C-")


def fibonacci_sphere(k: int = 50) -> np.ndarray:
    """``k`` nearly uniform unit vectors (golden-angle spiral)."""
    i = np.arange(k) + 0.5
    z = 1.0 - 2.0 * i / k
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def sphere_samples(k: int = 50) -> np.ndarray:
    """Spiral points followed by the six axis poles, which must be hit exactly."""
    poles = np.vstack([np.eye(3), -np.eye(3)])
    return np.vstack([fibonacci_sphere(k), poles]) if k > 0 else poles


def _g_generic(Rm: np.ndarray, u: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Stacked ``G(u; a, b)`` for all frame pairs; ``u, a, b`` have shape (S, d, d).

    Returns shape (S, d, d, d, d): sample, X index, Y index, matrix.
    """
    S = u.shape[0]
    base = np.broadcast_to(Rm, (S,) + Rm.shape)
    R_ab = np.einsum("ski,slj,klmn->sijmn", a, b, Rm, optimize=True)
    R_aX = np.einsum("ski,kjmn->sijmn", a, Rm, optimize=True)
    R_bY = np.einsum("slj,ilmn->sijmn", b, Rm, optimize=True)
    uu = u[:, None, None]
    T = base - R_ab + uu @ (R_aX + R_bY)
    return uu @ T - T @ uu


def g_tensors(R, uplus, uminus, X, Y) -> tuple:
    """``(G1, G2, G3)`` at one sphere point for the vectors ``X, Y`` (frame components)."""
    Rm = R.Rm if isinstance(R, CurvatureOperator) else np.asarray(R)
    Rop = CurvatureOperator(Rm)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)

    def G(u, a, b):
        T = Rop.endo(X, Y) - Rop.endo(a @ X, b @ Y) + u @ (Rop.endo(a @ X, Y) + Rop.endo(X, b @ Y))
        return u @ T - T @ u

    up, um = np.asarray(uplus), np.asarray(uminus)
    return G(up, up, up), G(up, up, um), G(um, um, um)


def element_stacks(Q: QuatStructure, spheres: np.ndarray, p=None) -> tuple:
    """``(u+, u-)`` for every sphere sample, each of shape (S, d, d)."""
    dp, dm = Q.at(p)
    dp, dm = np.stack(dp), np.stack(dm)
    um = np.einsum("sk,kab->sab", spheres, dm)
    up = np.einsum("sk,kab->sab", spheres @ Q.f.F.T, dp)
    return up, um


@dataclass
class GSweep:
    """Norms of the three tensors over sphere samples and ordered frame pairs."""

    norms: np.ndarray  # (3, S, d, d)
    spheres: np.ndarray

    def max(self) -> float:
        return float(self.norms.max()) if self.norms.size else 0.0

    def max_each(self) -> list:
        return [float(n.max()) for n in self.norms]

    def witness(self) -> dict:
        k, s, i, j = np.unravel_index(int(np.argmax(self.norms)), self.norms.shape)
        return {"tensor": f"G{k + 1}", "sphere": self.spheres[s].tolist(), "pair": [int(i), int(j)]}


def g_sweep(R, Q: QuatStructure, spheres: np.ndarray, p=None) -> GSweep:
    Rm = R.Rm if isinstance(R, CurvatureOperator) else np.asarray(R)
    up, um = element_stacks(Q, spheres, p)
    norms = np.stack(
        [
            np.linalg.norm(_g_generic(Rm, up, up, up), axis=(-2, -1)),
            np.linalg.norm(_g_generic(Rm, up, up, um), axis=(-2, -1)),
            np.linalg.norm(_g_generic(Rm, um, um, um), axis=(-2, -1)),
        ]
    )
    return GSweep(norms, spheres)


def random_pair_max(R, Q: QuatStructure, spheres: np.ndarray, rng: np.random.Generator, count: int = 10, p=None) -> float:
    """Max tensor norm over ``count`` random unit vector pairs (guards indexing)."""
    Rm = R.Rm if isinstance(R, CurvatureOperator) else np.asarray(R)
    d = Rm.shape[0]
    up, um = element_stacks(Q, spheres, p)
    V = rng.standard_normal((count, 2, d))
    V /= np.linalg.norm(V, axis=-1, keepdims=True)
    X, Y = V[:, 0], V[:, 1]

    def G(u, a, b):
        aX = np.einsum("sab,cb->sca", a, X)
        bY = np.einsum("sab,cb->sca", b, Y)
        T = (
            np.einsum("ci,cj,ijmn->cmn", X, Y, Rm)[None]
            - np.einsum("sci,scj,ijmn->scmn", aX, bY, Rm)
            + u[:, None] @ (np.einsum("sci,cj,ijmn->scmn", aX, Y, Rm) + np.einsum("ci,scj,ijmn->scmn", X, bY, Rm))
        )
        uu = u[:, None]
        return np.linalg.norm(uu @ T - T @ uu, axis=(-2, -1)).max()

    return float(max(G(up, up, up), G(up, up, um), G(um, um, um)))


def _complex_endo(Rm: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    d = Rm.shape[0]
    outer = (v[..., :, None] * w[..., None, :]).reshape(v.shape[:-1] + (d * d,))
    return (outer @ Rm.reshape(d * d, d * d)).reshape(v.shape[:-1] + (d, d))


def theorem1bis_matrix(Rm: np.ndarray, cpm: np.ndarray, X, Y) -> np.ndarray:
    """Linear map ``Z -> (R(X^{1,0}, Y^{1,0}) Z^{1,0})^{0,1}`` in C+- coordinates.

    ``cpm`` is ``diag(u+, u-)``; ``X, Y`` are generalized vectors in C+-
    coordinates (leading batch axes allowed).  The generalized curvature
    acts as ``diag(R, R)`` and only sees the vector parts.
    """
    n = cpm.shape[-1]
    d = n // 2
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    X10 = 0.5 * (X - 1j * np.einsum("...ab,...b->...a", cpm, X))
    Y10 = 0.5 * (Y - 1j * np.einsum("...ab,...b->...a", cpm, Y))
    vX = X10[..., :d] + X10[..., d:]
    vY = Y10[..., :d] + Y10[..., d:]
    Rc = _complex_endo(Rm, vX, vY)
    Rhat = np.zeros(Rc.shape[:-2] + (n, n), dtype=complex)
    Rhat[..., :d, :d] = Rc
    Rhat[..., d:, d:] = Rc
    eye = np.eye(n)
    to10 = 0.5 * (eye - 1j * cpm)
    to01 = 0.5 * (eye + 1j * cpm)
    return to01 @ Rhat @ to10


def theorem1bis_residual(R, u: GenQuatElement, X, Y) -> float:
    """``8 |Z -> (R(X^{1,0}, Y^{1,0}) Z^{1,0})^{0,1}|_F``; vanishes iff the matching G tensor does."""
    Rm = R.Rm if isinstance(R, CurvatureOperator) else np.asarray(R)
    return float(8.0 * np.linalg.norm(theorem1bis_matrix(Rm, u.cpm, X, Y)))


def matched_samples(R, Q: QuatStructure, spheres: np.ndarray, p=None, sweep: Optional[GSweep] = None) -> dict:
    """Curvature-of-the-(1,0)-part residuals and the matching G norms for all samples.

    Pairs of frame vectors are placed in C+ or C- according to the kind:
    (C+, C+) matches G1, (C+, C-) matches G2 and (C-, C-) matches G3.
    Returns arrays of shape (3, S, d, d) under keys ``"t1b"`` and ``"g"``.
    Same numbers as :func:`theorem1bis_residual`, using that every operator
    involved is block diagonal in C+ (+) C-.
    """
    Rm = R.Rm if isinstance(R, CurvatureOperator) else np.asarray(R)
    d = Rm.shape[0]
    if sweep is None:
        sweep = g_sweep(Rm, Q, spheres, p)
    up, um = element_stacks(Q, spheres, p)
    eye = np.eye(d)
    # vector part of theta_i^{1,0} when theta_i sits in C+ (resp. C-): column i
    to10 = {"+": 0.5 * (eye - 1j * up), "-": 0.5 * (eye - 1j * um)}
    to01 = {"+": 0.5 * (eye + 1j * up), "-": 0.5 * (eye + 1j * um)}
    S = spheres.shape[0]
    out = np.zeros((3, S, d, d))
    for k, (a, b) in enumerate((("+", "+"), ("+", "-"), ("-", "-"))):
        vX = np.swapaxes(to10[a], -2, -1)[:, :, None, :]  # (S, i, 1, d)
        vY = np.swapaxes(to10[b], -2, -1)[:, None, :, :]  # (S, 1, j, d)
        Rc = _complex_endo(Rm, np.broadcast_to(vX, (S, d, d, d)), np.broadcast_to(vY, (S, d, d, d)))
        sq = 0.0
        for side in ("+", "-"):
            M = to01[side][:, None, None] @ Rc @ to10[side][:, None, None]
            sq = sq + np.sum(np.abs(M) ** 2, axis=(-2, -1))
        out[k] = 8.0 * np.sqrt(sq)
    return {"t1b": out, "g": sweep.norms}


def twistor_type(u: GenQuatElement, p=None) -> int:
    """Type of the twistor structure at ``(p, u)``: the type of ``u`` plus one for the fiber."""
    return gacs_type(u.matrix) + 1


def type_table(Q: QuatStructure, spheres: np.ndarray, p=None) -> list:
    out = []
    for abc in spheres:
        u = assemble_Df(Q, abc, p)
        info = type_info(u.matrix)
        out.append({"sphere": np.asarray(abc).tolist(), "type": info.type + 1, "margin": info.margin})
    return out


def which_lambda(triple, tol: float = 1e-8) -> Optional[str]:
    """``"+"`` or ``"-"`` if a 4-dimensional triple spans Lambda+ or Lambda-."""
    triple = [np.asarray(t) for t in triple]
    if triple[0].shape != (4, 4):
        return None
    lb = lambda_bases()
    for sign, basis in (("+", lb.plus()), ("-", lb.minus())):
        if all(np.linalg.norm(t - sum(c * B for c, B in zip(triple_coords(basis, t), basis))) <= tol for t in triple):
            return sign
    return None


def prop567_checks(blocks: Optional[Dim4Blocks], F: np.ndarray, n: int, dplus: Optional[str] = None, dminus: Optional[str] = None) -> dict:
    """Necessary conditions relating f, s and the off-diagonal curvature block.

    ``dplus``/``dminus`` are ``"+"``, ``"-"`` or ``None`` (see :func:`which_lambda`).
    """
    F = np.asarray(F, dtype=float)
    f_id = bool(np.max(np.abs(F - np.eye(3))) <= IDENTITY_TOL)
    out = {"f_is_identity": f_id}
    if blocks is None:
        return out
    s = blocks.s
    out["s"] = s
    out["s_zero"] = bool(abs(s) <= CURVATURE_ZERO)
    out["f_id_or_s_zero"] = bool(f_id or out["s_zero"])
    if dplus == "+" and dminus == "-":
        target = s / 12.0 * F
        res = float(np.linalg.norm(blocks.B - target))
        out["prop7_residual"] = res
        # relative to |B|, floored so flat cases do not divide by zero
        out["prop7_relative"] = res / max(float(np.linalg.norm(blocks.B)), CURVATURE_ZERO)
    return out


def _zero(x: float, tol: float = CURVATURE_ZERO) -> bool:
    return abs(x) <= tol


def _band(x: float) -> Optional[bool]:
    """True if ``x`` vanishes, False if clearly nonzero, None in between."""
    if x <= VANISH:
        return True
    if x >= NONZERO:
        return False
    return None


@dataclass
class Verdict:
    classification: str
    predicted_integrable: Optional[bool]
    measured_max_g: float
    measured_integrable: Optional[bool]
    agree: Optional[bool]
    reason: str
    thresholds: dict = field(default_factory=lambda: {"vanish": VANISH, "nonzero": NONZERO, "curvature_zero": CURVATURE_ZERO})

    def as_dict(self) -> dict:
        return asdict(self)


def curvature_summary(blocks_list: Sequence[Dim4Blocks]) -> dict:
    """Max over points of the block norms that the theorems test."""
    def mx(f):
        return float(max(f(b) for b in blocks_list)) if blocks_list else 0.0

    return {
        "Wplus": mx(lambda b: np.linalg.norm(b.Wplus)),
        "Wminus": mx(lambda b: np.linalg.norm(b.Wminus)),
        "B": mx(lambda b: np.linalg.norm(b.B)),
        "diag_plus": mx(lambda b: np.linalg.norm(b.Wplus + b.s / 12.0 * np.eye(3))),
        "diag_minus": mx(lambda b: np.linalg.norm(b.Wminus + b.s / 12.0 * np.eye(3))),
        "s_abs": mx(lambda b: abs(b.s)),
    }


def classify(
    prop3: float,
    max_g: float,
    n: int,
    F: np.ndarray,
    dplus: Optional[str] = None,
    dminus: Optional[str] = None,
    curv: Optional[dict] = None,
    strict: bool = False,
) -> Verdict:
    """Match measured quantities against the integrability theorems.

    ``dplus``/``dminus`` say which of Lambda+- the bundles are (dimension 4);
    ``curv`` is a :func:`curvature_summary` (a single :class:`Dim4Blocks`
    is accepted too).  Residuals strictly between ``VANISH`` and ``NONZERO``
    give an ``Inconclusive`` verdict, or raise :class:`InconclusiveThresholds`
    when ``strict``.
    """
    if isinstance(curv, Dim4Blocks):
        curv = curvature_summary([curv])
    measured = _band(max_g)
    applicable = _band(prop3)

    def verdict(cls, predicted, reason):
        if predicted is not None and measured is None:
            cls, reason = "Inconclusive", f"{cls} predicts integrable={predicted} but max G {max_g:.3g} is between thresholds; shrink h"
        if cls == "Inconclusive" and strict:
            raise InconclusiveThresholds(reason)
        agree = None if predicted is None or measured is None else bool(predicted == measured)
        return Verdict(cls, predicted, float(max_g), measured, agree, reason)

    if applicable is None:
        return verdict("Inconclusive", None, f"parallelism residual {prop3:.3g} between thresholds; shrink h")
    if applicable is False:
        return verdict("NonApplicable", None, f"D_f is not parallel (residual {prop3:.3g})")
    if n > 1:
        return verdict("Thm2", True, "n > 1: always integrable")
    if curv is None or dplus is None or dminus is None:
        return verdict("Inconclusive", None, "dimension 4 without identified Lambda bundles")
    f_id = bool(np.max(np.abs(np.asarray(F) - np.eye(3))) <= IDENTITY_TOL)
    if dplus == dminus:
        own_W = curv["Wplus"] if dplus == "+" else curv["Wminus"]
        own_diag = curv["diag_plus"] if dplus == "+" else curv["diag_minus"]
        if _zero(own_diag) and _zero(curv["B"]):
            return verdict("Thm3a", True, f"curvature vanishes on Lambda{dplus}")
        if f_id:
            if _zero(own_W):
                return verdict("Thm3b", True, f"f = Id and W{dplus} = 0")
            return verdict("NonIntegrable", False, f"f = Id but W{dplus} != 0")
        return verdict("NonIntegrable", False, f"f != Id and curvature nonzero on Lambda{dplus}")
    if _zero(curv["Wplus"]) and _zero(curv["Wminus"]):
        return verdict("Thm4", True, "D+ != D- and locally conformally flat")
    return verdict("NonIntegrable", False, "D+ != D- and not locally conformally flat")
