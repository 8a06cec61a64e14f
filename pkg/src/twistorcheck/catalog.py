"""Concrete manifolds: charts, orthonormal frames and quaternionic data.

Each constructor returns a :class:`Manifold`; frames are given by closed
formulas so that curvature is only ever computed by finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .chartfield import Chart, FrameField
from .errors import BadType, ConfigError, NonPositiveFactor
from .genlin import Gacs, b_transform, j_complex, j_symplectic
from .quaternion import lambda_bases, product_triple


@dataclass
class DeckGenerator:
    """Affine map ``x -> L x + t`` of the chart coordinates."""

    name: str
    linear: np.ndarray
    translation: np.ndarray

    def __call__(self, x) -> np.ndarray:
        return self.linear @ np.asarray(x, dtype=float) + self.translation


@dataclass
class Manifold:
    id: str
    frame: FrameField
    params: dict = field(default_factory=dict)
    deck: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.frame.dim

    @property
    def n(self) -> int:
        return self.dim // 4


def make_flat_torus(dim: int = 4) -> Manifold:
    if dim not in (4, 8):
        raise ConfigError(f"flat torus dimension must be 4 or 8, got {dim}")
    chart = Chart.box(0.0, 1.0, dim, f"T{dim}")
    eye = np.eye(dim)
    return Manifold(f"flat_torus", FrameField(chart, lambda p: eye, f"T{dim} constant frame"), {"dim": dim})


def torus8_triples() -> dict:
    """The four product hyperkaehler triples on T8, keyed ``"++", "+-", "-+", "--"``."""
    lb = lambda_bases()
    sides = {"+": lb.plus(), "-": lb.minus()}
    return {a + b: product_triple(sides[a], sides[b]) for a in "+-" for b in "+-"}


def _rot2(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


# (translation of z1, multiplier of z2) for g1, and translation of z1 for g2
_J = np.exp(2j * np.pi / 3)
HYPERELLIPTIC_TABLE = {
    1: {"lattice": "Z+iZ", "g1": (0.5, -1.0), "g2": None, "e1": None},
    2: {"lattice": "Z+iZ", "g1": (0.5, -1.0), "g2": 0.5j, "e1": 0.5},
    3: {"lattice": "Z+jZ", "g1": (1.0 / 3.0, _J), "g2": None, "e1": None},
    4: {"lattice": "Z+jZ", "g1": (1.0 / 3.0, _J), "g2": 1j / 3.0, "e1": (2.0 + _J) / 3.0},
    5: {"lattice": "Z+iZ", "g1": (0.25, 1j), "g2": None, "e1": None},
    6: {"lattice": "Z+iZ", "g1": (0.25, 1j), "g2": 0.5j, "e1": (1.0 + 1j) / 2.0},
    7: {"lattice": "Z+jZ", "g1": (-1.0 / 6.0, -_J), "g2": None, "e1": None},
}


def _complex_affine(name: str, t1: complex, zeta: complex, t2: complex) -> DeckGenerator:
    """``(z1, z2) -> (z1 + t1, zeta z2 + t2)`` on coordinates ``(x1, y1, x2, y2)``."""
    L = np.eye(4)
    L[2:, 2:] = np.array([[zeta.real, -zeta.imag], [zeta.imag, zeta.real]])
    t = np.array([t1.real, t1.imag, t2.real, t2.imag])
    return DeckGenerator(name, L, t)


def hyperelliptic_frame_fn(p) -> np.ndarray:
    """``theta_1, theta_2`` turn with ``2 pi Re z1`` in the z2-plane; ``theta_3, theta_4`` span the z1-plane."""
    M = np.zeros((4, 4))
    M[2:, :2] = _rot2(2.0 * np.pi * p[0])
    M[0, 2] = 1.0
    M[1, 3] = 1.0
    return M


def make_hyperelliptic(type: int) -> Manifold:
    if type not in HYPERELLIPTIC_TABLE:
        raise BadType(f"hyperelliptic type must be 1..7, got {type!r}")
    row = HYPERELLIPTIC_TABLE[type]
    t1, zeta = row["g1"]
    deck = [_complex_affine("g1", complex(t1), complex(zeta), 0j)]
    if row["g2"] is not None:
        deck.append(_complex_affine("g2", complex(row["g2"]), 1 + 0j, complex(row["e1"])))
    chart = Chart.box(0.0, 1.0, 4, f"hyperelliptic-{type}")
    meta = {"lattice": row["lattice"]}
    if row["e1"] is not None:
        e1 = complex(row["e1"])
        meta["torsion_point"] = [e1.real, e1.imag]
    return Manifold("hyperelliptic", FrameField(chart, hyperelliptic_frame_fn, chart.label), {"type": type}, deck, meta)


def _quat_left(q) -> np.ndarray:
    """Matrix of ``x -> q x`` for quaternions stored as (real, i, j, k)."""
    a, b, c, d = q
    return np.array([[a, -b, -c, -d], [b, a, -d, c], [c, d, a, -b], [d, -c, b, a]])


def _s3_frame(p) -> np.ndarray:
    x = np.asarray(p[:3])
    r2 = float(x @ x)
    den = 1.0 + r2
    q = np.concatenate([[(1.0 - r2) / den], 2.0 * x / den])
    Dq = np.zeros((4, 3))
    Dq[0] = -4.0 * x / den**2
    Dq[1:] = 2.0 * np.eye(3) / den - 4.0 * np.outer(x, x) / den**2
    lam2 = (2.0 / den) ** 2
    M = np.zeros((4, 4))
    M[:3, :3] = Dq.T @ _quat_left(q)[:, 1:] / lam2
    M[3, 3] = 1.0
    return M


def _h3_frame(p) -> np.ndarray:
    z = p[2]
    M = np.diag([z, z, z, 1.0])
    return M


def make_s1_x_space_form(sign: int = 1) -> Manifold:
    """Unit-curvature space form times a flat circle, the circle last.

    ``sign=+1``: left-invariant frame of the unit 3-sphere in inverse
    stereographic coordinates, brackets ``[theta_i, theta_j] = 2 eps_ijk theta_k``.
    ``sign=-1``: upper half-space model of hyperbolic space, frame ``z d/dx_i``.
    """
    if sign == 1:
        bounds = np.array([[-0.8, 0.8]] * 3 + [[0.0, 1.0]])
        chart = Chart(4, bounds, "S1xS3")
        return Manifold("s1_x_space_form", FrameField(chart, _s3_frame, chart.label), {"sign": 1}, metadata={"structure_constants": "c_ij^k = 2 eps_ijk"})
    if sign == -1:
        bounds = np.array([[-0.5, 0.5], [-0.5, 0.5], [0.5, 1.5], [0.0, 1.0]])
        chart = Chart(4, bounds, "S1xH3")
        return Manifold("s1_x_space_form", FrameField(chart, _h3_frame, chart.label), {"sign": -1})
    raise ConfigError(f"space form sign must be +1 or -1, got {sign!r}")


CONFORMAL_FACTORS = {
    "one": lambda x: 1.0,
    "round_s4": lambda x: 2.0 / (1.0 + float(x @ x)),
    "exp_x1": lambda x: float(np.exp(x[0])),
}


def make_conformally_flat(factor="round_s4", bounds=(-1.0, 1.0)) -> Manifold:
    """Frame ``theta_i = d/dx_i / lambda`` for the metric ``lambda^2 dx^2``.

    ``factor`` is a preset name or a callable; it must be positive on the box.
    """
    if isinstance(factor, str):
        if factor not in CONFORMAL_FACTORS:
            raise ConfigError(f"unknown conformal factor {factor!r}; presets: {sorted(CONFORMAL_FACTORS)}")
        lam, name = CONFORMAL_FACTORS[factor], factor
    else:
        lam, name = factor, getattr(factor, "__name__", "custom")
    chart = Chart.box(bounds[0], bounds[1], 4, f"conformal-{name}")
    corners = np.array(np.meshgrid(*[chart.bounds[i] for i in range(4)])).reshape(4, -1).T
    probe = np.vstack([corners, chart.rescale(np.full((1, 4), 0.5))])
    if any(not lam(x) > 0 for x in probe):
        raise NonPositiveFactor(f"conformal factor {name!r} is not positive on the chart")

    def fn(p):
        v = lam(p)
        if not v > 0:
            raise NonPositiveFactor(f"conformal factor {name!r} is {v} at {np.asarray(p).tolist()}")
        return np.eye(4) / v

    return Manifold("conformally_flat", FrameField(chart, fn, chart.label), {"factor": name})


def make_s2_x_t2() -> Manifold:
    """Unit 2-sphere (polar angle kept away from the poles) times a flat torus."""
    bounds = np.array([[0.3, np.pi - 0.3], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]])
    chart = Chart(4, bounds, "S2xT2")

    def fn(p):
        return np.diag([1.0, 1.0 / np.sin(p[0]), 1.0, 1.0])

    return Manifold("s2_x_t2", FrameField(chart, fn, chart.label))


MANIFOLDS: dict = {
    "flat_torus": make_flat_torus,
    "hyperelliptic": make_hyperelliptic,
    "s1_x_space_form": make_s1_x_space_form,
    "conformally_flat": make_conformally_flat,
    "s2_x_t2": make_s2_x_t2,
}


def make_manifold(id: str, params: Optional[dict] = None) -> Manifold:
    if id not in MANIFOLDS:
        raise ConfigError(f"unknown manifold id {id!r}; known: {sorted(MANIFOLDS)}")
    try:
        return MANIFOLDS[id](**(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {id!r}: {exc}") from exc


def _std_complex(d: int) -> np.ndarray:
    J = np.zeros((d, d))
    for k in range(0, d, 2):
        J[k + 1, k] = 1.0
        J[k, k + 1] = -1.0
    return J


def _w_standard(d: int) -> np.ndarray:
    return -_std_complex(d)  # w[2k, 2k+1] = 1: dx1^dx2 + dx3^dx4 + ...


def _w_nonclosed(p) -> np.ndarray:
    # e^{x3} dx1^dx2 + dx3^dx4: d w = e^{x3} dx3^dx1^dx2 != 0
    w = np.zeros((4, 4))
    w[0, 1], w[1, 0] = np.exp(p[2]), -np.exp(p[2])
    w[2, 3], w[3, 2] = 1.0, -1.0
    return w


def builtin_gacs() -> dict:
    """Named generalized almost complex structures used by the algebra checks."""
    t4 = make_flat_torus(4).frame
    t8 = make_flat_torus(8).frame
    hyp = make_hyperelliptic(1).frame
    B_closed = np.array([[0, 1.0, 0.5, 0], [-1.0, 0, 0, 0.3], [-0.5, 0, 0, 2.0], [0, -0.3, -2.0, 0]])

    def B_var(p):
        b = np.zeros((4, 4))
        b[0, 1], b[1, 0] = np.sin(p[2]), -np.sin(p[2])
        b[2, 3], b[3, 2] = p[0] * p[1], -p[0] * p[1]
        return b

    out = {
        "complex_T4": j_complex(_std_complex(4), t4, "J_J on T4"),
        "complex_T8": j_complex(_std_complex(8), t8, "J_J on T8"),
        "symplectic_T4": j_symplectic(_w_standard(4), t4, "J_w0 on T4"),
        "symplectic_nonclosed_T4": j_symplectic(_w_nonclosed, t4, "J_w, dw != 0"),
        "btransform_symplectic_T4": b_transform(j_symplectic(_w_standard(4), t4), B_closed),
        "btransform_complex_T4": b_transform(j_complex(_std_complex(4), t4), B_var),
        "complex_hyperelliptic": j_complex(lambda_bases().Ip, hyp, "J_I+ on hyperelliptic"),
    }
    return out
