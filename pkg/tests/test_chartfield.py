import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistorcheck.catalog import make_hyperelliptic
from twistorcheck.chartfield import (
    Chart,
    FrameField,
    VectorField,
    OneFormField,
    d_oneform,
    eval_field,
    jacobian,
    lie_bracket,
    lie_derivative_oneform,
)
from twistorcheck.errors import FrameDegenerate, OutOfChart

import oracles

CHART = Chart.box(-1.0, 1.0, 4, "box")
coords = st.lists(st.floats(-0.9, 0.9), min_size=4, max_size=4).map(np.array)


def const(v):
    v = np.asarray(v, dtype=float)
    return VectorField(lambda p: v, CHART)


def test_constant_field():
    assert np.array_equal(eval_field(const([0, 0, 1, 0]), np.zeros(4)), [0, 0, 1, 0])


def test_eval_outside_chart():
    with pytest.raises(OutOfChart):
        eval_field(const([1, 0, 0, 0]), np.array([2.0, 0, 0, 0]))


def test_hyperelliptic_theta1_values():
    fr = make_hyperelliptic(1).frame
    assert np.allclose(fr.theta(0)(np.zeros(4)), [0, 0, 1, 0], atol=1e-15)
    assert np.allclose(fr.theta(0)(np.array([0.25, 0, 0, 0])), [0, 0, 0, 1], atol=1e-15)


def test_bracket_examples():
    p = np.array([0.2, -0.3, 0.1, 0.5])
    d1, d2 = const(np.eye(4)[0]), const(np.eye(4)[1])
    assert np.allclose(lie_bracket(d1, d2, p), 0)
    x1d2 = VectorField(lambda q: np.array([0, q[0], 0, 0]), CHART)
    assert np.allclose(lie_bracket(x1d2, d1, p), oracles.lie_bracket_poly(p), atol=1e-10)


def test_hyperelliptic_bracket():
    fr = make_hyperelliptic(1).frame
    p = np.full(4, 0.5)
    br = lie_bracket(fr.theta(2), fr.theta(0), p)
    # 2 pi theta_2 by differentiating the rotation by hand
    assert np.allclose(br, 2 * np.pi * fr.theta(1)(p), atol=1e-6)


def test_bracket_margin():
    with pytest.raises(OutOfChart):
        lie_bracket(const(np.eye(4)[0]), const(np.eye(4)[1]), np.array([1.0 - 1e-5, 0, 0, 0]), h=1e-4)


def test_d_oneform_examples():
    p = np.array([0.3, 0.1, -0.2, 0.4])
    assert np.allclose(d_oneform(OneFormField(lambda q: np.eye(4)[0], CHART), p), 0)
    dw = d_oneform(OneFormField(lambda q: np.array([0, q[0], 0, 0]), CHART), p)
    expect = np.zeros((4, 4))
    expect[0, 1], expect[1, 0] = 1.0, -1.0
    assert np.allclose(dw, expect, atol=1e-10)


def poly_fields(seed, quadratic=True):
    rng = np.random.default_rng(seed)
    C = rng.uniform(-1, 1, (3, 4, 4, 4)) * quadratic
    L = rng.uniform(-1, 1, (3, 4, 4))
    return [VectorField(lambda q, C=C[k], L=L[k]: L @ q + np.einsum("aij,i,j->a", C, q, q), CHART) for k in range(3)]


def jacobi_residual(fields, p, h=1e-3):
    X, Y, Z = fields

    def br(A, B):
        return VectorField(lambda q: lie_bracket(A, B, q, h), CHART)

    jac = lie_bracket(X, br(Y, Z), p, h) + lie_bracket(Y, br(Z, X), p, h) + lie_bracket(Z, br(X, Y), p, h)
    return np.max(np.abs(jac))


@settings(max_examples=25, deadline=None)
@given(coords, st.integers(0, 1000))
def test_bracket_antisymmetric_exactly(p, seed):
    X, Y, _ = poly_fields(seed)
    assert np.array_equal(lie_bracket(X, Y, p), -lie_bracket(Y, X, p))


@settings(max_examples=20, deadline=None)
@given(coords, st.integers(0, 1000))
def test_jacobi_linear_fields(p, seed):
    assert jacobi_residual(poly_fields(seed, quadratic=False), p) <= 1e-6


def test_jacobi_quadratic_fields():
    # nested central differences differentiate a cubic; truncation is O(h^2) times its third derivative
    rng = np.random.default_rng(7)
    worst = max(jacobi_residual(poly_fields(s), rng.uniform(-0.8, 0.8, 4)) for s in range(20))
    assert worst <= 1e-6


def test_eval_deterministic():
    fr = make_hyperelliptic(4).frame
    p = np.array([0.123, 0.456, 0.789, 0.321])
    assert np.array_equal(fr.matrix(p), fr.matrix(p))


def test_fd_convergence():
    fr = make_hyperelliptic(2).frame
    p = np.array([0.37, 0.2, 0.4, 0.6])
    # hand derivative of theta_1 = (0, 0, cos 2 pi x1, sin 2 pi x1) along x1
    exact = 2 * np.pi * np.array([0, 0, -np.sin(2 * np.pi * p[0]), np.cos(2 * np.pi * p[0])])
    errs = [np.max(np.abs(jacobian(lambda q: fr.fn(q)[:, 0], p, h)[:, 0] - exact)) for h in (1e-2, 5e-3)]
    assert errs[0] / errs[1] >= 3.0


def test_lie_derivative_cartan():
    p = np.array([0.2, 0.1, -0.3, 0.4])
    X = VectorField(lambda q: np.array([1.0, 0, 0, 0]), CHART)
    eta = OneFormField(lambda q: np.array([0, q[0], 0, 0]), CHART)
    assert np.allclose(lie_derivative_oneform(X, eta, p), [0, 1, 0, 0], atol=1e-10)


def test_frame_degenerate():
    fr = FrameField(CHART, lambda p: np.diag([1.0, 1.0, 1.0, 0.0]))
    with pytest.raises(FrameDegenerate):
        fr.matrix(np.zeros(4))


def test_chart_rejects_empty_box():
    with pytest.raises(ValueError):
        Chart(2, np.array([[0.0, 1.0], [1.0, 1.0]]))
