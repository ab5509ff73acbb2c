import numpy as np
import pytest
import sympy as S
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from conftest import point_strategy, shell_points
from spraymetric import grassmann as gr
from spraymetric import metrizability as mz
from spraymetric import spray as sp
from spraymetric.errors import AnnihilationError
from spraymetric.fieldspec import Point, parse_field

P0 = Point([0, 0, 0], [1, 0, 1])


def _trace_sym(G, xs, ys, p):
    n = len(G)
    tr = [sum(S.diff(G[k], ys[k], ys[i]) for k in range(n)) for i in range(n)]
    return np.array([O.num(e, xs, ys, p.x, p.y) for e in tr])


def test_spiral_trace_vanishes(spiral):
    for p in shell_points(3, 10, seed=1):
        fr = gr.grassmann_frame(spiral, p)
        assert np.max(np.abs(fr.trace_conn)) <= 1e-14
        assert np.allclose(fr.N, sp.spray_data(spiral, p).gamma_j)


def test_trace_against_sympy():
    src = "G1 = u^2 + x*v*w/sqrt(u^2+v^2+w^2); G2 = v*w; G3 = u*w + z*w^3/(u^2+v^2+w^2)"
    f = parse_field(src, "spray", 3)
    u, v, w = O.Y3
    x, y, z = O.X3
    G = [u**2 + x * v * w / S.sqrt(u**2 + v**2 + w**2), v * w, u * w + z * w**3 / (u**2 + v**2 + w**2)]
    for p in shell_points(3, 3, seed=2):
        fr = gr.grassmann_frame(f, p)
        assert np.allclose(fr.trace_conn, _trace_sym(G, O.X3, O.Y3, p), atol=1e-12)
        gj = sp.spray_data(f, p).gamma_j
        assert np.allclose(fr.N, gj - np.outer(p.y, fr.trace_conn) / 4, atol=1e-12)


def test_flat_frame(flat3):
    fr = gr.grassmann_frame(flat3, P0)
    assert np.array_equal(fr.theta2, np.hstack([np.zeros((3, 3)), np.eye(3)]))
    assert np.array_equal(fr.K, np.hstack([np.eye(3), np.zeros((3, 3))]))


def test_duality(spiral, circle):
    for f in (spiral, circle):
        for p in shell_points(f.n, 10, seed=3):
            assert gr.grassmann_frame(f, p).duality_residual() <= 1e-12


def test_segre_spiral(spiral, spiral_F):
    h = mz.Multiplier.from_finsler(spiral_F)
    for p in [P0] + shell_points(3, 10, seed=4):
        rep = gr.segre_checks(spiral, h, p)
        assert rep.passed, rep.failures()
        assert rep["horiz_isotropy"].residual <= 1e-10 and rep["vert_isotropy"].residual <= 1e-10
        assert rep["two_plane_definiteness"].value > 0
        assert "two_plane_sign=positive" in rep.flags


def test_segre_zero(spiral):
    rep = gr.segre_checks(spiral, np.zeros((3, 3)), P0)
    assert rep["horiz_isotropy"].residual == 0 and rep["vert_isotropy"].residual == 0
    assert "degenerate" in rep.flags and "two_plane_sign=degenerate" in rep.flags
    assert not rep["two_plane_definiteness"].passed


def test_segre_indefinite(spiral, spiral_F):
    h = mz.hessian_of_scalar(spiral_F, P0)
    e = np.array([0.0, 1.0, 0.0])
    flipped = h - 2 * (e @ h @ e) * np.outer(e, e)
    rep = gr.segre_checks(spiral, flipped, P0)
    assert "two_plane_sign=indefinite" in rep.flags
    assert not rep["two_plane_definiteness"].passed
    neg = gr.segre_checks(spiral, -h, P0)
    assert "two_plane_sign=negative" in neg.flags and neg["two_plane_definiteness"].passed


def test_segre_rejects_non_annihilating(spiral):
    with pytest.raises(AnnihilationError):
        gr.segre_checks(spiral, np.eye(3), P0)


def test_sphere_grid():
    g = gr.sphere_grid(np.eye(2), steps=1)
    assert len(g) == 4  # (0,1), (1,-1), (1,0), (1,1)
    assert np.allclose(np.linalg.norm(g, axis=1), 1)


@settings(max_examples=30)
@given(p=point_strategy(3), coeffs=st.lists(st.floats(-3, 3), min_size=4, max_size=4),
       v=st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_generator_structure(spiral, spiral_F, p, coeffs, v):
    a, b, c, d = coeffs
    h = mz.hessian_of_scalar(spiral_F, p)
    fr = gr.grassmann_frame(spiral, p)
    v = np.asarray(v)
    assert abs(gr.generator_value(h, fr, v, a, b, c, d) - (a * d - b * c) * v @ h @ v) <= 1e-10 * max(
        1.0, abs(a * d - b * c))


@settings(max_examples=20)
@given(p=point_strategy(3))
def test_projective_invariance(spiral, spiral_F, p):
    h = mz.Multiplier.from_finsler(spiral_F)
    base = gr.segre_checks(spiral, h, p)
    for src in ("P = sqrt(u^2+v^2+w^2)", "P = u^2/sqrt(u^2+v^2+w^2)"):
        T = sp.projective_transform(spiral, parse_field(src, "scalar", 3))
        rep = gr.segre_checks(T, h, p)
        assert abs(rep["two_plane_definiteness"].value - base["two_plane_definiteness"].value) <= 1e-10
        assert rep.passed
