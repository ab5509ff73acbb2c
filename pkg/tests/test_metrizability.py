import math

import numpy as np
import pytest
import sympy as S
from hypothesis import given, settings

import oracles as O
from conftest import point_strategy, shell_points
from spraymetric import examples as ex
from spraymetric import metrizability as mz
from spraymetric import spray as sp
from spraymetric.errors import AnnihilationError, DomainError
from spraymetric.fieldspec import Point, eval_field, parse_field

P0 = Point([0, 0, 0], [1, 0, 1])
R2 = math.sqrt(2)


def _angular(y):
    lam = np.linalg.norm(y)
    return (np.eye(len(y)) - np.outer(y, y) / lam**2) / lam


# -- entries and reports ----------------------------------------------------------


def test_entry_pass_iff_within_tolerance():
    assert mz.Entry("a", 1e-9, 1e-8).passed
    assert mz.Entry("a", 1e-8, 1e-8).passed
    assert not mz.Entry("a", 1.1e-8, 1e-8).passed
    rep = mz.ConditionReport(P0, "s", (mz.Entry("a", 0.0, 0.0), mz.Entry("b", 2.0, 1.0)))
    assert rep.aggregate == 2.0 and not rep.passed
    assert [e.name for e in rep.failures()] == ["b"]
    assert rep["a"].to_dict()["pass"] is True


def test_numerical_rank():
    assert mz.numerical_rank(np.zeros((4, 4))) == 0
    assert mz.numerical_rank(np.diag([1.0, 1e-9, 0, 0])) == 1
    assert mz.numerical_rank(np.diag([1.0, 1e-7, 0, 0])) == 2


# -- Helmholtz ----------------------------------------------------------------------


def test_helmholtz_spiral(spiral, spiral_F):
    rep = mz.helmholtz_residuals(spiral, mz.Multiplier.from_finsler(spiral_F), P0)
    assert rep.passed and rep.aggregate <= 1e-8
    assert set(rep.names()) == {"sym", "annihilates_y", "fibre_symmetry", "nabla", "curvature_sym",
                                "cyclic_curvature"}


def test_helmholtz_identity_fails_annihilation(flat3):
    ident = parse_field("h11 = 1; h22 = 1; h33 = 1", "sym2tensor", 3)
    rep = mz.helmholtz_residuals(flat3, ident, Point([0, 0, 0], [1, 0, 0]))
    assert rep["annihilates_y"].residual == pytest.approx(1.0)
    assert not rep.passed


def test_helmholtz_flat_angular(flat3):
    h = mz.Multiplier.from_finsler(ex.euclidean_norm(3))
    for p in shell_points(3, 10, seed=1):
        assert mz.helmholtz_residuals(flat3, h, p).aggregate <= 1e-10


def test_helmholtz_detects_wrong_multiplier(flat3):
    # a position-dependent rescaling of the angular metric is not parallel along flat geodesics
    h = mz.Multiplier.from_finsler(parse_field("F = (1 + x^2)*sqrt(u^2+v^2+w^2)", "scalar", 3))
    rep = mz.helmholtz_residuals(flat3, h, Point([0.3, 0.2, 0], [0.5, 1, 0.2]))
    assert not rep["nabla"].passed
    assert rep["sym"].passed and rep["annihilates_y"].passed and rep["fibre_symmetry"].passed


# -- Hessian and Hilbert form ----------------------------------------------------------


def test_hessian_examples(spiral_F):
    e = ex.euclidean_norm(3)
    assert np.allclose(mz.hessian_of_scalar(e, Point([0, 0, 0], [1, 0, 0])), np.diag([0, 1, 1]), atol=1e-14)
    assert np.allclose(mz.hessian_of_scalar(spiral_F, P0), _angular(P0.y), atol=1e-14)
    lin = parse_field("F = u", "scalar", 3)
    assert not mz.hessian_of_scalar(lin, P0).any()


def test_hessian_against_sympy(spiral_F, circle_F):
    for F, Fs, xs, ys, n in ((spiral_F, O.spiral_F_sym(), O.X3, O.Y3, 3), (circle_F, O.circle_F_sym(), O.X2, O.Y2, 2)):
        for p in shell_points(n, 3, seed=2):
            want = O.fibre_hessian(Fs, xs, ys, p.x, p.y)
            assert np.allclose(mz.hessian_of_scalar(F, p), want, atol=1e-12)


def test_hilbert_oneform_examples(spiral_F):
    e = ex.euclidean_norm(3)
    y = np.array([1, 0, 1]) / R2
    assert np.allclose(mz.hilbert_oneform(e, Point([0, 0, 0], y)), y)
    assert np.allclose(mz.hilbert_oneform(spiral_F, P0), [1 / R2, 0, 1 / R2])
    p = Point([0.3, -0.4, 0.1], [0.2, 0.9, -1.1])
    assert mz.f_from_theta(mz.OneForm.hilbert(spiral_F), p) == pytest.approx(eval_field(spiral_F, p)[0], abs=1e-12)


def test_f_from_theta_examples(spiral_F):
    unit = parse_field("t1 = u/sqrt(u^2+v^2+w^2); t2 = v/sqrt(u^2+v^2+w^2); t3 = w/sqrt(u^2+v^2+w^2)", "covector", 3)
    p = Point([1, 2, 3], [3, 0, 4])
    assert mz.f_from_theta(unit, p) == pytest.approx(5.0)
    assert mz.f_from_theta(mz.OneForm.hilbert(spiral_F), Point([1, 1, 0], [0, 1, 0])) == pytest.approx(0.5)
    dx1 = parse_field("t1 = 1; t2 = 0; t3 = 0", "covector", 3)
    assert mz.f_from_theta(dx1, Point([0, 0, 0], [1, 0, 0])) == 1.0


# -- Bucataru-Muzsnay ------------------------------------------------------------------


def test_bm_spiral(spiral, spiral_F):
    rep = mz.bm_residuals(spiral, mz.OneForm.hilbert(spiral_F), P0)
    assert rep.passed
    assert rep["rank_dtheta"].value == 4
    assert rep["positivity"].value == pytest.approx(R2)
    for name in ("lie_delta", "dJ", "dH"):
        assert rep[name].residual <= 1e-8


def test_bm_flat_euclidean(flat3):
    th = mz.OneForm.hilbert(ex.euclidean_norm(3))
    for p in shell_points(3, 5, seed=3):
        rep = mz.bm_residuals(flat3, th, p)
        assert rep.aggregate <= 1e-10 and rep["rank_dtheta"].value == 4
        assert rep["positivity"].value == pytest.approx(np.linalg.norm(p.y))


def test_bm_basic_closed_form_fails_rank(flat3):
    dx1 = parse_field("t1 = 1; t2 = 0; t3 = 0", "covector", 3)
    rep = mz.bm_residuals(flat3, dx1, Point([0, 0, 0], [1, 0, 0]))
    for name in ("lie_delta", "dJ", "dH"):
        assert rep[name].residual == 0
    assert rep["rank_dtheta"].value == 0 and not rep["rank_dtheta"].passed
    assert rep["positivity"].passed


def test_bm_negative_positivity(spiral):
    F = ex.spiral_finsler()
    p = Point([0, 3, 0], [1, 0, 0])  # F = 1 + 3/2 > 0; flip the covector sign
    neg = mz.OneForm.hilbert(parse_field("F = -sqrt(u^2+v^2+w^2) - (y*u - x*v)/2", "scalar", 3))
    assert mz.bm_residuals(spiral, mz.OneForm.hilbert(F), p)["positivity"].passed
    assert not mz.bm_residuals(spiral, neg, p)["positivity"].passed


def test_dtheta_against_sympy(spiral_F):
    # d theta from symbolic first derivatives of dF/dy^i
    Fs = O.spiral_F_sym()
    xs, ys = O.X3, O.Y3
    coords = list(xs) + list(ys)
    th = [S.diff(Fs, v) for v in ys]
    for p in shell_points(3, 2, seed=4):
        dth = np.array([[O.num(S.diff(th[i], c), xs, ys, p.x, p.y) for i in range(3)] for c in coords])
        M = np.zeros((6, 6))
        for i in range(3):  # d(theta_i dx^i) = d_a theta_i dz^a ^ dx^i
            for a in range(6):
                M[a, i] += dth[a, i]
                M[i, a] -= dth[a, i]
        got = mz.HilbertForm(mz.OneForm.hilbert(spiral_F)).value(p)
        assert np.allclose(got, M, atol=1e-12)


# -- Kähler lift and two-forms ----------------------------------------------------------


def test_kahler_lift_examples(spiral, spiral_F):
    z = mz.kahler_lift(spiral, np.zeros((3, 3)), P0)
    assert not z.coordinates.matrix().any() and not z.frame.matrix().any()
    kl = mz.kahler_lift(spiral, mz.Multiplier.from_finsler(spiral_F), P0)
    assert np.allclose(kl.frame.B, _angular(P0.y))
    dtheta = mz.HilbertForm(mz.OneForm.hilbert(spiral_F)).value(P0)
    assert np.max(np.abs(kl.coordinates.matrix() + dtheta)) <= 1e-9
    assert np.allclose(kl.frame.to_coordinates(sp.spray_data(spiral, P0).gamma_j).matrix(), kl.coordinates.matrix())


def test_kahler_lift_rejects_non_annihilating(spiral):
    with pytest.raises(AnnihilationError):
        mz.kahler_lift(spiral, np.eye(3), P0)


def test_closed_form_omega_matches_hilbert(spiral, spiral_F):
    # the closed-form spiral 2-form and -d theta agree
    om = mz.FieldTwoForm(ex.spiral_omega())
    hf = mz.HilbertForm(mz.OneForm.hilbert(spiral_F))
    for p in shell_points(3, 5, seed=5):
        assert np.allclose(om.value(p), -hf.value(p), atol=1e-12)


@pytest.mark.parametrize("src", ["P = sqrt(u^2+v^2+w^2)", "P = u^2/sqrt(u^2+v^2+w^2)"])
def test_kahler_concomitance(spiral, spiral_F, src):
    T = sp.projective_transform(spiral, parse_field(src, "scalar", 3))
    h = mz.Multiplier.from_finsler(spiral_F)
    for p in shell_points(3, 50, seed=6):
        a = mz.kahler_lift(spiral, h, p).coordinates.matrix()
        b = mz.kahler_lift(T, h, p).coordinates.matrix()
        assert np.max(np.abs(a - b)) <= 1e-10
        v = np.array([0.3, -1.0, 0.7])
        assert abs(mz.quadratic_form(spiral, -mz.HilbertForm(mz.OneForm.hilbert(spiral_F)), p, v)
                   - mz.quadratic_form(T, mz.KahlerForm(T, h), p, v)) <= 1e-10


def test_twoform_residuals_kahler(spiral, spiral_F):
    omega = mz.KahlerForm(spiral, mz.Multiplier.from_finsler(spiral_F))
    for p in shell_points(3, 100, seed=7):
        rep = mz.twoform_residuals(spiral, omega, p)
        assert rep.aggregate <= 1e-8, rep.failures()
        assert not rep.flags


def test_twoform_dx1_dy1(flat3):
    w = parse_field("b11 = 1", "twoform", 3)
    a = mz.twoform_residuals(flat3, w, Point([0, 0, 0], [0, 1, 0]))
    assert a["char_gamma"].residual == 0 and a["char_delta"].residual == 0 and a["vert_isotropy"].residual == 0
    b = mz.twoform_residuals(flat3, w, Point([0, 0, 0], [1, 0, 0]))
    assert b["char_gamma"].residual == pytest.approx(1.0) and not b["char_gamma"].passed


def test_twoform_zero_flagged_degenerate(flat3):
    rep = mz.twoform_residuals(flat3, parse_field("a12 = 0", "twoform", 3), P0)
    assert rep.aggregate == 0 and rep.passed
    assert rep.flags == ("degenerate (rank 0)",)


def test_cartan_matches_coordinate_lie_derivative(spiral):
    # L_X w_bc = X^a d_a w_bc + w_ac d_b X^a + w_ba d_c X^a, on a non-closed form
    w = parse_field("a12 = x*u; a13 = sin(y)*w; b11 = v^2; b23 = z*u; b31 = x*y; c12 = u*w; c23 = exp(x)", "twoform", 3)
    form = mz.FieldTwoForm(w)
    for p in shell_points(3, 5, seed=8):
        sd = sp.spray_data(spiral, p)
        M, dM = form.evaluate(p)
        X = sp.spray_vector(sd, p)
        DX = mz.spray_vector_jacobian(sd)
        want = np.einsum("a,abc->bc", X, dM) + DX.T @ M + M @ DX
        assert np.allclose(mz.lie_derivative_cartan(M, dM, X, DX), want, atol=1e-12)


def test_spray_vector_jacobian_against_fd(spiral):
    G, xs, ys = O.spiral_sym()
    Gfn = O.lambdify_vector(G, xs, ys)
    X = lambda z: np.concatenate([z[3:], -2 * Gfn(z)])  # noqa: E731
    for p in shell_points(3, 3, seed=9):
        got = mz.spray_vector_jacobian(sp.spray_data(spiral, p))
        assert np.allclose(got, O.fd_jacobian(X, p.z), atol=1e-7)


def test_twoform_value_conversions():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3))
    C = rng.normal(size=(3, 3))
    v = mz.TwoFormValue(A - A.T, rng.normal(size=(3, 3)), C - C.T, True)
    gj = rng.normal(size=(3, 3))
    c = v.to_coordinates(gj)
    assert not c.frame_adapted
    back = c.to_frame(gj)
    assert np.allclose(back.matrix(), v.matrix())
    M = c.matrix()
    assert np.allclose(M, -M.T)
    # evaluating on frame vectors expressed in coordinates agrees with the frame values
    sd = type("SD", (), {"gamma_j": gj, "n": 3})
    frame = sp.horizontal_frame(sd)
    assert np.allclose(frame @ M @ frame.T, v.matrix())


# -- quadratic form and quasi-definiteness -------------------------------------------------


def test_quadratic_form_examples(spiral, spiral_F):
    omega = mz.KahlerForm(spiral, mz.Multiplier.from_finsler(spiral_F))
    assert mz.quadratic_form(spiral, omega, P0, [0, 1, 0]) == pytest.approx(1 / R2)
    assert abs(mz.quadratic_form(spiral, omega, P0, P0.y)) <= 1e-14
    with pytest.raises(DomainError):
        mz.quadratic_form(spiral, parse_field("c12 = 1", "twoform", 3), P0, [0, 1, 0])


def test_quadratic_form_equals_h_on_kahler_lifts(spiral, spiral_F):
    h = mz.Multiplier.from_finsler(spiral_F)
    rng = np.random.default_rng(1)
    for p in shell_points(3, 5, seed=10):
        v = rng.normal(size=3)
        assert mz.quadratic_form(spiral, mz.KahlerForm(spiral, h), p, v) == pytest.approx(v @ h.value(p) @ v, abs=1e-12)


def test_quasi_definiteness_examples(spiral_F):
    h = mz.hessian_of_scalar(spiral_F, P0)
    q = mz.quasi_definiteness(h, P0.y)
    assert q.min_eig == pytest.approx(1 / R2) and q.classification == "positive_quasi_definite"
    assert mz.quasi_definiteness(np.zeros((3, 3)), P0.y).classification == "degenerate"
    neg = mz.quasi_definiteness(-h, P0.y)
    assert neg.classification == "negative_quasi_definite" and neg.max_eig == pytest.approx(-1 / R2)
    # flip one eigenvalue on the complement of y
    e = np.array([0.0, 1.0, 0.0])
    flipped = h - 2 * (e @ h @ e) * np.outer(e, e)
    assert mz.quasi_definiteness(flipped, P0.y).classification == "indefinite"
    with pytest.raises(AnnihilationError):
        mz.quasi_definiteness(np.eye(3), P0.y)


# -- properties ----------------------------------------------------------------------------


@pytest.mark.parametrize("which", ["spiral", "circle"])
@settings(max_examples=25)
@given(data=point_strategy(3))
def test_theorem3_forward(which, data, spiral, circle, spiral_F, circle_F):
    spray, F = (spiral, spiral_F) if which == "spiral" else (circle, circle_F)
    p = data if which == "spiral" else Point(data.x[:2], data.y[:2] if np.linalg.norm(data.y[:2]) > 0.1 else [1, 0])
    th = mz.OneForm.hilbert(F)
    if mz.bm_residuals(spray, th, p).passed:
        assert mz.helmholtz_residuals(spray, mz.Multiplier.from_oneform(th), p, tol=1e-7).passed


@settings(max_examples=25)
@given(p=point_strategy(3))
def test_dtheta_is_minus_kahler(spiral, spiral_F, p):
    th = mz.OneForm.hilbert(spiral_F)
    dth = mz.HilbertForm(th).value(p)
    kl = mz.kahler_lift(spiral, mz.Multiplier.from_oneform(th), p).coordinates.matrix()
    assert np.max(np.abs(dth + kl)) <= 1e-8
    assert mz.numerical_rank(dth) == 2 * mz.numerical_rank(mz.Multiplier.from_oneform(th).value(p))


@settings(max_examples=25)
@given(p=point_strategy(3))
def test_nabla_projectively_invariant(spiral, spiral_F, p):
    # h is degree -1 homogeneous with h y = 0
    h = mz.Multiplier.from_finsler(spiral_F)
    for src in ("P = sqrt(u^2+v^2+w^2)", "P = u^2/sqrt(u^2+v^2+w^2) + x*w"):
        T = sp.projective_transform(spiral, parse_field(src, "scalar", 3))
        assert np.max(np.abs(sp.dyn_cov_deriv(spiral, h, p) - sp.dyn_cov_deriv(T, h, p))) <= 1e-9


@settings(max_examples=25)
@given(p=point_strategy(3))
def test_curvature_conditions_equivalent(spiral, flat3, spiral_F, p):
    for spray, F in ((spiral, spiral_F), (flat3, ex.euclidean_norm(3))):
        rep = mz.helmholtz_residuals(spray, mz.Multiplier.from_finsler(F), p)
        assert rep["curvature_sym"].passed == rep["cyclic_curvature"].passed


@settings(max_examples=25)
@given(p=point_strategy(3))
def test_rank_structure_arbitrary_h(spiral, p):
    # rank of the Kähler matrix is twice the rank of h for any symmetric h annihilating y
    y = p.y / np.linalg.norm(p.y)
    Pm = np.eye(3) - np.outer(y, y)
    for d in ([1.0, 1.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]):
        B = np.random.default_rng(int(abs(p.x[0]) * 1e6)).normal(size=(3, 3))
        Q, _ = np.linalg.qr(Pm @ B)
        h = Pm @ Q @ np.diag(d) @ Q.T @ Pm
        M = mz.kahler_matrix(h, sp.spray_data(spiral, p).gamma_j)
        assert mz.numerical_rank(M) == 2 * mz.numerical_rank(h)
