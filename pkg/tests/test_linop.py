import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import crandn, dims, seeds
from framemult.errors import DimMismatch, DimTooLarge, NotContraction
from framemult.linop import (
    LinearOp,
    SpectralEstimate,
    adjoint,
    dense_of,
    diag,
    from_matrix,
    identity,
    neumann_invert,
    spectral_estimates,
)


# ---------------------------------------------------------------- dense_of


def test_dense_of_identity():
    np.testing.assert_array_equal(dense_of(identity(3)), np.eye(3))


def test_dense_of_harmonic_diagonal():
    d = 7
    D = dense_of(diag(1.0 / np.arange(1, d + 1)))
    np.testing.assert_allclose(D, np.diag(1.0 / np.arange(1, d + 1)), atol=0)


def test_dense_of_round_trip(rng):
    A = crandn(rng, 4, 4)
    np.testing.assert_array_equal(dense_of(from_matrix(A)), A)


def test_dense_of_respects_cap():
    with pytest.raises(DimTooLarge):
        dense_of(identity(10), cap=5)


def test_dense_of_cap_from_environment(monkeypatch):
    monkeypatch.setenv("FRAMEMULT_ORACLE_CAP", "4")
    with pytest.raises(DimTooLarge):
        dense_of(identity(5))


def test_apply_rejects_wrong_length():
    with pytest.raises(DimMismatch):
        identity(3)(np.ones(4))


def test_apply_works_on_batches(rng):
    A = crandn(rng, 5, 3)
    X = crandn(rng, 3, 4)
    np.testing.assert_allclose(from_matrix(A)(X), A @ X)


@given(seeds, dims)
def test_apply_is_linear(seed, d):
    rng = np.random.default_rng(seed)
    op = from_matrix(crandn(rng, d, d))
    x, y = crandn(rng, d), crandn(rng, d)
    a, b = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    lhs = op(a * x + b * y)
    rhs = a * op(x) + b * op(y)
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * (np.linalg.norm(x) + np.linalg.norm(y)) * (1 + abs(a) + abs(b)) * np.linalg.norm(dense_of(op), 2)


# ---------------------------------------------------------------- adjoint


def test_adjoint_identity():
    np.testing.assert_array_equal(dense_of(adjoint(identity(4))), np.eye(4))


def test_adjoint_imaginary_diagonal():
    np.testing.assert_array_equal(dense_of(adjoint(diag([1j, 2j]))), np.diag([-1j, -2j]))


def test_adjoint_matches_conjugate_transpose(rng):
    A = crandn(rng, 5, 5)
    np.testing.assert_allclose(dense_of(adjoint(from_matrix(A))), A.conj().T, atol=1e-15)


def test_adjoint_without_rapply_uses_dense(rng):
    A = crandn(rng, 4, 3)
    op = LinearOp((4, 3), lambda x: A @ x)
    np.testing.assert_allclose(dense_of(adjoint(op)), A.conj().T, atol=1e-15)


@given(seeds, dims)
def test_double_adjoint(seed, d):
    rng = np.random.default_rng(seed)
    op = from_matrix(crandn(rng, d, d + 1))
    x = crandn(rng, d + 1)
    assert np.linalg.norm(adjoint(adjoint(op))(x) - op(x)) <= 1e-9 * np.linalg.norm(x)


def test_composition_and_sums(rng):
    A, B = crandn(rng, 3, 3), crandn(rng, 3, 3)
    a, b = from_matrix(A), from_matrix(B)
    np.testing.assert_allclose(dense_of(a @ b), A @ B, atol=1e-12)
    np.testing.assert_allclose(dense_of(a - b), A - B, atol=1e-12)
    np.testing.assert_allclose(dense_of((a + 2 * b).H), (A + 2 * B).conj().T, atol=1e-12)


# ---------------------------------------------------------------- spectral estimates


def test_spectral_identity_tight():
    est = spectral_estimates(identity(8))
    for v in (est.op_norm_lower, est.op_norm_upper, est.min_sv_lower, est.min_sv_upper):
        assert abs(v - 1.0) <= 1e-12


def test_spectral_harmonic_diagonal():
    d = 10
    est = spectral_estimates(diag(1.0 / np.arange(1, d + 1)))
    assert est.contains(1.0, 0.1)
    assert est.op_norm_upper - est.op_norm_lower < 1e-12


def test_spectral_duplicated_basis_synthesis():
    d = 6
    T = np.eye(d)
    T = np.hstack([T[:, :1], T])  # columns e1, e1, e2, ..., e_d
    est = spectral_estimates(from_matrix(T))
    assert est.contains(np.sqrt(2.0), 1.0)


def test_spectral_rejects_inverted_bracket():
    with pytest.raises(ValueError):
        SpectralEstimate(2.0, 1.0, 0.0, 0.0, "x")


def test_spectral_unknown_method():
    with pytest.raises(ValueError):
        spectral_estimates(identity(2), method="magic")


@given(seeds, st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=4))
def test_brackets_contain_oracle(seed, d, extra):
    rng = np.random.default_rng(seed)
    A = crandn(rng, d + extra, d)
    s = np.linalg.svd(A, compute_uv=False)
    for method in ("dense_oracle", "power_iteration"):
        est = spectral_estimates(from_matrix(A), method=method)
        assert 0 <= est.op_norm_lower <= est.op_norm_upper
        assert 0 <= est.min_sv_lower <= est.min_sv_upper
        assert est.op_norm_lower - 1e-9 <= s[0] <= est.op_norm_upper + 1e-9
        assert est.min_sv_lower - 1e-9 <= s[-1] <= est.min_sv_upper + 1e-9


def test_power_iteration_wide_operator(rng):
    A = crandn(rng, 3, 7)
    s = np.linalg.svd(A, compute_uv=False)
    est = spectral_estimates(from_matrix(A), method="power_iteration")
    assert est.contains(s[0], s[-1], slack=1e-9)


# ---------------------------------------------------------------- Neumann


def test_neumann_identity():
    I = identity(5)
    nr = neumann_invert(I, I, I, tol=1e-10)
    assert nr.terms_used == 0
    assert nr.contraction_q == 0.0
    np.testing.assert_array_equal(dense_of(nr.inverse), np.eye(5))


def test_neumann_diagonal(rng):
    d = 20
    m = rng.uniform(0.6, 1.4, d)
    I = identity(d)
    nr = neumann_invert(I, I, diag(m), nu=0.4, tol=1e-10)
    X = dense_of(nr.inverse)
    err = np.linalg.norm(X - np.diag(1 / m), 2) / np.linalg.norm(np.diag(1 / m), 2)
    assert err <= 1e-10
    s = np.linalg.svd(X, compute_uv=False)
    assert nr.guaranteed_lower - 1e-12 <= s[-1] and s[0] <= nr.guaranteed_upper + 1e-12


def test_neumann_harmonic_diagonal_not_contraction():
    # |G - I| = 1 - 1/d < 1 but the sandwich upper bound d blows up with d;
    # the declared bound nu = 1 (the limit of the family) refuses.
    d = 16
    I = identity(d)
    G = diag(1.0 / np.arange(1, d + 1))
    measured = neumann_invert(I, I, G, tol=1e-6)
    assert measured.nu == pytest.approx(1 - 1 / d, abs=1e-12)
    assert measured.guaranteed_upper == pytest.approx(d, rel=1e-9)
    with pytest.raises(NotContraction) as ei:
        neumann_invert(I, I, G, nu=1.0)
    assert ei.value.constants["q"] >= 1.0


def test_neumann_tail_bound_dominates_partial_error(rng):
    d = 12
    F = from_matrix(np.eye(d) * 2)
    Finv = from_matrix(np.eye(d) / 2)
    E = crandn(rng, d, d)
    E *= 0.9 / np.linalg.norm(E, 2)
    Gd = 2 * np.eye(d) + E
    nr = neumann_invert(F, Finv, from_matrix(Gd), tol=1e-12)
    exact = np.linalg.inv(Gd)
    assert nr.contraction_q < 1
    assert nr.a_priori_error == pytest.approx(nr.tail_bound(nr.terms_used))
    for k in range(0, nr.terms_used + 1, 5):
        err = np.linalg.norm(dense_of(nr.partial(k)) - exact, 2)
        assert err <= nr.tail_bound(k) * (1 + 1e-9) + 1e-14


def test_neumann_solve_refines(rng):
    d = 10
    I = identity(d)
    m = rng.uniform(0.5, 1.5, d)
    nr = neumann_invert(I, I, diag(m), nu=0.5, tol=1e-2)
    y = crandn(rng, d)
    x = nr.solve(y, rtol=1e-13)
    assert np.linalg.norm(m * x - y) <= 1e-13 * np.linalg.norm(y)


@given(seeds, st.integers(min_value=2, max_value=10), st.floats(min_value=0.0, max_value=0.8))
def test_neumann_matches_oracle(seed, d, ratio):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(crandn(rng, d, d))
    sv = rng.uniform(0.5, 2.0, d)
    Fd = Q * sv
    Finv = np.linalg.inv(Fd)
    E = crandn(rng, d, d)
    nu = ratio / np.linalg.norm(Finv, 2)
    E *= nu / max(np.linalg.norm(E, 2), 1e-300)
    Gd = Fd + E
    nr = neumann_invert(from_matrix(Fd), from_matrix(Finv), from_matrix(Gd), tol=1e-10)
    X = dense_of(nr.inverse)
    assert np.linalg.norm(Gd @ X - np.eye(d), 2) <= 1e-9
    s = np.linalg.svd(X, compute_uv=False)
    assert nr.guaranteed_lower * (1 - 1e-9) <= s[-1]
    assert s[0] <= nr.guaranteed_upper * (1 + 1e-9)


def test_neumann_rejects_shape_mismatch():
    with pytest.raises(DimMismatch):
        neumann_invert(identity(2), identity(2), identity(3))
