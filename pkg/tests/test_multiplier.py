import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import crandn, dims, e, e1_dup, onb, random_family, seeds
from framemult import catalogue
from framemult.errors import CountMismatch, DimMismatch, UnboundedSymbol
from framemult.frames import SequenceFamily, Symbol, SymbolTags, analysis, synthesis
from framemult.linop import dense_of
from framemult.multiplier import MultiplierSpec, adjoint_spec, build, norm_bound, pruned


def pairs_and_halved(d):
    """``(e1, e1, e2, e2, ...)`` and ``(e1, e1/2, e2, e2, ...)``."""
    phi = [e(j, d) for j in range(1, d + 1) for _ in range(2)]
    psi = list(phi)
    psi[1] = e(1, d, 0.5)
    return SequenceFamily(np.array(phi)), SequenceFamily(np.array(psi))


def random_spec(rng, d, n):
    return MultiplierSpec(Symbol(crandn(rng, n)), random_family(rng, d, n), random_family(rng, d, n))


# ---------------------------------------------------------------- spec


def test_spec_rejects_dim_mismatch():
    with pytest.raises(DimMismatch):
        MultiplierSpec(Symbol(np.ones(3)), onb(3), SequenceFamily(np.eye(4)[:3]))


def test_spec_aligns_counts(rng):
    s = MultiplierSpec(Symbol(np.ones(5)), random_family(rng, 3, 4), random_family(rng, 3, 6))
    assert s.count == 4 and s.aligned_from == (5, 4, 6)
    with pytest.raises(CountMismatch):
        MultiplierSpec(Symbol(np.ones(5)), random_family(rng, 3, 4), random_family(rng, 3, 6), align=False)


# ---------------------------------------------------------------- build


def test_build_onb_identity():
    d = 6
    M = dense_of(build(MultiplierSpec(Symbol(np.ones(d)), onb(d), onb(d))))
    np.testing.assert_array_equal(M, np.eye(d))


def test_build_square_symbol_cancels_shrinking_basis():
    d = 10
    n = np.arange(1.0, d + 1)
    fam = SequenceFamily(np.diag(1 / n))
    M = dense_of(build(MultiplierSpec(Symbol(n**2), fam, fam)))
    np.testing.assert_allclose(M, np.eye(d), atol=1e-14)


def test_build_pairs_and_halved():
    d = 7
    phi, psi = pairs_and_halved(d)
    M = dense_of(build(MultiplierSpec(Symbol(np.ones(2 * d)), phi, psi)))
    np.testing.assert_allclose(M, np.diag([1.5] + [2.0] * (d - 1)), atol=0)


@given(seeds, dims, st.integers(min_value=1, max_value=12))
def test_build_factorises(seed, d, n):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, d, n)
    expect = dense_of(synthesis(spec.phi)) @ np.diag(spec.m.values) @ dense_of(analysis(spec.psi))
    M = dense_of(build(spec))
    assert np.abs(M - expect).max() <= 1e-12 * max(1.0, np.abs(expect).max())
    np.testing.assert_allclose(spec.matrix(), M, atol=1e-12 * max(1.0, np.abs(M).max()))


def test_build_accepts_batches(rng):
    spec = random_spec(rng, 4, 6)
    X = crandn(rng, 4, 3)
    np.testing.assert_allclose(build(spec)(X), spec.matrix() @ X, atol=1e-12)


# ---------------------------------------------------------------- adjoint


def test_adjoint_of_frame_operator_is_itself(rng):
    fam = random_family(rng, 4, 7)
    spec = MultiplierSpec(Symbol(np.ones(7)), fam, fam)
    S = spec.matrix()
    np.testing.assert_allclose(S, S.conj().T, atol=1e-13)
    np.testing.assert_allclose(adjoint_spec(spec).matrix(), S, atol=1e-13)


def test_adjoint_imaginary_constant():
    d = 3
    spec = MultiplierSpec(Symbol(np.full(d, 1j)), onb(d), onb(d))
    np.testing.assert_array_equal(adjoint_spec(spec).matrix(), -1j * np.eye(d))


@given(seeds, dims, st.integers(min_value=1, max_value=12))
def test_adjoint_identity(seed, d, n):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, d, n)
    lhs = spec.matrix().conj().T
    rhs = adjoint_spec(spec).matrix()
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(lhs).max())
    np.testing.assert_allclose(dense_of(build(spec).H), lhs, atol=1e-12 * max(1.0, np.abs(lhs).max()))


def test_adjoint_renames_role_hints():
    spec = MultiplierSpec(Symbol(np.ones(2)), onb(2), onb(2), hints={"B_phi": 3.0, "mu_p3": 0.1, "lambda": 0.2})
    h = adjoint_spec(spec).hints
    assert h == {"B_psi": 3.0, "mu_p3_swapped": 0.1, "lambda": 0.2}
    assert spec.swapped().swapped().hints == spec.hints


# ---------------------------------------------------------------- norm bound


def test_norm_bound_onb():
    spec = MultiplierSpec(Symbol(np.ones(4)), onb(4), onb(4))
    assert norm_bound(spec) == pytest.approx(1.0, abs=1e-12)


def test_norm_bound_pairs_and_halved():
    d = 16
    phi, psi = pairs_and_halved(d)
    spec = MultiplierSpec(Symbol(np.full(2 * d, 4.0)), phi, psi)
    actual = np.linalg.norm(spec.matrix(), 2)
    assert actual == pytest.approx(8.0)
    B_psi = np.linalg.norm(psi.vectors, 2) ** 2
    assert norm_bound(spec) == pytest.approx(4 * np.sqrt(2 * B_psi), rel=1e-12)
    assert norm_bound(spec) >= actual


def test_norm_bound_frame_operator():
    fam = e1_dup(9)
    spec = MultiplierSpec(Symbol(np.ones(10)), fam, fam)
    assert norm_bound(spec) == pytest.approx(2.0, rel=1e-12)
    assert np.linalg.norm(spec.matrix(), 2) == pytest.approx(2.0)


def test_norm_bound_refuses_unbounded_symbol():
    d = 4
    m = Symbol(np.arange(1.0, d + 1), SymbolTags(is_ell_infty=False))
    spec = MultiplierSpec(m, onb(d), onb(d))
    assert norm_bound(spec) == pytest.approx(d)
    with pytest.raises(UnboundedSymbol):
        norm_bound(spec, asymptotic=True)


@given(seeds, dims, st.integers(min_value=1, max_value=16))
def test_norm_bound_dominates(seed, d, n):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, d, n)
    assert np.linalg.norm(spec.matrix(), 2) <= norm_bound(spec) * (1 + 1e-12) + 1e-12


@pytest.mark.parametrize("fid", [f["id"] for f in catalogue.list_fixtures()])
def test_norm_bound_on_catalogue(fid):
    spec = catalogue.instantiate(fid, d=16).spec
    assert np.linalg.norm(spec.matrix(), 2) <= norm_bound(spec) + 1e-9


# ---------------------------------------------------------------- pruning


@given(seeds, dims, st.integers(min_value=2, max_value=10))
def test_pruning_leaves_matrix_unchanged(seed, d, n):
    rng = np.random.default_rng(seed)
    m = crandn(rng, n)
    m[rng.random(n) < 0.3] = 0
    phi = crandn(rng, n, d)
    phi[rng.random(n) < 0.2] = 0
    m[0] = 1.0
    phi[0] = 1.0
    spec = MultiplierSpec(Symbol(m), SequenceFamily(phi), random_family(rng, d, n))
    p, kept = pruned(spec)
    assert p.count == kept.size
    np.testing.assert_allclose(dense_of(build(p)), dense_of(build(spec)), atol=1e-12 * max(1, np.abs(spec.matrix()).max()))
