import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import crandn, dims, e, e1_dup, onb, random_family, seeds
from framemult.errors import CountMismatch, DimMismatch, EmptyAfterPrune, NotAFrame
from framemult.frames import (
    ClassTags,
    FrameBounds,
    SequenceFamily,
    Symbol,
    SymbolTags,
    WeightedRieszCase,
    analysis,
    canonical_dual,
    classify_weighted_riesz,
    frame_bounds,
    frame_operator,
    frame_operator_matrix,
    is_dual_pair,
    prune_zeros,
    riesz_margin,
    synthesis,
    weighted,
)
from framemult.linop import adjoint, dense_of


# ---------------------------------------------------------------- tags


def test_tags_close_implications():
    t = ClassTags(is_riesz=True)
    assert t.is_frame and t.is_bessel and t.is_nbb and t.is_nba and t.is_sn


def test_tags_negative_implications():
    t = ClassTags(is_bessel=False)
    assert t.is_frame is False and t.is_riesz is False


def test_tags_reject_contradictions():
    with pytest.raises(ValueError):
        ClassTags(is_riesz=True, is_bessel=False)
    with pytest.raises(ValueError):
        ClassTags(provenance="folklore")


def test_symbol_tags():
    t = SymbolTags(is_sn=True)
    assert t.is_nbb and t.is_ell_infty
    t = SymbolTags(is_nbb=True, is_ell_infty=False)
    assert t.is_sn is False
    with pytest.raises(ValueError):
        SymbolTags(is_positive=True, is_negative=True)


def test_family_shape_checks():
    with pytest.raises(ValueError):
        SequenceFamily(np.ones(3))
    fam = SequenceFamily.explicit([[1, 0], [0, 1], [1, 1]])
    assert (fam.count, fam.dim, len(fam)) == (3, 2, 3)
    with pytest.raises(ValueError):
        fam.vectors[0, 0] = 5


def test_family_arithmetic_requires_alignment():
    a = onb(3)
    with pytest.raises(DimMismatch):
        a - onb(4)
    with pytest.raises(CountMismatch):
        a - SequenceFamily(np.eye(3)[:2])
    with pytest.raises(CountMismatch):
        a.scaled(np.ones(2))


def test_frame_bounds_bracket_checks():
    with pytest.raises(ValueError):
        FrameBounds(2.0, 2.0, 1.0, 1.0)


def test_symbol_constant():
    m = Symbol.constant(-2.0, 4)
    assert m.tags.is_negative and m.tags.is_sn
    assert m.sup() == m.inf() == 2.0


# ---------------------------------------------------------------- analysis / synthesis


def test_analysis_onb():
    d = 5
    np.testing.assert_array_equal(analysis(onb(d))(e(1, d)), e(1, d))


def test_analysis_duplicated_basis():
    d = 5
    c = analysis(e1_dup(d))(e(1, d))
    np.testing.assert_array_equal(c, np.r_[1, 1, np.zeros(d - 1)])


def test_analysis_random(rng):
    fam = random_family(rng, 4, 7)
    f = crandn(rng, 4)
    expect = np.array([np.vdot(v, f) for v in fam.vectors])
    np.testing.assert_allclose(analysis(fam)(f), expect, atol=1e-13)


def test_synthesis_onb():
    d = 4
    np.testing.assert_array_equal(synthesis(onb(d))(e(1, d)), e(1, d))


def test_synthesis_norm_is_root_of_bessel_bound():
    fam = e1_dup(6)
    s = np.linalg.svd(dense_of(synthesis(fam)), compute_uv=False)
    assert s[0] == pytest.approx(np.sqrt(2.0), abs=1e-14)
    assert s[0] ** 2 <= frame_bounds(fam).B_upper


def test_synthesis_random(rng):
    fam = random_family(rng, 3, 6)
    c = crandn(rng, 6)
    expect = sum(c[n] * fam.vectors[n] for n in range(6))
    np.testing.assert_allclose(synthesis(fam)(c), expect, atol=1e-13)


@given(seeds, dims, st.integers(min_value=1, max_value=10))
def test_analysis_adjoint_is_synthesis(seed, d, n):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d, n)
    c = crandn(rng, n)
    lhs = adjoint(analysis(fam))(c)
    assert np.linalg.norm(lhs - synthesis(fam)(c)) <= 1e-9 * np.linalg.norm(c) * max(1, np.abs(fam.vectors).max())


# ---------------------------------------------------------------- frame operator


def test_frame_operator_onb():
    np.testing.assert_array_equal(dense_of(frame_operator(onb(4))), np.eye(4))


def test_frame_operator_pairs():
    d = 5
    rows = [e(j, d) for j in range(1, d + 1) for _ in range(2)]
    S = dense_of(frame_operator(SequenceFamily(np.array(rows))))
    np.testing.assert_array_equal(S, 2 * np.eye(d))


def test_frame_operator_random(rng):
    fam = random_family(rng, 4, 9)
    expect = sum(np.outer(v, v.conj()) for v in fam.vectors)
    np.testing.assert_allclose(dense_of(frame_operator(fam)), expect, atol=1e-12)


@given(seeds, dims, st.integers(min_value=1, max_value=12))
def test_frame_operator_hermitian_psd(seed, d, n):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d, n)
    S = dense_of(frame_operator(fam))
    np.testing.assert_allclose(S, S.conj().T, atol=1e-12 * max(1.0, np.abs(S).max()))
    f = crandn(rng, d)
    assert np.real(np.vdot(f, S @ f)) >= -1e-10 * np.linalg.norm(S, 2) * np.linalg.norm(f) ** 2


@given(seeds, dims)
def test_inverse_frame_operator_bounds(seed, d):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d, d + 3)
    fb = frame_bounds(fam)
    if not fb.is_frame:
        return
    f = crandn(rng, d)
    g = np.linalg.solve(frame_operator_matrix(fam), f)
    nf = np.linalg.norm(f)
    assert nf / fb.B_upper * (1 - 1e-9) <= np.linalg.norm(g) <= nf / fb.A_lower * (1 + 1e-9)


# ---------------------------------------------------------------- frame bounds


def test_frame_bounds_onb():
    fb = frame_bounds(onb(6))
    assert fb.A == pytest.approx(1, abs=1e-14) and fb.B == pytest.approx(1, abs=1e-14)


def test_frame_bounds_duplicated_basis():
    fb = frame_bounds(e1_dup(8))
    assert fb.A_lower <= 1 <= fb.A_upper
    assert fb.B_lower <= 2 <= fb.B_upper


@pytest.mark.parametrize("d", [4, 9, 16])
def test_frame_bounds_geometric_e1_recycling(d):
    # (1/2 e1, e2, 1/4 e1, e3, ...): S = diag(sum_j 4^-j, 1, ..., 1)
    rows = []
    for j in range(1, d):
        rows += [e(1, d, 2.0**-j), e(j + 1, d)]
    fb = frame_bounds(SequenceFamily(np.array(rows)))
    A_d = sum(4.0**-j for j in range(1, d))
    assert fb.A == pytest.approx(A_d, rel=1e-12)
    assert fb.B == pytest.approx(1.0, rel=1e-12)


def test_frame_bounds_power_iteration_brackets(rng):
    fam = random_family(rng, 5, 8)
    exact = frame_bounds(fam)
    est = frame_bounds(fam, method="power_iteration")
    assert est.A_lower - 1e-9 <= exact.A <= est.A_upper + 1e-9
    assert est.B_lower - 1e-9 <= exact.B <= est.B_upper + 1e-9


# ---------------------------------------------------------------- canonical dual


def test_canonical_dual_onb():
    np.testing.assert_allclose(canonical_dual(onb(4)).vectors, np.eye(4), atol=1e-15)


def test_canonical_dual_duplicated_basis():
    d = 5
    dual = canonical_dual(e1_dup(d)).vectors
    expect = np.array([e(1, d, 0.5), e(1, d, 0.5)] + [e(j, d) for j in range(2, d + 1)])
    np.testing.assert_allclose(dual, expect, atol=1e-15)


def test_canonical_dual_scaling():
    np.testing.assert_allclose(canonical_dual(onb(3, 2.0)).vectors, 0.5 * np.eye(3), atol=1e-15)


def test_canonical_dual_needs_frame():
    with pytest.raises(NotAFrame):
        canonical_dual(SequenceFamily(np.array([e(1, 3), e(2, 3)])))


@given(seeds, dims)
def test_canonical_dual_is_dual(seed, d):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d, d + 2)
    if frame_bounds(fam).A_lower < 1e-3:
        return
    dual = canonical_dual(fam)
    assert is_dual_pair(fam, dual).is_dual
    fb, fbd = frame_bounds(fam), frame_bounds(dual)
    # bounds of the canonical dual are the reciprocals, swapped
    assert fbd.A == pytest.approx(1 / fb.B, rel=1e-7)
    assert fbd.B == pytest.approx(1 / fb.A, rel=1e-7)


# ---------------------------------------------------------------- dual pairs


def test_dual_pair_with_canonical():
    fam = e1_dup(6)
    assert is_dual_pair(fam, canonical_dual(fam)).is_dual


def test_dual_pair_family_of_duplicated_basis():
    d = 6
    h = e(1, d, 0.3) + e(2, d, 0.1)
    dual = SequenceFamily(np.array([h, e(1, d) - h] + [e(j, d) for j in range(2, d + 1)]))
    chk = is_dual_pair(e1_dup(d), dual)
    assert chk.is_dual and chk.residual < 1e-14


def test_dual_pair_rejects_scaled_basis():
    chk = is_dual_pair(onb(4), onb(4, 2.0))
    assert not chk.is_dual
    assert chk.residual == pytest.approx(1.0)


# ---------------------------------------------------------------- Riesz margin


def test_riesz_margin_onb():
    rm = riesz_margin(onb(5))
    assert rm.is_riesz_certified and rm.min_sv == pytest.approx(1.0)


def test_riesz_margin_repeated_vector():
    d = 5
    fam = SequenceFamily(np.array([e(1, d)] + [e(j, d) for j in range(1, d)]))
    assert not riesz_margin(fam).is_riesz_certified


def test_riesz_margin_growing_diagonal():
    d = 8
    rm = riesz_margin(SequenceFamily(np.diag(np.arange(1.0, d + 1))))
    assert rm.is_riesz_certified and rm.min_sv == pytest.approx(1.0)


def test_riesz_margin_overcomplete_is_not_riesz():
    rm = riesz_margin(e1_dup(4))
    assert not rm.is_riesz_certified and rm.min_sv == 0.0


@given(seeds, dims)
def test_riesz_implies_frame(seed, d):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d, d)
    if riesz_margin(fam).is_riesz_certified:
        assert frame_bounds(fam).A_lower > 0 and fam.count == fam.dim


# ---------------------------------------------------------------- weighted families


def test_weighted_by_ones(rng):
    fam = random_family(rng, 3, 5)
    w = weighted(Symbol(np.ones(5)), fam)
    np.testing.assert_array_equal(w.vectors, fam.vectors)


def test_weighted_normalises_growing_basis():
    d = 6
    n = np.arange(1.0, d + 1)
    w = weighted(Symbol(1 / n), SequenceFamily(np.diag(n)))
    np.testing.assert_allclose(w.vectors, np.eye(d), atol=1e-15)


def test_weighted_preserves_classes_for_sn_symbol():
    w = weighted(Symbol(np.full(3, 2.0), SymbolTags(is_sn=True)), onb(3))
    assert w.tags.is_riesz is True


@given(seeds, dims, st.integers(min_value=1, max_value=10))
def test_conjugate_symbol_same_bounds(seed, d, n):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d, n)
    m = Symbol(crandn(rng, n))
    a = frame_bounds(weighted(m, fam))
    b = frame_bounds(weighted(m.conj(), fam))
    scale = max(1.0, a.B)
    assert abs(a.A - b.A) <= 1e-10 * scale and abs(a.B - b.B) <= 1e-10 * scale


def test_classify_riesz_and_sn():
    m = Symbol(np.full(4, 3.0), SymbolTags(is_sn=True))
    assert classify_weighted_riesz(m, onb(4)) is WeightedRieszCase.case_riesz_sn


def test_classify_harmonic_symbol_on_basis_impossible():
    d = 16
    m = Symbol(1 / np.arange(1.0, d + 1), SymbolTags(is_nbb=False, is_ell_infty=True))
    assert classify_weighted_riesz(m, onb(d)) is WeightedRieszCase.impossible
    assert weighted(m, onb(d)).tags.is_riesz is False
    # the truncations agree: the smallest singular value decays like 1/d
    assert riesz_margin(weighted(m, onb(d))).min_sv == pytest.approx(1 / d)


def test_classify_nonnbb_bessel():
    d = 8
    n = np.arange(1.0, d + 1)
    phi = SequenceFamily(np.diag(1 / n), ClassTags(is_bessel=True, is_frame=False, is_nbb=False))
    m = Symbol(n, SymbolTags(is_nbb=True, is_ell_infty=False))
    assert classify_weighted_riesz(m, phi) is WeightedRieszCase.case_nonnbb_bessel


def test_classify_nonnba_nonbessel():
    phi = SequenceFamily(np.eye(3), ClassTags(is_nba=False))
    m = Symbol(np.ones(3), SymbolTags(is_nbb=False))
    assert classify_weighted_riesz(m, phi) is WeightedRieszCase.case_nonnba_nonbessel


def test_classify_unknown_without_tags(rng):
    assert classify_weighted_riesz(Symbol(np.ones(3)), random_family(rng, 3, 3)) is WeightedRieszCase.unknown


# ---------------------------------------------------------------- pruning


def test_prune_interleaved_zero_families():
    d = 4
    phi, psi = [], []
    for j in range(1, d + 1):
        phi += [e(j, d), np.zeros(d)]
        psi += [np.zeros(d), e(j, d)]
    with pytest.raises(EmptyAfterPrune):
        prune_zeros(Symbol(np.ones(2 * d)), SequenceFamily(np.array(phi)), SequenceFamily(np.array(psi)))


def test_prune_identity_example(rng):
    d = 4
    phi, psi, m = [], [], []
    for j in range(1, d + 1):
        phi += [crandn(rng, d), e(j, d), np.zeros(d)]
        psi += [np.zeros(d), e(j, d), crandn(rng, d)]
        m += [2.0, 1.0, 3.0]
    p = prune_zeros(Symbol(np.array(m)), SequenceFamily(np.array(phi)), SequenceFamily(np.array(psi)))
    np.testing.assert_array_equal(p.m.values, np.ones(d))
    np.testing.assert_array_equal(p.phi.vectors, np.eye(d))
    np.testing.assert_array_equal(p.psi.vectors, np.eye(d))
    assert p.index_map == {3 * j + 1: j for j in range(d)}


def test_prune_noop(rng):
    m = Symbol(np.ones(3))
    fam = random_family(rng, 2, 3)
    p = prune_zeros(m, fam, fam)
    assert p.m is m and p.phi is fam
    assert p.index_map == {0: 0, 1: 1, 2: 2}


def test_prune_drops_zero_symbol_entries():
    m = Symbol(np.array([1.0, 0.0, 2.0]))
    fam = onb(3)
    p = prune_zeros(m, fam, fam)
    np.testing.assert_array_equal(p.kept, [0, 2])
