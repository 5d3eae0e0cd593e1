"""Sequence families, symbols and their frame-theoretic operators.

A family is stored as an ``(N, d)`` complex array whose row ``n`` is the
vector ``phi_n``.  Infinite families are represented by a truncation; the
asymptotic class facts (Bessel, NBB, ...) travel alongside as tags.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from framemult.config import DEFAULT_TOLERANCES
from framemult.errors import CountMismatch, DimMismatch, EmptyAfterPrune, NotAFrame
from framemult.linop import LinearOp, _svd_slack, spectral_estimates

PROVENANCES = ("analytic", "numeric_truncation", "declared")


def _and(*vals):
    if any(v is False for v in vals):
        return False
    if all(v is True for v in vals):
        return True
    return None


def _not(v):
    return None if v is None else (not v)


@dataclass(frozen=True)
class ClassTags:
    """Tri-state class membership (``None`` = unknown).

    Implications are closed on construction: Riesz => frame => Bessel,
    Bessel => NBA, Riesz => NBB, and ``is_sn`` (norms semi-normalized)
    <=> NBB and NBA.
    """

    is_bessel: bool | None = None
    is_frame: bool | None = None
    is_riesz: bool | None = None
    is_nbb: bool | None = None
    is_nba: bool | None = None
    is_sn: bool | None = None
    provenance: str = "declared"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        t = dict(
            is_bessel=self.is_bessel,
            is_frame=self.is_frame,
            is_riesz=self.is_riesz,
            is_nbb=self.is_nbb,
            is_nba=self.is_nba,
            is_sn=self.is_sn,
        )
        for _ in range(3):
            _imply(t, "is_riesz", True, "is_frame", True)
            _imply(t, "is_frame", True, "is_bessel", True)
            _imply(t, "is_bessel", False, "is_frame", False)
            _imply(t, "is_frame", False, "is_riesz", False)
            _imply(t, "is_riesz", True, "is_nbb", True)
            _imply(t, "is_bessel", True, "is_nba", True)
            _imply(t, "is_nba", False, "is_bessel", False)
            _imply(t, "is_nbb", False, "is_riesz", False)
            _imply(t, "is_sn", True, "is_nbb", True)
            _imply(t, "is_sn", True, "is_nba", True)
            sn = _and(t["is_nbb"], t["is_nba"])
            if sn is not None:
                _set(t, "is_sn", sn)
            if t["is_sn"] is False and t["is_nbb"] is True:
                _set(t, "is_nba", False)
            if t["is_sn"] is False and t["is_nba"] is True:
                _set(t, "is_nbb", False)
        for k, v in t.items():
            object.__setattr__(self, k, v)

    def as_dict(self) -> dict:
        return {
            "is_bessel": self.is_bessel,
            "is_frame": self.is_frame,
            "is_riesz": self.is_riesz,
            "is_nbb": self.is_nbb,
            "is_nba": self.is_nba,
            "is_sn": self.is_sn,
            "provenance": self.provenance,
        }


def _set(t, key, value):
    if t[key] is not None and t[key] != value:
        raise ValueError(f"inconsistent class tags: {key} cannot be both {t[key]} and {value}")
    t[key] = value


def _imply(t, a, av, b, bv):
    if t[a] is av:
        _set(t, b, bv)


@dataclass(frozen=True)
class SymbolTags:
    is_sn: bool | None = None
    is_nbb: bool | None = None
    is_ell_infty: bool | None = None
    is_positive: bool | None = None
    is_negative: bool | None = None
    provenance: str = "declared"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        t = dict(is_sn=self.is_sn, is_nbb=self.is_nbb, is_ell_infty=self.is_ell_infty)
        for _ in range(2):
            _imply(t, "is_sn", True, "is_nbb", True)
            _imply(t, "is_sn", True, "is_ell_infty", True)
            sn = _and(t["is_nbb"], t["is_ell_infty"])
            if sn is not None:
                _set(t, "is_sn", sn)
            if t["is_sn"] is False and t["is_nbb"] is True:
                _set(t, "is_ell_infty", False)
            if t["is_sn"] is False and t["is_ell_infty"] is True:
                _set(t, "is_nbb", False)
        if self.is_positive and self.is_negative:
            raise ValueError("a symbol cannot be both positive and negative")
        for k, v in t.items():
            object.__setattr__(self, k, v)

    def as_dict(self) -> dict:
        return {
            "is_sn": self.is_sn,
            "is_nbb": self.is_nbb,
            "is_ell_infty": self.is_ell_infty,
            "is_positive": self.is_positive,
            "is_negative": self.is_negative,
            "provenance": self.provenance,
        }


def _frozen_array(a, ndim: int) -> np.ndarray:
    a = np.array(a, dtype=complex)
    if a.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SequenceFamily:
    """Ordered family of ``count`` vectors in ``C^dim`` (rows of ``vectors``)."""

    vectors: np.ndarray
    tags: ClassTags = field(default_factory=ClassTags)
    label: str = ""
    # (name, params) of the generator that produced this truncation, if any
    generator: tuple[str, dict] | None = None

    def __post_init__(self):
        v = _frozen_array(self.vectors, 2)
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("a family needs at least one vector of positive length")
        object.__setattr__(self, "vectors", v)

    @classmethod
    def explicit(cls, vectors, label="", tags=None) -> "SequenceFamily":
        return cls(np.asarray(vectors, dtype=complex), tags or ClassTags(), label)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    def __len__(self) -> int:
        return self.count

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)

    def synthesis_matrix(self) -> np.ndarray:
        """``d x N`` matrix with the vectors as columns."""
        return self.vectors.T

    def analysis_matrix(self) -> np.ndarray:
        """``N x d`` matrix with rows ``conj(phi_n)`` so that ``U f = (<f, phi_n>)``."""
        return self.vectors.conj()

    def with_tags(self, tags: ClassTags) -> "SequenceFamily":
        return replace(self, tags=tags)

    def scaled(self, c, label: str | None = None) -> "SequenceFamily":
        """``(c_n phi_n)`` for a scalar or a per-index sequence ``c``."""
        c = np.asarray(c, dtype=complex)
        if c.ndim == 1 and c.size != self.count:
            raise CountMismatch(f"{c.size} weights for {self.count} vectors")
        w = c.reshape(-1, 1) if c.ndim == 1 else c
        return SequenceFamily(self.vectors * w, ClassTags(), label or f"c*{self.label}")

    def __sub__(self, other: "SequenceFamily") -> "SequenceFamily":
        _check_aligned(self, other)
        return SequenceFamily(self.vectors - other.vectors, ClassTags(), f"{self.label}-{other.label}")

    def __add__(self, other: "SequenceFamily") -> "SequenceFamily":
        _check_aligned(self, other)
        return SequenceFamily(self.vectors + other.vectors, ClassTags(), f"{self.label}+{other.label}")

    def take(self, idx) -> "SequenceFamily":
        return replace(self, vectors=self.vectors[np.asarray(idx)], generator=None)


def _check_aligned(a: SequenceFamily, b: SequenceFamily):
    if a.dim != b.dim:
        raise DimMismatch(f"dimension {a.dim} vs {b.dim}")
    if a.count != b.count:
        raise CountMismatch(f"count {a.count} vs {b.count}")


@dataclass(frozen=True, eq=False)
class Symbol:
    values: np.ndarray
    tags: SymbolTags = field(default_factory=SymbolTags)
    label: str = ""
    generator: tuple[str, dict] | None = None

    def __post_init__(self):
        v = _frozen_array(self.values, 1)
        if v.size < 1:
            raise ValueError("empty symbol")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, c, count: int, label: str | None = None) -> "Symbol":
        c = complex(c)
        tags = SymbolTags(
            is_sn=c != 0,
            is_nbb=c != 0,
            is_ell_infty=True,
            is_positive=c.imag == 0 and c.real > 0,
            is_negative=c.imag == 0 and c.real < 0,
            provenance="analytic",
        )
        return cls(np.full(count, c), tags, label or f"({c.real:g})" if c.imag == 0 else f"({c})")

    def __len__(self) -> int:
        return self.values.size

    @property
    def count(self) -> int:
        return self.values.size

    def conj(self) -> "Symbol":
        return replace(self, values=self.values.conj(), label=f"conj({self.label})", generator=None)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def inf(self) -> float:
        return float(np.min(np.abs(self.values)))

    def take(self, idx) -> "Symbol":
        return replace(self, values=self.values[np.asarray(idx)], generator=None)


@dataclass(frozen=True)
class FrameBounds:
    """Brackets ``[A_lower, A_upper]`` and ``[B_lower, B_upper]`` of the optimal bounds."""

    A_lower: float
    A_upper: float
    B_lower: float
    B_upper: float

    def __post_init__(self):
        if min(self.A_lower, self.A_upper, self.B_lower, self.B_upper) < 0:
            raise ValueError("frame bounds must be nonnegative")
        if self.A_lower > self.A_upper or self.B_lower > self.B_upper or self.A_upper > self.B_upper:
            raise ValueError("inconsistent frame-bound brackets")

    @property
    def A(self) -> float:
        return 0.5 * (self.A_lower + self.A_upper)

    @property
    def B(self) -> float:
        return 0.5 * (self.B_lower + self.B_upper)

    @property
    def is_frame(self) -> bool:
        return self.A_lower > 0.0


# --------------------------------------------------------------------------
# operators


def analysis(phi: SequenceFamily) -> LinearOp:
    """``f -> (<f, phi_n>)_n`` from ``C^d`` to ``C^N``."""
    U = phi.analysis_matrix()
    T = phi.synthesis_matrix()
    return LinearOp((phi.count, phi.dim), lambda f: U @ f, f"U[{phi.label}]", lambda c: T @ c)


def synthesis(phi: SequenceFamily) -> LinearOp:
    """``c -> sum_n c_n phi_n`` from ``C^N`` to ``C^d``."""
    U = phi.analysis_matrix()
    T = phi.synthesis_matrix()
    return LinearOp((phi.dim, phi.count), lambda c: T @ c, f"T[{phi.label}]", lambda f: U @ f)


def frame_operator_matrix(phi: SequenceFamily) -> np.ndarray:
    T = phi.synthesis_matrix()
    S = T @ T.conj().T
    return 0.5 * (S + S.conj().T)


def frame_operator(phi: SequenceFamily) -> LinearOp:
    """``S f = sum_n <f, phi_n> phi_n`` (Hermitian, so ``rapply == apply``)."""
    U = phi.analysis_matrix()
    T = phi.synthesis_matrix()
    apply = lambda f: T @ (U @ f)
    return LinearOp((phi.dim, phi.dim), apply, f"S[{phi.label}]", apply)


def frame_bounds(phi: SequenceFamily, method: str = "dense_oracle") -> FrameBounds:
    """Optimal frame bounds = extreme eigenvalues of the frame operator."""
    if method == "dense_oracle":
        # eigvalsh on the explicit PSD Gram sum is cheaper and as accurate as SVD
        ev = np.linalg.eigvalsh(frame_operator_matrix(phi))
        top = max(float(ev[-1]), 0.0)
        slack = _svd_slack((phi.dim, phi.count), top) + 4 * phi.dim * np.finfo(float).eps * top
        lo = max(float(ev[0]), 0.0)
        return FrameBounds(
            max(lo - slack, 0.0), min(lo + slack, top + slack), max(top - slack, 0.0), top + slack
        )
    est = spectral_estimates(frame_operator(phi), method)
    return FrameBounds(
        est.min_sv_lower, min(est.min_sv_upper, est.op_norm_upper), est.op_norm_lower, est.op_norm_upper
    )


def bessel_bound(phi: SequenceFamily) -> float:
    """Certified upper bracket of the optimal Bessel bound."""
    return frame_bounds(phi).B_upper


def canonical_dual(phi: SequenceFamily, tol: float | None = None) -> SequenceFamily:
    """``(S^-1 phi_n)``; for a Riesz basis this is the biorthogonal system."""
    fb = frame_bounds(phi)
    tol = DEFAULT_TOLERANCES.tol_lin * max(1.0, fb.B_upper) if tol is None else tol
    if fb.A_lower <= tol:
        raise NotAFrame(f"{phi.label or 'family'} is not a frame at this truncation (A <= {tol:g})")
    S = frame_operator_matrix(phi)
    dual = np.linalg.solve(S, phi.synthesis_matrix()).T
    t = phi.tags
    tags = ClassTags(
        is_bessel=True if t.is_frame else None,
        is_frame=t.is_frame,
        is_riesz=t.is_riesz,
        provenance=t.provenance,
    )
    return SequenceFamily(dual, tags, f"dual({phi.label})")


class DualCheck(NamedTuple):
    is_dual: bool
    residual: float


def is_dual_pair(phi: SequenceFamily, phi_d: SequenceFamily, tol: float | None = None) -> DualCheck:
    """``|T_phi U_phid - I| <= tol`` (spectral norm)."""
    _check_aligned(phi, phi_d)
    tol = DEFAULT_TOLERANCES.dual_tol(phi.dim) if tol is None else tol
    R = phi.synthesis_matrix() @ phi_d.analysis_matrix() - np.eye(phi.dim)
    res = float(np.linalg.norm(R, 2))
    return DualCheck(res <= tol, res)


class RieszMargin(NamedTuple):
    is_riesz_certified: bool
    min_sv: float
    max_sv: float


def riesz_margin(phi: SequenceFamily, tol: float | None = None) -> RieszMargin:
    """Riesz test at a truncation: square and invertible synthesis matrix.

    ``min_sv`` is the smallest singular value of the synthesis map on
    ``C^N``, hence 0 for an overcomplete family.
    """
    tol = DEFAULT_TOLERANCES.tol_lin if tol is None else tol
    s = np.linalg.svd(phi.synthesis_matrix(), compute_uv=False)
    smax = float(s[0])
    smin = float(s[-1]) if phi.count <= phi.dim else 0.0
    ok = phi.count == phi.dim and smin > tol
    return RieszMargin(ok, smin, smax)


def _weighted_tags(m: Symbol, phi: SequenceFamily) -> ClassTags:
    mt, pt = m.tags, phi.tags
    prov = "analytic" if (mt.provenance == "analytic" and pt.provenance == "analytic") else "declared"
    if mt.is_sn:
        # a semi-normalized weight preserves every class
        return replace(pt, provenance=prov)
    bessel = True if (mt.is_ell_infty and pt.is_bessel) else None
    nba = True if (mt.is_ell_infty and pt.is_nba) else None
    nbb = True if (mt.is_nbb and pt.is_nbb) else None
    riesz = None
    if classify_weighted_riesz(m, phi) is WeightedRieszCase.impossible:
        riesz = False
    try:
        return ClassTags(is_bessel=bessel, is_nba=nba, is_nbb=nbb, is_riesz=riesz, provenance=prov)
    except ValueError:
        return ClassTags(provenance=prov)


def weighted(m: Symbol, phi: SequenceFamily) -> SequenceFamily:
    """``(m_n phi_n)`` with class tags propagated where they are decidable."""
    if m.count != phi.count:
        raise CountMismatch(f"symbol has {m.count} entries, family has {phi.count}")
    v = phi.vectors * m.values.reshape(-1, 1)
    return SequenceFamily(v, _weighted_tags(m, phi), f"{m.label}*{phi.label}")


class WeightedRieszCase(str, Enum):
    case_riesz_sn = "case_riesz_sn"
    case_nonnbb_bessel = "case_nonnbb_bessel"
    case_nonnba_nonbessel = "case_nonnba_nonbessel"
    impossible = "impossible"
    unknown = "unknown"


def classify_weighted_riesz(m: Symbol, phi: SequenceFamily) -> WeightedRieszCase:
    """Which of the three admissible configurations for ``m*phi`` Riesz applies.

    Uses only tags.  ``impossible`` means the tags rule out all three, so
    ``m*phi`` cannot be a Riesz basis.
    """
    mt, pt = m.tags, phi.tags
    nonzero = bool(np.all(m.values != 0))
    cases = [
        (WeightedRieszCase.case_riesz_sn, _and(pt.is_riesz, mt.is_sn)),
        (
            WeightedRieszCase.case_nonnbb_bessel,
            _and(_not(pt.is_nbb), pt.is_bessel, _not(pt.is_frame), mt.is_nbb, _not(mt.is_ell_infty)),
        ),
        (
            WeightedRieszCase.case_nonnba_nonbessel,
            _and(_not(pt.is_nba), _not(pt.is_bessel), _not(mt.is_nbb), nonzero),
        ),
    ]
    for case, verdict in cases:
        if verdict is True:
            return case
    if all(v is False for _, v in cases):
        return WeightedRieszCase.impossible
    return WeightedRieszCase.unknown


@dataclass(frozen=True, eq=False)
class Pruned:
    m: Symbol
    phi: SequenceFamily
    psi: SequenceFamily
    kept: np.ndarray

    @property
    def index_map(self) -> dict[int, int]:
        """Original index -> index in the pruned triple."""
        return {int(o): i for i, o in enumerate(self.kept)}


def prune_zeros(m: Symbol, phi: SequenceFamily, psi: SequenceFamily) -> Pruned:
    """Drop indices where ``m_n``, ``phi_n`` or ``psi_n`` is exactly zero."""
    if not (m.count == phi.count == psi.count):
        raise CountMismatch(f"counts {m.count}, {phi.count}, {psi.count}")
    keep = (m.values != 0) & np.any(phi.vectors != 0, axis=1) & np.any(psi.vectors != 0, axis=1)
    kept = np.flatnonzero(keep)
    if kept.size == 0:
        raise EmptyAfterPrune("every index has a zero symbol or vector: the multiplier is 0")
    if kept.size == m.count:
        return Pruned(m, phi, psi, kept)
    return Pruned(m.take(kept), phi.take(kept), psi.take(kept), kept)
