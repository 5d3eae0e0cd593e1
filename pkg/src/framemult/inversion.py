"""Invertibility certificates for multipliers and the inverses they produce.

Each ``invert_*`` function checks one sufficient condition.  It either
returns an ``InvertCertificate`` (constants, two-sided bounds on the
singular values of the inverse, a lazily evaluated inverse and its
verified residual) or raises a ``RuleRefused`` subclass carrying the
constants that missed.  A refusal never means the multiplier is singular;
only the Riesz rule has a converse.

Conventions: ``target="phi_psi"`` and ``"psi_phi"`` select which of the two
multipliers covered by a rule is inverted.  Hints use the key names of
``framemult.multiplier.HINT_KEYS`` with ``phi`` meaning the family that plays
the role of the frame in the rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from framemult.config import DEFAULT_TOLERANCES, Tolerances, oracle_dim_cap
from framemult.errors import (
    CountMismatch,
    EmptyAfterPrune,
    LambdaTooLarge,
    MuTooLarge,
    NoConvergence,
    NotDual,
    NotEquivalent,
    NotRieszWeighted,
    PerturbationTooLarge,
    PreconditionFailed,
    RuleRefused,
    SymbolNotSigned,
    SymbolRatioTooLarge,
    TooManyTerms,
    VerificationFailed,
)
from framemult.frames import (
    ClassTags,
    FrameBounds,
    SequenceFamily,
    Symbol,
    SymbolTags,
    frame_bounds,
    frame_operator_matrix,
    is_dual_pair,
    bessel_bound,
    riesz_margin,
    weighted,
)
from framemult.linop import LinearOp, NeumannResult, dense_of, from_matrix, identity, neumann_invert
from framemult.multiplier import MultiplierSpec, _swap_hints, build, pruned

TARGETS = ("phi_psi", "psi_phi")


class Rule(str, Enum):
    riesz_closed_form = "riesz_closed_form"
    gphi = "gphi"
    p1 = "p1"
    cp1 = "cp1"
    p3 = "p3"
    mpos = "mpos"
    p4 = "p4"
    none_fired = "none_fired"


RULE_ALIASES = {"riesz": Rule.riesz_closed_form, "p1-dual": Rule.p1}
DEFAULT_ORDER = (Rule.riesz_closed_form, Rule.gphi, Rule.p1, Rule.cp1, Rule.p3, Rule.mpos, Rule.p4)


def parse_rule(name) -> Rule:
    if isinstance(name, Rule):
        return name
    key = str(name).strip()
    if key in RULE_ALIASES:
        return RULE_ALIASES[key]
    try:
        return Rule(key)
    except ValueError:
        raise ValueError(f"unknown rule {name!r}; choose from {[r.value for r in DEFAULT_ORDER]}") from None


@dataclass(frozen=True, eq=False)
class InvertCertificate:
    """Outcome of a rule (or of the dispatcher when nothing fired)."""

    rule: Rule
    target: str | None = None
    constants: dict = field(default_factory=dict)
    sandwich_lower: float | None = None
    sandwich_upper: float | None = None
    inverse: LinearOp | None = None
    multiplier: LinearOp | None = None
    terms_used: int | None = None
    verified_residual: float | None = None
    neumann: NeumannResult | None = None
    nearest_misses: dict = field(default_factory=dict)
    obstruction: str | None = None
    advisory_min_sv: float | None = None
    consequences: dict = field(default_factory=dict)

    @property
    def fired(self) -> bool:
        return self.rule is not Rule.none_fired

    def to_json(self) -> dict:
        return {
            "rule": self.rule.value,
            "target": self.target,
            "constants": _jsonable(self.constants),
            "sandwich": None if self.sandwich_lower is None else [self.sandwich_lower, self.sandwich_upper],
            "terms_used": self.terms_used,
            "residual": self.verified_residual,
            "nearest_misses": _jsonable(self.nearest_misses),
            "obstruction": self.obstruction,
            "advisory_min_sv": self.advisory_min_sv,
            "consequences": _jsonable(self.consequences),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None if np.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, Enum):
        return x.value
    return x


# --------------------------------------------------------------------------
# shared pieces


def _worst_upper(measured: float, hints: dict | None, key: str) -> float:
    h = (hints or {}).get(key)
    return float(measured) if h is None else max(float(measured), float(h))


def _worst_lower(measured: float, hints: dict | None, key: str) -> float:
    h = (hints or {}).get(key)
    return float(measured) if h is None else min(float(measured), float(h))


def _frame_consts(phi: SequenceFamily, hints: dict | None, tols: Tolerances) -> tuple[float, float, FrameBounds]:
    """Certified ``(A, B)`` for the family in the frame role, or refuse."""
    if phi.tags.is_frame is False or (hints or {}).get("phi_is_frame") is False:
        raise PreconditionFailed(f"{phi.label or 'phi'} is tagged as not a frame", {"phi_is_frame": False})
    fb = frame_bounds(phi)
    A = _worst_lower(fb.A_lower, hints, "A_phi")
    B = _worst_upper(fb.B_upper, hints, "B_phi")
    if not A > tols.tol_lin * max(1.0, B):
        raise PreconditionFailed(
            f"{phi.label or 'phi'} is not a frame at this truncation", {"A_phi": A, "B_phi": B}
        )
    return A, B, fb


def _symbol_sign(m: Symbol, hints: dict | None, tols: Tolerances) -> tuple[int, float, float]:
    """``(sign, a, b)`` for a one-signed semi-normalized symbol, else refuse."""
    v = m.values
    scale = max(float(np.max(np.abs(v))), 1e-300)
    if m.tags.is_sn is False:
        raise SymbolNotSigned(f"symbol {m.label!r} is not semi-normalized", {"is_sn": False})
    if m.tags.is_positive is False and m.tags.is_negative is False:
        raise SymbolNotSigned(f"symbol {m.label!r} is tagged neither positive nor negative")
    if np.max(np.abs(v.imag)) > tols.tol_sign * scale:
        raise SymbolNotSigned(f"symbol {m.label!r} is not real", {"max_imag": float(np.max(np.abs(v.imag)))})
    re = v.real
    if np.all(re > 0):
        sign = 1
    elif np.all(re < 0):
        sign = -1
    else:
        raise SymbolNotSigned(
            f"symbol {m.label!r} mixes signs",
            {"n_positive": int(np.sum(re > 0)), "n_negative": int(np.sum(re < 0)), "n_zero": int(np.sum(re == 0))},
        )
    if (sign > 0 and m.tags.is_positive is False) or (sign < 0 and m.tags.is_negative is False):
        raise SymbolNotSigned(f"symbol {m.label!r} is tagged as changing sign")
    a = _worst_lower(float(np.min(np.abs(re))), hints, "a")
    b = _worst_upper(float(np.max(np.abs(re))), hints, "b")
    if not a > 0:
        raise SymbolNotSigned(f"symbol {m.label!r} is not bounded below", {"a": a, "b": b})
    return sign, a, b


def _family_op_norm2(vectors: np.ndarray) -> float:
    """Certified upper Bessel bound of the family given by the rows."""
    return bessel_bound(SequenceFamily(vectors)) if np.any(vectors) else 0.0


def _hermitian_inverse(S: np.ndarray, label: str) -> LinearOp:
    Sinv = np.linalg.inv(S)
    Sinv = 0.5 * (Sinv + Sinv.conj().T)
    return from_matrix(Sinv, label)


def _mult_matrix(m: np.ndarray, syn: np.ndarray, ana: np.ndarray) -> np.ndarray:
    return (syn.T * m) @ ana.conj()


def _mult_op(m: np.ndarray, syn: np.ndarray, ana: np.ndarray, label: str) -> LinearOp:
    spec = MultiplierSpec(
        Symbol(m), SequenceFamily(syn), SequenceFamily(ana), label=label
    )
    return build(spec)


def _residual(M: LinearOp, X: LinearOp, tols: Tolerances, oracle: bool, rng=None) -> float:
    d = M.shape[0]
    if oracle and d <= oracle_dim_cap():
        Md, Xd = dense_of(M), dense_of(X)
        I = np.eye(d)
        return float(max(np.linalg.norm(Md @ Xd - I, 2), np.linalg.norm(Xd @ Md - I, 2)))
    rng = np.random.default_rng(0) if rng is None else rng
    V = rng.standard_normal((d, 8)) + 1j * rng.standard_normal((d, 8))
    V /= np.linalg.norm(V, axis=0)
    r1 = np.linalg.norm(M(X(V)) - V, axis=0).max()
    r2 = np.linalg.norm(X(M(V)) - V, axis=0).max()
    return float(max(r1, r2))


def _finish(
    rule: Rule,
    target: str,
    M: LinearOp,
    X: LinearOp,
    constants: dict,
    lower: float,
    upper: float,
    tols: Tolerances,
    oracle: bool,
    terms: int | None = None,
    neumann: NeumannResult | None = None,
    consequences: dict | None = None,
) -> InvertCertificate:
    res = _residual(M, X, tols, oracle)
    if not res <= tols.tol_inv:
        raise VerificationFailed(
            f"{rule.value}: inverse residual {res:.3g} exceeds {tols.tol_inv:g}",
            dict(constants, residual=res),
        )
    return InvertCertificate(
        rule=rule,
        target=target,
        constants=constants,
        sandwich_lower=float(lower),
        sandwich_upper=float(upper),
        inverse=X,
        multiplier=M,
        terms_used=terms,
        verified_residual=res,
        neumann=neumann,
        consequences=consequences or {},
    )


def _check_target(target: str):
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}, got {target!r}")


def _check_counts(m: Symbol, *families):
    for f in families:
        if f is not None and f.count != m.count:
            raise CountMismatch(f"symbol has {m.count} entries, {f.label or 'family'} has {f.count} vectors")


# --------------------------------------------------------------------------
# equivalent frames: psi_n = G phi_n


def invert_equivalent_frames(
    phi: SequenceFamily,
    G,
    m: Symbol,
    target: str = "phi_psi",
    hints: dict | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    oracle: bool = True,
) -> InvertCertificate:
    """Closed-form inverse when ``psi = (G phi_n)`` with ``G`` bijective.

    ``phi_psi`` inverts ``M[m, phi, G phi] = +-S_w G*`` and ``psi_phi``
    inverts ``M[m, G phi, phi] = +-G S_w`` where ``w = (sqrt|m_n| phi_n)``.
    """
    _check_target(target)
    _check_counts(m, phi)
    tols = tolerances
    hints = hints or {}
    A, B, _ = _frame_consts(phi, hints, tols)
    Gd = dense_of(G) if isinstance(G, LinearOp) else np.asarray(G, dtype=complex)
    if Gd.shape != (phi.dim, phi.dim):
        raise NotEquivalent(f"G has shape {Gd.shape}, expected {(phi.dim, phi.dim)}")
    if hints.get("psi_is_frame") is False:
        raise NotEquivalent("the partner family is not a frame, so no bounded bijection maps phi onto it")
    s = np.linalg.svd(Gd, compute_uv=False)
    if not s[-1] > tols.tol_lin * max(1.0, s[0]):
        raise NotEquivalent("G is not invertible", {"G_min_sv": float(s[-1]), "G_norm": float(s[0])})
    sign, a, b = _symbol_sign(m, hints, tols)
    w = phi.vectors * np.sqrt(np.abs(m.values.real))[:, None]
    Sw = frame_operator_matrix(SequenceFamily(w))
    Sw_inv = np.linalg.inv(Sw)
    G_inv = np.linalg.inv(Gd)
    psi_vec = phi.vectors @ Gd.T
    if target == "phi_psi":
        M = _mult_op(m.values, phi.vectors, psi_vec, "M[m,phi,G phi]")
        X = sign * (G_inv.conj().T @ Sw_inv)
    else:
        M = _mult_op(m.values, psi_vec, phi.vectors, "M[m,G phi,phi]")
        X = sign * (Sw_inv @ G_inv)
    g_norm, g_inv_norm = float(s[0]), float(1.0 / s[-1])
    constants = {
        "a": a,
        "b": b,
        "A_phi": A,
        "B_phi": B,
        "G_norm": g_norm,
        "G_inv_norm": g_inv_norm,
        "sign": sign,
    }
    lower = 1.0 / (b * B * g_norm)
    upper = g_inv_norm / (a * A)
    return _finish(
        Rule.gphi, target, M, from_matrix(X, "gphi inverse"), constants, lower, upper, tols, oracle,
        terms=0, consequences={"psi_is_frame": True},
    )


# --------------------------------------------------------------------------
# symbol close to 1 with a dual pair


def invert_dual_perturbed_symbol(
    phi: SequenceFamily,
    phi_d: SequenceFamily,
    m: Symbol,
    tol: float = 1e-10,
    target: str = "phi_psi",
    hints: dict | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    oracle: bool = True,
) -> InvertCertificate:
    """Neumann inverse of ``M[m, phi, phi_d]`` (or ``M[m, phi_d, phi]``) around ``I``."""
    _check_target(target)
    _check_counts(m, phi, phi_d)
    tols = tolerances
    ok, res = is_dual_pair(phi, phi_d, tols.dual_tol(phi.dim))
    if not ok:
        raise NotDual(f"{phi_d.label or 'phi_d'} is not a dual of {phi.label or 'phi'}", {"dual_residual": res})
    lam = _worst_upper(float(np.max(np.abs(m.values - 1.0))), hints, "lambda")
    B_phi = _worst_upper(bessel_bound(phi), hints, "B_phi")
    B_d = _worst_upper(bessel_bound(phi_d), hints, "B_phid")
    threshold = 1.0 / np.sqrt(B_phi * B_d)
    constants = {"lambda": lam, "threshold": float(threshold), "B_phi": B_phi, "B_phid": B_d}
    if not lam < threshold:
        raise LambdaTooLarge(f"lambda = {lam:.6g} is not below 1/sqrt(B_phi B_phid) = {threshold:.6g}", constants)
    return _identity_centred(Rule.p1, target, phi, phi_d, m, lam * np.sqrt(B_phi * B_d), constants, tol, tols, oracle)


def _identity_centred(rule, target, phi, phi_d, m, nu, constants, tol, tols, oracle):
    if target == "phi_psi":
        M = _mult_op(m.values, phi.vectors, phi_d.vectors, "M[m,phi,phi_d]")
    else:
        M = _mult_op(m.values, phi_d.vectors, phi.vectors, "M[m,phi_d,phi]")
    I = identity(phi.dim)
    nr = neumann_invert(I, I, M, nu=nu, tol=tol, f_inv_norm=1.0, f_norm=1.0)
    constants = dict(constants, nu=float(nu), q=nr.contraction_q)
    return _finish(
        rule, target, M, nr.inverse, constants, 1.0 / (1.0 + nu), 1.0 / (1.0 - nu), tols, oracle,
        terms=nr.terms_used, neumann=nr,
    )


def canonical_dual_vectors(phi: SequenceFamily) -> np.ndarray:
    return np.linalg.solve(frame_operator_matrix(phi), phi.vectors.T).T


def invert_canonical_dual_symbol(
    phi: SequenceFamily,
    m: Symbol,
    tol: float = 1e-10,
    target: str = "phi_psi",
    hints: dict | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    oracle: bool = True,
) -> InvertCertificate:
    """Neumann inverse of ``M[m, phi, dual(phi)]`` when ``sup|m_n - 1| < sqrt(A/B)``."""
    _check_target(target)
    _check_counts(m, phi)
    tols = tolerances
    A, B, _ = _frame_consts(phi, hints, tols)
    lam = _worst_upper(float(np.max(np.abs(m.values - 1.0))), hints, "lambda")
    threshold = float(np.sqrt(A / B))
    constants = {"lambda": lam, "threshold": threshold, "A_phi": A, "B_phi": B, "B_phid": 1.0 / A}
    if not lam < threshold:
        raise LambdaTooLarge(f"lambda = {lam:.6g} is not below sqrt(A/B) = {threshold:.6g}", constants)
    dual = SequenceFamily(canonical_dual_vectors(phi), ClassTags(), f"dual({phi.label})")
    return _identity_centred(Rule.cp1, target, phi, dual, m, lam * np.sqrt(B / A), constants, tol, tols, oracle)


# --------------------------------------------------------------------------
# frame-operator centred rules


def invert_frame_perturbed(
    phi: SequenceFamily,
    psi: SequenceFamily,
    m: Symbol,
    tol: float = 1e-10,
    target: str = "phi_psi",
    hints: dict | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    oracle: bool = True,
) -> InvertCertificate:
    """``psi`` close to the frame ``phi`` and a one-signed semi-normalized ``m``.

    Centre ``F = S_w`` with ``w = (sqrt|m_n| phi_n)``; ``|+-M - F| <= b sqrt(B B_{psi-phi})``.
    """
    _check_target(target)
    _check_counts(m, phi, psi)
    tols = tolerances
    hints = hints or {}
    if phi.count != psi.count or phi.dim != psi.dim:
        raise PreconditionFailed("phi and psi must have the same shape")
    A, B, _ = _frame_consts(phi, hints, tols)
    sign, a, b = _symbol_sign(m, hints, tols)
    Bpp = _worst_upper(_family_op_norm2(psi.vectors - phi.vectors), hints, "B_psi_minus_phi")
    constants = {
        "A_phi": A,
        "B_phi": B,
        "B_psi_minus_phi": Bpp,
        "perturbation_threshold": A * A / B,
        "a": a,
        "b": b,
        "sign": sign,
    }
    if not Bpp < A * A / B:
        raise PerturbationTooLarge(
            f"B_(psi-phi) = {Bpp:.6g} is not below A^2/B = {A * A / B:.6g}", constants
        )
    ratio_threshold = float(A / np.sqrt(Bpp * B)) if Bpp > 0 else float("inf")
    constants["ratio"] = b / a
    constants["ratio_threshold"] = ratio_threshold
    if not b / a < ratio_threshold:
        raise SymbolRatioTooLarge(f"b/a = {b / a:.6g} is not below {ratio_threshold:.6g}", constants)
    nu = b * np.sqrt(B * Bpp)
    w = phi.vectors * np.sqrt(np.abs(m.values.real))[:, None]
    Sw = frame_operator_matrix(SequenceFamily(w))
    F = from_matrix(Sw, "S_w")
    F_inv = _hermitian_inverse(Sw, "S_w^-1")
    if target == "phi_psi":
        M = _mult_op(m.values, phi.vectors, psi.vectors, "M[m,phi,psi]")
    else:
        M = _mult_op(m.values, psi.vectors, phi.vectors, "M[m,psi,phi]")
    G = M if sign > 0 else -M
    nr = neumann_invert(F, F_inv, G, nu=nu, tol=tol, f_inv_norm=1.0 / (a * A), f_norm=b * B)
    X = nr.inverse if sign > 0 else -nr.inverse
    constants.update(nu=float(nu), q=nr.contraction_q)
    lower = 1.0 / (b * B + nu)
    upper = 1.0 / (a * A - nu)
    return _finish(
        Rule.mpos, target, M, X, constants, lower, upper, tols, oracle,
        terms=nr.terms_used, neumann=nr, consequences={"psi_is_frame": True},
    )


def invert_p1(
    phi: SequenceFamily,
    psi: SequenceFamily,
    m: Symbol,
    tol: float = 1e-10,
    target: str = "phi_psi",
    hints: dict | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    oracle: bool = True,
) -> InvertCertificate:
    """``m psi`` close to the frame ``phi``: ``B(m psi - phi) = mu < A^2/B``.

    ``phi_psi`` inverts ``M[conj(m), phi, psi]``, ``psi_phi`` inverts
    ``M[m, psi, phi]``; both sit within ``sqrt(mu B)`` of ``S_phi``.
    """
    _check_target(target)
    _check_counts(m, phi, psi)
    tols = tolerances
    hints = hints or {}
    A, B, _ = _frame_consts(phi, hints, tols)
    mpsi = psi.vectors * m.values[:, None]
    mu = _worst_upper(_family_op_norm2(mpsi - phi.vectors), hints, "B_mpsi_minus_phi")
    threshold = A * A / B
    constants = {"mu": mu, "threshold": threshold, "A_phi": A, "B_phi": B}
    if not mu < threshold:
        raise MuTooLarge(f"mu = {mu:.6g} is not below A^2/B = {threshold:.6g}", constants)
    nu = float(np.sqrt(mu * B))
    S = frame_operator_matrix(phi)
    F, F_inv = from_matrix(S, "S_phi"), _hermitian_inverse(S, "S_phi^-1")
    if target == "phi_psi":
        M = _mult_op(m.values.conj(), phi.vectors, psi.vectors, "M[conj m,phi,psi]")
    else:
        M = _mult_op(m.values, psi.vectors, phi.vectors, "M[m,psi,phi]")
    nr = neumann_invert(F, F_inv, M, nu=nu, tol=tol, f_inv_norm=1.0 / A, f_norm=B)
    constants.update(nu=nu, q=nr.contraction_q)
    sn = m.tags.is_sn is not False and m.inf() > 0
    cons = {"mpsi_is_frame": True}
    if sn:
        cons["psi_is_frame"] = True
    return _finish(
        Rule.p4, target, M, nr.inverse, constants, 1.0 / (B + nu), 1.0 / (A - nu), tols, oracle,
        terms=nr.terms_used, neumann=nr, consequences=cons,
    )


def optimal_dual(phi: SequenceFamily, target_vectors: np.ndarray) -> tuple[SequenceFamily, float]:
    """Dual of ``phi`` closest to the rows ``target_vectors`` in Bessel bound.

    Duals are the analysis matrices ``X`` with ``T_phi X = I``; they read
    ``X = T^+ + (I - P) Z`` with ``P`` the projector onto the range of
    ``T^*``.  The residual ``W - X`` (``W`` the target's analysis matrix)
    splits orthogonally into ``P (W - T^+)`` and a free part, so choosing the
    free part to cancel gives the least spectral norm ``|T^+ (T W - I)|``.
    Returns the dual family and that least Bessel bound.
    """
    T = phi.synthesis_matrix()
    Tp = np.linalg.pinv(T)
    W = np.asarray(target_vectors, dtype=complex).conj()
    R = Tp @ (T @ W - np.eye(phi.dim))
    X = W - R
    mu = _family_op_norm2(R.conj())
    return SequenceFamily(X.conj(), ClassTags(), f"optdual({phi.label})"), mu


def invert_p3(
    phi: SequenceFamily,
    phi_d: SequenceFamily | None,
    psi: SequenceFamily,
    m: Symbol,
    tol: float = 1e-10,
    target: str = "phi_psi",
    hints: dict | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    oracle: bool = True,
) -> InvertCertificate:
    """``m psi`` close to a dual of ``phi``: ``B(m psi - phi_d) = mu < 1/B``.

    With ``phi_d=None`` the dual minimizing ``mu`` is used.  The inverse is
    ``sum_k (I - M)^k`` for ``M[conj(m), phi, psi]`` (``phi_psi``) or
    ``M[m, psi, phi]`` (``psi_phi``).
    """
    _check_target(target)
    _check_counts(m, phi, phi_d, psi)
    tols = tolerances
    hints = hints or {}
    A, B, _ = _frame_consts(phi, hints, tols)
    mpsi = psi.vectors * m.values[:, None]
    if phi_d is None:
        phi_d, mu_num = optimal_dual(phi, mpsi)
        which = "optimal"
    else:
        ok, res = is_dual_pair(phi, phi_d, tols.dual_tol(phi.dim))
        if not ok:
            raise NotDual(f"{phi_d.label or 'phi_d'} is not a dual of {phi.label or 'phi'}", {"dual_residual": res})
        mu_num = _family_op_norm2(mpsi - phi_d.vectors)
        which = "given"
    mu = _worst_upper(mu_num, hints, "mu_p3")
    threshold = 1.0 / B
    constants = {"mu": mu, "threshold": threshold, "B_phi": B, "dual": which}
    if not mu < threshold:
        raise MuTooLarge(f"mu = {mu:.6g} is not below 1/B = {threshold:.6g}", constants)
    nu = float(np.sqrt(mu * B))
    if target == "phi_psi":
        M = _mult_op(m.values.conj(), phi.vectors, psi.vectors, "M[conj m,phi,psi]")
    else:
        M = _mult_op(m.values, psi.vectors, phi.vectors, "M[m,psi,phi]")
    I = identity(phi.dim)
    nr = neumann_invert(I, I, M, nu=nu, tol=tol, f_inv_norm=1.0, f_norm=1.0)
    constants.update(nu=nu, q=nr.contraction_q)
    cons = {"mpsi_is_frame": True}
    if m.tags.is_sn is not False and m.inf() > 0:
        cons["psi_is_frame"] = True
    return _finish(
        Rule.p3, target, M, nr.inverse, constants, 1.0 / (1.0 + nu), 1.0 / (1.0 - nu), tols, oracle,
        terms=nr.terms_used, neumann=nr, consequences=cons,
    )


# --------------------------------------------------------------------------
# Riesz side


def biorthogonal_vectors(vectors: np.ndarray) -> np.ndarray:
    """Rows ``g_n`` with ``<g_n, f_k> = delta_nk`` for a square invertible family."""
    V = np.asarray(vectors, dtype=complex)
    return np.linalg.inv(V.conj()).T


def invert_riesz(
    phi: SequenceFamily,
    psi: SequenceFamily,
    m: Symbol,
    target: str = "phi_psi",
    hints: dict | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    oracle: bool = True,
) -> InvertCertificate:
    """Exact inverse when ``phi`` is a Riesz basis; invertible iff ``m psi`` is one too.

    ``phi_psi``: ``M[m, phi, psi]^-1 = M[(1), dual(conj(m) psi), dual(phi)]``.
    ``psi_phi``: ``M[m, psi, phi]^-1 = M[(1), dual(phi), dual(m psi)]``.
    Raises ``NotRieszWeighted`` when the weighted family is not a Riesz
    basis; with ``phi`` Riesz that is a certificate of non-invertibility.
    """
    _check_target(target)
    _check_counts(m, phi, psi)
    tols = tolerances
    hints = hints or {}
    if phi.tags.is_riesz is False:
        raise PreconditionFailed(f"{phi.label or 'phi'} is tagged as not a Riesz basis")
    rm = riesz_margin(phi, tols.tol_lin)
    if not rm.is_riesz_certified:
        raise PreconditionFailed(
            f"{phi.label or 'phi'} is not a Riesz basis at this truncation",
            {"phi_min_sv": rm.min_sv, "phi_count": phi.count, "dim": phi.dim},
        )
    sym = m.conj() if target == "phi_psi" else m
    w = weighted(sym, psi)
    wm = riesz_margin(w, tols.tol_lin)
    constants = {
        "phi_min_sv": rm.min_sv,
        "phi_max_sv": rm.max_sv,
        "w_min_sv": wm.min_sv,
        "w_max_sv": wm.max_sv,
    }
    if w.tags.is_riesz is False or hints.get("mpsi_is_riesz") is False:
        raise NotRieszWeighted(
            "the weighted family cannot be a Riesz basis (class tags), so the multiplier is not invertible",
            constants,
            analytic=True,
        )
    if not wm.is_riesz_certified:
        raise NotRieszWeighted(
            f"the weighted family is not a Riesz basis at this truncation (min_sv = {wm.min_sv:.3g})",
            constants,
        )
    phi_dual = biorthogonal_vectors(phi.vectors)
    w_dual = biorthogonal_vectors(w.vectors)
    one = np.ones(phi.count, dtype=complex)
    if target == "phi_psi":
        M = _mult_op(m.values, phi.vectors, psi.vectors, "M[m,phi,psi]")
        X = _mult_op(one, w_dual, phi_dual, "M[1,dual(conj(m) psi),dual(phi)]")
    else:
        M = _mult_op(m.values, psi.vectors, phi.vectors, "M[m,psi,phi]")
        X = _mult_op(one, phi_dual, w_dual, "M[1,dual(phi),dual(m psi)]")
    lower = 1.0 / (rm.max_sv * wm.max_sv)
    upper = 1.0 / (rm.min_sv * wm.min_sv)
    return _finish(
        Rule.riesz_closed_form, target, M, X, constants, lower, upper, tols, oracle,
        terms=0, consequences={"mpsi_is_riesz": True},
    )


# --------------------------------------------------------------------------
# necessary conditions and the Riesz case table


class LowerFrameCheck(NamedTuple):
    holds: bool
    bound: float
    A_lower: float
    B_psi: float
    M_inv_norm: float


def necessary_lower_frame(
    spec: MultiplierSpec, M_inv_norm: float | None = None, tol: float = 1e-8
) -> LowerFrameCheck:
    """An invertible ``M[m, phi, psi]`` with ``psi`` Bessel forces ``m phi`` to
    satisfy the lower frame inequality with bound ``1 / (B_psi |M^-1|^2)``.
    """
    if M_inv_norm is None:
        s = np.linalg.svd(spec.matrix(), compute_uv=False)
        if not s[-1] > 0:
            return LowerFrameCheck(True, 0.0, 0.0, bessel_bound(spec.psi), float("inf"))
        M_inv_norm = 1.0 / s[-1]
    B_psi = bessel_bound(spec.psi)
    bound = 1.0 / (B_psi * M_inv_norm**2)
    A = frame_bounds(SequenceFamily(spec.phi.vectors * spec.m.values[:, None])).A_lower
    return LowerFrameCheck(bool(A >= bound - tol), float(bound), float(A), float(B_psi), float(M_inv_norm))


class RieszVerdict(str, Enum):
    not_well_defined = "not_well_defined"
    well_defined_never_invertible = "well_defined_never_invertible"
    never_invertible = "never_invertible"
    invertible_iff_mpsi_riesz = "invertible_iff_mpsi_riesz"
    all_combinations_possible = "all_combinations_possible"
    unknown = "unknown"


class RieszCase(NamedTuple):
    verdict: RieszVerdict
    case: str | None


NEVER_INVERTIBLE = (
    RieszVerdict.not_well_defined,
    RieszVerdict.well_defined_never_invertible,
    RieszVerdict.never_invertible,
)


def riesz_case_table(phi_tags: ClassTags, psi_tags: ClassTags, m_tags: SymbolTags) -> RieszCase:
    """Verdict for ``M[m, phi, psi]`` and ``M[m, psi, phi]`` when ``phi`` is a Riesz basis.

    Pure lookup over the class tags; any undecided tag that matters gives
    ``unknown``.  ``never_invertible`` covers the cases that may or may not
    be well defined but are never invertible.
    """
    if phi_tags.is_riesz is not True:
        return RieszCase(RieszVerdict.unknown, None)
    sn, nbb, linf = m_tags.is_sn, m_tags.is_nbb, m_tags.is_ell_infty
    pb, pf, pnbb, pnba = psi_tags.is_bessel, psi_tags.is_frame, psi_tags.is_nbb, psi_tags.is_nba
    V = RieszVerdict
    if sn is True:
        if pb is False:
            return RieszCase(V.not_well_defined, "a1")
        if pb is True:
            return RieszCase(V.invertible_iff_mpsi_riesz, "a2")
        return RieszCase(V.unknown, "a")
    if nbb is False and linf is True:
        if pb is True:
            return RieszCase(V.well_defined_never_invertible, "b4")
        if pb is False:
            if pnba is True:
                return RieszCase(V.never_invertible, "b1")
            if pnba is False and pnbb is False:
                return RieszCase(V.never_invertible, "b2")
            if pnba is False and pnbb is True:
                return RieszCase(V.all_combinations_possible, "b3")
        return RieszCase(V.unknown, "b")
    if nbb is True and linf is False:
        if pb is False or pnbb is True:
            return RieszCase(V.not_well_defined, "c1")
        if pnbb is False and pb is True:
            if pf is False:
                return RieszCase(V.all_combinations_possible, "c2")
            if pf is True:
                return RieszCase(V.never_invertible, "c3")
        return RieszCase(V.unknown, "c")
    if nbb is False and linf is False:
        if pnbb is True:
            return RieszCase(V.not_well_defined, "d1")
        if pnbb is False:
            if pnba is False:
                return RieszCase(V.all_combinations_possible, "d2")
            if pnba is True:
                return RieszCase(V.never_invertible, "d3")
        return RieszCase(V.unknown, "d")
    return RieszCase(V.unknown, None)


# --------------------------------------------------------------------------
# dispatcher


def _orient(spec: MultiplierSpec, target: str):
    """Families in rule roles: ``(phi, psi, hints)`` with ``phi`` the frame side."""
    if target == "phi_psi":
        return spec.phi, spec.psi, dict(spec.hints)
    return spec.psi, spec.phi, _swap_hints(spec.hints)


def _equivalence_map(phi: SequenceFamily, psi: SequenceFamily, tols: Tolerances) -> np.ndarray:
    """``G`` with ``psi_n = G phi_n`` for all ``n``, or refuse."""
    if phi.count != psi.count:
        raise NotEquivalent("families have different counts")
    Gt, *_ = np.linalg.lstsq(phi.vectors, psi.vectors, rcond=None)
    resid = float(np.linalg.norm(phi.vectors @ Gt - psi.vectors))
    scale = max(1.0, float(np.linalg.norm(psi.vectors)))
    if resid > 1e3 * tols.tol_lin * scale:
        raise NotEquivalent("psi is not the image of phi under a single operator", {"fit_residual": resid})
    return Gt.T


def _evaluate_oriented(spec: MultiplierSpec, rule: Rule, target: str, tol, tols, oracle) -> InvertCertificate:
    try:
        return _dispatch(spec, rule, target, tol, tols, oracle)
    except NoConvergence as e:
        raise TooManyTerms(str(e)) from None


def _dispatch(spec: MultiplierSpec, rule: Rule, target: str, tol, tols, oracle) -> InvertCertificate:
    phi, psi, hints = _orient(spec, target)
    m = spec.m
    kw = dict(target=target, hints=hints, tolerances=tols, oracle=oracle)
    if rule is Rule.riesz_closed_form:
        return invert_riesz(phi, psi, m, **kw)
    if rule is Rule.gphi:
        if psi.tags.is_frame is False:
            raise NotEquivalent("the partner family is tagged as not a frame")
        _frame_consts(phi, hints, tols)
        G = _equivalence_map(phi, psi, tols)
        return invert_equivalent_frames(phi, G, m, **kw)
    if rule is Rule.p1:
        return invert_dual_perturbed_symbol(phi, psi, m, tol=tol, **kw)
    if rule is Rule.cp1:
        A, B, _ = _frame_consts(phi, hints, tols)
        dual = canonical_dual_vectors(phi)
        dev = float(np.linalg.norm(dual - psi.vectors))
        if dev > tols.dual_tol(phi.dim) * max(1.0, float(np.linalg.norm(dual))):
            raise NotDual("the partner family is not the canonical dual", {"deviation": dev})
        return invert_canonical_dual_symbol(phi, m, tol=tol, **kw)
    if rule is Rule.mpos:
        return invert_frame_perturbed(phi, psi, m, tol=tol, **kw)
    # the condition concerns conj(m) for phi_psi and m for psi_phi
    m_rule = m.conj() if target == "phi_psi" else m
    if rule is Rule.p4:
        return invert_p1(phi, psi, m_rule, tol=tol, **kw)
    if rule is Rule.p3:
        return invert_p3(phi, None, psi, m_rule, tol=tol, **kw)
    raise ValueError(f"cannot evaluate rule {rule!r}")


_PRECONDITION_TYPES = (PreconditionFailed, NotDual, NotEquivalent)


def evaluate_rule(
    spec: MultiplierSpec,
    rule,
    tol: float = 1e-10,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    oracle: bool = True,
    targets: Sequence[str] = TARGETS,
) -> InvertCertificate:
    """Try one rule on ``build(spec)`` in every orientation it covers.

    Returns the first certificate.  If all orientations refuse, re-raises the
    most informative refusal (a quantitative miss over a failed
    precondition), with the orientation added to its constants.
    """
    rule = parse_rule(rule)
    refusals = []
    for t in targets:
        try:
            return _evaluate_oriented(spec, rule, t, tol, tolerances, oracle)
        except RuleRefused as e:
            e.constants.setdefault("target", t)
            refusals.append(e)
    for e in refusals:
        if isinstance(e, NotRieszWeighted):
            raise e
    for e in refusals:
        if not isinstance(e, _PRECONDITION_TYPES):
            raise e
    raise refusals[0]


def _tag_obstruction(spec: MultiplierSpec) -> str | None:
    """Class-tag facts that rule out invertibility of the untruncated multiplier."""
    m, phi, psi = spec.m, spec.phi, spec.psi
    if m.tags.is_ell_infty and phi.tags.is_bessel and psi.tags.is_bessel:
        if phi.tags.is_frame is False or psi.tags.is_frame is False:
            return "bessel_nonframe: bounded symbol with Bessel families, one of which is not a frame"
    for riesz, other, sym, key in ((phi, psi, m.conj(), "mpsi_is_riesz"), (psi, phi, m, "mphi_is_riesz")):
        if riesz.tags.is_riesz is not True:
            continue
        if spec.hints.get(key) is False or weighted(sym, other).tags.is_riesz is False:
            return "riesz_side: one family is a Riesz basis but the weighted partner cannot be one"
        case = riesz_case_table(riesz.tags, other.tags, m.tags)
        if case.verdict in NEVER_INVERTIBLE:
            return f"riesz_case_{case.case}: {case.verdict.value}"
    return None


def _miss_entry(e: RuleRefused) -> dict:
    return {"reason": e.reason, "message": str(e), "constants": dict(e.constants)}


def certify(
    spec: MultiplierSpec,
    order: Sequence | None = None,
    tol: float = 1e-10,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    oracle: bool = True,
) -> InvertCertificate:
    """Try the rules in ``order`` and return the first certificate.

    Every rule is evaluated so that refusals can be reported as nearest
    misses.  Class-tag obstructions (and a weighted partner of a Riesz basis
    that is singular at this truncation) give ``none_fired`` with
    ``obstruction`` set.  Otherwise ``none_fired`` only means that no
    sufficient condition applied; the oracle's smallest singular value is
    attached as advice.
    """
    rules = [parse_rule(r) for r in (order or DEFAULT_ORDER)]
    try:
        work, _ = pruned(spec)
    except EmptyAfterPrune as e:
        return InvertCertificate(Rule.none_fired, obstruction=f"zero_multiplier: {e}", advisory_min_sv=0.0)
    obstruction = _tag_obstruction(work)
    fired: InvertCertificate | None = None
    misses: dict = {}
    for r in rules:
        try:
            cert = evaluate_rule(work, r, tol=tol, tolerances=tolerances, oracle=oracle)
        except RuleRefused as e:
            misses[r.value] = _miss_entry(e)
            if isinstance(e, NotRieszWeighted) and obstruction is None:
                obstruction = (
                    "riesz_side: weighted partner of a Riesz basis is not a Riesz basis"
                    + (" (class tags)" if e.analytic else " at this truncation")
                )
            continue
        if fired is None:
            fired = cert
    if fired is not None and obstruction is None:
        return _with(fired, nearest_misses=misses)
    advisory = None
    if oracle and work.dim <= oracle_dim_cap():
        advisory = float(np.linalg.svd(work.matrix(), compute_uv=False)[-1])
    return InvertCertificate(
        Rule.none_fired,
        nearest_misses=misses,
        obstruction=obstruction,
        advisory_min_sv=advisory,
        multiplier=build(work),
    )


def _with(cert: InvertCertificate, **changes) -> InvertCertificate:
    from dataclasses import replace

    return replace(cert, **changes)
