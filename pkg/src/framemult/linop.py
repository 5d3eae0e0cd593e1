"""Matrix-free complex linear operators and a Neumann-series inverter.

Operators act on the leading axis of their argument, so ``op(x)`` works for a
single vector of shape ``(n,)`` and for a batch of columns ``(n, k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from framemult.config import DEFAULT_TOLERANCES, oracle_dim_cap
from framemult.errors import DimMismatch, DimTooLarge, NoConvergence, NotContraction

_EPS = np.finfo(float).eps

Apply = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class LinearOp:
    """Linear map ``C^shape[1] -> C^shape[0]`` given by its action.

    ``rapply`` is the action of the adjoint.  When it is missing, ``adjoint``
    falls back to the dense realization.
    """

    shape: tuple[int, int]
    apply: Apply
    label: str = "op"
    rapply: Apply | None = None

    def __post_init__(self):
        m, n = self.shape
        if m < 1 or n < 1:
            raise ValueError(f"invalid operator shape {self.shape}")
        object.__setattr__(self, "shape", (int(m), int(n)))

    @property
    def dim(self) -> int:
        if self.shape[0] != self.shape[1]:
            raise DimMismatch(f"{self.label} is not square: {self.shape}")
        return self.shape[0]

    @property
    def is_square(self) -> bool:
        return self.shape[0] == self.shape[1]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape[0] != self.shape[1]:
            raise DimMismatch(
                f"{self.label} expects leading dimension {self.shape[1]}, got {x.shape[0]}"
            )
        return self.apply(x)

    @property
    def H(self) -> "LinearOp":
        return adjoint(self)

    def __matmul__(self, other):
        if isinstance(other, LinearOp):
            return compose(self, other)
        return self(other)

    def __add__(self, other: "LinearOp") -> "LinearOp":
        return _lincomb(self, other, 1.0)

    def __sub__(self, other: "LinearOp") -> "LinearOp":
        return _lincomb(self, other, -1.0)

    def __neg__(self) -> "LinearOp":
        return self.scaled(-1.0)

    def __mul__(self, alpha) -> "LinearOp":
        return self.scaled(alpha)

    __rmul__ = __mul__

    def scaled(self, alpha) -> "LinearOp":
        alpha = complex(alpha)
        ra = None
        if self.rapply is not None:
            r = self.rapply
            ra = lambda y: np.conj(alpha) * r(y)
        a = self.apply
        return LinearOp(self.shape, lambda x: alpha * a(x), f"{alpha:g}*{self.label}", ra)


def compose(A: LinearOp, B: LinearOp) -> LinearOp:
    """``A @ B``."""
    if A.shape[1] != B.shape[0]:
        raise DimMismatch(f"cannot compose {A.shape} with {B.shape}")
    ra = None
    if A.rapply is not None and B.rapply is not None:
        ar, br = A.rapply, B.rapply
        ra = lambda y: br(ar(y))
    aa, ba = A.apply, B.apply
    return LinearOp((A.shape[0], B.shape[1]), lambda x: aa(ba(x)), f"{A.label}@{B.label}", ra)


def _lincomb(A: LinearOp, B: LinearOp, beta: float) -> LinearOp:
    if A.shape != B.shape:
        raise DimMismatch(f"shape mismatch {A.shape} vs {B.shape}")
    ra = None
    if A.rapply is not None and B.rapply is not None:
        ar, br = A.rapply, B.rapply
        ra = lambda y: ar(y) + beta * br(y)
    aa, ba = A.apply, B.apply
    sign = "+" if beta > 0 else "-"
    return LinearOp(A.shape, lambda x: aa(x) + beta * ba(x), f"({A.label}{sign}{B.label})", ra)


def from_matrix(A, label: str = "matrix") -> LinearOp:
    A = np.array(A, dtype=complex)
    if A.ndim != 2:
        raise ValueError("expected a 2-d array")
    AH = A.conj().T
    return LinearOp(A.shape, lambda x: A @ x, label, lambda y: AH @ y)


def identity(d: int) -> LinearOp:
    return LinearOp((d, d), lambda x: x.copy(), "I", lambda y: y.copy())


def diag(values, label: str = "diag") -> LinearOp:
    v = np.asarray(values, dtype=complex)
    vc = v.conj()

    def _scale(w, x):
        return w.reshape((-1,) + (1,) * (x.ndim - 1)) * x

    return LinearOp((v.size, v.size), lambda x: _scale(v, x), label, lambda y: _scale(vc, y))


def dense_of(op: LinearOp, cap: int | None = None) -> np.ndarray:
    """Dense matrix of ``op``: column j is ``op(e_j)``."""
    cap = oracle_dim_cap() if cap is None else cap
    if max(op.shape) > cap:
        raise DimTooLarge(f"{op.label} has shape {op.shape}, oracle cap is {cap}")
    out = op(np.eye(op.shape[1], dtype=complex))
    return np.asarray(out, dtype=complex).reshape(op.shape)


def adjoint(op: LinearOp) -> LinearOp:
    if op.rapply is not None:
        return LinearOp((op.shape[1], op.shape[0]), op.rapply, f"{op.label}*", op.apply)
    return from_matrix(dense_of(op).conj().T, f"{op.label}*")


# --------------------------------------------------------------------------
# spectral estimates


@dataclass(frozen=True)
class SpectralEstimate:
    """Brackets for the largest and smallest singular values.

    The smallest singular value is taken over ``min(shape)`` values, so for a
    wide synthesis matrix it is the smallest nonzero-candidate one.
    """

    op_norm_lower: float
    op_norm_upper: float
    min_sv_lower: float
    min_sv_upper: float
    method: str

    def __post_init__(self):
        vals = (self.op_norm_lower, self.op_norm_upper, self.min_sv_lower, self.min_sv_upper)
        if min(vals) < 0:
            raise ValueError("spectral brackets must be nonnegative")
        if self.op_norm_lower > self.op_norm_upper or self.min_sv_lower > self.min_sv_upper:
            raise ValueError("inverted spectral bracket")

    @property
    def op_norm(self) -> float:
        return 0.5 * (self.op_norm_lower + self.op_norm_upper)

    @property
    def min_sv(self) -> float:
        return 0.5 * (self.min_sv_lower + self.min_sv_upper)

    def contains(self, op_norm: float, min_sv: float, slack: float = 0.0) -> bool:
        return (
            self.op_norm_lower - slack <= op_norm <= self.op_norm_upper + slack
            and self.min_sv_lower - slack <= min_sv <= self.min_sv_upper + slack
        )


def _svd_slack(shape, smax: float) -> float:
    # backward-stable SVD: every singular value is exact for A + E, |E| <~ p(n) eps |A|
    return 8.0 * max(shape) * _EPS * smax


def singular_values(op: LinearOp, cap: int | None = None) -> np.ndarray:
    """All singular values of the dense realization, descending."""
    return np.linalg.svd(dense_of(op, cap), compute_uv=False)


def spectral_estimates(
    op: LinearOp,
    method: str = "dense_oracle",
    tol: float | None = None,
    max_iters: int | None = None,
    rng: np.random.Generator | None = None,
) -> SpectralEstimate:
    if method == "dense_oracle":
        s = singular_values(op)
        slack = _svd_slack(op.shape, float(s[0]))
        smax, smin = float(s[0]), float(s[-1])
        return SpectralEstimate(
            max(smax - slack, 0.0), smax + slack, max(smin - slack, 0.0), smin + slack, method
        )
    if method == "power_iteration":
        return _power_estimates(op, tol, max_iters, rng)
    raise ValueError(f"unknown method {method!r}")


def _gram(op: LinearOp) -> LinearOp:
    """Hermitian PSD Gram operator on the smaller side of ``op``."""
    A, AH = op, adjoint(op)
    if op.shape[0] >= op.shape[1]:
        return compose(AH, A)
    return compose(A, AH)


def _power_top(H: LinearOp, tol, max_iters, rng, shift: float | None = None):
    """Largest eigenvalue of Hermitian PSD ``H`` (or of ``shift*I - H``).

    Returns the Rayleigh quotient and the residual norm; the Rayleigh quotient
    never exceeds the top eigenvalue and a residual ``r`` places an eigenvalue
    within ``r`` of it.
    """
    n = H.shape[0]
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    theta, r = 0.0, math.inf
    for it in range(1, max_iters + 1):
        w = H(v)
        if shift is not None:
            w = shift * v - w
        theta = float(np.real(np.vdot(v, w)))
        r = float(np.linalg.norm(w - theta * v))
        scale = shift if shift is not None else max(theta, 0.0)
        if r <= tol * max(scale, _EPS):
            return theta, r, it
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, 0.0, it
        v = w / nw
    raise NoConvergence(
        f"power iteration on {H.label} stalled: residual {r:.3e} after {max_iters} iterations"
    )


def _power_estimates(op, tol, max_iters, rng) -> SpectralEstimate:
    tol = DEFAULT_TOLERANCES.power_tol if tol is None else tol
    max_iters = DEFAULT_TOLERANCES.power_max_iters if max_iters is None else max_iters
    rng = np.random.default_rng(0) if rng is None else rng
    H = _gram(op)
    n = H.shape[0]
    theta, r, _ = _power_top(H, tol, max_iters, rng)
    lam_lo = max(theta, 0.0)
    lam_hi = theta + r + 4 * n * _EPS * max(theta, _EPS)
    # smallest eigenvalue via the top eigenvalue of c*I - H, c >= lambda_max
    c = lam_hi
    if c <= 0.0:
        return SpectralEstimate(0.0, 0.0, 0.0, 0.0, "power_iteration")
    mu, r2, _ = _power_top(H, tol, max_iters, rng, shift=c)
    round_off = 4 * n * _EPS * c
    low_lo = max(c - mu - r2 - round_off, 0.0)
    low_hi = max(c - mu + round_off, low_lo)
    low_hi = min(low_hi, lam_hi)
    return SpectralEstimate(
        math.sqrt(lam_lo),
        math.sqrt(lam_hi),
        math.sqrt(low_lo),
        math.sqrt(low_hi),
        "power_iteration",
    )


def op_norm_upper(op: LinearOp, method: str = "dense_oracle") -> float:
    return spectral_estimates(op, method).op_norm_upper


# --------------------------------------------------------------------------
# Neumann inversion


@dataclass(frozen=True, eq=False)
class NeumannResult:
    """Truncated series ``sum_{k<=K} [F^-1 (F - G)]^k F^-1`` for ``G^-1``."""

    inverse: LinearOp
    terms_used: int
    contraction_q: float
    a_priori_error: float
    guaranteed_lower: float
    guaranteed_upper: float
    nu: float
    f_inv_norm: float
    f_norm: float
    _F: LinearOp = field(repr=False, default=None)
    _F_inv: LinearOp = field(repr=False, default=None)
    _G: LinearOp = field(repr=False, default=None)

    def tail_bound(self, k: int) -> float:
        """A priori operator-norm error after ``k`` correction terms."""
        q = self.contraction_q
        if q == 0.0:
            return 0.0
        return self.f_inv_norm * q ** (k + 1) / (1.0 - q)

    def partial(self, k: int) -> LinearOp:
        return _series_op(self._F, self._F_inv, self._G, k)

    def solve(self, y, rtol: float | None = None, max_extra: int = 200) -> np.ndarray:
        """Apply the inverse, adding terms until ``|G x - y| <= rtol |y|``."""
        y = np.asarray(y, dtype=complex)
        x = self.inverse(y)
        if rtol is None:
            return x
        G, F, Finv = self._G, self._F, self._F_inv
        ynorm = np.linalg.norm(y)
        for _ in range(max_extra):
            res = G(x) - y
            if np.linalg.norm(res) <= rtol * ynorm:
                return x
            # one refinement step: x <- x - F^-1 (G x - y) is the next partial sum
            x = x - Finv(res)
        if np.linalg.norm(G(x) - y) > rtol * ynorm:
            raise NoConvergence("residual refinement did not reach the requested tolerance")
        return x


def _series_op(F: LinearOp, F_inv: LinearOp, G: LinearOp, K: int) -> LinearOp:
    D = F - G
    Finv_a, D_a = F_inv.apply, D.apply

    def apply(y):
        t = Finv_a(y)
        x = t.copy()
        for _ in range(K):
            t = Finv_a(D_a(t))
            x = x + t
        return x

    FinvH, DH = adjoint(F_inv), adjoint(D)

    def rapply(y):
        t = FinvH.apply(y)
        x = t.copy()
        for _ in range(K):
            t = FinvH.apply(DH.apply(t))
            x = x + t
        return x

    return LinearOp(G.shape, apply, f"neumann[{G.label},K={K}]", rapply)


def neumann_invert(
    F: LinearOp,
    F_inv: LinearOp,
    G: LinearOp,
    nu: float | None = None,
    tol: float = 1e-10,
    method: str = "dense_oracle",
    f_inv_norm: float | None = None,
    f_norm: float | None = None,
    max_terms: int = 100000,
) -> NeumannResult:
    """Invert ``G`` as a perturbation of the invertible ``F``.

    ``nu`` must bound ``|G - F|``; when omitted it is measured as the upper
    bracket of ``|G - F|``.  ``f_inv_norm``/``f_norm`` may supply certified
    upper bounds for ``|F^-1|`` and ``|F|``.  ``K`` is the smallest number of
    correction terms whose tail bound is at most ``tol * min(1, guaranteed_lower)``,
    which keeps both the absolute and the relative error below ``tol``.

    Raises NotContraction when ``nu * |F^-1| >= 1``; that does not mean ``G``
    is singular.
    """
    if not (F.shape == G.shape == F_inv.shape and F.is_square):
        raise DimMismatch("F, F_inv and G must be square with equal shapes")
    if f_inv_norm is None:
        f_inv_norm = spectral_estimates(F_inv, method).op_norm_upper
    if f_norm is None:
        f_norm = spectral_estimates(F, method).op_norm_upper
    if nu is None:
        nu = spectral_estimates(G - F, method).op_norm_upper
    nu = float(nu)
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    q = nu * f_inv_norm
    if not q < 1.0:
        raise NotContraction(
            f"nu*|F^-1| = {q:.6g} >= 1", {"nu": nu, "f_inv_norm": f_inv_norm, "q": q}
        )
    g_lower = 1.0 / ((1.0 + q) * f_norm)
    g_upper = 1.0 / (1.0 / f_inv_norm - nu)
    target = tol * min(1.0, g_lower)
    if q == 0.0:
        K, err = 0, 0.0
    else:
        # f_inv_norm * q^(K+1) / (1-q) <= target
        need = math.log(target * (1.0 - q) / f_inv_norm) / math.log(q) - 1.0
        K = max(0, math.ceil(need - 1e-12))
        while f_inv_norm * q ** (K + 1) / (1.0 - q) > target:
            K += 1
        if K > max_terms:
            raise NoConvergence(f"Neumann series needs {K} terms (q = {q:.6g})")
        err = f_inv_norm * q ** (K + 1) / (1.0 - q)
    return NeumannResult(
        inverse=_series_op(F, F_inv, G, K),
        terms_used=K,
        contraction_q=q,
        a_priori_error=err,
        guaranteed_lower=g_lower,
        guaranteed_upper=g_upper,
        nu=nu,
        f_inv_norm=f_inv_norm,
        f_norm=f_norm,
        _F=F,
        _F_inv=F_inv,
        _G=G,
    )
