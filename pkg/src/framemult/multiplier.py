"""Frame multipliers ``M[m, Phi, Psi] f = sum_n m_n <f, psi_n> phi_n``."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from framemult.errors import CountMismatch, DimMismatch, UnboundedSymbol
from framemult.frames import (
    SequenceFamily,
    Symbol,
    bessel_bound,
    prune_zeros,
)
from framemult.linop import LinearOp


HINT_KEYS = {
    "A_phi": "lower frame bound of phi",
    "B_phi": "Bessel bound of phi",
    "A_psi": "lower frame bound of psi",
    "B_psi": "Bessel bound of psi",
    "phi_is_frame": "phi is a frame (bool)",
    "psi_is_frame": "psi is a frame (bool)",
    "B_psi_minus_phi": "Bessel bound of psi - phi",
    "B_mpsi_minus_phi": "Bessel bound of conj(m) psi - phi",
    "B_mphi_minus_psi": "Bessel bound of m phi - psi",
    "mu_p3": "least Bessel bound of conj(m) psi - D over duals D of phi",
    "mu_p3_swapped": "least Bessel bound of m phi - D over duals D of psi",
    "mpsi_is_riesz": "conj(m) psi is a Riesz basis (bool)",
    "mphi_is_riesz": "m phi is a Riesz basis (bool)",
    "lambda": "sup |m_n - 1|",
    "a": "inf |m_n|",
    "b": "sup |m_n|",
    "B_phid": "Bessel bound of the dual family",
}


@dataclass(frozen=True, eq=False)
class MultiplierSpec:
    """The triple ``(m, phi, psi)``: ``phi`` synthesizes, ``psi`` analyzes.

    ``hints`` carries constants that are known for the untruncated object
    (e.g. a Bessel bound that is only approached as ``d`` grows).  Rules
    combine them with the measured values, always keeping the unfavourable
    end.  Keys ending in ``phi``/``psi`` refer to the synthesis/analysis
    family of this spec; see ``HINT_KEYS``.

    When the three inputs have different counts and ``align`` is set,
    everything is cut to the shortest and the original counts are kept in
    ``aligned_from``.
    """

    m: Symbol
    phi: SequenceFamily
    psi: SequenceFamily
    hints: dict = field(default_factory=dict)
    label: str = ""
    align: bool = True
    aligned_from: tuple[int, int, int] | None = None

    def __post_init__(self):
        if self.phi.dim != self.psi.dim:
            raise DimMismatch(f"synthesis family lives in C^{self.phi.dim}, analysis family in C^{self.psi.dim}")
        counts = (self.m.count, self.phi.count, self.psi.count)
        if len(set(counts)) > 1:
            if not self.align:
                raise CountMismatch(f"counts of (m, phi, psi) differ: {counts}")
            n = min(counts)
            idx = np.arange(n)
            object.__setattr__(self, "m", self.m.take(idx))
            object.__setattr__(self, "phi", self.phi.take(idx))
            object.__setattr__(self, "psi", self.psi.take(idx))
            object.__setattr__(self, "aligned_from", counts)
        object.__setattr__(self, "hints", dict(self.hints or {}))

    @property
    def dim(self) -> int:
        return self.phi.dim

    @property
    def count(self) -> int:
        return self.phi.count

    @property
    def truncation(self) -> tuple[int, int]:
        return (self.dim, self.count)

    def with_(self, **changes) -> "MultiplierSpec":
        return replace(self, **changes)

    def swapped(self) -> "MultiplierSpec":
        """``(m, psi, phi)``: the multiplier with the roles of the families exchanged."""
        return MultiplierSpec(self.m, self.psi, self.phi, _swap_hints(self.hints), f"swap({self.label})")

    def matrix(self) -> np.ndarray:
        """Dense ``d x d`` realization ``T_phi diag(m) U_psi``."""
        return (self.phi.vectors.T * self.m.values) @ self.psi.vectors.conj()

    def describe(self) -> str:
        return self.label or f"M[{self.m.label}, {self.phi.label}, {self.psi.label}]"


# hint keys that describe a particular role; exchanging phi and psi renames them
_HINT_SWAP = {
    "A_phi": "A_psi",
    "B_phi": "B_psi",
    "phi_is_frame": "psi_is_frame",
    "B_mpsi_minus_phi": "B_mphi_minus_psi",
    "mu_p3": "mu_p3_swapped",
    "mpsi_is_riesz": "mphi_is_riesz",
}
_HINT_SWAP.update({v: k for k, v in list(_HINT_SWAP.items())})


def _swap_hints(hints: dict) -> dict:
    """Rename role-specific hint keys after exchanging the two families."""
    return {_HINT_SWAP.get(k, k): v for k, v in (hints or {}).items()}


def build(spec: MultiplierSpec) -> LinearOp:
    """Matrix-free multiplier: analysis, then scaling, then synthesis."""
    T_phi = spec.phi.vectors.T
    U_psi = spec.psi.vectors.conj()
    T_psi = spec.psi.vectors.T
    U_phi = spec.phi.vectors.conj()
    m = spec.m.values
    mc = m.conj()

    def _w(x, w):
        return w.reshape((-1,) + (1,) * (x.ndim - 1))

    def apply(f):
        c = U_psi @ f
        return T_phi @ (c * _w(c, m))

    def rapply(g):
        c = U_phi @ g
        return T_psi @ (c * _w(c, mc))

    return LinearOp((spec.dim, spec.dim), apply, spec.describe(), rapply)


def adjoint_spec(spec: MultiplierSpec) -> MultiplierSpec:
    """``(conj(m), psi, phi)``, whose multiplier is the adjoint of ``build(spec)``."""
    return MultiplierSpec(spec.m.conj(), spec.psi, spec.phi, _swap_hints(spec.hints), f"adj({spec.describe()})")


def norm_bound(spec: MultiplierSpec, asymptotic: bool = False) -> float:
    """``sqrt(B_phi B_psi) * sup|m|`` with certified upper Bessel bounds.

    With ``asymptotic=True`` the bound is meant for the untruncated
    multiplier, so a symbol tagged as unbounded raises ``UnboundedSymbol``.
    """
    if asymptotic and spec.m.tags.is_ell_infty is False:
        raise UnboundedSymbol(f"symbol {spec.m.label!r} is not bounded; no norm bound for the full multiplier")
    B_phi = max(bessel_bound(spec.phi), spec.hints.get("B_phi", 0.0) if asymptotic else 0.0)
    B_psi = max(bessel_bound(spec.psi), spec.hints.get("B_psi", 0.0) if asymptotic else 0.0)
    return float(np.sqrt(B_phi * B_psi) * spec.m.sup())


def pruned(spec: MultiplierSpec) -> tuple[MultiplierSpec, np.ndarray]:
    """The spec without zero entries, plus the kept original indices."""
    p = prune_zeros(spec.m, spec.phi, spec.psi)
    if p.kept.size == spec.count:
        return spec, p.kept
    return replace(spec, m=p.m, phi=p.phi, psi=p.psi), p.kept
