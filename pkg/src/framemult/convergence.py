"""Truncation-sweep diagnostics for unconditional convergence.

Unconditional convergence of an infinite multiplier cannot be observed on
a finite section, so these checks only ever refute: a weighted family
whose Bessel bound keeps growing along the sweep shows a necessary
condition failing.  A bounded trace is reported as "hold", never as proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np

from framemult.config import DEFAULT_TOLERANCES
from framemult.errors import NotRiesz
from framemult.frames import SequenceFamily, Symbol, bessel_bound, riesz_margin
from framemult.multiplier import MultiplierSpec, pruned

DEFAULT_SWEEP = (8, 16, 32, 64, 128)


class Verdict(str, Enum):
    hold = "necessary_conditions_hold"
    violated = "violated"
    inconclusive = "inconclusive"


SpecSource = Union[MultiplierSpec, Callable[[int], MultiplierSpec]]


@dataclass(frozen=True)
class DiagnosticsReport:
    sweep_dims: list[int]
    counts: list[int]
    mixed_norm_trace: list[float]
    bessel_trace_A: list[float]
    bessel_trace_B: list[float]
    verdict: Verdict
    cited_rule: str
    growing: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "sweep_dims": list(self.sweep_dims),
            "counts": list(self.counts),
            "mixed_norm_trace": list(self.mixed_norm_trace),
            "bessel_trace_A": list(self.bessel_trace_A),
            "bessel_trace_B": list(self.bessel_trace_B),
            "verdict": self.verdict.value,
            "cited_rule": self.cited_rule,
            "growing": list(self.growing),
        }


def trace_verdict(trace: Sequence[float], growth_factor: float) -> Verdict:
    """Classify one nonnegative trace.

    ``violated`` needs a nondecreasing run of at least three points ending
    at the last sweep point whose end/start ratio reaches ``growth_factor``.
    Growth by at least ``sqrt(growth_factor)`` without that is inconclusive.
    """
    t = np.asarray(trace, dtype=float)
    if t.size == 0:
        return Verdict.inconclusive
    rel = 1e-9
    start = t.size - 1
    while start > 0 and t[start - 1] <= t[start] * (1 + rel) + 1e-300:
        start -= 1
    run = t[start:]
    base = max(t[0], 1e-300)
    if run.size >= 3 and run[-1] >= growth_factor * max(run[0], 1e-300):
        return Verdict.violated
    if t.max() >= np.sqrt(growth_factor) * base:
        return Verdict.inconclusive
    return Verdict.hold


def _prefix_specs(spec: MultiplierSpec, sweep: Sequence[int]):
    """Prefix truncations of a single explicit spec (terms, not dimension)."""
    counts = sorted({min(int(n), spec.count) for n in sweep} | {spec.count})
    for n in counts:
        idx = np.arange(n)
        yield n, MultiplierSpec(spec.m.take(idx), spec.phi.take(idx), spec.psi.take(idx), label=spec.label)


def _resolve(source: SpecSource, sweep: Sequence[int]):
    if isinstance(source, MultiplierSpec):
        for n, s in _prefix_specs(source, sweep):
            yield n, s
    else:
        for d in sweep:
            yield int(d), source(int(d))


def _point(spec: MultiplierSpec) -> tuple[float, float, float]:
    try:
        spec, _ = pruned(spec)
    except Exception:
        return 0.0, 0.0, 0.0
    am = np.abs(spec.m.values)
    nphi = spec.phi.norms()
    npsi = spec.psi.norms()
    mixed = float(np.max(am * nphi * npsi))
    fam_A = SequenceFamily(spec.psi.vectors * (am * nphi)[:, None])
    fam_B = SequenceFamily(spec.phi.vectors * (am * npsi)[:, None])
    return mixed, bessel_bound(fam_A), bessel_bound(fam_B)


def unconditional_necessary(
    source: SpecSource,
    sweep: Sequence[int] = DEFAULT_SWEEP,
    growth_factor: float | None = None,
) -> DiagnosticsReport:
    """Track the quantities that stay bounded under unconditional convergence.

    ``source`` is either a callable ``d -> MultiplierSpec`` evaluated at each
    sweep size, or one explicit spec whose leading terms are swept.
    Traced per point: ``max |m_n| |phi_n| |psi_n|`` and the Bessel bounds of
    ``(|m_n| |phi_n| psi_n)`` (trace A) and ``(|m_n| |psi_n| phi_n)`` (trace B).
    """
    g = DEFAULT_TOLERANCES.growth_factor if growth_factor is None else growth_factor
    dims, counts, mixed, ta, tb = [], [], [], [], []
    for n, spec in _resolve(source, sweep):
        a, b, c = _point(spec)
        dims.append(n if not isinstance(source, MultiplierSpec) else spec.dim)
        counts.append(spec.count)
        mixed.append(a)
        ta.append(b)
        tb.append(c)
    verdicts = {
        "mixed_norm_trace": trace_verdict(mixed, g),
        "bessel_trace_A": trace_verdict(ta, g),
        "bessel_trace_B": trace_verdict(tb, g),
    }
    growing = [k for k, v in verdicts.items() if v is not Verdict.hold]
    if any(v is Verdict.violated for v in verdicts.values()):
        verdict = Verdict.violated
        cited = "weighted families must be Bessel and |m_n| |phi_n| |psi_n| bounded; a trace diverges"
    elif growing:
        verdict = Verdict.inconclusive
        cited = "a trace grows, but not decisively over this sweep"
    else:
        verdict = Verdict.hold
        cited = "weighted Bessel bounds and mixed norms stay bounded (necessary only)"
    return DiagnosticsReport(dims, counts, mixed, ta, tb, verdict, cited, growing)


def swap_equivalence_check(source: SpecSource, sweep: Sequence[int] = DEFAULT_SWEEP) -> bool:
    """Verdicts of ``(m, phi, psi)`` and ``(m, psi, phi)`` agree on the sweep."""
    if isinstance(source, MultiplierSpec):
        swapped: SpecSource = source.swapped()
    else:
        swapped = lambda d: source(d).swapped()
    r1 = unconditional_necessary(source, sweep)
    r2 = unconditional_necessary(swapped, sweep)
    traces_swap = np.allclose(r1.bessel_trace_A, r2.bessel_trace_B, rtol=1e-9, atol=1e-12) and np.allclose(
        r1.bessel_trace_B, r2.bessel_trace_A, rtol=1e-9, atol=1e-12
    )
    return r1.verdict == r2.verdict and traces_swap


class RieszSideVerdict(NamedTuple):
    well_defined: bool | None
    symbol_linfty_violated: bool | None
    bessel_trace: list[float]
    symbol_trace: list[float]


RieszSource = Union[
    tuple[SequenceFamily, Symbol, SequenceFamily],
    Callable[[int], tuple[SequenceFamily, Symbol, SequenceFamily]],
]


def riesz_side_criterion(
    source: RieszSource,
    sweep: Sequence[int] = DEFAULT_SWEEP,
    psi_nbb: bool | None = None,
    growth_factor: float | None = None,
) -> RieszSideVerdict:
    """With a Riesz basis on one side, well-definedness is ``m*psi`` being Bessel.

    ``source`` is ``(phi_riesz, m, psi)`` or a callable returning that triple
    for a sweep size.  ``well_defined`` is False when the Bessel trace of
    ``m*psi`` diverges, True when it stays bounded, None if inconclusive.
    If ``psi`` is norm-bounded below (``psi_nbb``, else its tag), the symbol
    has to be bounded; ``symbol_linfty_violated`` reports a diverging
    ``sup |m_n|`` trace.
    """
    g = DEFAULT_TOLERANCES.growth_factor if growth_factor is None else growth_factor
    if callable(source):
        triples = [source(int(d)) for d in sweep]
    else:
        phi, m, psi = source
        counts = sorted({min(int(n), m.count) for n in sweep} | {m.count})
        triples = [(phi, m.take(np.arange(n)), psi.take(np.arange(n))) for n in counts]
    bt, st = [], []
    for phi, m, psi in triples:
        if phi.tags.is_riesz is False or (phi.tags.is_riesz is not True and not riesz_margin(phi).is_riesz_certified):
            raise NotRiesz(f"{phi.label or 'phi'} is not a Riesz basis at this truncation")
        bt.append(bessel_bound(SequenceFamily(psi.vectors * m.values[:, None])))
        st.append(m.sup())
    v = trace_verdict(bt, g)
    well = {Verdict.hold: True, Verdict.violated: False}.get(v)
    nbb = triples[-1][2].tags.is_nbb if psi_nbb is None else psi_nbb
    linfty = None
    if nbb:
        sv = trace_verdict(st, g)
        linfty = {Verdict.hold: False, Verdict.violated: True}.get(sv)
    return RieszSideVerdict(well, linfty, bt, st)
