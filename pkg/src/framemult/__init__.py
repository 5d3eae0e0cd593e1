"""Finite-dimensional toolkit for frame multipliers.

A multiplier ``M[m, Phi, Psi] f = sum_n m_n <f, psi_n> phi_n`` is assembled
from an analysis family ``Psi``, a complex symbol ``m`` and a synthesis family
``Phi``.  The package builds such operators matrix-free, diagnoses necessary
conditions for unconditional convergence over truncation sweeps, certifies
invertibility through perturbation arguments, and evaluates the inverses
(Neumann series or dual Riesz bases).  Every numeric claim can be checked
against a dense linear-algebra oracle.
"""

from framemult.config import Tolerances, DEFAULT_TOLERANCES
from framemult.errors import FrameMultError
from framemult.linop import (
    LinearOp,
    NeumannResult,
    SpectralEstimate,
    adjoint,
    dense_of,
    neumann_invert,
    spectral_estimates,
)
from framemult.frames import (
    ClassTags,
    FrameBounds,
    SequenceFamily,
    Symbol,
    SymbolTags,
    analysis,
    canonical_dual,
    classify_weighted_riesz,
    frame_bounds,
    frame_operator,
    is_dual_pair,
    prune_zeros,
    riesz_margin,
    synthesis,
    weighted,
)
from framemult.multiplier import MultiplierSpec, adjoint_spec, build, norm_bound
from framemult.convergence import (
    DiagnosticsReport,
    riesz_side_criterion,
    swap_equivalence_check,
    unconditional_necessary,
)
from framemult.inversion import (
    InvertCertificate,
    certify,
    evaluate_rule,
    invert_canonical_dual_symbol,
    invert_dual_perturbed_symbol,
    invert_equivalent_frames,
    invert_frame_perturbed,
    invert_p1,
    invert_p3,
    invert_riesz,
    necessary_lower_frame,
    riesz_case_table,
)

__version__ = "0.1.0"
