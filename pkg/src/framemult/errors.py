"""Exception hierarchy.

``RuleRefused`` subclasses mean a sufficient condition did not hold; they are
not statements that the multiplier is singular.  They carry the constants that
were compared so callers can report the nearest miss.
"""


class FrameMultError(Exception):
    pass


class DimTooLarge(FrameMultError):
    pass


class DimMismatch(FrameMultError, ValueError):
    pass


class CountMismatch(FrameMultError, ValueError):
    pass


class NoConvergence(FrameMultError):
    pass


class NotAFrame(FrameMultError):
    pass


class EmptyAfterPrune(FrameMultError):
    """Nothing survives pruning: the multiplier is the zero operator."""


class UnboundedSymbol(FrameMultError):
    pass


class UnknownFixture(FrameMultError, KeyError):
    pass


class ParamOutOfRange(FrameMultError, ValueError):
    pass


class NotRiesz(FrameMultError):
    pass


class RuleRefused(FrameMultError):
    """A sufficient condition for invertibility failed to fire."""

    reason = "refused"

    def __init__(self, message: str = "", constants: dict | None = None):
        super().__init__(message or self.reason)
        self.constants = dict(constants or {})


class NotContraction(RuleRefused):
    reason = "not_contraction"


class LambdaTooLarge(RuleRefused):
    reason = "lambda_too_large"


class MuTooLarge(RuleRefused):
    reason = "mu_too_large"


class PerturbationTooLarge(RuleRefused):
    reason = "perturbation_too_large"


class SymbolRatioTooLarge(RuleRefused):
    reason = "symbol_ratio_too_large"


class SymbolNotSigned(RuleRefused):
    reason = "symbol_not_signed"


class NotDual(RuleRefused):
    reason = "not_dual"


class NotEquivalent(RuleRefused):
    reason = "not_equivalent"


class PreconditionFailed(RuleRefused):
    reason = "precondition_failed"


class TooManyTerms(RuleRefused):
    """The contraction holds but is too weak to reach the tolerance in budget."""

    reason = "too_many_terms"


class VerificationFailed(RuleRefused):
    reason = "verification_failed"


class NotRieszWeighted(RuleRefused):
    """The weighted analysis family is not a Riesz basis.

    With a Riesz synthesis family this is a certificate of non-invertibility
    (at the truncation, or for the infinite object when ``analytic`` is set).
    """

    reason = "not_riesz_weighted"

    def __init__(self, message="", constants=None, analytic=False):
        super().__init__(message, constants)
        self.analytic = analytic
