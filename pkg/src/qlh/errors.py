"""Exception hierarchy shared by every module of the engine."""


class QLHError(Exception):
    """Base class; the CLI maps these to exit status 1."""


class RingMismatch(QLHError):
    pass


class ZWindowOverflow(QLHError):
    pass


class NotInvertible(QLHError):
    pass


class MalformedLeadingTerm(QLHError):
    pass


class LaurentModeRequired(QLHError):
    pass


class DegenerateRelation(QLHError):
    pass


class DegeneratePairing(QLHError):
    pass


class ExtendedModeRequired(QLHError):
    pass


class NoLiftInSearchWindow(QLHError):
    pass


class NotAdmissible(QLHError):
    pass


class NotDivisorGenerated(QLHError):
    pass


class SingularLeadingBlock(QLHError):
    pass


class NonTerminating(QLHError):
    pass


class ObstructionNonzero(QLHError):
    pass


class MirrorMapLeavesChart(QLHError):
    pass


class ReductionFailed(QLHError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SingularStep(QLHError):
    pass


class BlockLeakage(QLHError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ExactnessFailure(QLHError):
    def __init__(self, invariant, witness=None):
        super().__init__(f"{invariant} failed" + (f" (witness {witness})" if witness is not None else ""))
        self.invariant = invariant
        self.witness = witness


class Mismatch(QLHError):
    pass


class IndexOutOfRange(QLHError):
    pass


class ConfigError(Exception):
    """Bad job configuration or geometry file; the CLI exits with status 2."""
