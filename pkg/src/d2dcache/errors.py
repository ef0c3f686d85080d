"""Exception hierarchy shared by every module."""


class D2DCacheError(Exception):
    """Base class for all library errors."""


class ProfileError(D2DCacheError, ValueError):
    """The cache profile violates a model invariant."""


class InvalidK(ProfileError):
    pass


class TooFewFiles(ProfileError):
    pass


class CacheOutOfRange(ProfileError):
    pass


class InsufficientTotalCache(ProfileError):
    pass


class Unsorted(ProfileError):
    pass


class EmptySet(D2DCacheError, ValueError):
    pass


class NotInSideInfoFamily(D2DCacheError, ValueError):
    pass


class NoLevel(D2DCacheError):
    pass


class HypothesisViolated(D2DCacheError):
    """A constructor or closed form was called outside its region of validity."""


class WrongK(HypothesisViolated):
    pass


class MalformedLP(D2DCacheError, ValueError):
    pass


class LPInfeasible(D2DCacheError):
    pass


class MaxKExceeded(D2DCacheError, ValueError):
    pass


class SimulationError(D2DCacheError):
    pass


class GranularityOverflow(SimulationError):
    pass


class NonIntegralFragment(SimulationError):
    pass


class PieceOverflow(SimulationError):
    pass


class RepeatedDemand(SimulationError, ValueError):
    pass


class SignalStructureError(SimulationError):
    """A signal's pieces do not fit the size the plan assigns to it."""


class MissingSideInformation(SimulationError):
    pass
