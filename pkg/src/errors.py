"""
Error types raised across the package.
Every category derives from PdsimError so the CLI can report them uniformly.
"""


class PdsimError(ValueError):
    """Base class for all domain errors."""


class InvalidSpec(PdsimError):
    """A parameter object violates its invariants."""


class ConfigError(PdsimError):
    """The experiment configuration cannot be loaded or validated."""


class EmptyInput(PdsimError):
    pass


class DuplicateGenerator(PdsimError):
    pass


class OutOfWindow(PdsimError):
    pass


class NegativePersistence(PdsimError):
    pass


class EmptyDiagram(PdsimError):
    pass


class Singular(PdsimError):
    """The Fisher information of the pseudolikelihood is not invertible."""


class EmptySampleSet(PdsimError):
    pass
