"""Exception types shared across the toolkit."""


class QCodesignError(Exception):
    """Base class for all toolkit errors."""


class NumericalInstability(QCodesignError):
    """Magic-basis eigen-decomposition failed to produce a valid result."""


class SynthesisFailure(QCodesignError):
    """A decomposition could not reach the required reconstruction fidelity."""


class InvalidDimensions(QCodesignError):
    """A lattice constructor was given unusable dimensions."""


class UnsupportedDepth(QCodesignError):
    """A tree constructor was given a level count outside {2, 3}."""


class InvalidStride(QCodesignError):
    """A corral constructor was given an unusable stride."""


class Disconnected(QCodesignError):
    """A coupling graph (or trim result) is not connected."""


class TooManyQubits(QCodesignError):
    """A circuit is wider than the coupling graph it is being mapped to."""


class InvalidWidth(QCodesignError):
    """A benchmark family cannot be generated at the requested width."""


class EmptySelection(QCodesignError):
    """A report filter matched no records."""
