"""
Exception hierarchy for the MNL best-arm identification toolkit
"""


class MnlBaiError(Exception):
    """Base class for all toolkit errors"""


class InvalidInputError(MnlBaiError, ValueError):
    """An argument violates the documented precondition of an operation"""


class DegenerateDirectionError(InvalidInputError):
    """A projected direction is numerically zero, so no perturbation exists"""


class InternalInvariantError(MnlBaiError, RuntimeError):
    """An invariant that the algorithms guarantee was found broken"""


class OutputError(MnlBaiError, OSError):
    """Writing an experiment artifact failed; the message names the path"""
