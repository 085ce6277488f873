"""Exception hierarchy shared by every module of the toolkit."""

from __future__ import annotations


class WomError(Exception):
    """Base class for all toolkit errors."""


class InvalidParams(WomError, ValueError):
    """Code or model parameters outside their admissible range."""


class InvalidCode(WomError):
    """A decode table that is malformed or internally inconsistent."""


class UnlabeledState(WomError, KeyError):
    """Decoding a physical state that carries no label."""


class NoReachableLabel(WomError):
    """No labeled state above the current one carries the requested value."""


class NotMonotone(WomError, ValueError):
    """A transition that would decrease a cell level."""


class IndexOutOfRange(WomError, IndexError):
    pass


class DomainError(WomError, ValueError):
    """A numeric function evaluated outside its support."""


class InfeasibleLabeling(WomError):
    """Label assignment could not satisfy the coverage constraints."""


class NoAccessibleFrontier(WomError):
    pass


class CapacityExhausted(WomError):
    pass


class WordlineInvariantError(WomError, AssertionError):
    """A wordline write broke the balance or frontier-sandwich guarantee."""
