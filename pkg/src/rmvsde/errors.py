"""Exception hierarchy shared by every module of the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class EmptyMeasure(ToolkitError):
    """An empirical measure was built from an empty sample list."""


class DomainViolation(ToolkitError):
    """An input violates a domain constraint (negative atom, bad grid, ...)."""


class ShapeError(ToolkitError):
    """Array lengths or weight/action dimensions do not line up."""


class UnsupportedPolicyForm(ToolkitError):
    """A control policy has a form the requested operation cannot handle."""


class NumericalBlowup(ToolkitError):
    """A computation produced NaN/inf or hit a numerical domain error.

    Carries optional context: the simulation step index and/or the offending
    expression fragment.
    """

    def __init__(self, message, step=None, where=None):
        super().__init__(message)
        self.step = step
        self.where = where


class ExpressionSyntaxError(ToolkitError):
    """Expression source failed to parse; reports position and expectation."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class UnknownVariable(ExpressionSyntaxError):
    """Expression references a variable outside its allowed signature."""


class UnknownFunction(ExpressionSyntaxError):
    """Expression calls a function the evaluator does not provide."""


class ConfigError(ToolkitError):
    """A model/policy configuration file is malformed or inconsistent."""
