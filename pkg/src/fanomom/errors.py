"""Exception types shared across the package."""

from __future__ import annotations


class FanomomError(Exception):
    """Base class for all library errors."""


class MixedRepresentation(FanomomError, ValueError):
    pass


class InsufficientSupport(FanomomError, ValueError):
    pass


class DivergentMoment(FanomomError, ArithmeticError):
    pass


class DivergentTilt(FanomomError, ArithmeticError):
    pass


class DivergentZeta(FanomomError, ArithmeticError):
    pass


class ZeroFirstMoment(FanomomError, ZeroDivisionError):
    pass


class ConvexityViolated(FanomomError, ValueError):
    pass


class SupportMismatch(FanomomError, ValueError):
    pass


class GridTooCoarse(FanomomError, ValueError):
    pass


class DomainError(FanomomError, ValueError):
    pass


class QuadratureFailure(FanomomError, ArithmeticError):
    pass


class NearPole(FanomomError, ArithmeticError):
    pass


class OrderUnsupported(FanomomError, ValueError):
    pass


class PoleNotBracketed(FanomomError, ValueError):
    pass


class DegenerateBody(FanomomError, ValueError):
    pass


class NonIntegralWeights(FanomomError, ValueError):
    pass


class NoConvergence(FanomomError, RuntimeError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(FanomomError, ValueError):
    pass


class CheckFailure(FanomomError, AssertionError):
    pass
