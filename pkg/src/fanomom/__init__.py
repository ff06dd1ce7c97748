"""Numerical checks for log-concave Laplace factorizations of zeta integrals,
reverse Hölder bounds, effective openness and radial Monge-Ampère models."""

from __future__ import annotations

__version__ = "0.1.0"

from .logconcave import GridMeasure  # noqa: E402

__all__ = ["GridMeasure", "__version__"]
