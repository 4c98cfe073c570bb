"""Python access to the fracwave solver core."""

from ._core import (
    ConfigError,
    InstabilityError,
    PreconditionError,
    __version__,
    caputo_apply,
    caputo_monomial_reference,
    report,
    run,
    solve_forward,
)

__all__ = [
    "ConfigError",
    "InstabilityError",
    "PreconditionError",
    "__version__",
    "caputo_apply",
    "caputo_monomial_reference",
    "report",
    "run",
    "solve_forward",
]
