"""Exception types shared across the package."""

from __future__ import annotations


class SlabkinError(Exception):
    """Base class for all package errors."""


class ConfigError(SlabkinError, ValueError):
    """Invalid run configuration; ``key`` holds the offending key path when known."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ContractError(SlabkinError, ValueError):
    """A function was called outside its precondition (shape mismatch, unclosed trace, ...)."""


class NumericalError(SlabkinError, ArithmeticError):
    """Non-finite values or a failed linear solve."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(f"step {step}: {message}" if step is not None else message)


class FitError(SlabkinError, ValueError):
    """Not enough usable samples for a decay-rate fit."""
