from __future__ import annotations

from .dataset import GstDataset


class ConvergenceError(RuntimeError):
    """An optimizer ran out of iterations."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class IllConditionedError(RuntimeError):
    """Linear inversion is numerically unreliable."""


def check_dataset(data) -> GstDataset:
    if not isinstance(data, GstDataset):
        raise TypeError(f"expected a GstDataset, got {type(data).__name__}")
    if len(data) == 0:
        raise ValueError("dataset is empty")
    return data
