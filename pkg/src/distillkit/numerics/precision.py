"""Precision selection and finiteness guards."""

from typing import Any

import numpy as np

from distillkit.errors import NonFiniteError
from distillkit.numerics.models import Precision

VERIFY_DTYPE = np.float64
TRAIN_DTYPE = np.float32


def resolve_dtype(precision: Precision | str) -> np.dtype[Any]:
    """Map a precision name to its numpy dtype."""
    return np.dtype(Precision(precision).value)


def assert_finite(name: str, value: Any) -> None:
    """Raise :class:`NonFiniteError` when ``value`` holds a NaN or Inf."""
    array = np.asarray(value)
    if not np.all(np.isfinite(array)):
        bad = int(np.size(array) - np.count_nonzero(np.isfinite(array)))
        raise NonFiniteError(f"{name} contains {bad} non-finite value(s)")
