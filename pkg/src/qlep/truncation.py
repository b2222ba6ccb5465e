"""Stampacchia truncation operators.

    T_k(s) = max{-k, min{s, k}}        (truncate)
    G_k(s) = s - T_k(s)                (remainder)

Both act on scalars, numpy arrays, and nodal fields.
"""

from __future__ import annotations

import numpy as np


def _check_level(k: float) -> None:
    if not k > 0:
        raise ValueError(f"truncation level must be positive, got {k}")


def truncate(s, k: float):
    """T_k(s); |result| <= k. Works on scalars and arrays."""
    _check_level(k)
    if np.ndim(s) == 0:
        return max(-k, min(float(s), k))
    return np.clip(s, -k, k)


def remainder(s, k: float):
    """G_k(s) = s - T_k(s); T_k(s) + G_k(s) == s bitwise."""
    _check_level(k)
    return s - truncate(s, k)


def truncate_field(f, k: float):
    """Componentwise T_k on a Field or VectorField, preserving the mesh."""
    _check_level(k)
    return f.replace_values(np.clip(f.values, -k, k))
