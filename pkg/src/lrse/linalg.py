"""Dense linear algebra for the split-vector encryption.

Seeded generation of well-conditioned invertible matrices, inversion with a
conditioning guard, and transpose products. Backed by LAPACK through numpy;
the contracts are residual bounds, not algorithms.
"""

from __future__ import annotations

import numpy as np

from .errors import ConditioningError

DEFAULT_COND_MAX = 1e6
INVERT_COND_LIMIT = 1e12
MAX_REDRAWS = 64

# One Newton step on the inverse is cheap at small orders and removes the
# accuracy tail of ill-conditioned draws; at large orders LU accuracy is
# already well inside the residual contract.
_REFINE_MAX_ORDER = 1024

SeedLike = "int | np.random.SeedSequence"


def _norm1(m: np.ndarray) -> float:
    return float(np.abs(m).sum(axis=0).max())


def one_norm_cond(m: np.ndarray) -> float:
    """1-norm condition number; inf when the matrix is numerically singular."""
    m = np.asarray(m, dtype=np.float64)
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        return float("inf")
    cond = _norm1(m) * _norm1(inv)
    return cond if np.isfinite(cond) else float("inf")


def scaled_cond_max(d: int) -> float:
    """Conditioning bound loose enough for random Gaussian matrices of order d.

    The 1-norm condition of such matrices grows with d, so the default
    bound would reject nearly every draw at dictionary-sized orders.
    """
    return max(DEFAULT_COND_MAX, 100.0 * float(d) ** 1.5)


def random_invertible(d: int, seed, cond_max: float = DEFAULT_COND_MAX) -> np.ndarray:
    """Seeded random matrix with 1-norm condition at most cond_max.

    Entries are i.i.d. standard normal; draws failing the bound are
    rejected and redrawn from the same stream, so the result is
    deterministic in the seed.
    """
    if d < 1:
        raise ValueError(f"order must be at least 1, got {d}")
    if not cond_max > 1.0:
        raise ValueError(f"cond_max must exceed 1, got {cond_max}")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_REDRAWS):
        m = rng.standard_normal((d, d))
        if one_norm_cond(m) <= cond_max:
            return m
    raise ConditioningError(
        f"no matrix of order {d} with condition <= {cond_max:g} after {MAX_REDRAWS} draws"
    )


def invert(m: np.ndarray) -> np.ndarray:
    """Inverse of a square matrix, guarded against ill-conditioning.

    For inputs passing random_invertible's default bound the round-trip
    residual max|M @ inv(M) - I| stays below 1e-8.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        raise ConditioningError("matrix is singular") from None
    cond = _norm1(m) * _norm1(inv)
    if not np.isfinite(cond) or cond > INVERT_COND_LIMIT:
        raise ConditioningError(f"condition estimate {cond:g} exceeds {INVERT_COND_LIMIT:g}")
    d = m.shape[0]
    if d <= _REFINE_MAX_ORDER:
        inv = inv @ (2.0 * np.eye(d) - m @ inv)
    return inv


def mat_vec_T(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Transpose product M^T v."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.ndim != 2 or v.ndim != 1 or m.shape[0] != v.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {m.shape}, vector {v.shape}")
    return m.T @ v
