"""Entropy functions, probability vectors and Sylvester-Hadamard matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DomainError

SUM_TOLERANCE = 1e-9


def binary_entropy(p):
    """Binary entropy ``H2(p)`` in bits, with ``0 log 0 = 0``.

    Accepts a scalar or an array; scalars give a Python float.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0 + SUM_TOLERANCE):
        raise DomainError(f"binary entropy needs p in [0, 1], got {p!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(_xlog2x(arr) + _xlog2x(1.0 - arr))
    if h.ndim == 0:
        return float(h)
    return h


def _xlog2x(a: np.ndarray) -> np.ndarray:
    return np.where(a > 0.0, a * np.log2(np.where(a > 0.0, a, 1.0)), 0.0)


def inverse_binary_entropy(R: float) -> float:
    """Return the unique ``p`` in ``[0, 0.5]`` with ``H2(p) = R``.

    Bisection on the increasing branch; runs until the bracket stops
    shrinking, which is well below the 1e-12 target.
    """
    R = float(R)
    if not np.isfinite(R) or R < 0.0 or R > 1.0:
        raise DomainError(f"inverse binary entropy needs R in [0, 1], got {R}")
    if R == 0.0:
        return 0.0
    if R == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if binary_entropy(mid) < R:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class ProbVec:
    """A probability distribution over the alphabet ``[k]``.

    Inputs whose sum is within ``1e-9`` of one are renormalized; anything
    further off is rejected.
    """

    probs: np.ndarray

    def __init__(self, probs: Iterable[float]):
        arr = np.array(probs, dtype=float).reshape(-1)
        if arr.size < 1:
            raise DomainError("a distribution needs at least one symbol")
        if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0 + SUM_TOLERANCE):
            raise DomainError("probabilities must lie in [0, 1]")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        arr = np.minimum(arr / total, 1.0)
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def alphabet_size(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.alphabet_size

    def __iter__(self):
        return iter(self.probs.tolist())

    def __getitem__(self, i):
        return self.probs[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbVec):
            return NotImplemented
        return bool(np.array_equal(self.probs, other.probs))

    def __repr__(self) -> str:
        return f"ProbVec({self.probs.tolist()!r})"

    def entropy(self) -> float:
        return shannon_entropy(self)


def as_probvec(d) -> ProbVec:
    return d if isinstance(d, ProbVec) else ProbVec(d)


def shannon_entropy(d) -> float:
    """Shannon entropy of a distribution, in bits."""
    p = as_probvec(d).probs
    return float(-_xlog2x(p).sum()) + 0.0


@dataclass(frozen=True)
class PrivacyBudget:
    """Privacy level ``epsilon`` (natural-log units) and randomness budget in bits."""

    epsilon: float
    randomness_bits: float = float("inf")

    def __post_init__(self):
        if not self.epsilon >= 0.0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.randomness_bits >= 0.0:
            raise DomainError(f"randomness budget must be >= 0, got {self.randomness_bits}")


def is_power_of_two(K: int) -> bool:
    return isinstance(K, (int, np.integer)) and K >= 1 and (K & (K - 1)) == 0


def next_power_of_two(k: int) -> int:
    """Smallest power of two that is ``>= k``."""
    if k < 1:
        raise DomainError(f"need k >= 1, got {k}")
    return 1 << (int(k) - 1).bit_length()


def hadamard_matrix(K: int) -> np.ndarray:
    """Sylvester-Hadamard matrix of order ``K`` with entries in {+1, -1}."""
    if not is_power_of_two(K):
        raise DomainError(f"Hadamard order must be a power of 2, got {K}")
    H = np.ones((1, 1), dtype=np.int64)
    while H.shape[0] < K:
        H = np.block([[H, H], [H, -H]])
    H.setflags(write=False)
    return H


def column_support(K: int, j: int) -> set[int]:
    """Rows (1-indexed) holding +1 in column ``j`` (1-indexed) of ``H_K``."""
    if not is_power_of_two(K):
        raise DomainError(f"Hadamard order must be a power of 2, got {K}")
    if not 1 <= j <= K:
        raise DomainError(f"column index {j} outside [1, {K}]")
    col = hadamard_matrix(K)[:, j - 1]
    return {int(i) + 1 for i in np.flatnonzero(col == 1)}
