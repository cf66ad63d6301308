"""Recoverable mechanism ``y = x + u (mod k)`` and an estimator for the key-less analyst.

Public methods use the 1-indexed alphabet ``[k] = {1, ..., k}``, in which
symbol 1 is the group identity.  Arrays are 0-indexed internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..core import ProbVec, as_probvec
from ..errors import DomainError, PrivacyError
from ..mechanisms import KeyedMechanism, Mechanism

RATIO_TOLERANCE = 1e-12
SINGULAR_COND = 1e12


@dataclass(frozen=True, eq=False)
class XorRecMechanism:
    key_dist: ProbVec
    epsilon: float

    @property
    def k(self) -> int:
        return self.key_dist.alphabet_size

    def privatize(self, x: int, u: int) -> int:
        """Output for input ``x`` under key ``u`` (both 1-indexed)."""
        self._check(x, u)
        return (x - 1 + u - 1) % self.k + 1

    def recover(self, y: int, u: int) -> int:
        """Unique input that yields ``y`` under key ``u``."""
        self._check(y, u)
        return (y - u) % self.k + 1

    def matrix(self) -> np.ndarray:
        """``Q[x, y] = q[(y - x) mod k]`` (0-indexed)."""
        idx = (np.arange(self.k)[None, :] - np.arange(self.k)[:, None]) % self.k
        return self.key_dist.probs[idx]

    def mechanism(self) -> Mechanism:
        return Mechanism(self.matrix())

    def keyed(self) -> KeyedMechanism:
        table = (np.arange(self.k)[:, None] + np.arange(self.k)[None, :]) % self.k
        return KeyedMechanism(self.key_dist, table, output_size=self.k)

    def _check(self, a: int, b: int) -> None:
        if not (1 <= a <= self.k and 1 <= b <= self.k):
            raise DomainError(f"symbols must lie in [1, {self.k}], got {a}, {b}")


def key_ratio_epsilon(key_dist) -> float:
    """``ln(max q / min q)``, infinite if some key has zero mass."""
    probs = as_probvec(key_dist).probs
    lo = probs.min()
    return math.inf if lo == 0.0 else float(math.log(probs.max() / lo))


def build_xor_rec(key_dist, epsilon: float | None = None) -> XorRecMechanism:
    """Recoverable mechanism over the cyclic group of order ``len(key_dist)``.

    When ``epsilon`` is given the key's max/min ratio must not exceed
    ``e^epsilon``; otherwise the level implied by the key is used.
    """
    q = as_probvec(key_dist)
    achieved = key_ratio_epsilon(q)
    if epsilon is None:
        epsilon = achieved
    elif achieved > epsilon + RATIO_TOLERANCE:
        raise PrivacyError(f"key ratio gives epsilon {achieved:.6g} > declared {epsilon:.6g}")
    return XorRecMechanism(q, float(epsilon))


def recover(y: int, u: int, mech: XorRecMechanism) -> int:
    return mech.recover(y, u)


class EveEstimate(NamedTuple):
    estimate: np.ndarray
    pseudo_inverse: bool


def eve_estimate(outputs, mech: XorRecMechanism, allow_pinv: bool = False) -> EveEstimate:
    """Invert the mechanism on the empirical frequencies of 1-indexed outputs."""
    ys = np.asarray(outputs, dtype=np.int64)
    if ys.size == 0:
        raise DomainError("need at least one output")
    if ys.min() < 1 or ys.max() > mech.k:
        raise DomainError(f"outputs must lie in [1, {mech.k}]")
    freq = np.bincount(ys - 1, minlength=mech.k) / ys.size
    return eve_estimate_from_frequencies(freq, mech, allow_pinv)


def eve_estimate_from_frequencies(freq, mech: XorRecMechanism, allow_pinv: bool = False) -> EveEstimate:
    QT = mech.matrix().T
    if np.linalg.cond(QT) > SINGULAR_COND:
        if not allow_pinv:
            raise np.linalg.LinAlgError("mechanism matrix is singular; pass allow_pinv=True")
        return EveEstimate(np.linalg.pinv(QT) @ np.asarray(freq, dtype=float), True)
    return EveEstimate(np.linalg.solve(QT, np.asarray(freq, dtype=float)), False)
