"""Recoverable privatization of a database of ``T`` samples.

The runtime form applies ``T`` independent single-sample mechanisms
``y_t = x_t + u_t (mod k)``.  A monolithic mirror indexes one key over
``[k]^T`` through the lexicographic bijection and is used to check that
both forms induce the same conditional law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from ..core import ProbVec, shannon_entropy
from ..errors import DomainError, SizeError
from .keys import optimal_key
from .xor import XorRecMechanism, build_xor_rec

MAX_DATABASES = 10**6
MAX_DENSE = 4096


@dataclass(frozen=True, eq=False)
class TSampleMechanism:
    k: int
    T: int
    epsilon: float
    factors: tuple[XorRecMechanism, ...]

    @property
    def size(self) -> int:
        return self.k**self.T

    def key_dist(self) -> ProbVec:
        """Product key distribution over ``[k]^T`` in lexicographic order."""
        self._require_dense()
        return ProbVec(reduce(np.kron, [f.key_dist.probs for f in self.factors]))

    def key_entropy(self) -> float:
        return float(sum(shannon_entropy(f.key_dist) for f in self.factors))

    def matrix(self) -> np.ndarray:
        """Conditional law of the product mechanism over lexicographic indices."""
        self._require_dense()
        return reduce(np.kron, [f.matrix() for f in self.factors])

    def monolithic_matrix(self) -> np.ndarray:
        """``Q(y|x) = q_{f(y - x)}`` with a single key over ``[k]^T``."""
        self._require_dense()
        digits = _digits(self.k, self.T)
        diff = (digits[None, :, :] - digits[:, None, :]) % self.k
        index = diff @ (self.k ** np.arange(self.T - 1, -1, -1))
        return self.key_dist().probs[index]

    def privatize(self, xs, us) -> tuple[int, ...]:
        return tuple(f.privatize(x, u) for f, x, u in zip(self.factors, xs, us))

    def recover(self, ys, us) -> tuple[int, ...]:
        return tuple(f.recover(y, u) for f, y, u in zip(self.factors, ys, us))

    def _require_dense(self) -> None:
        if self.size > MAX_DENSE:
            raise SizeError(f"k^T = {self.size} is too large to materialize densely")


def _digits(k: int, T: int) -> np.ndarray:
    """Row ``i`` holds the base-``k`` digits of ``i``, most significant first."""
    idx = np.arange(k**T)
    return np.stack([(idx // k ** (T - 1 - t)) % k for t in range(T)], axis=1)


def t_sample_mechanism(epsilon: float, k: int, T: int) -> TSampleMechanism:
    if T < 1:
        raise DomainError(f"need T >= 1, got {T}")
    if k < 2:
        raise DomainError(f"need k >= 2, got {k}")
    if k**T > MAX_DATABASES:
        raise SizeError(f"k^T = {k**T} exceeds {MAX_DATABASES}")
    single = build_xor_rec(optimal_key(epsilon, k).dist, epsilon)
    mech = TSampleMechanism(k, T, float(epsilon), tuple(single for _ in range(T)))
    if mech.size <= MAX_DENSE and not np.allclose(mech.matrix(), mech.monolithic_matrix(), rtol=0, atol=1e-15):
        raise AssertionError("product and monolithic forms disagree")
    return mech


def audit_database_dp(mech: TSampleMechanism) -> float:
    """Largest ``ln Q(y|x)/Q(y|x')`` over databases differing in one entry.

    Small instances are audited on the dense matrix.  Larger ones use the
    product structure: for neighbours differing at coordinate ``t`` the
    ratio equals that of factor ``t``, every other factor cancelling.
    """
    if mech.size <= MAX_DENSE:
        logQ = np.log(mech.matrix())
        digits = _digits(mech.k, mech.T)
        weights = mech.k ** np.arange(mech.T - 1, -1, -1)
        worst = 0.0
        for t in range(mech.T):
            for shift in range(1, mech.k):
                moved = digits.copy()
                moved[:, t] = (moved[:, t] + shift) % mech.k
                neighbour = moved @ weights
                worst = max(worst, float((logQ - logQ[neighbour]).max()))
        return worst
    worst = 0.0
    for f in mech.factors:
        logQ = np.log(f.matrix())
        worst = max(worst, float((logQ[:, None, :] - logQ[None, :, :]).max()))
    return worst
