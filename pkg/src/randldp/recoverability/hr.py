"""Recoverable Hadamard response and its key-entropy bounds.

The output space ``[K]``, ``K = B * b``, is cut into ``B`` blocks of ``b``
outputs.  Inputs are spread evenly over the blocks.  Inside a block the
inputs take, in turn, the +1 support of a Hadamard column and then its
complement, so every output of the block is claimed by about half of the
block's inputs.  Key indices are then assigned by
:func:`factorize_symmetric` and the result is checked exhaustively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ProbVec, hadamard_matrix, shannon_entropy
from ..errors import ConstructionError, DomainError, InfeasibleError
from ..mechanisms import KeyedMechanism, Mechanism, induce_mechanism
from .factorize import factorize_symmetric

LN2 = math.log(2.0)
HR_MAX_K = 1024


@dataclass(frozen=True)
class HRParams:
    k: int
    epsilon: float
    K: int
    B: int
    b: int
    s: int
    key_dist: ProbVec


def _pow2_ceil_log(v: float) -> int:
    return math.ceil(math.log2(v) - 1e-12)


def hr_params(epsilon: float, k: int) -> HRParams:
    """Block sizes and the two-level key distribution over ``[K]``.

    ``B`` is floored at 1 so that ``epsilon = 0`` stays well defined.
    """
    if k < 2 or k > HR_MAX_K:
        raise DomainError(f"need 2 <= k <= {HR_MAX_K}, got {k}")
    if not (epsilon >= 0.0 and math.isfinite(epsilon)):
        raise DomainError(f"epsilon must be finite and >= 0, got {epsilon}")
    m = min(math.exp(epsilon), 2.0 * k)
    B = max(1, 2 ** (_pow2_ceil_log(m) - 1)) if m > 1.0 else 1
    b = 2 ** _pow2_ceil_log(k / B + 1.0)
    K = B * b
    s = b // 2
    e = math.exp(epsilon)
    z = s * e + K - s
    key = np.concatenate([np.full(K - s, 1.0 / z), np.full(s, e / z)])
    return HRParams(k, float(epsilon), K, B, b, s, ProbVec(key))


def hr_output_sets(params: HRParams) -> list[np.ndarray]:
    """High-probability output sets ``C_x`` (0-indexed), each of size ``s``."""
    k, B, b = params.k, params.B, params.b
    H = hadamard_matrix(b)
    base, extra = divmod(k, B)
    sets = []
    for block in range(B):
        count = base + (1 if block < extra else 0)
        for t in range(count):
            col = H[:, t // 2 + 1]
            local = np.flatnonzero(col == (1 if t % 2 == 0 else -1))
            sets.append(block * b + local)
    return sets


def hr_mechanism(params: HRParams) -> Mechanism:
    e = math.exp(params.epsilon)
    z = params.s * e + params.K - params.s
    rows = np.full((params.k, params.K), 1.0 / z)
    for x, C in enumerate(hr_output_sets(params)):
        rows[x, C] = e / z
    return Mechanism(rows)


def verify_recoverability(km: KeyedMechanism) -> bool:
    """Exhaustive check that every ``(y, u)`` pair is produced by at most one input."""
    return km.is_recoverable()


def hr_construct(epsilon: float, k: int) -> tuple[HRParams, KeyedMechanism]:
    params = hr_params(epsilon, k)
    Q = hr_mechanism(params)
    try:
        km = factorize_symmetric(Q)
    except InfeasibleError as exc:
        raise ConstructionError(f"no recoverable key assignment for k={k}, epsilon={epsilon}: {exc}") from exc
    if not verify_recoverability(km):
        raise ConstructionError("key assignment failed the recoverability check")
    if not np.allclose(induce_mechanism(km).rows, Q.rows, rtol=0.0, atol=1e-12):
        raise ConstructionError("key assignment does not reproduce the mechanism")
    if shannon_entropy(km.key_dist) - shannon_entropy(params.key_dist) > 1e-9:
        raise ConstructionError("factorized key differs from the block key distribution")
    return params, km


def hr_upper_bits(epsilon: float, k: int) -> float:
    e = math.exp(epsilon)
    if epsilon <= math.log(k) + 1.0:
        nats = math.log(2 * k * (3 * e - 1) / e) - epsilon * e / (3 * e - 1)
    else:
        nats = math.log(e + 4 * k - 1) - epsilon * e / (e + 4 * k - 1)
    return nats / LN2


def min_lower_bits(epsilon: float, k: int) -> float:
    e = math.exp(epsilon)
    if epsilon <= math.log(k):
        em1 = math.expm1(epsilon)
        denom = e + em1**2 / (e * (epsilon - 1.0) + 1.0) - 1.0
        nats = math.log(k * epsilon * e / em1) - epsilon * e / denom
    else:
        nats = math.log(e + k - 1) - epsilon * e / (e + k - 1)
    return nats / LN2


def hr_entropy_bounds(epsilon: float, k: int) -> tuple[float, float, float]:
    """``(hr_upper, min_lower, gap)`` in bits."""
    if not epsilon > 0.0:
        raise DomainError(f"need epsilon > 0, got {epsilon}")
    if k < 2:
        raise DomainError(f"need k >= 2, got {k}")
    up = hr_upper_bits(epsilon, k)
    lo = min_lower_bits(epsilon, k)
    return up, lo, up - lo
