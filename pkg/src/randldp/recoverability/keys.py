"""Minimum-entropy keys for recoverable mechanisms, key trimming and reduction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ProbVec, as_probvec, shannon_entropy
from ..errors import ContractError, DomainError
from ..mechanisms import KeyedMechanism, induce_mechanism


@dataclass(frozen=True)
class OptimalKeySpec:
    k: int
    epsilon: float
    l_real: float
    s_star: int
    dist: ProbVec
    entropy_bits: float

    def to_dict(self) -> dict:
        return {"k": self.k, "epsilon": self.epsilon, "s_star": self.s_star, "dist": self.dist.probs.tolist()}


def two_level_key(epsilon: float, k: int, s: int) -> ProbVec:
    """``k - s`` light entries ``1/t`` followed by ``s`` heavy entries ``e^eps/t``."""
    if not 0 <= s <= k:
        raise DomainError(f"s = {s} outside [0, {k}]")
    e = math.exp(epsilon)
    t = s * e + k - s
    return ProbVec(np.concatenate([np.full(k - s, 1.0 / t), np.full(s, e / t)]))


def stationary_point(epsilon: float, k: int) -> float:
    """Real minimizer ``l`` of the key entropy over the number of heavy symbols."""
    if epsilon < 1e-4:
        # series limit; the closed form cancels catastrophically here
        return k * (0.5 - epsilon / 6.0)
    e = math.expm1(epsilon)
    return k * (math.exp(epsilon) * (epsilon - 1.0) + 1.0) / e**2


def optimal_key(epsilon: float, k: int) -> OptimalKeySpec:
    """Smallest-entropy key distribution over ``[k]`` whose max/min ratio is ``e^eps``."""
    if k < 2:
        raise DomainError(f"need k >= 2, got {k}")
    if not (epsilon >= 0.0 and math.isfinite(epsilon)):
        raise DomainError(f"epsilon must be finite and >= 0, got {epsilon}")
    if epsilon == 0.0:
        dist = ProbVec(np.full(k, 1.0 / k))
        return OptimalKeySpec(k, 0.0, math.nan, 0, dist, shannon_entropy(dist))
    l = stationary_point(epsilon, k)
    cands = sorted({s for s in (math.floor(l), math.ceil(l)) if 1 <= s <= k - 1}) or [1]
    best = None
    for s in cands:
        dist = two_level_key(epsilon, k, s)
        h = shannon_entropy(dist)
        if best is None or h < best[2]:
            best = (s, dist, h)
    s, dist, h = best
    return OptimalKeySpec(k, float(epsilon), l, s, dist, h)


def storage_savings(epsilon: float, k: int) -> tuple[float, float, float]:
    """``(key_bits, input_bits, gain)``: saving from storing a key instead of the input."""
    key_bits = optimal_key(epsilon, k).entropy_bits
    input_bits = math.log2(k)
    return key_bits, input_bits, (input_bits - key_bits) / input_bits


def trim_key(q) -> ProbVec:
    """Drop the least likely symbol (the last one on ties) and renormalize."""
    probs = as_probvec(q).probs
    if probs.size < 2:
        raise DomainError("cannot trim a single-symbol distribution")
    drop = probs.size - 1 - int(np.argmin(probs[::-1]))
    kept = np.delete(probs, drop)
    if kept.sum() <= 0.0:
        raise DomainError("trimming would leave no probability mass")
    return ProbVec(kept / kept.sum())


def reduce_key(km: KeyedMechanism, output: int | None = None) -> ProbVec:
    """Key distribution over ``[k]`` with no more entropy than ``km``'s key.

    Picks an output ``y`` reached by the most likely key, collects the
    per-input masses ``Q(y|x)`` together with the masses of keys that never
    produce ``y``, keeps the ``k`` largest and renormalizes.  ``output``
    (0-indexed) forces the choice of ``y``; otherwise the admissible output
    giving the smallest entropy is used, ties going to the smaller index.
    """
    if not km.is_recoverable():
        raise ContractError("key reduction needs a recoverable keyed mechanism")
    k, m = km.input_size, km.key_size
    if m < k:
        raise ContractError(f"key alphabet ({m}) smaller than input alphabet ({k})")
    if m == k:
        return km.key_dist
    q = km.key_dist.probs
    Q = induce_mechanism(km).rows
    top = int(np.argmax(q))
    admissible = sorted({int(y) for y in km.table[:, top]})
    if output is not None:
        if output not in admissible:
            raise ContractError(f"output {output} is not produced by the most likely key")
        admissible = [output]
    best = None
    for y in admissible:
        used = np.zeros(m, dtype=bool)
        used[np.flatnonzero((km.table == y).any(axis=0))] = True
        masses = np.concatenate([Q[:, y], q[~used]])
        kept = np.sort(masses)[::-1][:k]
        cand = ProbVec(kept / kept.sum())
        h = shannon_entropy(cand)
        if best is None or h < best[0] - 1e-15:
            best = (h, cand)
    return best[1]
