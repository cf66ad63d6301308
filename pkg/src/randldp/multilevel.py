"""Cascaded binary mechanism serving ``d`` analysts at decreasing privacy levels.

Each user holds ``d`` independent key bits ``U^j ~ Bernoulli(q_j)``.  The
first virtual output is ``Y^1 = [x in B] xor U^1`` and each later one XORs in
another key bit, ``Y^j = Y^{j-1} xor U^j``.  Only ``Y^d`` is published.
Analyst ``j`` receives ``L^j = U^{j+1} xor ... xor U^d`` and recovers
``Y^j = Y^d xor L^j``.

Caveat: analysts that pool their keys can reconstruct a less private view.
The mechanism makes no claim about collusion.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .core import binary_entropy, hadamard_matrix, next_power_of_two
from .errors import ScheduleError
from .mechanisms import Mechanism

EXHAUSTIVE_MAX_LEVELS = 20


@dataclass(frozen=True)
class LevelSchedule:
    epsilons: tuple[float, ...]
    z: tuple[float, ...]
    q: tuple[float, ...]

    @property
    def depth(self) -> int:
        return len(self.epsilons)


def level_params(epsilons: Sequence[float]) -> LevelSchedule:
    """Key-bit biases for a strictly decreasing list of privacy levels."""
    eps = tuple(float(e) for e in epsilons)
    if not eps:
        raise ScheduleError("need at least one privacy level")
    if any(not (e > 0.0 and math.isfinite(e)) for e in eps):
        raise ScheduleError(f"privacy levels must be positive and finite, got {eps}")
    if any(a <= b for a, b in zip(eps, eps[1:])):
        raise ScheduleError(f"privacy levels must be strictly decreasing, got {eps}")
    z = tuple(1.0 / (math.exp(e) + 1.0) for e in eps)
    q = [z[0]]
    for prev, cur in zip(z, z[1:]):
        q.append((cur - prev) / (1.0 - 2.0 * prev))
    for j, qj in enumerate(q, start=1):
        if not 0.0 < qj < 0.5:
            raise ScheduleError(f"level {j} key bias {qj} is outside (0, 0.5)")
    return LevelSchedule(eps, z, tuple(q))


def privatize_cascade(in_set: bool, bits: Sequence[int]) -> list[int]:
    """All virtual outputs ``[Y^1, ..., Y^d]`` for one user; the last is published."""
    y = int(bool(in_set)) ^ int(bits[0])
    out = [y]
    for b in bits[1:]:
        y ^= int(b)
        out.append(y)
    return out


def analyst_keys(bits: np.ndarray) -> np.ndarray:
    """Per-analyst keys ``L^j`` from a ``(..., d)`` array of key bits.

    Column ``j`` (0-indexed) is the XOR of the bits of levels after ``j``;
    the last column is all zeros.
    """
    bits = np.asarray(bits, dtype=np.int8)
    rev = np.bitwise_xor.accumulate(bits[..., ::-1], axis=-1)[..., ::-1]
    keys = np.zeros_like(bits)
    keys[..., :-1] = rev[..., 1:]
    return keys


def analyst_view(y_d, key):
    """Reconstruct an analyst's virtual output from the published bit and its key."""
    return np.bitwise_xor(np.asarray(y_d, dtype=np.int8), np.asarray(key, dtype=np.int8))


def level_channel(schedule: LevelSchedule, j: int) -> Mechanism:
    """Channel from ``[x in B]`` to ``Y^j`` (1-indexed level).

    Row 0 conditions on ``x in B``, row 1 on ``x not in B``; columns are
    ``Y = 0`` and ``Y = 1``.  Exact marginalization over the key bits is used
    up to 20 levels, then the XOR recursion.
    """
    if not 1 <= j <= schedule.depth:
        raise ScheduleError(f"level {j} outside [1, {schedule.depth}]")
    if j <= EXHAUSTIVE_MAX_LEVELS:
        p_in = _marginalize(schedule.q[:j], True)
        p_out = _marginalize(schedule.q[:j], False)
    else:
        flip = _flip_probability(schedule.q[:j])
        p_in, p_out = 1.0 - flip, flip
    return Mechanism([[1.0 - p_in, p_in], [1.0 - p_out, p_out]])


def _marginalize(q: Sequence[float], in_set: bool) -> float:
    """``Pr[Y^j = 1]`` by summing over all key patterns."""
    total = 0.0
    for bits in itertools.product((0, 1), repeat=len(q)):
        weight = 1.0
        for b, qi in zip(bits, q):
            weight *= qi if b else 1.0 - qi
        if privatize_cascade(in_set, bits)[-1]:
            total += weight
    return total


def _flip_probability(q: Sequence[float]) -> float:
    """Probability that the XOR of independent bits is 1."""
    f = 0.0
    for qi in q:
        f = f * (1.0 - qi) + (1.0 - f) * qi
    return f


def randomness_totals(schedule: LevelSchedule) -> tuple[float, float]:
    """Bits per user for the cascade versus independent per-level mechanisms."""
    proposed = float(sum(binary_entropy(qj) for qj in schedule.q))
    trivial = float(sum(binary_entropy(zj) for zj in schedule.z))
    return proposed, trivial


def sample_key_bits(schedule: LevelSchedule, n: int, seed: int, *words: int) -> np.ndarray:
    """``(n, d)`` key bits; column ``j`` comes from its own stream."""
    cols = [
        (rng.uniforms(seed, n, rng.KEYS, j, *words) < qj).astype(np.int8)
        for j, qj in enumerate(schedule.q)
    ]
    return np.column_stack(cols)


@dataclass
class CascadeRun:
    groups: np.ndarray
    published: np.ndarray
    keys: np.ndarray
    virtual: np.ndarray


def run_cascade(xs: np.ndarray, k: int, schedule: LevelSchedule, seed: int, *words: int) -> CascadeRun:
    """Privatize a cohort: group split as in the single-level scheme, ``d`` key bits per user."""
    from .simulation import assign_groups

    xs = np.asarray(xs, dtype=np.int64)
    K = next_power_of_two(k)
    groups = assign_groups(xs.size, K)
    in_set = (hadamard_matrix(K)[xs, groups] == 1).astype(np.int8)
    bits = sample_key_bits(schedule, xs.size, seed, *words)
    virtual = np.bitwise_xor.accumulate(np.column_stack([in_set ^ bits[:, 0], bits[:, 1:]]), axis=1)
    return CascadeRun(groups=groups, published=virtual[:, -1].copy(), keys=analyst_keys(bits), virtual=virtual)
