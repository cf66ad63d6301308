"""Privatization mechanisms as conditional laws and as key-factored maps.

A :class:`Mechanism` is a row-stochastic ``k x m`` matrix ``Q[x, y]``.
A :class:`KeyedMechanism` draws a key ``u`` from ``key_dist`` and applies a
deterministic table ``g(x, u) -> y``; its conditional law sums key masses
that land on the same output.  Symbols are 0-indexed in arrays; the JSON
form uses 1-indexed outputs in ``map``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import ProbVec, as_probvec, binary_entropy, inverse_binary_entropy, shannon_entropy
from .errors import DomainError, ShapeError, SizeError

RAPPOR_MAX_K = 16


@dataclass(frozen=True, eq=False)
class Mechanism:
    """Row-stochastic conditional law ``rows[x, y] = Q(y | x)``."""

    rows: np.ndarray

    def __init__(self, rows):
        arr = np.array(rows, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"mechanism rows must form a non-empty 2-D array, got shape {arr.shape}")
        normalized = np.vstack([ProbVec(r).probs for r in arr])
        normalized.setflags(write=False)
        object.__setattr__(self, "rows", normalized)

    @property
    def input_size(self) -> int:
        return int(self.rows.shape[0])

    @property
    def output_size(self) -> int:
        return int(self.rows.shape[1])

    def to_dict(self) -> dict:
        return {"k": self.input_size, "m": self.output_size, "rows": self.rows.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Mechanism":
        mech = cls(doc["rows"])
        if mech.input_size != doc["k"] or mech.output_size != doc["m"]:
            raise ShapeError("declared k/m do not match rows")
        return mech

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True, eq=False)
class KeyedMechanism:
    """Key distribution plus deterministic output table ``table[x, u] = y``."""

    key_dist: ProbVec
    table: np.ndarray
    output_size: int

    def __init__(self, key_dist, table, output_size: int | None = None):
        q = as_probvec(key_dist)
        tab = np.array(table, dtype=np.int64)
        if tab.ndim != 2 or tab.shape[1] != q.alphabet_size:
            raise ShapeError(
                f"map must be k x {q.alphabet_size}, got shape {tab.shape}"
            )
        m = int(tab.max()) + 1 if output_size is None else int(output_size)
        if tab.min() < 0 or tab.max() >= m:
            raise ShapeError("map entries must lie in [0, m)")
        tab.setflags(write=False)
        object.__setattr__(self, "key_dist", q)
        object.__setattr__(self, "table", tab)
        object.__setattr__(self, "output_size", m)

    @property
    def input_size(self) -> int:
        return int(self.table.shape[0])

    @property
    def key_size(self) -> int:
        return self.key_dist.alphabet_size

    def key_entropy(self) -> float:
        return shannon_entropy(self.key_dist)

    def apply(self, x: int, u: int) -> int:
        return int(self.table[x, u])

    def is_recoverable(self) -> bool:
        """True when ``(y, u)`` determines ``x``: each key column has distinct outputs."""
        k = self.input_size
        for u in range(self.key_size):
            if np.unique(self.table[:, u]).size != k:
                return False
        return True

    def to_dict(self) -> dict:
        doc = induce_mechanism(self).to_dict()
        doc["key_dist"] = self.key_dist.probs.tolist()
        doc["map"] = (self.table + 1).tolist()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "KeyedMechanism":
        table = np.asarray(doc["map"], dtype=np.int64) - 1
        km = cls(doc["key_dist"], table, output_size=doc["m"])
        if km.input_size != doc["k"]:
            raise ShapeError("declared k does not match map")
        return km

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def induce_mechanism(km: KeyedMechanism) -> Mechanism:
    """Conditional law ``Q(y|x) = sum of q_u over keys with g(x,u) = y``."""
    k, m = km.input_size, km.output_size
    rows = np.zeros((k, m))
    q = km.key_dist.probs
    for x in range(k):
        rows[x] = np.bincount(km.table[x], weights=q, minlength=m)
    return Mechanism(rows)


def audit_privacy(Q: Mechanism) -> float:
    """Largest log-likelihood ratio ``ln Q(y|x)/Q(y|x')`` over all ``x, x', y``.

    Returns ``inf`` if some output is possible under one input and
    impossible under another.  Columns that are zero for every input are
    skipped.
    """
    rows = Q.rows
    live = rows.max(axis=0) > 0.0
    if not np.any(live):
        return 0.0
    cols = rows[:, live]
    if np.any(cols.min(axis=0) == 0.0):
        return math.inf
    logs = np.log(cols)
    return float(max(0.0, (logs.max(axis=0) - logs.min(axis=0)).max()))


def audit_randomness(Q: Mechanism) -> float:
    """Largest conditional output entropy ``H(Y | X = x)`` in bits."""
    return max(shannon_entropy(row) for row in Q.rows)


def make_randomized_response(epsilon: float, k: int) -> Mechanism:
    """k-ary randomized response: keep ``x`` with weight ``e^eps``, else uniform."""
    _check_epsilon(epsilon)
    if k < 2:
        raise DomainError(f"randomized response needs k >= 2, got {k}")
    e = math.exp(epsilon)
    rows = np.full((k, k), 1.0 / (k - 1 + e))
    np.fill_diagonal(rows, e / (k - 1 + e))
    return Mechanism(rows)


def rappor_flip_probability(epsilon: float) -> float:
    """Per-bit flip probability giving ratio ``e^eps`` between one-hot codes."""
    return 1.0 / (math.exp(epsilon / 2.0) + 1.0)


def make_rappor(epsilon: float, k: int) -> KeyedMechanism:
    """Unary encoding with independent bit flips, realized as XOR with a key.

    Outputs and keys are both ``k``-bit patterns encoded as integers, bit
    ``i`` standing for symbol ``i``.
    """
    _check_epsilon(epsilon)
    if k < 2:
        raise DomainError(f"RAPPOR needs k >= 2, got {k}")
    if k > RAPPOR_MAX_K:
        raise SizeError(f"RAPPOR output alphabet 2^{k} is too large to materialize")
    f = rappor_flip_probability(epsilon)
    patterns = np.arange(1 << k, dtype=np.int64)
    ones = np.array([bin(int(v)).count("1") for v in patterns])
    key = (f ** ones) * ((1.0 - f) ** (k - ones))
    onehot = (1 << np.arange(k, dtype=np.int64))[:, None]
    table = np.bitwise_xor(onehot, patterns[None, :])
    return KeyedMechanism(key, table, output_size=1 << k)


def truth_probability(epsilon: float, R: float) -> float:
    """Probability ``q`` of answering 1 when ``x`` is in the queried set.

    Uses ``e^eps/(e^eps+1)`` once the budget reaches the critical entropy,
    otherwise the smaller root of ``H2(q) = R``.
    """
    _check_epsilon(epsilon)
    if not R >= 0.0:
        raise DomainError(f"randomness budget must be >= 0, got {R}")
    e = math.exp(epsilon)
    q_high = e / (e + 1.0)
    if R >= binary_entropy(q_high):
        return q_high
    return inverse_binary_entropy(min(R, 1.0))


def make_binary_hadamard(epsilon: float, R: float, B: Iterable[int], k: int) -> Mechanism:
    """Yes/no mechanism answering "is x in B?" under an entropy budget ``R``.

    ``B`` holds 1-indexed symbols of ``[k]``.  Output 1 has probability ``q``
    inside ``B`` and ``q / e^eps`` outside.
    """
    members = _subset_mask(B, k)
    q = truth_probability(epsilon, R)
    p1 = np.where(members, q, q / math.exp(epsilon))
    return Mechanism(np.column_stack([1.0 - p1, p1]))


def _subset_mask(B: Iterable[int], k: int) -> np.ndarray:
    if k < 1:
        raise DomainError(f"need k >= 1, got {k}")
    mask = np.zeros(k, dtype=bool)
    for b in B:
        if not 1 <= int(b) <= k:
            raise DomainError(f"subset element {b} outside [1, {k}]")
        mask[int(b) - 1] = True
    return mask


def _check_epsilon(epsilon: float) -> None:
    if not (epsilon >= 0.0 and math.isfinite(epsilon)):
        raise DomainError(f"epsilon must be finite and >= 0, got {epsilon}")
