"""Monte-Carlo estimation with the binary Hadamard scheme.

Pipeline: sample inputs, split users into ``K = 2^ceil(log2 k)`` contiguous
groups, let each user of group ``j`` answer whether its input lies in the
support of Hadamard column ``j``, then invert the Hadamard transform.

Symbols are 0-indexed throughout this module.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import rng
from .core import ProbVec, hadamard_matrix, next_power_of_two
from .errors import ConfigurationError, DomainError, EstimationError
from .mechanisms import truth_probability

LOSS_KINDS = ("l1", "l2sq", "linf")
TASKS = ("distribution", "heavy_hitter")
ROW_FIELDS = ("epsilon", "R", "n", "k", "trial", "loss_l1", "loss_l2sq", "loss_linf")
SUMMARY_FIELDS = ("epsilon", "R", "n", "k", "trials") + tuple(
    f"{stat}_{loss}" for loss in ("loss_l1", "loss_l2sq", "loss_linf") for stat in ("mean", "stderr")
)


def build_distribution(spec, k: int) -> ProbVec:
    """Build a distribution over ``[k]`` from a spec.

    Accepted specs: ``"uniform"``, ``"geometric(0.8)"``, ``"point_mass(1)"``
    (1-indexed symbol), a dict with a ``type`` key, or an explicit list.
    """
    if k < 1:
        raise DomainError(f"need k >= 1, got {k}")
    if isinstance(spec, (list, tuple, np.ndarray)):
        probs = np.asarray(spec, dtype=float)
        if probs.size != k:
            raise DomainError(f"explicit distribution has {probs.size} entries, expected {k}")
        return ProbVec(probs)
    kind, arg = _parse_distribution(spec)
    if kind == "uniform":
        return ProbVec(np.full(k, 1.0 / k))
    if kind == "geometric":
        lam = float(arg)
        if not 0.0 < lam < 1.0:
            raise DomainError(f"geometric parameter must lie in (0, 1), got {lam}")
        w = lam ** np.arange(k) * (1.0 - lam)
        return ProbVec(w / w.sum())
    if kind == "point_mass":
        j = int(arg)
        if not 1 <= j <= k:
            raise DomainError(f"point mass at {j} outside [1, {k}]")
        probs = np.zeros(k)
        probs[j - 1] = 1.0
        return ProbVec(probs)
    if kind == "explicit":
        return build_distribution(list(arg), k)
    raise DomainError(f"unknown distribution {spec!r}")


def _parse_distribution(spec):
    if isinstance(spec, dict):
        kind = spec.get("type")
        arg = spec.get("lambda", spec.get("index", spec.get("probs")))
        return kind, arg
    if isinstance(spec, str):
        m = re.fullmatch(r"\s*([a-z_\-]+)\s*(?:[(:]\s*([^)]*?)\s*\)?)?\s*", spec)
        if m:
            return m.group(1).replace("-", "_"), m.group(2)
    raise DomainError(f"cannot parse distribution spec {spec!r}")


def sample_inputs(p, n: int, seed: int, *words: int) -> np.ndarray:
    """``n`` i.i.d. symbols by inverse CDF; user ``i`` uses the ``i``-th uniform."""
    probs = ProbVec(p).probs if not isinstance(p, ProbVec) else p.probs
    cdf = np.cumsum(probs)
    u = rng.uniforms(seed, n, rng.INPUTS, *words)
    xs = np.searchsorted(cdf, u, side="right")
    return np.minimum(xs, probs.size - 1)


def assign_groups(n: int, K: int) -> np.ndarray:
    """Contiguous groups; the first ``n mod K`` groups get one extra user."""
    if K < 1:
        raise ConfigurationError(f"need K >= 1, got {K}")
    if n < K:
        raise ConfigurationError(f"n = {n} users cannot fill K = {K} groups")
    base, extra = divmod(n, K)
    sizes = np.full(K, base, dtype=np.int64)
    sizes[:extra] += 1
    return np.repeat(np.arange(K, dtype=np.int64), sizes)


def membership(xs: np.ndarray, groups: np.ndarray, K: int) -> np.ndarray:
    """Whether each user's input lies in the support of its group's column."""
    H = hadamard_matrix(K)
    return H[xs, groups] == 1


def privatize_cohort(
    xs: np.ndarray,
    groups: np.ndarray,
    epsilon: float,
    R: float,
    seed: int,
    *words: int,
    K: int | None = None,
) -> np.ndarray:
    """Binary reports: 1 with prob ``q`` inside the group's set, ``q/e^eps`` outside."""
    xs = np.asarray(xs, dtype=np.int64)
    groups = np.asarray(groups, dtype=np.int64)
    if K is None:
        K = next_power_of_two(int(xs.max()) + 1 if xs.size else 1)
    q = truth_probability(epsilon, R)
    p1 = np.where(membership(xs, groups, K), q, q / math.exp(epsilon))
    u = rng.uniforms(seed, xs.size, rng.PRIVATIZE, *words)
    return (u < p1).astype(np.int8)


def group_means(ys: np.ndarray, groups: np.ndarray, K: int) -> np.ndarray:
    sizes = np.bincount(groups, minlength=K)
    if np.any(sizes == 0):
        raise EstimationError("every group needs at least one user")
    return np.bincount(groups, weights=ys, minlength=K) / sizes


def invert_group_means(s: np.ndarray, epsilon: float, q: float, K: int) -> np.ndarray:
    """Padded estimate over ``[K]`` from per-group means of the reports."""
    if epsilon <= 0.0:
        raise EstimationError("reports carry no information at epsilon = 0")
    e = math.exp(epsilon)
    p_sets = e / (q * (e - 1.0)) * (np.asarray(s, dtype=float) - q / e)
    return hadamard_matrix(K) @ (2.0 * p_sets - 1.0) / K


def exact_group_means(p, epsilon: float, q: float, K: int) -> np.ndarray:
    """Expected report mean per group for input distribution ``p``."""
    padded = np.zeros(K)
    probs = np.asarray(p.probs if isinstance(p, ProbVec) else p, dtype=float)
    padded[: probs.size] = probs
    p_sets = (hadamard_matrix(K) == 1).T.astype(float) @ padded
    e = math.exp(epsilon)
    return p_sets * q * (e - 1.0) / e + q / e


def estimate_hadamard(
    ys: np.ndarray,
    groups: np.ndarray,
    epsilon: float,
    R: float,
    k: int,
    clip: bool = False,
    padded: bool = False,
) -> np.ndarray:
    """Unbiased estimate of the input distribution from binary reports.

    With ``clip`` the estimate is clipped to ``[0, 1]`` and renormalized; the
    default returns the raw estimate.  ``padded`` returns all ``K``
    coordinates instead of the first ``k``.
    """
    K = next_power_of_two(k)
    q = truth_probability(epsilon, R)
    est = invert_group_means(group_means(ys, groups, K), epsilon, q, K)
    if not padded:
        est = est[:k]
    if clip:
        est = np.clip(est, 0.0, 1.0)
        total = est.sum()
        est = est / total if total > 0 else np.full(est.size, 1.0 / est.size)
    return est


def evaluate_loss(kind: str, estimate, truth) -> float:
    est = np.asarray(estimate, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise DomainError(f"length mismatch: {est.shape} vs {tru.shape}")
    diff = np.abs(est - tru)
    if kind == "l1":
        return float(diff.sum())
    if kind == "l2sq":
        return float((diff**2).sum())
    if kind == "linf":
        return float(diff.max()) if diff.size else 0.0
    raise DomainError(f"unknown loss {kind!r}")


@dataclass
class ExperimentConfig:
    """Simulation grid; ``n`` may be a single size or a list of sizes."""

    k: int = 100
    n: int | list[int] = 10_000
    epsilons: list[float] = field(default_factory=lambda: [1.0])
    randomness_bits: list[float] = field(default_factory=lambda: [1.0])
    distribution: object = "geometric(0.8)"
    trials: int = 20
    master_seed: int = 0
    task: str = "distribution"

    @property
    def ns(self) -> list[int]:
        return [int(v) for v in (self.n if isinstance(self.n, (list, tuple)) else [self.n])]

    def validate(self) -> None:
        if self.k < 2:
            raise ConfigurationError(f"k must be >= 2, got {self.k}")
        K = next_power_of_two(self.k)
        for n in self.ns:
            if n < K:
                raise ConfigurationError(f"n = {n} is smaller than K = {K}; some groups would be empty")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.task not in TASKS:
            raise ConfigurationError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.epsilons or not self.randomness_bits:
            raise ConfigurationError("epsilons and randomness_bits must be non-empty")
        for eps in self.epsilons:
            if not eps > 0.0:
                raise ConfigurationError(f"simulation needs epsilon > 0, got {eps}")
        for R in self.randomness_bits:
            if not R >= 0.0:
                raise ConfigurationError(f"randomness budget must be >= 0, got {R}")
        build_distribution(self.distribution, self.k)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.epsilons = [float(v) for v in _as_list(cfg.epsilons)]
        cfg.randomness_bits = [float(v) for v in _as_list(cfg.randomness_bits)]
        cfg.k = int(cfg.k)
        cfg.trials = int(cfg.trials)
        cfg.master_seed = int(cfg.master_seed)
        cfg.n = [int(v) for v in cfg.n] if isinstance(cfg.n, (list, tuple)) else int(cfg.n)
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass
class ExperimentResult:
    rows: list[dict]
    clipped: bool = False

    def summary(self) -> list[dict]:
        """Mean and standard error of each loss per ``(epsilon, R, n)`` cell."""
        cells: dict[tuple, list[dict]] = {}
        for row in self.rows:
            cells.setdefault((row["epsilon"], row["R"], row["n"], row["k"]), []).append(row)
        out = []
        for (eps, R, n, k), rows in cells.items():
            entry = {"epsilon": eps, "R": R, "n": n, "k": k, "trials": len(rows)}
            for loss in ("loss_l1", "loss_l2sq", "loss_linf"):
                vals = np.array([r[loss] for r in rows])
                entry[f"mean_{loss}"] = float(vals.mean())
                se = vals.std(ddof=1) / math.sqrt(vals.size) if vals.size > 1 else 0.0
                entry[f"stderr_{loss}"] = float(se)
            out.append(entry)
        return out

    def mean(self, loss: str, epsilon: float, R: float, n: int) -> float:
        vals = [r[f"loss_{loss}"] for r in self.rows if (r["epsilon"], r["R"], r["n"]) == (epsilon, R, n)]
        if not vals:
            raise KeyError((epsilon, R, n))
        return float(np.mean(vals))


def run_experiment(cfg: ExperimentConfig, clip: bool = False) -> ExperimentResult:
    """Run every ``(n, trial, epsilon, R)`` cell of the grid.

    Inputs for a trial depend only on ``(master_seed, trial)`` and the
    privatization uniforms likewise, so the budgets within a trial are
    compared on common random numbers.
    """
    cfg.validate()
    p = build_distribution(cfg.distribution, cfg.k)
    K = next_power_of_two(cfg.k)
    rows = []
    for n in cfg.ns:
        groups = assign_groups(n, K)
        for trial in range(cfg.trials):
            xs = sample_inputs(p, n, cfg.master_seed, trial)
            if cfg.task == "heavy_hitter":
                truth = np.bincount(xs, minlength=cfg.k) / n
            else:
                truth = p.probs
            u = rng.uniforms(cfg.master_seed, n, rng.PRIVATIZE, trial)
            member = membership(xs, groups, K)
            for eps in cfg.epsilons:
                for R in cfg.randomness_bits:
                    q = truth_probability(eps, R)
                    ys = (u < np.where(member, q, q / math.exp(eps))).astype(np.int8)
                    est = estimate_hadamard(ys, groups, eps, R, cfg.k, clip=clip)
                    rows.append(
                        {
                            "epsilon": float(eps),
                            "R": float(R),
                            "n": int(n),
                            "k": int(cfg.k),
                            "trial": trial,
                            "loss_l1": evaluate_loss("l1", est, truth),
                            "loss_l2sq": evaluate_loss("l2sq", est, truth),
                            "loss_linf": evaluate_loss("linf", est, truth),
                        }
                    )
    return ExperimentResult(rows, clipped=clip)


def expected_l2sq(p, epsilon: float, R: float, n: int, k: int) -> float:
    """Exact expected l2sq loss of the raw estimator for a fixed group split."""
    K = next_power_of_two(k)
    q = truth_probability(epsilon, R)
    s = exact_group_means(p, epsilon, q, K)
    sizes = np.bincount(assign_groups(n, K), minlength=K)
    e = math.exp(epsilon)
    var_sets = (e / (q * (e - 1.0))) ** 2 * s * (1.0 - s) / sizes
    return float(k * 4.0 / K**2 * var_sets.sum())
