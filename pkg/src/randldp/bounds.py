"""Closed-form risk bounds, randomness accounting and the P1 grid oracle.

Risk bounds follow the two-regime rule: the *high* randomness regime
applies when ``R >= H2(e^eps/(e^eps+1))``; below that the *low* regime
uses ``p_R``, the root of ``H2(p) = R`` in ``[0, 0.5]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import binary_entropy, inverse_binary_entropy
from .errors import DomainError

LOG2E = 1.0 / math.log(2.0)
HIGH = "high_rand"
LOW = "low_rand"
LOSSES = ("l2sq", "l1")


@dataclass(frozen=True)
class RiskBound:
    value: float
    loss: str
    regime: str
    kind: str


def critical_randomness(epsilon: float) -> float:
    """Budget ``H2(e^eps/(e^eps+1))`` above which extra randomness is useless."""
    e = math.exp(epsilon)
    return binary_entropy(e / (e + 1.0))


def regime(epsilon: float, R: float) -> str:
    return HIGH if R >= critical_randomness(epsilon) else LOW


def _p_R(R: float) -> float:
    return inverse_binary_entropy(min(R, 1.0))


def _validate(loss: str, epsilon: float, R: float, n: int, k: int) -> None:
    if loss not in LOSSES:
        raise DomainError(f"loss must be one of {LOSSES}, got {loss!r}")
    if not epsilon >= 0.0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon}")
    if not R >= 0.0:
        raise DomainError(f"R must be >= 0, got {R}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")


def minimax_lower(loss: str, epsilon: float, R: float, n: int, k: int) -> RiskBound:
    """Minimax lower bound on the estimation risk.

    ``l2sq`` gives ``tau``; ``l1`` gives ``sqrt(k tau / 8)``.  A zero budget
    (``p_R = 0``) makes every bound infinite.
    """
    _validate(loss, epsilon, R, n, k)
    if k % 2:
        raise DomainError(f"the lower bound pairs coordinates and needs even k, got {k}")
    reg = regime(epsilon, R)
    if epsilon == 0.0:
        return RiskBound(math.inf, loss, reg, "lower")
    e = math.exp(epsilon)
    if reg == HIGH:
        tau = k * (e + 1.0) ** 2 / (16.0 * n * e * (e - 1.0) ** 2)
    elif _p_R(R) == 0.0:
        tau = math.inf
    else:
        tau = k * e / (16.0 * n * _p_R(R) ** 2 * (e - 1.0) ** 2)
    value = tau if loss == "l2sq" else math.sqrt(k * tau / 8.0)
    return RiskBound(value, loss, reg, "lower")


def achievable_upper(loss: str, epsilon: float, R: float, n: int, k: int) -> RiskBound:
    """Risk of the binary Hadamard scheme: ``eta`` for l2sq, ``sqrt(k eta)`` for l1."""
    _validate(loss, epsilon, R, n, k)
    reg = regime(epsilon, R)
    if epsilon == 0.0:
        return RiskBound(math.inf, loss, reg, "upper")
    e = math.exp(epsilon)
    if reg == HIGH:
        eta = 2.0 * k * (e + 1.0) ** 2 / (n * (e - 1.0) ** 2)
    elif _p_R(R) == 0.0:
        eta = math.inf
    else:
        eta = 2.0 * k * e**2 / (n * _p_R(R) ** 2 * (e - 1.0) ** 2)
    value = eta if loss == "l2sq" else math.sqrt(k * eta)
    return RiskBound(value, loss, reg, "upper")


def lower_bound_branch_jump(epsilon: float, n: int, k: int) -> float:
    """Ratio of the low-regime to the high-regime lower bound at the critical budget.

    The low branch evaluated at ``p_R = 1/(e^eps+1)`` exceeds the high branch
    by exactly ``e^(2 eps)``.
    """
    e = math.exp(epsilon)
    high = k * (e + 1.0) ** 2 / (16.0 * n * e * (e - 1.0) ** 2)
    low = k * e / (16.0 * n * (1.0 / (e + 1.0)) ** 2 * (e - 1.0) ** 2)
    return low / high


def prior_lower_ye(epsilon: float, n: int, k: int) -> RiskBound:
    """Earlier l2sq lower bound without a randomness constraint."""
    if not epsilon >= 0.0 or n < 1 or k < 2:
        raise DomainError("need epsilon >= 0, n >= 1, k >= 2")
    if epsilon == 0.0:
        return RiskBound(math.inf, "l2sq", HIGH, "lower")
    e = math.exp(epsilon)
    if e < 3.0:
        value = k * (e + 1.0) ** 2 / (512.0 * n * (e - 1.0) ** 2)
    else:
        value = k / (64.0 * n * (e - 1.0))
    return RiskBound(value, "l2sq", HIGH, "lower")


def sample_complexity(alpha: float, epsilon: float, R: float, k: int) -> float:
    """Order-of-magnitude number of users for l2sq risk ``alpha`` (constant set to 1)."""
    if not alpha > 0.0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if epsilon == 0.0:
        return math.inf
    if regime(epsilon, R) == HIGH:
        return k / (alpha * epsilon**2)
    if _p_R(R) == 0.0:
        return math.inf
    return k / (alpha * _p_R(R) ** 2 * epsilon**2)


def randomness_table(epsilon: float, k: int) -> dict[str, float]:
    """Bits of randomness per user for RAPPOR, RR, HR (upper bound) and BH."""
    if not epsilon >= 0.0 or k < 2:
        raise DomainError("need epsilon >= 0 and k >= 2")
    e = math.exp(epsilon)
    h_bh = binary_entropy(e / (e + 1.0))
    rr = math.log2(k - 1 + e) - epsilon * e / (k - 1 + e) * LOG2E
    hr = math.log2(2 * k * (3 * e - 1) / e) - epsilon * e / (3 * e - 1) * LOG2E
    return {"RAPPOR": k * h_bh, "RR": rr, "HR": hr, "BH": h_bh}


def p1_closed_form(epsilon: float, R: float) -> float:
    """Stated maximum of the two-output divergence program P1."""
    e = math.exp(epsilon)
    if regime(epsilon, R) == HIGH:
        return 2.0 * (e - 1.0) ** 2 / (e + 1.0) ** 2
    return 2.0 * _p_R(R) ** 2 * (e - 1.0) ** 2 / e**2


def p1_objective(a, b):
    """``sum_l (q_l - q'_l)^2 / (q_l + q'_l)`` for binary rows ``(a, 1-a)``, ``(b, 1-b)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(a + b > 0, (a - b) ** 2 / (a + b), 0.0)
        t2 = np.where(2 - a - b > 0, (a - b) ** 2 / (2 - a - b), 0.0)
    return t1 + t2


def _p1_feasible(a, b, epsilon: float, R: float):
    e = math.exp(epsilon)
    tol = 1e-12
    ratio_ok = (a <= e * b + tol) & (b <= e * a + tol)
    ratio_ok &= ((1 - a) <= e * (1 - b) + tol) & ((1 - b) <= e * (1 - a) + tol)
    ent_ok = (binary_entropy(a) <= R + tol) & (binary_entropy(b) <= R + tol)
    return ratio_ok & ent_ok


def p1_grid_search(epsilon: float, R: float, grid_steps: int = 1000) -> tuple[float, float, float]:
    """Grid maximum of P1 and its maximizer ``(value, q1, q1')``.

    A uniform grid over ``[0,1]^2`` is followed by a finer grid over the
    neighbouring cells of the best point.
    """
    if grid_steps < 100:
        raise DomainError(f"grid_steps must be >= 100, got {grid_steps}")
    if not epsilon >= 0.0 or not R >= 0.0:
        raise DomainError("need epsilon >= 0 and R >= 0")
    axis = np.linspace(0.0, 1.0, grid_steps + 1)
    best = _grid_max(axis, axis, epsilon, R)
    h = 1.0 / grid_steps
    for _ in range(4):
        # slide a window of +-2 cells toward the optimum, then shrink the cells
        for _ in range(50):
            _, a0, b0 = best
            fa = np.linspace(max(0.0, a0 - 2 * h), min(1.0, a0 + 2 * h), 41)
            fb = np.linspace(max(0.0, b0 - 2 * h), min(1.0, b0 + 2 * h), 41)
            cand = _grid_max(fa, fb, epsilon, R)
            if cand[0] <= best[0]:
                break
            best = cand
        h /= 10.0
    return best


def _grid_max(a_axis, b_axis, epsilon, R):
    a, b = np.meshgrid(a_axis, b_axis, indexing="ij")
    vals = np.where(_p1_feasible(a, b, epsilon, R), p1_objective(a, b), -np.inf)
    idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
    value = float(vals[idx])
    if not np.isfinite(value):
        return 0.0, 0.0, 0.0
    return value, float(a[idx]), float(b[idx])


def p1_grid_oracle(epsilon: float, R: float, grid_steps: int = 1000) -> float:
    """Grid maximum of the P1 objective over the feasible binary pairs."""
    return p1_grid_search(epsilon, R, grid_steps)[0]
