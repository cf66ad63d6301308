"""Key factorization of mechanisms whose rows share one multiset of probabilities.

Every entry ``Q(y|x)`` gets a single key index carrying that probability,
with distinct keys across inputs for each output (so ``(y, u)`` identifies
``x``).  For each probability value the ``(x, y)`` pairs form a bipartite
graph; its proper edge colouring, built from alternating-path matchings,
gives the key indices of that value.
"""

from __future__ import annotations

import numpy as np

from ..errors import InfeasibleError, ShapeError
from ..mechanisms import KeyedMechanism, Mechanism, induce_mechanism

VALUE_TOLERANCE = 1e-12


def bipartite_edge_coloring(edges: list[tuple[int, int]], colors: int) -> list[int]:
    """Proper colouring of a bipartite multigraph with ``colors`` colours.

    Requires max degree ``<= colors``; colour classes are matchings.  Uses
    the classical alternating-path recolouring, so it never fails when the
    degree bound holds.
    """
    at_x: dict[int, dict[int, int]] = {}
    at_y: dict[int, dict[int, int]] = {}
    for x, y in edges:
        cx = at_x.setdefault(x, {})
        cy = at_y.setdefault(y, {})
        if len(cx) >= colors or len(cy) >= colors:
            raise InfeasibleError("a vertex has more edges than available colours")
        a = _free(cx, colors)
        b = _free(cy, colors)
        if a not in cy:
            c = a
        elif b not in cx:
            c = b
        else:
            _flip_path(y, a, b, at_x, at_y)
            c = a
        cx[c] = y
        cy[c] = x
    return [_color_of(at_x[x], y) for x, y in edges]


def _free(used: dict[int, int], colors: int) -> int:
    for c in range(colors):
        if c not in used:
            return c
    raise InfeasibleError("no free colour")


def _color_of(cx: dict[int, int], y: int) -> int:
    # each (x, y) pair appears at most once per call, so this is unambiguous
    for c, yy in cx.items():
        if yy == y:
            return c
    raise AssertionError("edge lost during colouring")


def _flip_path(y0: int, a: int, b: int, at_x, at_y) -> None:
    """Swap colours ``a``/``b`` along the alternating path that leaves ``y0`` on ``a``."""
    path = []
    y, c_from_y = y0, a
    while c_from_y in at_y[y]:
        x = at_y[y][c_from_y]
        path.append((x, y, c_from_y))
        c_from_x = b if c_from_y == a else a
        if c_from_x not in at_x[x]:
            break
        y2 = at_x[x][c_from_x]
        path.append((x, y2, c_from_x))
        y = y2
    for x, y, c in path:
        del at_x[x][c]
        del at_y[y][c]
    for x, y, c in path:
        c2 = b if c == a else a
        at_x[x][c2] = y
        at_y[y][c2] = x


def factorize_symmetric(Q: Mechanism) -> KeyedMechanism:
    """Recoverable key factorization with one key per output of each row.

    The key distribution is the common row distribution sorted in decreasing
    order.
    """
    rows = Q.rows
    k, m = rows.shape
    order = np.argsort(-rows, axis=1, kind="stable")
    sorted_rows = np.take_along_axis(rows, order, axis=1)
    common = sorted_rows[0]
    if not np.allclose(sorted_rows, common[None, :], rtol=0.0, atol=VALUE_TOLERANCE):
        raise ShapeError("rows are not permutations of a common distribution")
    bounds = [0]
    for r in range(1, m):
        if common[bounds[-1]] - common[r] > VALUE_TOLERANCE:
            bounds.append(r)
    bounds.append(m)
    table = np.empty((k, m), dtype=np.int64)
    for start, stop in zip(bounds, bounds[1:]):
        edges = [(x, int(order[x, r])) for x in range(k) for r in range(start, stop)]
        degree = np.bincount([y for _, y in edges], minlength=m)
        if degree.max() > stop - start:
            raise InfeasibleError(
                f"an output needs {degree.max()} distinct keys of probability "
                f"{common[start]:.6g} but only {stop - start} exist"
            )
        for (x, y), c in zip(edges, bipartite_edge_coloring(edges, stop - start)):
            table[x, start + c] = y
    km = KeyedMechanism(common / common.sum(), table, output_size=m)
    if not np.allclose(induce_mechanism(km).rows, rows, rtol=0.0, atol=1e-9):
        raise InfeasibleError("factorization does not reproduce the mechanism")
    if not km.is_recoverable():
        raise InfeasibleError("factorization is not recoverable")
    return km
