"""Depth-first branch-and-bound over the binary U/V variables.

Each node's relaxation is solved from scratch by :mod:`.simplex`. Nodes whose
bound falls below the incumbent are pruned; nodes that tie it are explored
so that, among equal optima, the lexicographically smallest assignment
(``Assignment.sort_key``) is returned.
"""

from __future__ import annotations

import math
import re
import time
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..model import Instance
from ..routing import FlowSet
from ..solution import Assignment
from .model import MilpModel, build
from .simplex import StandardForm, solve_lp

__all__ = ["SolveResult", "solve_exact", "extract_assignment", "extract_flows"]

INT_TOL = 1e-6
_U = re.compile(r"U_i(\d+)_j(\d+)_k(\d+)$")
_V = re.compile(r"V_j(\d+)$")
_F = re.compile(r"F([QS])_x(\d+)_y(\d+)_a(\d+)_b(\d+)$")
_L = re.compile(r"L([QS])_x(\d+)_y(\d+)$")


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | node-limit
    objective: float
    assignment: Assignment | None
    flows: FlowSet | None
    nodes: int
    wall_time: float
    root_bound: float
    x: np.ndarray | None = None


def extract_assignment(m: MilpModel, x) -> Assignment:
    u, v = set(), set()
    for n, var in enumerate(m.variables):
        if not var.binary or x[n] < 0.5:
            continue
        if hit := _U.match(var.name):
            u.add(tuple(int(g) for g in hit.groups()))
        elif hit := _V.match(var.name):
            v.add(int(hit.group(1)))
    return Assignment(frozenset(u), frozenset(v))


def extract_flows(m: MilpModel, x) -> FlowSet:
    """Relay demands and per-link commodity flows, rounded to 1e-6 bit/s."""
    demand = {"Q": {}, "S": {}}
    commodity = {"Q": defaultdict(dict), "S": defaultdict(dict)}
    for n, var in enumerate(m.variables):
        val = round(float(x[n]), 6)
        if val <= 0.0:
            continue
        if hit := _F.match(var.name):
            kind, xx, yy, a, b = hit.groups()
            commodity[kind][(int(xx), int(yy))][(int(a), int(b))] = val
        elif hit := _L.match(var.name):
            kind, xx, yy = hit.groups()
            demand[kind][(int(xx), int(yy))] = val
    return FlowSet.from_commodities(demand["Q"], demand["S"],
                                    {p: dict(sorted(l.items())) for p, l in sorted(commodity["Q"].items())},
                                    {p: dict(sorted(l.items())) for p, l in sorted(commodity["S"].items())})


def _branch_variable(x, lb, ub, binaries) -> int:
    """Most fractional free binary, lowest index on ties; -1 if integral."""
    frac = np.abs(x[binaries] - np.round(x[binaries]))
    free = lb[binaries] < ub[binaries]
    frac = np.where(free, frac, 0.0)
    if frac.max(initial=0.0) <= INT_TOL:
        return -1
    closeness = np.where(frac > INT_TOL, np.abs(x[binaries] - 0.5), np.inf)
    return int(binaries[int(np.argmin(closeness))])


def solve_exact(model: MilpModel | Instance, node_limit: int = 100_000, time_limit: float | None = None,
                kernel: str | None = None) -> SolveResult:
    """Solve a model (or the model built from an instance) to optimality.

    Returns status ``node-limit`` with the best incumbent found when the node
    or time budget runs out first.
    """
    m = build(model) if isinstance(model, Instance) else model
    start = time.perf_counter()
    sf = StandardForm(m)
    n = len(m.variables)
    binaries = np.array(m.binaries, dtype=np.int64)
    lb0 = sf.lb.copy()
    ub0 = sf.ub.copy()

    best_x = None
    best_val = -math.inf
    best_key = None
    root_bound = math.nan
    nodes = 0
    exhausted = False
    stack = [(lb0, ub0)]

    while stack:
        if nodes >= node_limit or (time_limit is not None and time.perf_counter() - start > time_limit):
            exhausted = True
            break
        lb, ub = stack.pop()
        nodes += 1
        res = solve_lp(sf, lb, ub, kernel=kernel)
        if res.status != "optimal":
            if nodes == 1:
                root_bound = -math.inf if res.status == "infeasible" else math.inf
            continue
        if nodes == 1:
            root_bound = res.objective
        tol = 1e-9 * max(1.0, abs(best_val)) if best_x is not None else 0.0
        if best_x is not None and res.objective < best_val - tol:
            continue
        x = res.x
        q = _branch_variable(x, lb[:n], ub[:n], binaries)
        if q < 0:
            xi = x.copy()
            xi[binaries] = np.round(xi[binaries])
            key = extract_assignment(m, xi).sort_key()
            # reaching here means objective >= best - tol
            if best_x is None or res.objective > best_val + tol or key < best_key:
                best_x, best_val, best_key = xi, res.objective, key
            # ties may hide a lexicographically smaller optimum under free binaries
            free = [b for b in binaries if lb[b] < ub[b]]
            if not free:
                continue
            q = int(free[0])
        up_first = x[q] >= 0.5
        lo = (lb.copy(), ub.copy())
        lo[1][q] = 0.0
        hi = (lb.copy(), ub.copy())
        hi[0][q] = 1.0
        if up_first:
            stack += [lo, hi]
        else:
            stack += [hi, lo]

    wall = time.perf_counter() - start
    if best_x is None:
        status = "node-limit" if exhausted else "infeasible"
        return SolveResult(status, -math.inf, None, None, nodes, wall, root_bound)
    return SolveResult("node-limit" if exhausted else "optimal", float(m.evaluate(best_x)),
                       extract_assignment(m, best_x), extract_flows(m, best_x), nodes, wall, root_bound, best_x)
