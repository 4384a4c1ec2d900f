"""Brute-force reference optimizer for up to three users.

Grids the slice ``{sum(x) = l, 0 <= x <= ub}`` directly (``N - 1`` free axes)
and, for the joint problem, a uniform grid of loads on top.  Shares nothing
with the solvers beyond the objective definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fairness import NEG_INF, FairnessParam, _phi_unchecked
from .inner import InnerSolution
from .model import AllocationResult, Scenario, permanently_priced_out
from .outer import InfeasibleError, default_l_max


@dataclass(frozen=True)
class OracleConfig:
    grid_resolution: int | None = None
    l_resolution: int = 400

    def __post_init__(self):
        if self.grid_resolution is not None and self.grid_resolution < 2:
            raise ValueError("grid_resolution must be >= 2")
        if self.l_resolution < 2:
            raise ValueError("l_resolution must be >= 2")

    def points(self, n: int) -> int:
        if self.grid_resolution is not None:
            return self.grid_resolution
        return 2000 if n <= 2 else 200


def _bounds(sc: Scenario, l: float) -> np.ndarray:
    c = sc.b - (sc.cost.c2 * l + sc.cost.c1)
    ub = np.zeros(sc.n)
    for i in range(sc.n):
        if c[i] <= 0:
            ub[i] = 0.0
        elif sc.q[i] == 0:
            ub[i] = l
        else:
            ub[i] = min(2 * c[i] / sc.q[i], l)
    return ub


def _slice_points(ub: np.ndarray, l: float, m: int) -> np.ndarray:
    """Grid of the (N-1)-dimensional slice; rows are allocations summing to l."""
    n = len(ub)
    if n == 1:
        return np.array([[l]]) if l <= ub[0] * (1 + 1e-12) else np.empty((0, 1))
    if n == 2:
        lo = max(0.0, l - ub[1])
        hi = min(ub[0], l)
        if hi < lo:
            return np.empty((0, 2))
        x1 = np.linspace(lo, hi, m)
        return np.column_stack([x1, l - x1])
    # n == 3: x1 on its feasible range, x2 on the range left for it
    lo1 = max(0.0, l - ub[1] - ub[2])
    hi1 = min(ub[0], l)
    if hi1 < lo1:
        return np.empty((0, 3))
    x1 = np.linspace(lo1, hi1, m)[:, None]
    rest = l - x1
    lo2 = np.maximum(0.0, rest - ub[2])
    hi2 = np.minimum(ub[1], rest)
    frac = np.linspace(0.0, 1.0, m)[None, :]
    x2 = lo2 + frac * (hi2 - lo2)
    ok = np.broadcast_to(hi2 >= lo2, x2.shape)
    x1 = np.broadcast_to(x1, x2.shape)
    x3 = l - x1 - x2
    pts = np.stack([x1[ok], x2[ok], x3[ok]], axis=1)
    return pts


def _score(sc: Scenario, f: FairnessParam, pts: np.ndarray, l: float) -> np.ndarray:
    p = sc.cost.c2 * l + sc.cost.c1
    s = pts * (sc.b - 0.5 * sc.q * pts - p)
    s = np.where(np.abs(s) <= 1e-12 * (1 + np.abs(pts * sc.b)), 0.0, s)
    bad = np.any(s < 0, axis=1)
    if f.needs_positive:
        s = s[:, ~permanently_priced_out(sc)]
        if s.shape[1] == 0:
            return np.full(len(pts), NEG_INF)
    vals = _phi_unchecked(np.maximum(s, 0.0), f)
    if f.needs_positive:
        vals = np.where(np.any(s <= 0, axis=1), NEG_INF, vals)
    return np.where(bad, NEG_INF, vals)


def brute_force_inner(sc: Scenario, f: FairnessParam, l: float,
                      cfg: OracleConfig | None = None) -> InnerSolution:
    if sc.n > 3:
        raise ValueError(f"brute force handles at most 3 users, got {sc.n}")
    cfg = cfg or OracleConfig()
    pts = _slice_points(_bounds(sc, l), l, cfg.points(sc.n))
    if len(pts) == 0:
        return InnerSolution(float(l), np.zeros(sc.n), NEG_INF, False, math.inf, 0)
    vals = _score(sc, f, pts, l)
    k = int(np.argmax(vals))
    feasible = bool(np.isfinite(vals[k]))
    return InnerSolution(float(l), pts[k].copy(), float(vals[k]), feasible, math.nan, len(pts))


def brute_force_joint(sc: Scenario, f: FairnessParam, cfg: OracleConfig | None = None,
                      l_max: float | None = None) -> AllocationResult:
    if sc.n > 3:
        raise ValueError(f"brute force handles at most 3 users, got {sc.n}")
    cfg = cfg or OracleConfig()
    l_max = default_l_max(sc) if l_max is None else l_max
    best = None
    count = 0
    for k in range(1, cfg.l_resolution + 1):
        l = l_max * k / cfg.l_resolution
        sol = brute_force_inner(sc, f, l, cfg)
        count += sol.iterations
        if sol.feasible and (best is None or sol.value > best.value):
            best = sol
    if best is None:
        raise InfeasibleError("no feasible grid point")
    p = sc.cost.c2 * best.l + sc.cost.c1
    s = best.x * (sc.b - 0.5 * sc.q * best.x - p)
    return AllocationResult(f, best.x, best.l, s, best.value, math.nan, count, "oracle",
                            bool(f.needs_positive and permanently_priced_out(sc).any()))
