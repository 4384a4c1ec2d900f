"""Alpha sweeps, Pareto dominance and optimality probes.

A sweep solves the joint problem once per fairness parameter and scores each
point against two anchors from the same scenario: the social-welfare total
(alpha = 0) and the max-min level.  The probing helpers sample feasible
``(x, l)`` pairs to look for surplus profiles that beat a solver answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .fairness import FairnessParam, price_of_efficiency, price_of_fairness
from .inner import SolverConfig
from .model import AllocationResult, Scenario
from .outer import OuterConfig, default_l_max, solve

DOMINANCE_TOL = 1e-9


@dataclass(frozen=True)
class ParetoPoint:
    alpha: FairnessParam
    s: np.ndarray
    x: np.ndarray
    l: float
    total_surplus: float
    min_surplus: float
    pof: float
    poe: float

    @classmethod
    def from_result(cls, res: AllocationResult, pof: float, poe: float) -> "ParetoPoint":
        s = np.asarray(res.s, dtype=float)
        return cls(res.alpha, s, np.asarray(res.x, dtype=float), float(res.l),
                   float(np.sum(s)), float(np.min(s)), pof, poe)


def sweep_alpha(sc: Scenario, alphas: Sequence[FairnessParam], cfg: OuterConfig | None = None,
                solver: SolverConfig | None = None) -> list[ParetoPoint]:
    """Solve for every fairness parameter and attach PoF and PoE.

    The anchors come from the same sweep when it contains alpha = 0 and
    max-min; otherwise they are solved on the side.  PoE is NaN when the
    max-min level is not positive.
    """
    alphas = [FairnessParam.parse(a) for a in alphas]
    if not alphas:
        raise ValueError("need at least one fairness parameter")
    results = [solve(sc, a, cfg, solver) for a in alphas]

    sw = next((r for r in results if not r.alpha.is_maxmin and r.alpha.value == 0.0), None)
    if sw is None:
        sw = solve(sc, FairnessParam.alpha(0.0), cfg, solver)
    mm = next((r for r in results if r.alpha.is_maxmin), None)
    if mm is None:
        mm = solve(sc, FairnessParam.maxmin(), cfg, solver)

    system, level = sw.total_surplus, mm.min_surplus
    points = []
    for r in results:
        pof = price_of_fairness(system, r.total_surplus) if system > 0 else math.nan
        poe = price_of_efficiency(level, r.min_surplus) if level > 0 else math.nan
        points.append(ParetoPoint.from_result(r, pof, poe))
    return points


def _dominates(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    return bool(np.all(a >= b - tol) and np.any(a > b + tol))


def is_dominated(s, candidates: Iterable, tol: float = DOMINANCE_TOL) -> bool:
    """Does some candidate weakly beat ``s`` everywhere and strictly somewhere?"""
    s = np.asarray(s, dtype=float)
    for c in candidates:
        c = np.asarray(c, dtype=float)
        if c.shape != s.shape:
            raise ValueError(f"profile shape {c.shape} does not match {s.shape}")
        if _dominates(c, s, tol):
            return True
    return False


def pareto_filter(points: Sequence, tol: float = DOMINANCE_TOL) -> list:
    """Drop points whose profile is dominated by another point; keeps input order.

    Accepts ``ParetoPoint`` objects or bare profiles.
    """
    profiles = [np.asarray(getattr(p, "s", p), dtype=float) for p in points]
    keep = []
    for i, p in enumerate(points):
        others = (profiles[j] for j in range(len(points)) if j != i)
        if not is_dominated(profiles[i], others, tol):
            keep.append(p)
    return keep


# -- sampling ------------------------------------------------------------------


def sample_feasible(sc: Scenario, n: int, rng: np.random.Generator,
                    l_max: float | None = None, max_rounds: int = 200):
    """Draw ``n`` feasible ``(x, l)`` pairs.

    ``l`` is uniform on ``(0, l_max]`` and ``x`` is ``l`` times a flat
    Dirichlet draw, rejected when it leaves the surplus box.  Returns arrays of
    shape ``(n, N)`` and ``(n,)``.
    """
    l_max = default_l_max(sc) if l_max is None else float(l_max)
    xs, ls = [], []
    have = 0
    c2, c1 = sc.cost.c2, sc.cost.c1
    for _ in range(max_rounds):
        m = max(2 * (n - have), 64)
        l = l_max * (1.0 - rng.random(m))
        x = l[:, None] * rng.dirichlet(np.ones(sc.n), size=m)
        c = sc.b[None, :] - (c2 * l + c1)[:, None]
        ok = np.all(x * (c - 0.5 * sc.q[None, :] * x) >= 0, axis=1)
        xs.append(x[ok])
        ls.append(l[ok])
        have += int(ok.sum())
        if have >= n:
            break
    if have < n:
        raise RuntimeError(f"rejection sampling produced {have} of {n} feasible points")
    return np.concatenate(xs)[:n], np.concatenate(ls)[:n]


def surplus_rows(sc: Scenario, x: np.ndarray, l: np.ndarray) -> np.ndarray:
    """Surplus profiles for a batch of ``(x, l)`` rows."""
    p = sc.cost.c2 * np.asarray(l)[:, None] + sc.cost.c1
    return x * (sc.b[None, :] - 0.5 * sc.q[None, :] * x - p)


# -- checks ----------------------------------------------------------------------


@dataclass(frozen=True)
class InequalityReport:
    max_value: float
    violations: tuple[int, ...]
    n_samples: int
    tolerance: float

    @property
    def ok(self) -> bool:
        return not self.violations


def check_pf_inequality(s_pf, samples, tol: float = 1e-6) -> InequalityReport:
    """Aggregate proportional change of each sample relative to ``s_pf``.

    At a proportionally fair point no feasible profile can make
    ``sum((s - s_pf) / s_pf)`` positive.
    """
    s_pf = np.asarray(s_pf, dtype=float)
    if np.any(s_pf <= 0):
        raise ValueError("reference profile must be strictly positive")
    S = np.atleast_2d(np.asarray(samples, dtype=float))
    if S.shape[1] != s_pf.shape[0]:
        raise ValueError(f"samples have {S.shape[1]} users, reference has {s_pf.shape[0]}")
    vals = np.sum((S - s_pf) / s_pf, axis=1)
    bad = tuple(int(k) for k in np.flatnonzero(vals > tol))
    return InequalityReport(float(vals.max()) if len(vals) else -math.inf, bad, len(vals), tol)


@dataclass(frozen=True)
class ParetoReport:
    n_probes: int
    dominating: tuple[int, ...]
    tolerance: float
    witness: np.ndarray | None = field(default=None, repr=False)

    @property
    def pareto_optimal(self) -> bool:
        return not self.dominating


def _near_probes(sc: Scenario, x0: np.ndarray, n: int, rng, l_max: float):
    """Feasible points around ``x0`` (load always equal to the allocation sum)."""
    h = (10.0 ** rng.uniform(-7, -1, size=n))[:, None] * (1.0 + x0.sum())
    x = np.maximum(x0 + h * rng.standard_normal((n, sc.n)), 0.0)
    # every fourth probe moves along the ray through the point instead
    ray = np.arange(n) % 4 == 0
    x[ray] = x0 * (1.0 + h[ray] / (1.0 + x0.sum()) * rng.uniform(-1, 1, (int(ray.sum()), 1)))
    l = x.sum(axis=1)
    ok = (l > 0) & (l <= l_max) & np.all(surplus_rows(sc, x, l) >= 0, axis=1)
    return x[ok], l[ok]


def verify_pareto_optimality(result: AllocationResult, sc: Scenario, n_probes: int = 10000,
                             seed: int = 0, tol: float = 1e-6,
                             near_fraction: float = 0.5) -> ParetoReport:
    """Look for feasible surplus profiles that dominate ``result.s``.

    Half the probes (by default) perturb the result itself, the rest are
    drawn over the whole feasible set.  A probe counts as dominating when it
    is no worse than ``result.s`` for every user and better than
    ``result.s + tol`` for at least one.  Slack on the "no worse" side would
    let probes slide along the front and trade ``tol`` on one user for a
    little more than ``tol`` on another.
    """
    rng = np.random.default_rng(seed)
    l_max = default_l_max(sc)
    s0 = np.asarray(result.s, dtype=float)
    n_near = int(round(n_probes * near_fraction))
    xn, ln = _near_probes(sc, np.asarray(result.x, float), n_near, rng, l_max)
    xf, lf = sample_feasible(sc, n_probes - len(xn), rng, l_max)
    S = surplus_rows(sc, np.vstack([xn, xf]), np.concatenate([ln, lf]))
    dom = np.all(S >= s0, axis=1) & np.any(S > s0 + tol, axis=1)
    idx = tuple(int(k) for k in np.flatnonzero(dom))
    witness = S[idx[0]].copy() if idx else None
    return ParetoReport(len(S), idx, tol, witness)
