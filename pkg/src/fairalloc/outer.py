"""Search over the total load.

``solve`` runs a uniform load grid (solving the fixed-load problem at every
point), then golden-section refinement around the grid argmax.  The full grid
trace is always kept and checked for a single peak, since refinement is only
trustworthy when J(l) is unimodal.

``solve_joint_quadratic`` solves the load and allocation together as one
concave program; it serves as an independent cross-check of the grid path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .fairness import NEG_INF, FairnessParam, phi
from .inner import InnerSolution, SolverConfig, _upper_bounds, solve_inner, solve_inner_many
from .model import AllocationResult, Scenario, permanently_priced_out, surplus_profile

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

# tightest first; the default stopping rule leaves ~1e-5 in x on the log-cone
# problems, and the tightest setting occasionally stalls
JOINT_TOLERANCES = (1e-12, 1e-10, 1e-8)


class InfeasibleError(RuntimeError):
    """No load admits a feasible allocation."""


@dataclass(frozen=True)
class OuterConfig:
    delta_l: float | None = None
    l_max: float | None = None
    refine: bool = True
    refine_tolerance: float | None = None
    unimodality_check: bool = True

    def resolve(self, sc: Scenario) -> "OuterConfig":
        """Fill derived defaults for ``sc``."""
        if self.l_max is None:
            l_max = default_l_max(sc)
            if not l_max > 0:
                raise InfeasibleError("every user is priced out at every load")
        else:
            l_max = self.l_max
        if not l_max > 0:
            raise ValueError(f"l_max must be positive, got {l_max}")
        delta = self.delta_l if self.delta_l is not None else l_max / 200.0
        if not delta > 0:
            raise ValueError(f"delta_l must be positive, got {delta}")
        tol = self.refine_tolerance if self.refine_tolerance is not None else 1e-6 * l_max
        return replace(self, l_max=float(l_max), delta_l=float(delta), refine_tolerance=tol)

    def grid(self) -> np.ndarray:
        k = int(math.floor(self.l_max / self.delta_l * (1 + 1e-12)))
        return self.delta_l * np.arange(1, max(k, 1) + 1)


@dataclass(frozen=True)
class UnimodalityReport:
    unimodal: bool
    violations: tuple[int, ...]
    n_points: int


def default_l_max(sc: Scenario) -> float:
    """Load beyond which nobody can have positive surplus."""
    c2, c1 = sc.cost.c2, sc.cost.c1
    if c2 > 0:
        return float((np.max(sc.b) - c1) / c2)
    ub = _upper_bounds(sc.q, sc.b - c1)
    if not np.all(np.isfinite(ub)):
        raise ValueError("feasible load is unbounded: constant price and a linear user "
                         "who can afford it")
    return float(np.sum(ub))


def check_unimodality(trace, tol: float = 1e-9) -> UnimodalityReport:
    """Is the finite part of a ``(l, J)`` trace nondecreasing then nonincreasing?

    Comparisons allow ``tol * (1 + |J|)``.  A violation is reported at the index
    (into ``trace``) of each interior dip.
    """
    idx = [k for k, (_, v) in enumerate(trace) if math.isfinite(v)]
    vals = [trace[k][1] for k in idx]
    violations = []
    descending = False
    for j in range(1, len(vals)):
        slack = tol * (1 + max(abs(vals[j]), abs(vals[j - 1])))
        d = vals[j] - vals[j - 1]
        if d < -slack:
            descending = True
        elif d > slack and descending:
            violations.append(idx[j - 1])
    return UnimodalityReport(not violations, tuple(violations), len(vals))


def _result(sc: Scenario, f: FairnessParam, sol: InnerSolution, method: str, iterations: int,
            trace=(), report=None) -> AllocationResult:
    x = np.maximum(sol.x, 0.0)
    s = surplus_profile(sc, x, sol.l)
    return AllocationResult(f, x, sol.l, s, sol.value, sol.kkt_residual, iterations, method,
                            sol.degenerate, tuple(trace), report)


def grid_search(sc: Scenario, f: FairnessParam, cfg: OuterConfig | None = None,
                solver: SolverConfig | None = None) -> AllocationResult:
    """Best load on the grid ``delta_l, 2 delta_l, ..., l_max``.

    The first of several equal maxima wins.
    """
    cfg = (cfg or OuterConfig()).resolve(sc)
    ls = cfg.grid()
    sols = solve_inner_many(sc, f, ls, solver)
    values = np.array([s.value for s in sols])
    if not np.any(np.isfinite(values)):
        raise InfeasibleError(f"no feasible load on the grid up to {cfg.l_max:g}")
    best = int(np.argmax(values))
    trace = tuple((float(l), float(v)) for l, v in zip(ls, values))
    report = None
    if cfg.unimodality_check and np.isfinite(values).sum() >= 3:
        report = check_unimodality(trace)
    return _result(sc, f, sols[best], "grid+inner", len(ls), trace, report)


def golden_refine(sc: Scenario, f: FairnessParam, bracket, cfg: OuterConfig | None = None,
                  solver: SolverConfig | None = None,
                  incumbent: AllocationResult | None = None) -> AllocationResult:
    """Golden-section search for the best load inside ``bracket``.

    Never returns anything worse than ``incumbent``; an inconsistent bracket
    (both probes infeasible) returns the incumbent unchanged.
    """
    cfg = (cfg or OuterConfig()).resolve(sc)
    lo, hi = float(bracket[0]), float(bracket[1])
    evals = 0

    def J(l):
        nonlocal evals
        evals += 1
        return solve_inner(sc, f, l, solver)

    best = None
    if incumbent is not None:
        best = InnerSolution(incumbent.l, incumbent.x, incumbent.objective, True,
                             incumbent.kkt_residual, incumbent.iterations,
                             degenerate=incumbent.degenerate)

    def consider(sol):
        nonlocal best
        if sol.feasible and (best is None or sol.value > best.value):
            best = sol

    if hi > lo:
        x1 = hi - INVPHI * (hi - lo)
        x2 = lo + INVPHI * (hi - lo)
        s1, s2 = J(x1), J(x2)
        consider(s1)
        consider(s2)
        if s1.feasible or s2.feasible:
            while hi - lo > cfg.refine_tolerance and evals < 300:
                if s1.value < s2.value:
                    lo, x1, s1 = x1, x2, s2
                    x2 = lo + INVPHI * (hi - lo)
                    s2 = J(x2)
                    consider(s2)
                else:
                    hi, x2, s2 = x2, x1, s1
                    x1 = hi - INVPHI * (hi - lo)
                    s1 = J(x1)
                    consider(s1)
    if best is None:
        raise InfeasibleError("no feasible load inside the refinement bracket")
    iterations = evals + (incumbent.iterations if incumbent is not None else 0)
    trace = incumbent.trace if incumbent is not None else ()
    report = incumbent.unimodality if incumbent is not None else None
    return _result(sc, f, best, "grid+inner", iterations, trace, report)


def solve(sc: Scenario, f: FairnessParam, cfg: OuterConfig | None = None,
          solver: SolverConfig | None = None) -> AllocationResult:
    """Grid search over the load, then golden-section refinement when enabled."""
    cfg = (cfg or OuterConfig()).resolve(sc)
    res = grid_search(sc, f, cfg, solver)
    if not cfg.refine:
        return res
    bracket = (max(res.l - cfg.delta_l, 0.0), min(res.l + cfg.delta_l, cfg.l_max))
    return golden_refine(sc, f, bracket, cfg, solver, incumbent=res)


# -- joint solve -------------------------------------------------------------


def solve_joint_quadratic(sc: Scenario, f: FairnessParam,
                          solver: SolverConfig | None = None) -> AllocationResult:
    """Solve over (x, l) at once for alpha in {0, 1, max-min}.

    The load is eliminated with ``l = sum(x)``.  For alpha = 1 and max-min the
    surplus constraint is split into ``x_i >= 0`` and
    ``b_i - q_i x_i / 2 - price(l) >= 0`` and the objective is written with
    ``log x_i + log(b_i - q_i x_i / 2 - price(l))``, which is jointly concave
    for an affine price.  For alpha = 0 the surplus constraint is dropped: the
    relaxed optimum always satisfies it, whereas the split form would wrongly
    forbid prices above a priced-out user's slope.
    """
    import cvxpy as cp

    if not (f.is_maxmin or f.value in (0.0, 1.0)):
        raise ValueError(f"joint solve covers alpha in {{0, 1, inf}}, got {f.label()}")
    q, b = np.asarray(sc.q), np.asarray(sc.b)
    c2, c1 = sc.cost.c2, sc.cost.c1
    out = permanently_priced_out(sc) if f.needs_positive else np.zeros(sc.n, bool)
    inc = np.flatnonzero(~out)
    if inc.size == 0:
        raise InfeasibleError("every user is priced out at every load")

    x = cp.Variable(sc.n, nonneg=True)
    load = cp.sum(x)
    cons = [x[np.flatnonzero(out)] == 0] if out.any() else []
    if f.value == 0.0 and not f.is_maxmin:
        objective = (b @ x - 0.5 * cp.sum(cp.multiply(q, cp.square(x)))
                     - c2 * cp.square(load) - c1 * load)
    else:
        margin = b[inc] - 0.5 * cp.multiply(q[inc], x[inc]) - c2 * load - c1
        logs = cp.log(x[inc]) + cp.log(margin)
        if f.is_maxmin:
            level = cp.Variable()
            cons.append(logs >= level)
            objective = level
        else:
            objective = cp.sum(logs)
    prob = cp.Problem(cp.Maximize(objective), cons)
    if not prob.is_dcp():
        raise AssertionError("joint formulation lost concavity")
    for k, tol in enumerate(JOINT_TOLERANCES):
        # every attempt spells out all options: cvxpy keeps the previous ones otherwise
        try:
            with warnings.catch_warnings():
                # "optimal_inaccurate" at these tolerances is still far inside 1e-8
                warnings.filterwarnings("ignore", "Solution may be inaccurate")
                prob.solve(solver=cp.CLARABEL, tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol,
                           tol_ktratio=max(tol, 1e-10) if k == 0 else 1e-6, max_iter=500)
            break
        except cp.SolverError:
            if k == len(JOINT_TOLERANCES) - 1:
                raise
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or x.value is None:
        raise InfeasibleError(f"joint solve ended with status {prob.status}")

    xv = np.maximum(np.asarray(x.value, dtype=float), 0.0)
    xv[out] = 0.0
    # interior-point noise can leave a priced-out user with a sliver of energy
    # and a slightly negative surplus; hand it back
    s = surplus_profile(sc, xv, float(xv.sum()))
    xv[s < 0] = 0.0
    l = float(xv.sum())
    s = surplus_profile(sc, xv, l)
    scored = s[inc] if f.needs_positive else s
    value = phi(np.maximum(scored, 0.0), f) if np.all(scored > -1e-9) else NEG_INF
    stats = prob.solver_stats
    iters = int(stats.num_iters) if stats is not None and stats.num_iters is not None else 0
    return AllocationResult(f, xv, l, s, float(value), math.nan, iters, "joint",
                            bool(out.any()))
