"""Fixed-load allocation: maximize the fairness objective over x with sum(x) = l.

For a fixed load ``l`` the price is fixed, every surplus ``s_i(x_i)`` is a
concave quadratic in its own ``x_i`` and the problem is separable apart from
the single coupling constraint.  Three exact dual methods are used:

* alpha = 0: water-filling on the multiplier of ``sum(x) = l``.
* 0 < alpha < inf: the same dual search, with each user's stationarity
  equation ``s_i**-alpha * s_i'(x_i) = nu`` inverted per user (closed form at
  alpha = 1, bracketed root otherwise).
* max-min: bisection-style search on the epigraph level ``t``; ``s_i >= t`` is
  an interval in ``x_i`` so feasibility is a pair of sums.

``method="pgd"`` selects projected gradient ascent with exact box-simplex
projection instead.  It is slower and kept as an independent route.

All kernels run on 2-D arrays (one row per load) so a whole grid of loads is
solved in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fairness import NEG_INF, FairnessParam, _phi_unchecked
from .model import Scenario, permanently_priced_out, price

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    kkt_tolerance: float = 1e-8
    feasibility_tolerance: float = 1e-8
    interior_margin: float = 1e-10
    backtracking: float = 0.5
    initial_step: float = 1.0
    method: str = "kkt"

    def __post_init__(self):
        for name in ("max_iterations", "kkt_tolerance", "feasibility_tolerance",
                     "interior_margin", "initial_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtracking < 1:
            raise ValueError("backtracking must lie in (0, 1)")
        if self.method not in ("kkt", "pgd"):
            raise ValueError(f"unknown inner method {self.method!r}")


@dataclass(frozen=True)
class InnerSolution:
    l: float
    x: np.ndarray
    value: float
    feasible: bool
    kkt_residual: float
    iterations: int
    multiplier: float = math.nan
    degenerate: bool = False
    history: tuple = field(default=(), repr=False)


class EmptySetError(ValueError):
    pass


# -- feasible box and projection -------------------------------------------


def _upper_bounds(q: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``2c/q`` where the user can afford energy, 0 where priced out, inf for linear users."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ub = np.where(q > 0, 2.0 * c / q, np.inf)
    return np.where(c > 0, ub, 0.0)


def feasible_box(sc: Scenario, l: float) -> np.ndarray:
    """Upper bounds making ``s_i >= 0`` equivalent to ``0 <= x_i <= ub_i``."""
    c = sc.b - price(sc.cost, l)
    return _upper_bounds(sc.q, c)


def project_box_simplex(v, l: float, ub) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x : sum(x) = l, 0 <= x <= ub}``."""
    v = np.asarray(v, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.sum(ub) < l * (1 - 1e-14):
        raise EmptySetError(f"sum of upper bounds {np.sum(ub)} is below the load {l}")
    if l <= 0:
        return np.zeros_like(v)
    cap = np.minimum(ub, l)
    tol = 1e-12 * (1 + l)

    def total(nu):
        return np.clip(v - nu, 0.0, cap).sum()

    lo = float(np.min(v - cap)) - 1.0
    hi = float(np.max(v)) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        t = total(mid)
        if abs(t - l) <= tol * 1e-3 or hi - lo <= 4 * EPS * max(abs(lo), abs(hi), 1.0):
            break
        if t > l:
            lo = mid
        else:
            hi = mid
    nu = 0.5 * (lo + hi)
    x = np.clip(v - nu, 0.0, cap)
    # free coordinates share one shift; solve for it exactly
    free = (x > 0) & (x < cap)
    if free.any():
        x[free] += (l - x.sum()) / free.sum()
        x = np.clip(x, 0.0, cap)
    return x


# -- vectorized bracketed root finding --------------------------------------


def _root(fn, lo, hi, flo, fhi, xtol, ftol=None, max_iter=200):
    """Elementwise sign-change root of ``fn`` on ``[lo, hi]``.

    Illinois false position with a bisection step every third iteration, so the
    bracket shrinks at least geometrically.  Returns the final ``(lo, hi)``;
    ``fn`` keeps the sign of ``flo`` on ``lo``.
    """
    lo, hi = lo.copy(), hi.copy()
    flo, fhi = flo.copy(), fhi.copy()
    pos = flo > 0
    last = np.zeros(lo.shape, dtype=np.int8)
    hit = (flo == 0)
    hi = np.where(hit, lo, hi)
    hit0 = fhi == 0
    lo = np.where(hit0 & ~hit, hi, lo)
    it = 0
    for it in range(1, max_iter + 1):
        done = (hi - lo) <= xtol
        if done.all():
            break
        if it % 3 == 0:
            x = 0.5 * (lo + hi)
        else:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                x = lo - flo * (hi - lo) / (fhi - flo)
            bad = ~np.isfinite(x) | (x <= lo) | (x >= hi)
            x = np.where(bad, 0.5 * (lo + hi), x)
        x = np.where(done, lo, x)
        fx = fn(x)
        same = np.where(pos, fx > 0, fx < 0)
        exact = (fx == 0) | (np.abs(fx) <= ftol if ftol is not None else False)
        move_lo = same & ~done & ~exact
        move_hi = ~same & ~done & ~exact
        # Illinois: halve the stale end when the same side moves twice
        fhi = np.where(move_lo & (last == 1), 0.5 * fhi, fhi)
        flo = np.where(move_hi & (last == -1), 0.5 * flo, flo)
        lo = np.where(move_lo, x, lo)
        flo = np.where(move_lo, fx, flo)
        hi = np.where(move_hi, x, hi)
        fhi = np.where(move_hi, fx, fhi)
        last = np.where(move_lo, 1, np.where(move_hi, -1, last)).astype(np.int8)
        ex = exact & ~done
        lo = np.where(ex, x, lo)
        hi = np.where(ex, x, hi)
    return lo, hi, it


# -- problem data for a batch of loads -------------------------------------


@dataclass
class _Batch:
    ls: np.ndarray       # (L,)
    q: np.ndarray        # (1, N)
    c: np.ndarray        # (L, N)  slope minus price
    cap: np.ndarray      # (L, N)  min(ub, l)
    ub: np.ndarray       # (L, N)
    included: np.ndarray  # (N,)   users that enter the objective
    feasible: np.ndarray  # (L,)
    degenerate: bool


def _prepare(sc: Scenario, f: FairnessParam, ls: np.ndarray, cfg: SolverConfig) -> _Batch:
    ls = np.asarray(ls, dtype=float).reshape(-1)
    if np.any(ls < 0):
        raise ValueError("load must be >= 0")
    q = sc.q[None, :]
    p = sc.cost.c2 * ls + sc.cost.c1
    c = sc.b[None, :] - p[:, None]
    ub = _upper_bounds(q, c)
    cap = np.minimum(ub, ls[:, None])
    degenerate = False
    if f.needs_positive:
        out = permanently_priced_out(sc)
        included = ~out
        degenerate = bool(out.any())
        inc_ub = ub[:, included]
        feasible = ((ls > 0) & included.any()
                    & np.all(inc_ub > 0, axis=1)
                    & (ls < inc_ub.sum(axis=1)))
    else:
        included = np.ones(sc.n, dtype=bool)
        feasible = ls <= ub.sum(axis=1) + cfg.feasibility_tolerance * (1 + ls)
    return _Batch(ls, q, c, cap, ub, included, feasible, degenerate)


def _surplus(x, c, q):
    return x * (c - 0.5 * q * x)


def _objective(s: np.ndarray, f: FairnessParam, included: np.ndarray) -> np.ndarray:
    if f.needs_positive:
        s = s[:, included]
    return _phi_unchecked(np.maximum(s, 0.0), f)


def _kkt_residual(g, x, cap, nu_hint, active):
    """Smallest stationarity violation over a common multiplier.

    Free users need ``g_i == nu``, users at zero need ``g_i <= nu`` and users at
    their cap need ``g_i >= nu``; the residual is the best achievable max
    violation.
    """
    tol = 1e-12 * np.maximum(cap, 1.0)
    active = active & (cap > tol)
    at_lo = active & (x <= tol)
    at_hi = active & (x >= cap - tol) & ~at_lo
    free = active & ~at_lo & ~at_hi
    need_above = np.where(free | at_lo, g, -np.inf).max(axis=1, initial=-np.inf)
    need_below = np.where(free | at_hi, g, np.inf).min(axis=1, initial=np.inf)
    both = np.isfinite(need_above) & np.isfinite(need_below)
    with np.errstate(invalid="ignore"):
        mid = 0.5 * (need_above + need_below)
    nu = np.where(both, mid,
                  np.where(np.isfinite(need_above), np.maximum(need_above, nu_hint),
                           np.where(np.isfinite(need_below), np.minimum(need_below, nu_hint),
                                    nu_hint)))
    with np.errstate(invalid="ignore"):
        resid = np.where(both, np.maximum(0.5 * (need_above - need_below), 0.0), 0.0)
    return resid, nu


# -- alpha = 0: water-filling ------------------------------------------------


def _waterfill(B: _Batch):
    q, c, cap, ls = B.q, B.c, B.cap, B.ls
    linear = q == 0

    def alloc(nu):
        nu = nu[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            xq = np.clip((c - nu) / np.where(linear, 1.0, q), 0.0, cap)
        xl = np.where(c > nu, cap, 0.0)
        return np.where(linear, xl, xq)

    grad_at_cap = c - q * cap
    lo = grad_at_cap.min(axis=1) - 1.0
    hi = c.max(axis=1) + 1.0
    fn = lambda nu: alloc(nu).sum(axis=1) - ls
    xtol = 4 * EPS * np.maximum(np.abs(lo), np.abs(hi))
    a, b, iters = _root(fn, lo, hi, fn(lo), fn(hi), xtol, ftol=1e-14 * (1 + ls))
    nu = 0.5 * (a + b)
    x = alloc(nu)
    for _ in range(3):
        r = ls - x.sum(axis=1)
        if np.all(np.abs(r) <= 1e-15 * (1 + ls)):
            break
        free = (x > 0) & (x < cap) & ~linear
        tie = linear & (np.abs(c - nu[:, None]) <= 1e-12 * (1 + np.abs(nu[:, None])))
        with np.errstate(divide="ignore"):
            w = np.where(free, 1.0 / np.where(linear, 1.0, q), 0.0)
        w = np.where(tie.any(axis=1, keepdims=True), tie.astype(float), w)
        ws = w.sum(axis=1, keepdims=True)
        step = np.where(ws > 0, r[:, None] * w / np.where(ws > 0, ws, 1.0), 0.0)
        x = np.clip(x + step, 0.0, cap)
    g = c - q * x
    return x, g, nu, iters


# -- 0 < alpha < inf: dual search with per-user stationarity inversion ------


def _stationary_alloc(nu, c, q, cap, alpha, live, bracket=None):
    """Per-user x solving ``s(x)**-alpha * s'(x) = nu`` clipped to ``[0, cap]``.

    ``bracket`` optionally narrows the search to ``[xlo, xhi]`` known to
    contain the answer.
    """
    nu = nu[:, None]
    if alpha == 1.0:
        # (c - qx) = nu x (c - qx/2) rearranged into its stable root
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            den = (nu * c + q) + np.sqrt((nu * c) ** 2 + q * q)
            x = np.where(den > 0, 2.0 * c / den, np.inf)
        return np.where(live, np.minimum(x, cap), 0.0)

    def h(x):
        s = np.maximum(_surplus(x, c, q), 0.0)
        with np.errstate(over="ignore", invalid="ignore"):
            return (c - q * x) - nu * np.power(s, alpha)

    h_cap = h(cap)
    clamp = h_cap >= 0
    need = live & ~clamp
    lo = np.zeros_like(cap)
    hi = cap.copy()
    flo = c.copy()
    fhi = h_cap
    if bracket is not None:
        blo, bhi = bracket
        hb_lo, hb_hi = h(blo), h(bhi)
        use_lo = (blo > 0) & (hb_lo > 0)
        use_hi = (bhi < cap) & (hb_hi < 0)
        lo = np.where(use_lo, blo, lo)
        flo = np.where(use_lo, hb_lo, flo)
        hi = np.where(use_hi, bhi, hi)
        fhi = np.where(use_hi, hb_hi, fhi)
    lo = np.where(need, lo, cap)
    hi = np.where(need, hi, cap)
    flo = np.where(need, flo, 0.0)
    fhi = np.where(need, fhi, 0.0)
    xtol = 2 * EPS * np.maximum(cap, 1e-300)
    a, b, _ = _root(h, lo, hi, flo, fhi, xtol, ftol=8 * EPS * np.abs(c), max_iter=120)
    x = np.where(need, 0.5 * (a + b), cap)
    return np.where(live, x, 0.0)


def _marginal(x, c, q, alpha):
    s = _surplus(x, c, q)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.power(s, -alpha) * (c - q * x)


def _dual_alpha(B: _Batch, alpha: float):
    q, c, cap, ls = B.q, B.c, B.cap, B.ls
    live = (cap > 0) & B.included[None, :] & B.feasible[:, None]
    capsum = np.where(live, cap, 0.0).sum(axis=1)
    safe = np.where(capsum > 0, capsum, 1.0)
    x0 = np.where(live, ls[:, None] * cap / safe[:, None], 0.0)
    g0 = np.where(live, _marginal(x0, c, q, alpha), np.nan)
    with np.errstate(invalid="ignore"):
        glo = np.nanmin(np.where(live, g0, np.nan), axis=1, initial=np.inf)
        ghi = np.nanmax(np.where(live, g0, np.nan), axis=1, initial=-np.inf)
    ok = live.any(axis=1) & np.isfinite(glo) & np.isfinite(ghi)
    glo = np.where(ok, glo, 0.0)
    ghi = np.where(ok, ghi, 0.0)
    ulo = np.arcsinh(glo)
    uhi = np.arcsinh(ghi)
    pad = 1e-12 * (1 + np.abs(ulo)) + 1e-12 * (1 + np.abs(uhi))
    ulo, uhi = ulo - pad, uhi + pad

    # x(nu) is decreasing, so allocations at the current bracket ends bound
    # every later inner solve
    x_up = np.where(live, cap, 0.0)
    x_down = np.zeros_like(cap)

    def fn(u):
        nonlocal x_up, x_down
        x = _stationary_alloc(np.sinh(u), c, q, cap, alpha, live, (x_down, x_up))
        r = x.sum(axis=1) - ls
        x_up = np.where((r > 0)[:, None], np.minimum(x, x_up), x_up)
        x_down = np.where((r < 0)[:, None], np.maximum(x, x_down), x_down)
        return r

    flo, fhi = fn(ulo), fn(uhi)
    # padding may leave the bracket a hair short; widen where needed
    for _ in range(60):
        bad = ok & ((flo < 0) | (fhi > 0))
        if not bad.any():
            break
        ulo = np.where(bad & (flo < 0), ulo - (1 + np.abs(ulo)), ulo)
        uhi = np.where(bad & (fhi > 0), uhi + (1 + np.abs(uhi)), uhi)
        flo, fhi = fn(ulo), fn(uhi)
    xtol = 2 * EPS * (1 + np.maximum(np.abs(ulo), np.abs(uhi)))
    xtol = np.where(ok, xtol, np.inf)
    a, b, iters = _root(fn, ulo, uhi, flo, fhi, xtol, ftol=1e-14 * (1 + ls))
    nu = np.sinh(0.5 * (a + b))
    x = _stationary_alloc(nu, c, q, cap, alpha, live)
    # no interior bracket only when x0 is the single feasible point
    x = np.where(ok[:, None], x, x0)
    x = np.where(live, x, 0.0)
    # exact feasibility: push the tiny residual along the inverse curvature
    for _ in range(2):
        r = ls - x.sum(axis=1)
        s = _surplus(x, c, q)
        interior = live & (x > 0) & (x < cap)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            curv = alpha * (c - q * x) ** 2 + q * s
            w = np.where(interior & (curv > 0), np.power(s, alpha + 1) / curv, 0.0)
        w = np.where(np.isfinite(w), w, 0.0)
        ws = w.sum(axis=1, keepdims=True)
        step = np.where(ws > 0, r[:, None] * w / np.where(ws > 0, ws, 1.0), 0.0)
        x = np.clip(x + step, 0.0, cap)
    g = np.where(live, _marginal(x, c, q, alpha), 0.0)
    return x, g, nu, iters, live


# -- max-min: epigraph level search ----------------------------------------


def _level_intervals(t, c, q, cap):
    """Interval of x where ``x (c - q x / 2) >= t`` (t >= 0), clipped to ``[0, cap]``."""
    t = t[:, None]
    disc = np.sqrt(np.maximum(c * c - 2.0 * q * t, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(c + disc > 0, 2.0 * t / (c + disc), np.inf)
        hi = np.where(q > 0, (c + disc) / np.where(q > 0, q, 1.0), np.inf)
    return np.minimum(lo, cap), np.minimum(hi, cap), lo


def _maxmin(B: _Batch):
    q, c, cap, ls = B.q, B.c, B.cap, B.ls
    live = (cap > 0) & B.included[None, :] & B.feasible[:, None]
    # best surplus each user could reach alone within [0, cap]
    with np.errstate(divide="ignore", invalid="ignore"):
        peak_x = np.where(q > 0, c / np.where(q > 0, q, 1.0), np.inf)
    peak = _surplus(np.minimum(peak_x, cap), c, q)
    t_top = np.where(live, peak, np.inf).min(axis=1)
    ok = live.any(axis=1)
    t_top = np.where(ok & np.isfinite(t_top), t_top, 0.0)

    def fn(t):
        lo, hi, raw_lo = _level_intervals(t, c, q, cap)
        lo = np.where(live, lo, 0.0)
        hi = np.where(live, hi, 0.0)
        over = np.where(np.any(live & (raw_lo > cap), axis=1), np.inf, -np.inf)
        return np.maximum(np.maximum(lo.sum(axis=1) - ls, ls - hi.sum(axis=1)), over)

    zero = np.zeros_like(ls)
    f0, ftop = fn(zero), fn(t_top)
    at_top = ftop <= 0
    lo_t = np.where(at_top, t_top, zero)
    hi_t = t_top.copy()
    # fn is increasing; flo <= 0 at lo_t
    ftop_c = np.where(np.isfinite(ftop), ftop, 1e300)
    xtol = np.where(at_top | ~ok, np.inf, 4 * EPS * np.maximum(t_top, 1e-300))
    a, b, iters = _root(lambda t: np.minimum(fn(t), 1e300), lo_t, hi_t,
                        np.where(at_top, 0.0, f0), np.where(at_top, 0.0, ftop_c), xtol)
    t = a
    lo, hi, _ = _level_intervals(t, c, q, cap)
    lo = np.where(live, lo, 0.0)
    hi = np.where(live, hi, 0.0)
    slack = ls - lo.sum(axis=1)
    room = hi - lo
    finite_room = np.where(np.isfinite(room), room, 0.0)
    tot = finite_room.sum(axis=1)
    lam = np.where(tot > 0, np.clip(slack / np.where(tot > 0, tot, 1.0), 0.0, 1.0), 0.0)
    x = lo + lam[:, None] * finite_room
    x = np.where(live, x, 0.0)
    return x, t, b - a, iters, live


# -- projected gradient ascent (single load) --------------------------------


def _projected_gradient(sc: Scenario, f: FairnessParam, l: float, cfg: SolverConfig,
                        B: _Batch) -> InnerSolution:
    q, c, cap = B.q[0], B.c[0], B.cap[0]
    live = (cap > 0) & B.included
    x = np.zeros(sc.n)
    x[live] = l * cap[live] / cap[live].sum()
    alpha = f.value
    eps_s = cfg.interior_margin

    def value(xv):
        return float(_objective(_surplus(xv, c, q)[None, :], f, B.included)[0])

    def grad(xv):
        s = _surplus(xv, c, q)
        if alpha == 0:
            d = np.ones_like(s)
        else:
            with np.errstate(divide="ignore", over="ignore"):
                d = np.power(np.maximum(s, 0.0), -alpha)
        return np.where(live, d * (c - q * xv), 0.0)

    v = value(x)
    history = [v]
    step = cfg.initial_step
    resid = math.inf
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        g = grad(x)
        r, _ = _kkt_residual(g[None, live], x[None, live], cap[None, live],
                             np.array([0.0]), np.ones((1, live.sum()), bool))
        resid = float(r[0])
        if resid <= cfg.kkt_tolerance:
            break
        accepted = False
        while step > 1e-300:
            xn = np.zeros_like(x)
            xn[live] = project_box_simplex(x[live] + step * g[live], l, cap[live])
            # for alpha > 0 the marginal value of a zero surplus is infinite, so
            # iterates stay strictly inside
            if alpha > 0 and np.any(_surplus(xn, c, q)[live] < eps_s):
                step *= cfg.backtracking
                continue
            vn = value(xn)
            if vn >= v + 1e-4 * float(g @ (xn - x)):
                accepted = True
                break
            step *= cfg.backtracking
        if not accepted:
            break
        moved = float(np.max(np.abs(xn - x)))
        x, v = xn, vn
        history.append(v)
        step = min(step / cfg.backtracking, 1e12 * cfg.initial_step)
        if moved <= 1e-16 * (1 + l):
            break
    g = grad(x)
    r, nu = _kkt_residual(g[None, live], x[None, live], cap[None, live],
                          np.array([0.0]), np.ones((1, live.sum()), bool))
    return InnerSolution(l, x, v, True, float(r[0]), it, float(nu[0]), B.degenerate,
                         tuple(history))


# -- public entry points -----------------------------------------------------


def solve_inner_many(sc: Scenario, f: FairnessParam, ls, cfg: SolverConfig | None = None
                     ) -> list[InnerSolution]:
    """Solve the fixed-load problem at every load in ``ls``."""
    cfg = cfg or SolverConfig()
    B = _prepare(sc, f, ls, cfg)
    L = len(B.ls)
    if cfg.method == "pgd" and not f.is_maxmin:
        out = []
        for k in range(L):
            Bk = _Batch(B.ls[k:k + 1], B.q, B.c[k:k + 1], B.cap[k:k + 1], B.ub[k:k + 1],
                        B.included, B.feasible[k:k + 1], B.degenerate)
            if not Bk.feasible[0]:
                out.append(_infeasible(sc, B.ls[k], B.degenerate))
            else:
                out.append(_projected_gradient(sc, f, float(B.ls[k]), cfg, Bk))
        return out

    if f.is_maxmin:
        x, t, gap, iters, live = _maxmin(B)
        resid, nu = gap, t
    elif f.value == 0.0:
        x, g, nu_b, iters = _waterfill(B)
        resid, nu = _kkt_residual(g, x, B.cap, nu_b, B.cap > 0)
    else:
        x, g, nu_b, iters, live = _dual_alpha(B, f.value)
        resid, nu = _kkt_residual(g, x, B.cap, nu_b, live)

    s = _surplus(x, B.c, B.q)
    vals = _objective(s, f, B.included)
    out = []
    for k in range(L):
        if not B.feasible[k]:
            out.append(_infeasible(sc, B.ls[k], B.degenerate))
            continue
        out.append(InnerSolution(float(B.ls[k]), x[k].copy(), float(vals[k]), True,
                                 float(resid[k]), int(iters), float(nu[k]), B.degenerate))
    return out


def solve_inner(sc: Scenario, f: FairnessParam, l: float, cfg: SolverConfig | None = None
                ) -> InnerSolution:
    """Best allocation of a fixed load ``l``; infeasible loads report value -inf."""
    return solve_inner_many(sc, f, [l], cfg)[0]


def _infeasible(sc: Scenario, l: float, degenerate: bool) -> InnerSolution:
    return InnerSolution(float(l), np.zeros(sc.n), NEG_INF, False, math.inf, 0,
                         degenerate=degenerate)
