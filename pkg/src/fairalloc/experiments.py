"""Experiment recipes and their CSV / JSON output.

Every recipe is a pure function of its config: trials derive their scenario
from ``seed + trial`` and results are assembled in trial order, so reruns with
the same config give byte-identical files whether or not a worker pool is used.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .analysis import ParetoPoint, sweep_alpha
from .fairness import FairnessParam
from .inner import SolverConfig
from .model import CostModel, Scenario
from .oracle import OracleConfig, brute_force_joint
from .outer import OuterConfig, solve
from .scenarios import RandomSpec, gen_pofpoe_users, gen_two_class, user_streams

SCHEMA_VERSION = 1


def fmt(v) -> str:
    """17 significant digits: enough to round-trip any double."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def parse_alphas(text) -> list[FairnessParam]:
    if isinstance(text, str):
        parts = [t for t in text.split(",") if t.strip()]
    else:
        parts = list(text)
    if not parts:
        raise ValueError("empty alpha list")
    return [FairnessParam.parse(t) for t in parts]


def parse_ints(text) -> list[int]:
    parts = [t for t in str(text).split(",") if t.strip()] if isinstance(text, str) else list(text)
    out = [int(t) for t in parts]
    if not out or min(out) < 1:
        raise ValueError(f"expected positive integers, got {text!r}")
    return out


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _run_ordered(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def nearest_rank(values, pct: float) -> float:
    """Nearest-rank percentile: the ceil(pct/100 * n)-th smallest value."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return math.nan
    k = max(1, math.ceil(pct / 100.0 * v.size))
    return float(v[k - 1])


def describe(values) -> dict:
    v = np.asarray(values, dtype=float)
    n = int(v.size)
    sd = float(np.std(v, ddof=1)) if n > 1 else math.nan
    return {
        "count": n,
        "mean": float(np.mean(v)) if n else math.nan,
        "std": sd,
        "stderr": sd / math.sqrt(n) if n > 1 else math.nan,
        "p5": nearest_rank(v, 5),
        "p95": nearest_rank(v, 95),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, FairnessParam):
        return obj.label()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    return obj


# -- sweep -----------------------------------------------------------------------


def sweep_header(n: int) -> list[str]:
    return (["alpha", "l"] + [f"x_{i + 1}" for i in range(n)] + [f"s_{i + 1}" for i in range(n)]
            + ["total_surplus", "min_surplus", "pof", "poe"])


def sweep_csv(points: list[ParetoPoint]) -> str:
    n = len(points[0].s)
    rows = [[p.alpha.label(), p.l, *p.x, *p.s, p.total_surplus, p.min_surplus, p.pof, p.poe]
            for p in points]
    return _write_csv(sweep_header(n), rows)


# -- price of fairness / efficiency scaling ------------------------------------


@dataclass(frozen=True)
class PofPoeConfig:
    n_users: tuple[int, ...] = (5, 10, 20)
    trials: int = 100
    alphas: tuple[FairnessParam, ...] = (FairnessParam.alpha(0.0), FairnessParam.alpha(1.0),
                                         FairnessParam.maxmin())
    seed: int = 0
    outer: OuterConfig = field(default_factory=OuterConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    workers: int = 1


@dataclass
class ExperimentReport:
    experiment: str
    header: list[str]
    records: list[list]
    summary: dict
    provenance: dict
    failures: list[dict] = field(default_factory=list)

    def csv(self) -> str:
        return _write_csv(self.header, self.records)

    def summary_json(self) -> dict:
        return _jsonable({
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "provenance": self.provenance,
            "summary": self.summary,
            "failure_count": len(self.failures),
            "failures": self.failures,
        })


def _pofpoe_trial(job):
    n, trial, cfg = job
    spec = RandomSpec(cfg.seed + trial, n_users=n, family="pofpoe")
    try:
        sc = gen_pofpoe_users(spec)
        points = sweep_alpha(sc, cfg.alphas, cfg.outer, cfg.solver)
        return [[n, trial, p.alpha.label(), p.pof, p.poe] for p in points], None
    except Exception as exc:  # recorded, not fatal
        return [], {"n_users": n, "trial": trial, "seed": spec.seed,
                    "error": f"{type(exc).__name__}: {exc}"}


def run_pofpoe(cfg: PofPoeConfig) -> ExperimentReport:
    jobs = [(n, t, cfg) for n in cfg.n_users for t in range(cfg.trials)]
    records, failures = [], []
    for rows, err in _run_ordered(_pofpoe_trial, jobs, cfg.workers):
        records.extend(rows)
        if err is not None:
            failures.append(err)
    summary = []
    for n in cfg.n_users:
        for a in cfg.alphas:
            sel = [r for r in records if r[0] == n and r[2] == a.label()]
            summary.append({"n_users": n, "alpha": a.label(),
                            "pof": describe([r[3] for r in sel]),
                            "poe": describe([r[4] for r in sel])})
    prov = {"seed": cfg.seed, "trials": cfg.trials, "n_users": list(cfg.n_users),
            "alphas": [a.label() for a in cfg.alphas], "family": "pofpoe",
            "outer": asdict(cfg.outer), "version": __version__}
    return ExperimentReport("pofpoe", ["n_users", "trial", "alpha", "pof", "poe"],
                            records, summary, prov, failures)


# -- two-class disparity ---------------------------------------------------------


@dataclass(frozen=True)
class TwoClassConfig:
    trials: int = 200
    seed: int = 0
    class_sizes: tuple[int, int] = (10, 10)
    xbar: float = 10.0
    outer: OuterConfig = field(default_factory=OuterConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    workers: int = 1


TWOCLASS_HEADER = ["trial", "user", "class", "x_sw", "x_pf", "s_sw", "s_pf", "gain_x", "gain_s"]


def _twoclass_trial(job):
    trial, cfg = job
    spec = RandomSpec(cfg.seed + trial, family="twoclass", class_sizes=cfg.class_sizes,
                      xbar=cfg.xbar)
    try:
        sc = gen_two_class(spec)
        sw = solve(sc, FairnessParam.alpha(0.0), cfg.outer, cfg.solver)
        pf = solve(sc, FairnessParam.alpha(1.0), cfg.outer, cfg.solver)
    except Exception as exc:
        return [], {"trial": trial, "seed": spec.seed, "error": f"{type(exc).__name__}: {exc}"}
    rows = []
    for i in range(sc.n):
        rows.append([trial, i, sc.labels[i], sw.x[i], pf.x[i], sw.s[i], pf.s[i],
                     pf.x[i] - sw.x[i], pf.s[i] - sw.s[i]])
    return rows, None


def class_means(records, trial: int, column: str) -> dict:
    """Per-class mean of one column within one trial."""
    k = TWOCLASS_HEADER.index(column)
    out = {}
    for label in ("class1", "class2"):
        vals = [r[k] for r in records if r[0] == trial and r[2] == label]
        out[label] = float(np.mean(vals)) if vals else math.nan
    return out


def run_twoclass(cfg: TwoClassConfig) -> ExperimentReport:
    jobs = [(t, cfg) for t in range(cfg.trials)]
    records, failures = [], []
    for rows, err in _run_ordered(_twoclass_trial, jobs, cfg.workers):
        records.extend(rows)
        if err is not None:
            failures.append(err)

    summary = {}
    for label in ("class1", "class2"):
        sel = [r for r in records if r[2] == label]
        summary[label] = {
            col: describe([r[TWOCLASS_HEADER.index(col)] for r in sel])
            for col in ("x_sw", "x_pf", "s_sw", "s_pf", "gain_x", "gain_s")
        }
        summary[label]["fraction_gain_x_positive"] = (
            float(np.mean([r[7] > 0 for r in sel])) if sel else math.nan)
    trials = sorted({r[0] for r in records})
    sw_gap = [class_means(records, t, "x_sw") for t in trials]
    pf_gap = [class_means(records, t, "x_pf") for t in trials]
    summary["trials"] = {
        "completed": len(trials),
        "fraction_sw_class2_larger": float(np.mean(
            [m["class2"] > m["class1"] for m in sw_gap])) if trials else math.nan,
        "fraction_pf_gap_smaller": float(np.mean(
            [abs(p["class2"] - p["class1"]) < abs(s["class2"] - s["class1"])
             for p, s in zip(pf_gap, sw_gap)])) if trials else math.nan,
    }
    prov = {"seed": cfg.seed, "trials": cfg.trials, "class_sizes": list(cfg.class_sizes),
            "xbar": cfg.xbar, "family": "twoclass", "outer": asdict(cfg.outer),
            "version": __version__}
    return ExperimentReport("twoclass", TWOCLASS_HEADER, records, summary, prov, failures)


# -- oracle cross-check -----------------------------------------------------------


@dataclass(frozen=True)
class OracleCheckConfig:
    scenarios: int = 50
    seed: int = 0
    alphas: tuple[FairnessParam, ...] = tuple(
        FairnessParam.parse(a) for a in ("0", "0.5", "1", "2", "inf"))
    max_users: int = 2
    tolerance: float = 1e-3
    outer: OuterConfig = field(default_factory=OuterConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    workers: int = 1


def random_small_scenario(seed: int, max_users: int = 2) -> Scenario:
    """Random quadratic scenario with one to ``max_users`` users and price ``l``.

    The user count comes from the first substream; the coefficients from the
    following ones.
    """
    streams = user_streams(seed, 1 + max_users)
    n = int(streams[0].integers(1, max_users + 1))
    q = [0.5 + 2.5 * g.random() for g in streams[1:n + 1]]
    b = [1.0 + 9.0 * g.random() for g in streams[1:n + 1]]
    return Scenario.from_arrays(q, b, CostModel(1.0, 0.0))


def agree(solver_value: float, oracle_value: float, tol: float) -> bool:
    """Two-sided agreement at ``tol`` relative to each side's magnitude."""
    if not (math.isfinite(solver_value) and math.isfinite(oracle_value)):
        return solver_value == oracle_value
    return (solver_value >= oracle_value - tol * (1 + abs(oracle_value))
            and oracle_value >= solver_value - tol * (1 + abs(solver_value)))


def _oracle_trial(job):
    k, cfg = job
    sc = random_small_scenario(cfg.seed + k, cfg.max_users)
    out = []
    for a in cfg.alphas:
        rec = {"scenario": k, "alpha": a.label(), "n_users": sc.n}
        try:
            got = solve(sc, a, cfg.outer, cfg.solver).objective
            ref = brute_force_joint(sc, a, cfg.oracle).objective
            rec.update(solver=got, oracle=ref, ok=agree(got, ref, cfg.tolerance))
        except Exception as exc:
            rec.update(ok=False, error=f"{type(exc).__name__}: {exc}")
        if not rec["ok"]:
            rec["scenario_json"] = sc.to_dict()
        out.append(rec)
    return out


def run_oracle_check(cfg: OracleCheckConfig) -> dict:
    jobs = [(k, cfg) for k in range(cfg.scenarios)]
    checks = [r for rows in _run_ordered(_oracle_trial, jobs, cfg.workers) for r in rows]
    failures = [r for r in checks if not r["ok"]]
    return _jsonable({
        "schema_version": SCHEMA_VERSION,
        "experiment": "oracle-check",
        "provenance": {"seed": cfg.seed, "scenarios": cfg.scenarios,
                       "alphas": [a.label() for a in cfg.alphas], "max_users": cfg.max_users,
                       "tolerance": cfg.tolerance, "version": __version__},
        "checks": len(checks),
        "failure_count": len(failures),
        "failures": failures,
        "passed": not failures,
    })
