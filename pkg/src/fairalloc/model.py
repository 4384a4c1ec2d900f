"""Users, utilities, procurement cost and surplus evaluation.

Utilities are concave quadratics stored in the half convention
``U(x) = -q x^2 / 2 + b x``.  Scenario files may instead give the plain
coefficient ``a`` of ``-a x^2 + b x``; the loader converts with ``q = 2a``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .fairness import FairnessParam


class ScenarioError(ValueError):
    """Malformed or invalid scenario input.  ``field`` names the culprit."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


@dataclass(frozen=True)
class QuadraticUtility:
    q: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and self.q >= 0):
            raise ScenarioError(f"curvature must be finite and >= 0, got {self.q}", "q")
        if not (math.isfinite(self.b) and self.b > 0):
            raise ScenarioError(f"slope must be finite and > 0, got {self.b}", "b")


@dataclass(frozen=True)
class CostModel:
    """Procurement cost ``C(l) = c2 l^2 / 2 + c1 l`` with price ``C'(l) = c2 l + c1``.

    ``variant`` is descriptive only: an "affine-price" market quotes the same
    price law without a cost function behind it.
    """

    c2: float = 1.0
    c1: float = 0.0
    variant: str = "quadratic"

    def __post_init__(self):
        if self.variant not in ("quadratic", "affine-price"):
            raise ScenarioError(f"unknown cost variant {self.variant!r}", "cost.variant")
        if not (math.isfinite(self.c2) and self.c2 >= 0):
            raise ScenarioError(f"must be finite and >= 0, got {self.c2}", "cost.c2")
        if not (math.isfinite(self.c1) and self.c1 >= 0):
            raise ScenarioError(f"must be finite and >= 0, got {self.c1}", "cost.c1")


@dataclass(frozen=True)
class Scenario:
    users: tuple[QuadraticUtility, ...]
    cost: CostModel = field(default_factory=CostModel)
    labels: Optional[tuple[Optional[str], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if len(self.users) < 1:
            raise ScenarioError("need at least one user", "users")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.users):
                raise ScenarioError("one label per user required", "users.class")

    @property
    def n(self) -> int:
        return len(self.users)

    @cached_property
    def q(self) -> np.ndarray:
        q = np.array([u.q for u in self.users], dtype=float)
        q.flags.writeable = False
        return q

    @cached_property
    def b(self) -> np.ndarray:
        b = np.array([u.b for u in self.users], dtype=float)
        b.flags.writeable = False
        return b

    @classmethod
    def from_arrays(cls, q, b, cost: CostModel | None = None, labels=None) -> "Scenario":
        users = tuple(QuadraticUtility(float(qi), float(bi)) for qi, bi in zip(q, b))
        return cls(users, cost if cost is not None else CostModel(), labels)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        users = []
        for i, u in enumerate(self.users):
            d = {"q": u.q, "b": u.b}
            if self.labels is not None and self.labels[i] is not None:
                d["class"] = self.labels[i]
            users.append(d)
        cost = {"c2": self.cost.c2, "c1": self.cost.c1}
        if self.cost.variant != "quadratic":
            cost["variant"] = self.cost.variant
        return {"users": users, "cost": cost, "convention": "half"}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data) -> "Scenario":
        return _parse_scenario(data)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON ({exc.msg})", "<file>") from exc
        return _parse_scenario(data)

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"expected a number, got {value!r}", where)
    return float(value)


def _parse_scenario(data) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("top level must be an object", "<file>")
    unknown = set(data) - {"users", "cost", "convention"}
    if unknown:
        raise ScenarioError("unknown field", sorted(unknown)[0])
    convention = data.get("convention", "half")
    if convention not in ("half", "plain"):
        raise ScenarioError(f"must be 'half' or 'plain', got {convention!r}", "convention")
    scale = 2.0 if convention == "plain" else 1.0

    raw_users = data.get("users")
    if not isinstance(raw_users, list) or not raw_users:
        raise ScenarioError("must be a non-empty list", "users")
    users, labels = [], []
    for i, u in enumerate(raw_users):
        where = f"users[{i}]"
        if not isinstance(u, dict):
            raise ScenarioError("must be an object", where)
        extra = set(u) - {"q", "b", "class"}
        if extra:
            raise ScenarioError("unknown field", f"{where}.{sorted(extra)[0]}")
        for key in ("q", "b"):
            if key not in u:
                raise ScenarioError("missing", f"{where}.{key}")
        q = _number(u["q"], f"{where}.q")
        b = _number(u["b"], f"{where}.b")
        if q < 0:
            raise ScenarioError(f"curvature must be >= 0, got {q}", f"{where}.q")
        if b <= 0:
            raise ScenarioError(f"slope must be > 0, got {b}", f"{where}.b")
        label = u.get("class")
        if label is not None and not isinstance(label, str):
            raise ScenarioError("must be a string", f"{where}.class")
        users.append(QuadraticUtility(scale * q, b))
        labels.append(label)

    raw_cost = data.get("cost", {"c2": 1.0, "c1": 0.0})
    if not isinstance(raw_cost, dict):
        raise ScenarioError("must be an object", "cost")
    extra = set(raw_cost) - {"c2", "c1", "variant"}
    if extra:
        raise ScenarioError("unknown field", f"cost.{sorted(extra)[0]}")
    for key in ("c2", "c1"):
        if key not in raw_cost:
            raise ScenarioError("missing", f"cost.{key}")
    c2 = _number(raw_cost["c2"], "cost.c2")
    c1 = _number(raw_cost["c1"], "cost.c1")
    if c2 < 0:
        raise ScenarioError(f"must be >= 0, got {c2}", "cost.c2")
    if c1 < 0:
        raise ScenarioError(f"must be >= 0, got {c1}", "cost.c1")
    cost = CostModel(c2, c1, raw_cost.get("variant", "quadratic"))
    has_labels = any(lab is not None for lab in labels)
    return Scenario(tuple(users), cost, tuple(labels) if has_labels else None)


# -- scalar operations ------------------------------------------------------


def utility_value(u: QuadraticUtility, x: float) -> float:
    if x < 0:
        raise ValueError(f"allocation must be >= 0, got {x}")
    return -0.5 * u.q * x * x + u.b * x


def marginal_utility(u: QuadraticUtility, x: float) -> float:
    return u.b - u.q * x


def price(c: CostModel, l: float) -> float:
    if l < 0:
        raise ValueError(f"load must be >= 0, got {l}")
    return c.c2 * l + c.c1


def surplus(u: QuadraticUtility, x: float, p: float) -> float:
    return utility_value(u, x) - p * x


def total_payment(c: CostModel, l: float) -> float:
    return l * price(c, l)


def surplus_profile(sc: Scenario, x: Sequence[float], l: float) -> np.ndarray:
    """Per-user surplus at allocation ``x`` and load ``l``.

    ``sum(x) == l`` is not required, so this can score arbitrary grid points.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (sc.n,):
        raise ValueError(f"allocation has shape {x.shape}, expected ({sc.n},)")
    if np.any(x < 0):
        raise ValueError("allocations must be >= 0")
    p = price(sc.cost, l)
    return x * (sc.b - 0.5 * sc.q * x - p)


def permanently_priced_out(sc: Scenario) -> np.ndarray:
    """Users whose slope never exceeds the price, even at zero load."""
    return sc.b <= sc.cost.c1


@dataclass(frozen=True)
class AllocationResult:
    """Optimal load and allocation for one fairness parameter.

    ``trace`` holds the ``(l, J(l))`` pairs of the load grid when one was
    searched; ``unimodality`` the single-peak check on that trace.
    """

    alpha: FairnessParam
    x: np.ndarray
    l: float
    s: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    method: str
    degenerate: bool = False
    trace: tuple = field(default=(), repr=False)
    unimodality: object = None

    @property
    def total_surplus(self) -> float:
        return float(np.sum(self.s))

    @property
    def min_surplus(self) -> float:
        return float(np.min(self.s))

    def to_dict(self) -> dict:
        d = {
            "alpha": self.alpha.label(),
            "method": self.method,
            "l": self.l,
            "x": [float(v) for v in self.x],
            "s": [float(v) for v in self.s],
            "objective": self.objective,
            "total_surplus": self.total_surplus,
            "min_surplus": self.min_surplus,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "degenerate": self.degenerate,
        }
        if self.unimodality is not None:
            d["unimodal"] = self.unimodality.unimodal
        return d
