"""Seeded random scenario families.

Randomness comes from numpy's PCG64 bit generator.  ``SeedSequence(seed)`` is
split with ``spawn`` into one child stream per user index, so user ``i``'s
coefficients depend only on ``(seed, i)`` and not on how many users follow it.
Trials use ``seed = base_seed + trial``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .model import CostModel, QuadraticUtility, Scenario

FAMILIES = ("pofpoe", "twoclass")


@dataclass(frozen=True)
class RandomSpec:
    seed: int
    n_users: int = 2
    family: str = "pofpoe"
    class_sizes: tuple[int, int] = (10, 10)
    xbar: float = 10.0
    cost: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.family == "pofpoe" and self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if self.family == "twoclass":
            if len(self.class_sizes) != 2 or min(self.class_sizes) < 0 or sum(self.class_sizes) < 1:
                raise ValueError(f"bad class sizes {self.class_sizes}")
            if not self.xbar > 0:
                raise ValueError("xbar must be positive")

    def for_trial(self, trial: int) -> "RandomSpec":
        return replace(self, seed=self.seed + trial)


def user_streams(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def gen_pofpoe_users(spec: RandomSpec) -> Scenario:
    """``a ~ 1 + U(0,1)``, ``b ~ 1 + 10 (a + 1) + 10 U(0,1)``, utility ``-a x^2/2 + b x``."""
    if spec.family != "pofpoe":
        raise ValueError(f"spec family is {spec.family!r}, not 'pofpoe'")
    users = []
    for g in user_streams(spec.seed, spec.n_users):
        u = g.random(2)
        a = 1.0 + u[0]
        b = 1.0 + 10.0 * (a + 1.0) + 10.0 * u[1]
        users.append(QuadraticUtility(a, b))
    return Scenario(tuple(users), spec.cost)


def gen_two_class(spec: RandomSpec) -> Scenario:
    """Class 1 draws ``a ~ U(1,2)``, class 2 ``a ~ U(3,4)``; everyone gets ``b = xbar a``.

    All users therefore want the same ``xbar`` when energy is free.  Class 1
    users come first.
    """
    if spec.family != "twoclass":
        raise ValueError(f"spec family is {spec.family!r}, not 'twoclass'")
    n1, n2 = spec.class_sizes
    users, labels = [], []
    for i, g in enumerate(user_streams(spec.seed, n1 + n2)):
        first = i < n1
        a = _exact_ratio((1.0 if first else 3.0) + g.random(), spec.xbar)
        users.append(QuadraticUtility(a, spec.xbar * a))
        labels.append("class1" if first else "class2")
    return Scenario(tuple(users), spec.cost, tuple(labels))


def _exact_ratio(a: float, xbar: float) -> float:
    # nudge a by a few ulps so that (xbar * a) / a reproduces xbar bit for bit
    step = 0
    while (xbar * a) / a != xbar and step < 1 << 16:
        a = float(np.nextafter(a, np.inf))
        step += 1
    return a


def generate(spec: RandomSpec) -> Scenario:
    return gen_pofpoe_users(spec) if spec.family == "pofpoe" else gen_two_class(spec)
