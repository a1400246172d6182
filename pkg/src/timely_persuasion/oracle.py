"""Brute-force grid maximiser of the sender's gated objective.

Independent of the structural results used by the analytical solvers: every
lattice point ``(s_1, c_1, ..., s_n, c_n)`` within budget is scored by asking
the receiver's best response source by source, and the sender only collects
``sender_utility_term`` where the receiver follows.  Each source's exact IC
rate is added to its ``c`` axis as an extra off-lattice value.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import TooLarge, ValidationError
from .model import (
    BestResponse,
    ProblemInstance,
    RatePolicy,
    best_response,
    c_min,
    sender_utility_term,
)

MAX_STEPS_PER_AXIS = 10_000
MAX_GRID_POINTS = 2_000_000_000
BUDGET_SLACK = 1e-12


@dataclass(frozen=True)
class GridSpec:
    step: float
    max_sources: int = 2

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValidationError(f"grid step must be > 0, got {self.step!r}")
        if self.max_sources < 1:
            raise ValidationError("max_sources must be >= 1")


def _axis(budget: float, step: float, extra: float | None = None) -> np.ndarray:
    k = math.floor(budget / step + 1e-9)
    values = np.arange(k + 1, dtype=float) * step
    values = values[values <= budget * (1 + BUDGET_SLACK)]
    if extra is not None and 0 <= extra <= budget:
        values = np.union1d(values, [extra])
    return values


def _source_points(instance: ProblemInstance, i: int, step: float):
    """All (s, c) lattice points for source ``i`` with their gated value.

    Points come back in lexicographic (s, c) order.
    """
    src, q, budget = instance.sources[i], instance.q, instance.budget
    s_axis = _axis(budget, step)
    c_axis = _axis(budget, step, extra=c_min(src, q))
    s_grid, c_grid = np.meshgrid(s_axis, c_axis, indexing="ij")
    s_flat, c_flat = s_grid.ravel(), c_grid.ravel()
    keep = s_flat + c_flat <= budget * (1 + BUDGET_SLACK)
    s_flat, c_flat = s_flat[keep], c_flat[keep]
    value = np.array([
        sender_utility_term(src, s, c)
        if best_response(src, q, s, c) is BestResponse.FOLLOW_SENDER
        else 0.0
        for s, c in zip(s_flat, c_flat)
    ])
    return s_flat, c_flat, value


def grid_oracle(instance: ProblemInstance, grid: GridSpec) -> tuple[RatePolicy, float]:
    """Exhaustive argmax over the budget-feasible grid.

    Ties resolve to the lexicographically smallest point.
    """
    n, budget = instance.n, instance.budget
    if n > grid.max_sources:
        raise TooLarge(f"oracle supports at most {grid.max_sources} sources, got {n}")
    if budget / grid.step > MAX_STEPS_PER_AXIS:
        raise TooLarge(f"budget/step = {budget / grid.step:g} exceeds {MAX_STEPS_PER_AXIS}")

    points = [_source_points(instance, i, grid.step) for i in range(n)]
    total = math.prod(len(p[0]) for p in points)
    if total > MAX_GRID_POINTS:
        raise TooLarge(f"{total} grid points exceed the cap {MAX_GRID_POINTS}")

    *head, last = points
    last_cost = last[0] + last[1]
    best_value = -1.0
    best_index: tuple[int, ...] = ()
    # python loop over all but the last source, vectorised over the last one
    for combo in itertools.product(*(range(len(p[0])) for p in head)):
        spent = sum(p[0][j] + p[1][j] for p, j in zip(head, combo))
        collected = sum(p[2][j] for p, j in zip(head, combo))
        ok = spent + last_cost <= budget * (1 + BUDGET_SLACK)
        if not ok.any():
            continue
        scores = np.where(ok, collected + last[2], -np.inf)
        j = int(np.argmax(scores))
        if scores[j] > best_value:
            best_value = float(scores[j])
            best_index = (*combo, j)

    rates = tuple((float(p[0][j]), float(p[1][j])) for p, j in zip(points, best_index))
    return RatePolicy(rates), best_value
