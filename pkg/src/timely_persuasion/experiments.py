"""Experiment runners behind the CLI subcommands.

Every runner returns plain dicts/lists so the CLI can serialise them as JSON
or CSV without further massaging.  Active sets are reported 1-based.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

from .config import ExperimentConfig
from .errors import InvalidProfile, ValidationError
from .model import (
    ProblemInstance,
    SourceParams,
    joint_stationary,
    receiver_utility,
    sender_utility_term,
)
from .multi_source import solve_multi
from .oracle import grid_oracle
from .simulate import replicate
from .single_source import EquilibriumOutcome


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def format_set(members: Iterable[int]) -> str:
    return ";".join(str(i + 1) for i in members)


def outcome_report(instance: ProblemInstance, outcome: EquilibriumOutcome) -> dict:
    cms = instance.c_mins()
    return {
        "budget": instance.budget,
        "q": instance.q,
        "active_set": [i + 1 for i in outcome.active_set],
        "active_mask": outcome.active_mask,
        "sender_utility": outcome.sender_utility,
        "receiver_utility": outcome.receiver_utility,
        "budget_usage": outcome.policy.budget_usage,
        "sources": [
            {
                "index": i + 1,
                "lambda": src.lam,
                "mu": src.mu,
                "s": s,
                "c": c,
                "c_min": cms[i],
                "response": resp.value,
            }
            for i, (src, (s, c), resp) in enumerate(
                zip(instance.sources, outcome.policy.rates, outcome.responses)
            )
        ],
    }


def run_solve(config: ExperimentConfig) -> dict:
    instance = config.instance()
    return outcome_report(instance, solve_multi(instance))


def budget_row(instance: ProblemInstance, outcome: EquilibriumOutcome) -> dict:
    row = {
        "R": instance.budget,
        "J_S": outcome.sender_utility,
        "J_R": outcome.receiver_utility,
        "active_mask": outcome.active_mask,
        "active_set": format_set(outcome.active_set),
    }
    for i, (s, c) in enumerate(outcome.policy.rates):
        row[f"s_{i + 1}"] = s
    for i, (s, c) in enumerate(outcome.policy.rates):
        row[f"c_{i + 1}"] = c
    return row


def refine_boundary(mask_at: Callable[[float], int], lo: float, hi: float, tol: float) -> float:
    """Locate an active-set change inside ``[lo, hi]`` to within ``tol``.

    Bisects on "same set as at ``lo``" and returns the midpoint of the final
    bracket.
    """
    left = mask_at(lo)
    while hi - lo > 2 * tol:
        mid = 0.5 * (lo + hi)
        if mask_at(mid) == left:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep_budget(config: ExperimentConfig, threads: int = 1) -> tuple[list[dict], list[dict]]:
    """Solve along the budget grid; return rows and active-set boundaries."""
    spec = config.require("sweep_budget")
    base = config.instance(budget=0.0)

    def solve_at(budget: float) -> EquilibriumOutcome:
        return solve_multi(ProblemInstance(base.sources, base.q, budget))

    budgets = spec.grid.values()
    outcomes = _pmap(solve_at, budgets, threads)
    rows = [budget_row(ProblemInstance(base.sources, base.q, R), o) for R, o in zip(budgets, outcomes)]

    boundaries = []
    for k in range(len(budgets) - 1):
        a, b = outcomes[k], outcomes[k + 1]
        if a.active_mask == b.active_mask:
            continue
        where = refine_boundary(lambda R: solve_at(R).active_mask, budgets[k], budgets[k + 1], spec.boundary_tol)
        boundaries.append({
            "R": where,
            "tolerance": spec.boundary_tol,
            "from_set": format_set(a.active_set),
            "to_set": format_set(b.active_set),
        })
    return rows, boundaries


def heterogeneity_profile(n: int, total: float, k: float) -> list[float]:
    """``mu_i = 1 + (total - n) * k**i / sum_j k**j`` for ``i = 1..n``."""
    if n < 1:
        raise InvalidProfile(f"n must be >= 1, got {n}")
    if not total > n:
        raise InvalidProfile(f"C must exceed n = {n}, got {total!r}")
    if not 0 < k <= 1:
        raise InvalidProfile(f"k must lie in (0, 1], got {k!r}")
    weights = [k**i for i in range(1, n + 1)]
    norm = math.fsum(weights)
    return [1.0 + (total - n) * w / norm for w in weights]


def sweep_heterogeneity(config: ExperimentConfig, threads: int = 1) -> list[dict]:
    spec = config.require("sweep_heterogeneity")
    if config.q is None or config.budget is None:
        raise ValidationError("sweep-heterogeneity needs top-level 'q' and 'budget'")

    def row_at(k: float) -> dict:
        mus = heterogeneity_profile(spec.n, spec.total_mu, k)
        instance = ProblemInstance(tuple(SourceParams(spec.lam, mu) for mu in mus), config.q, config.budget)
        outcome = solve_multi(instance)
        row = {"k": k}
        row.update({f"mu_{i + 1}": mu for i, mu in enumerate(mus)})
        row["J_S"] = outcome.sender_utility
        row["J_R"] = instance.default_receiver_utility()
        row["active_set"] = format_set(outcome.active_set)
        return row

    return _pmap(row_at, spec.grid.values(), threads)


def run_simulate(config: ExperimentConfig, seed: int | None = None, threads: int = 1) -> dict:
    """Simulate one source under a given policy, or under the equilibrium one.

    Missing ``s``/``c`` in the config default to the source's equilibrium
    rates; if the source is inactive there, ``c`` falls back to its IC rate.
    """
    spec = config.require("simulate")
    instance = config.instance()
    if spec.source >= instance.n:
        raise ValidationError(f"simulate.source must be in 1..{instance.n}")
    src = instance.sources[spec.source]
    s, c = spec.s, spec.c
    if s is None or c is None:
        eq = solve_multi(instance).policy.rates[spec.source]
        s = eq[0] if s is None else s
        c = (eq[1] or instance.c_mins()[spec.source]) if c is None else c
    seed = spec.seed if seed is None else seed
    engines = ("joint", "physical") if spec.engine == "both" else (spec.engine,)

    closed = None
    if s > 0 or c > 0:
        dist = joint_stationary(src, s, c)
        closed = {
            "occupancy": list(dist.as_tuple()),
            "sender_utility": sender_utility_term(src, s, c),
            "receiver_utility": receiver_utility(src, instance.q, s, c),
        }
    runs = []
    for engine in engines:
        for rep, res in enumerate(
            replicate(engine, src, s, c, spec.horizon, seed, spec.replications, q=instance.q, threads=threads)
        ):
            record = res.to_dict()
            record["replication"] = rep
            runs.append(record)
    return {
        "source": spec.source + 1,
        "lambda": src.lam,
        "mu": src.mu,
        "q": instance.q,
        "s": s,
        "c": c,
        "closed_form": closed,
        "runs": runs,
    }


def run_oracle(config: ExperimentConfig) -> dict:
    grid = config.require("oracle")
    instance = config.instance()
    policy, value = grid_oracle(instance, grid)
    solved = solve_multi(instance)
    return {
        "step": grid.step,
        "oracle_utility": value,
        "oracle_policy": [{"s": s, "c": c} for s, c in policy.rates],
        "solver_utility": solved.sender_utility,
        "gap": solved.sender_utility - value,
        "tolerance": max(1e-3, 5 * grid.step),
    }
