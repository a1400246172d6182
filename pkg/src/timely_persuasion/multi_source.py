"""Multi-source equilibrium by active-set search and water-filling.

For a fixed active set every member gets exactly its IC rate ``c_min`` on
state 0, and the leftover budget is split across state-1 rates by the KKT
water-filling rule

    s_i = C_i * (sqrt(A_i / (B_i * theta)) - 1)^+

with the dual level ``theta`` found by bisection.  Active sets are enumerated
exhaustively; any candidate that leaves a member with ``s_i = 0`` is dropped,
since paying ``c_min`` for a silent source is never optimal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import InfeasibleResidual, NonPositiveTheta, NumericalError, TooLarge
from .model import (
    BestResponse,
    ProblemInstance,
    RatePolicy,
    SourceParams,
    c_min,
    receiver_default_utility,
    receiver_utility,
    sender_utility_term,
)
from .single_source import EquilibriumOutcome

BISECTION_TOL = 1e-9
BISECTION_MAX_ITER = 200
ZERO_RATE_TOL = 1e-9
MAX_ENUMERATED_SOURCES = 20


@dataclass(frozen=True)
class WaterFillConstants:
    A: float
    B: float
    C: float

    @classmethod
    def for_source(cls, source: SourceParams, q: float) -> "WaterFillConstants":
        lam, mu = source.lam, source.mu
        cm = c_min(source, q)
        return cls(
            A=lam * (cm + mu + lam),
            B=cm * mu * (lam + mu),
            C=cm * mu / (lam + cm),
        )

    @property
    def threshold(self) -> float:
        """Dual level above which this source receives no state-1 rate."""
        return self.A / self.B


@dataclass(frozen=True)
class CandidateSolution:
    """Best allocation for one fixed active set.

    ``s`` and ``c`` cover all n sources (zeros off the set).  ``theta`` is
    None when the set is infeasible.  ``pruned`` flags feasible candidates
    where some member ends up with ``s_i = 0``.
    """

    active_set: int
    s: tuple[float, ...]
    c: tuple[float, ...]
    theta: float | None
    utility: float
    feasible: bool
    pruned: bool = False

    @property
    def members(self) -> tuple[int, ...]:
        return mask_members(self.active_set, len(self.s))


def mask_members(mask: int, n: int) -> tuple[int, ...]:
    return tuple(i for i in range(n) if mask >> i & 1)


def water_fill_s(constants: Sequence[WaterFillConstants], theta: float) -> list[float]:
    if not theta > 0:
        raise NonPositiveTheta(f"theta must be > 0, got {theta!r}")
    out = []
    for k in constants:
        level = math.sqrt(k.A / (k.B * theta)) - 1.0
        out.append(k.C * level if level > 0 else 0.0)
    return out


def _total(constants: Sequence[WaterFillConstants], theta: float) -> float:
    return math.fsum(water_fill_s(constants, theta))


def _polish(constants, residual_budget, theta, gap):
    """Solve for theta exactly on the support found by bisection.

    Keeps the bisection result unless the closed form preserves the support
    and shrinks the budget gap.
    """
    support = [k for k in constants if k.threshold > theta]
    num = math.fsum(k.C * math.sqrt(k.A / k.B) for k in support)
    den = residual_budget + math.fsum(k.C for k in support)
    exact = (num / den) ** 2
    if exact <= 0 or [k for k in constants if k.threshold > exact] != support:
        return theta
    if abs(_total(constants, exact) - residual_budget) < gap:
        return exact
    return theta


def bisect_theta(
    constants: Sequence[WaterFillConstants],
    residual_budget: float,
    *,
    tol: float = BISECTION_TOL,
    max_iter: int = BISECTION_MAX_ITER,
) -> float:
    """Dual level at which the water-filled rates sum to ``residual_budget``.

    The total is continuous and strictly decreasing on (0, max A/B), and is
    zero at the upper end, so bisection on that bracket always converges.
    """
    if not residual_budget > 0:
        raise InfeasibleResidual(f"residual budget must be > 0, got {residual_budget!r}")
    if not constants:
        raise InfeasibleResidual("empty active set")
    hi = max(k.threshold for k in constants)
    lo = min(1e-12, 0.5 * hi)
    while _total(constants, lo) <= residual_budget:
        lo *= 1e-3
        if lo < 1e-300:
            raise NumericalError("could not bracket theta from below")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        gap = _total(constants, mid) - residual_budget
        if abs(gap) <= tol:
            return _polish(constants, residual_budget, mid, abs(gap))
        if gap > 0:
            lo = mid
        else:
            hi = mid
    raise NumericalError(
        f"bisection did not reach |sum - residual| <= {tol:g} "
        f"(residual {residual_budget!r}, bracket [{lo!r}, {hi!r}])"
    )


def solve_active_set(instance: ProblemInstance, active_set: int) -> CandidateSolution:
    n = instance.n
    members = mask_members(active_set, n)
    cms = instance.c_mins()
    zeros = (0.0,) * n
    residual = instance.budget - math.fsum(cms[i] for i in members)
    if not members or residual <= 0:
        return CandidateSolution(active_set, zeros, zeros, None, 0.0, feasible=False)

    constants = [WaterFillConstants.for_source(instance.sources[i], instance.q) for i in members]
    theta = bisect_theta(constants, residual)
    rates = water_fill_s(constants, theta)

    s = [0.0] * n
    c = [0.0] * n
    for i, si in zip(members, rates):
        s[i] = si
        c[i] = cms[i]
    utility = math.fsum(sender_utility_term(instance.sources[i], s[i], c[i]) for i in members)
    pruned = any(si <= ZERO_RATE_TOL for si in rates)
    return CandidateSolution(active_set, tuple(s), tuple(c), theta, utility, True, pruned)


def _selection_key(cand: CandidateSolution) -> tuple[float, int, int]:
    # max utility, then fewest members, then smallest bitmask
    return (-cand.utility, bin(cand.active_set).count("1"), cand.active_set)


def select_best(candidates) -> CandidateSolution | None:
    """Deterministic winner among feasible, unpruned candidates."""
    viable = [cand for cand in candidates if cand.feasible and not cand.pruned]
    if not viable:
        return None
    return min(viable, key=_selection_key)


def enumerate_candidates(instance: ProblemInstance, max_sources: int = MAX_ENUMERATED_SOURCES):
    n = instance.n
    if n > max_sources:
        raise TooLarge(f"exhaustive search over 2^{n} active sets exceeds the cap n <= {max_sources}")
    cms = instance.c_mins()
    for mask in range(1, 1 << n):
        if math.fsum(cms[i] for i in mask_members(mask, n)) >= instance.budget:
            continue
        yield solve_active_set(instance, mask)


def outcome_from_candidate(instance: ProblemInstance, cand: CandidateSolution | None) -> EquilibriumOutcome:
    n, q = instance.n, instance.q
    if cand is None:
        return EquilibriumOutcome(
            policy=RatePolicy.zeros(n),
            responses=(BestResponse.DEFAULT,) * n,
            sender_utility=0.0,
            receiver_utility=instance.default_receiver_utility(),
            active_set=(),
        )
    members = set(cand.members)
    responses = []
    j_r = []
    for i, src in enumerate(instance.sources):
        if i in members:
            responses.append(BestResponse.FOLLOW_SENDER)
            j_r.append(receiver_utility(src, q, cand.s[i], cand.c[i]))
        else:
            responses.append(BestResponse.DEFAULT)
            j_r.append(receiver_default_utility(src, q))
    return EquilibriumOutcome(
        policy=RatePolicy.from_lists(cand.s, cand.c),
        responses=tuple(responses),
        sender_utility=cand.utility,
        receiver_utility=math.fsum(j_r),
        active_set=tuple(sorted(members)),
    )


def solve_multi(instance: ProblemInstance, max_sources: int = MAX_ENUMERATED_SOURCES) -> EquilibriumOutcome:
    """Sender-optimal policy and receiver responses for ``instance``."""
    best = select_best(enumerate_candidates(instance, max_sources))
    return outcome_from_candidate(instance, best)
