"""Closed-form Stackelberg equilibrium for a single source."""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    BestResponse,
    RatePolicy,
    SourceParams,
    _check_rate,
    c_min,
    receiver_default_utility,
)


@dataclass(frozen=True)
class EquilibriumOutcome:
    """Sender policy, receiver responses and the resulting utilities.

    ``active_set`` holds 0-based indices of sources with ``s_i > 0``.
    """

    policy: RatePolicy
    responses: tuple[BestResponse, ...]
    sender_utility: float
    receiver_utility: float
    active_set: tuple[int, ...]

    @property
    def active_mask(self) -> int:
        mask = 0
        for i in self.active_set:
            mask |= 1 << i
        return mask


def solve_single(source: SourceParams, q: float, budget: float) -> EquilibriumOutcome:
    """Equilibrium of the one-source game.

    Below the IC threshold the sender cannot persuade and stays silent.
    Otherwise it spends exactly ``c_min`` on state-0 sampling and the rest of
    the budget on state-1 sampling.  At ``budget == c_min`` this gives
    ``s = 0`` and zero sender utility.
    """
    budget = _check_rate("budget", budget, positive=False)
    cm = c_min(source, q)
    j_r = receiver_default_utility(source, q)
    if budget < cm:
        return EquilibriumOutcome(
            policy=RatePolicy.zeros(1),
            responses=(BestResponse.DEFAULT,),
            sender_utility=0.0,
            receiver_utility=j_r,
            active_set=(),
        )
    lam, mu = source.lam, source.mu
    c_bar = budget - cm
    j_s = lam * c_bar * (cm + lam + mu) / ((mu + lam) * (mu * cm + lam * c_bar + cm * c_bar))
    return EquilibriumOutcome(
        policy=RatePolicy(((c_bar, cm),)),
        responses=(BestResponse.FOLLOW_SENDER,),
        sender_utility=j_s,
        receiver_utility=j_r,
        active_set=(0,) if c_bar > 0 else (),
    )
