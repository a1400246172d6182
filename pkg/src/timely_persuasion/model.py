"""Closed-form quantities for a binary CTMC source observed through
state-dependent Poisson sampling.

A source flips 0 -> 1 at rate ``lam`` and 1 -> 0 at rate ``mu``.  The sender
samples at rate ``s`` while the source is in state 1 and at rate ``c`` while
it is in state 0; the receiver holds the last sampled value as its estimate.
The pair (state, estimate) is a four-state CTMC whose stationary law drives
both players' long-run utilities.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateRates, InvalidInstance, ValidationError

MAX_RATE = 1e9
IC_TOL = 1e-9


def _check_rate(name: str, value: float, *, positive: bool) -> float:
    value = float(value)
    if not math.isfinite(value) or value > MAX_RATE:
        raise ValidationError(f"{name} must be finite and <= {MAX_RATE:g}, got {value!r}")
    if positive and value <= 0:
        raise ValidationError(f"{name} must be > 0, got {value!r}")
    if value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class SourceParams:
    """Transition rates of one binary source."""

    lam: float
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "lam", _check_rate("lambda", self.lam, positive=True))
        object.__setattr__(self, "mu", _check_rate("mu", self.mu, positive=True))


@dataclass(frozen=True)
class ProblemInstance:
    """Sources, receiver weight ``q`` and total sampling budget."""

    sources: tuple[SourceParams, ...]
    q: float
    budget: float

    def __post_init__(self):
        sources = tuple(self.sources)
        object.__setattr__(self, "sources", sources)
        if not sources:
            raise InvalidInstance("at least one source is required")
        q = float(self.q)
        if not (0.0 < q < 1.0):
            raise InvalidInstance(f"q must lie in (0, 1), got {q!r}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "budget", _check_rate("budget", self.budget, positive=False))
        for i, src in enumerate(sources):
            if not q * src.mu > (1.0 - q) * src.lam:
                raise InvalidInstance(
                    f"source {i + 1}: q*mu = {q * src.mu:g} must exceed "
                    f"(1-q)*lambda = {(1.0 - q) * src.lam:g}"
                )

    @property
    def n(self) -> int:
        return len(self.sources)

    @classmethod
    def from_rates(cls, lams: Sequence[float], mus: Sequence[float], q: float, budget: float):
        if len(lams) != len(mus):
            raise InvalidInstance("lambda and mu lists differ in length")
        return cls(tuple(SourceParams(l, m) for l, m in zip(lams, mus)), q, budget)

    def c_mins(self) -> list[float]:
        return [c_min(src, self.q) for src in self.sources]

    def default_receiver_utility(self) -> float:
        return sum(receiver_default_utility(src, self.q) for src in self.sources)


@dataclass(frozen=True)
class RatePolicy:
    """Per-source sampling rates ``(s_i, c_i)``."""

    rates: tuple[tuple[float, float], ...]

    def __post_init__(self):
        checked = tuple(
            (_check_rate(f"s[{i}]", s, positive=False), _check_rate(f"c[{i}]", c, positive=False))
            for i, (s, c) in enumerate(self.rates)
        )
        object.__setattr__(self, "rates", checked)

    @classmethod
    def from_lists(cls, s: Sequence[float], c: Sequence[float]) -> "RatePolicy":
        return cls(tuple(zip(s, c)))

    @classmethod
    def zeros(cls, n: int) -> "RatePolicy":
        return cls(((0.0, 0.0),) * n)

    @property
    def s(self) -> list[float]:
        return [r[0] for r in self.rates]

    @property
    def c(self) -> list[float]:
        return [r[1] for r in self.rates]

    @property
    def budget_usage(self) -> float:
        return math.fsum(s + c for s, c in self.rates)


@dataclass(frozen=True)
class StationaryDistribution:
    p00: float
    p01: float
    p10: float
    p11: float
    kappa: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p00, self.p01, self.p10, self.p11)


class BestResponse(enum.Enum):
    FOLLOW_SENDER = "follow_sender"
    DEFAULT = "default"


def prior_distribution(source: SourceParams) -> tuple[float, float]:
    """Stationary law ``(pi0, pi1)`` of the source alone."""
    total = source.mu + source.lam
    return source.mu / total, source.lam / total


def ic_threshold(source: SourceParams, q: float) -> float:
    """``q*mu/(1-q) - lam`` without the positivity check."""
    return q * source.mu / (1.0 - q) - source.lam


def c_min(source: SourceParams, q: float) -> float:
    """Smallest state-0 sampling rate that keeps the receiver following.

    Raises InvalidInstance unless ``q*mu > (1-q)*lam``, i.e. unless the
    threshold is strictly positive.
    """
    if not q * source.mu > (1.0 - q) * source.lam:
        raise InvalidInstance(
            f"q*mu = {q * source.mu:g} must exceed (1-q)*lambda = {(1.0 - q) * source.lam:g}"
        )
    return ic_threshold(source, q)


def _kappa(lam: float, mu: float, s: float, c: float) -> float:
    return (mu + lam) * (mu * c + lam * s + c * s)


def _check_policy(s: float, c: float) -> tuple[float, float]:
    s = _check_rate("s", s, positive=False)
    c = _check_rate("c", c, positive=False)
    return s, c


def joint_stationary(source: SourceParams, s: float, c: float) -> StationaryDistribution:
    """Stationary law of (state, estimate) under sampling rates ``(s, c)``."""
    s, c = _check_policy(s, c)
    if s == 0.0 and c == 0.0:
        raise DegenerateRates("s = c = 0: the joint chain is not ergodic")
    lam, mu = source.lam, source.mu
    kappa = _kappa(lam, mu, s, c)
    return StationaryDistribution(
        p00=mu * c * (mu + s) / kappa,
        p01=mu * lam * s / kappa,
        p10=mu * lam * c / kappa,
        p11=lam * s * (lam + c) / kappa,
        kappa=kappa,
    )


def local_balance_residuals(
    source: SourceParams, s: float, c: float, dist: StationaryDistribution
) -> tuple[float, float, float, float]:
    """Inflow minus outflow for each of the four joint states."""
    lam, mu = source.lam, source.mu
    p00, p01, p10, p11 = dist.as_tuple()
    return (
        p00 * lam - (p10 * mu + p01 * c),
        p10 * (mu + s) - p00 * lam,
        p01 * (c + lam) - p11 * mu,
        p11 * mu - (p10 * s + p01 * lam),
    )


def sender_utility_term(source: SourceParams, s: float, c: float) -> float:
    """Long-run fraction of time the estimate equals 1.

    Not gated by the receiver's best response.  ``s = c = 0`` returns 0 by
    convention: without sampling the estimate never leaves its default.
    """
    s, c = _check_policy(s, c)
    if s == 0.0:
        return 0.0
    lam, mu = source.lam, source.mu
    return lam * s * (c + lam + mu) / _kappa(lam, mu, s, c)


def receiver_default_utility(source: SourceParams, q: float) -> float:
    return q * source.mu / (source.mu + source.lam)


def receiver_utility(source: SourceParams, q: float, s: float, c: float) -> float:
    """Receiver's long-run utility when it follows the sender's messages.

    ``s = c = 0`` conveys no information and returns the default utility.
    """
    s, c = _check_policy(s, c)
    if s == 0.0 and c == 0.0:
        return receiver_default_utility(source, q)
    dist = joint_stationary(source, s, c)
    return q * dist.p00 + (1.0 - q) * dist.p11


def best_response(source: SourceParams, q: float, s: float, c: float) -> BestResponse:
    """Receiver's choice between following the messages and the default.

    Ties go to the sender.  With ``s > 0`` following pays off iff
    ``c >= q*mu/(1-q) - lam`` (checked with tolerance ``IC_TOL``); with
    ``s = 0`` the two options yield identical utility.
    """
    s, c = _check_policy(s, c)
    if s == 0.0:
        return BestResponse.FOLLOW_SENDER
    if c - ic_threshold(source, q) >= -IC_TOL:
        return BestResponse.FOLLOW_SENDER
    return BestResponse.DEFAULT


def sender_utility_partials(source: SourceParams, s: float, c: float) -> tuple[float, float]:
    """Partial derivatives of ``sender_utility_term`` in ``s`` and ``c``."""
    s, c = _check_policy(s, c)
    if s == 0.0 and c == 0.0:
        raise DegenerateRates("partials undefined at s = c = 0")
    lam, mu = source.lam, source.mu
    denom = (mu + lam) * (mu * c + lam * s + c * s) ** 2
    d_ds = lam * mu * c * (lam + mu + c) / denom
    d_dc = -lam * mu * s * (lam + mu + s) / denom
    return d_ds, d_dc
