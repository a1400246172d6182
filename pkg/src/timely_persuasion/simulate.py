"""Monte-Carlo estimates of the (state, estimate) occupancy.

Two constructions of the same process:

* ``simulate_joint`` runs a Gillespie simulation directly on the four-state
  joint chain.
* ``simulate_physical`` draws whole source sojourns, overlays a
  state-modulated Poisson sampling process on each one, and lets the receiver
  copy the sampled state.

Both integrate exact sojourn times (no time grid) and drop the first 1% of
the horizon as burn-in.  Randomness comes from numpy's PCG64 generator:
uniforms are drawn in blocks and fed to numba kernels, and exponentials use
the inverse transform ``-log(1 - u) / rate``.  Replication ``r`` of a run
seeded with ``seed`` uses ``SeedSequence(seed).spawn(R)[r]``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DegenerateRates, NonPositiveHorizon, ValidationError
from .model import SourceParams, _check_rate, prior_distribution

BURN_IN_FRACTION = 0.01
BLOCK_SIZE = 1 << 20

# joint state index = 2 * x + xhat
S00, S01, S10, S11 = 0, 1, 2, 3


@dataclass(frozen=True)
class SimulationResult:
    occupancy: tuple[float, float, float, float]
    sender_utility_hat: float
    receiver_utility_hat: float
    horizon: float
    events: int
    seed: int
    engine: str

    def to_dict(self) -> dict:
        return {
            "engine": self.engine,
            "seed": self.seed,
            "horizon": self.horizon,
            "events": self.events,
            "occupancy": list(self.occupancy),
            "sender_utility_hat": self.sender_utility_hat,
            "receiver_utility_hat": self.receiver_utility_hat,
        }


@numba.njit(cache=True, nogil=True)
def _accumulate(occ, state, t0, t1, burn, horizon):
    lo = max(t0, burn)
    hi = min(t1, horizon)
    if hi > lo:
        occ[state] += hi - lo


@numba.njit(cache=True, nogil=True)
def _joint_kernel(u, pos, lam, mu, s, c, state, t, burn, horizon, occ, events):
    n = u.shape[0]
    while t < horizon and pos + 2 <= n:
        if state == 0:  # (0,0): source flips up
            total = lam
        elif state == 2:  # (1,0): flips down or gets sampled
            total = mu + s
        elif state == 3:  # (1,1): flips down
            total = mu
        else:  # (0,1): sampled or flips up
            total = c + lam
        dt = -math.log(1.0 - u[pos]) / total
        pick = u[pos + 1] * total
        pos += 2
        _accumulate(occ, state, t, t + dt, burn, horizon)
        t += dt
        if state == 0:
            state = 2
        elif state == 2:
            state = 0 if pick < mu else 3
        elif state == 3:
            state = 1
        else:
            state = 0 if pick < c else 3
        events += 1
    return pos, state, t, events


@numba.njit(cache=True, nogil=True)
def _physical_kernel(u, pos, lam, mu, s, c, x, xhat, t, sojourn_end, burn, horizon, occ, events):
    n = u.shape[0]
    while t < horizon and pos + 2 <= n:
        rate = s if x == 1 else c
        if rate > 0.0:
            e = -math.log(1.0 - u[pos]) / rate
            pos += 1
        else:
            e = math.inf
        if t + e < sojourn_end:
            _accumulate(occ, 2 * x + xhat, t, t + e, burn, horizon)
            t += e
            if xhat != x:
                xhat = x
                events += 1
        else:
            _accumulate(occ, 2 * x + xhat, t, sojourn_end, burn, horizon)
            t = sojourn_end
            x = 1 - x
            events += 1
            flip = mu if x == 1 else lam
            sojourn_end = t - math.log(1.0 - u[pos]) / flip
            pos += 1
    return pos, x, xhat, t, sojourn_end, events


def _validate(source: SourceParams, s: float, c: float, horizon: float, allow_silent: bool):
    s = _check_rate("s", s, positive=False)
    c = _check_rate("c", c, positive=False)
    if not (math.isfinite(horizon) and horizon > 0):
        raise NonPositiveHorizon(f"horizon must be > 0, got {horizon!r}")
    if not allow_silent and s == 0.0 and c == 0.0:
        raise DegenerateRates("s = c = 0: nothing to simulate on the joint chain")
    return s, c, float(horizon)


def _initial_state(rng: np.random.Generator, source: SourceParams, x0: int | None) -> int:
    if x0 is None:
        _, pi1 = prior_distribution(source)
        return int(rng.random() < pi1)
    if x0 not in (0, 1):
        raise ValidationError(f"x0 must be 0, 1 or None, got {x0!r}")
    return x0


def _result(occ: np.ndarray, q: float, horizon: float, events: int, seed: int, engine: str):
    frac = occ / occ.sum()
    p00, p01, p10, p11 = (float(v) for v in frac)
    return SimulationResult(
        occupancy=(p00, p01, p10, p11),
        sender_utility_hat=p01 + p11,
        receiver_utility_hat=q * p00 + (1.0 - q) * p11,
        horizon=horizon,
        events=events,
        seed=seed,
        engine=engine,
    )


def _generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def simulate_joint(
    source: SourceParams,
    s: float,
    c: float,
    horizon: float,
    seed: int,
    *,
    q: float = 0.5,
    x0: int | None = None,
    rng: np.random.Generator | None = None,
) -> SimulationResult:
    """Gillespie simulation of the four-state (state, estimate) chain.

    ``q`` only weights the receiver utility estimate.  The chain starts at
    ``(x0, x0)`` with ``x0`` drawn from the prior unless given.
    """
    s, c, horizon = _validate(source, s, c, horizon, allow_silent=False)
    rng = rng if rng is not None else _generator(seed)
    x = _initial_state(rng, source, x0)
    state = 2 * x + x
    t, events = 0.0, 0
    occ = np.zeros(4)
    burn = BURN_IN_FRACTION * horizon
    while t < horizon:
        u = rng.random(BLOCK_SIZE)
        _, state, t, events = _joint_kernel(
            u, 0, source.lam, source.mu, s, c, state, t, burn, horizon, occ, events
        )
    return _result(occ, q, horizon, events, seed, "joint")


def simulate_physical(
    source: SourceParams,
    s: float,
    c: float,
    horizon: float,
    seed: int,
    *,
    q: float = 0.5,
    x0: int | None = None,
    rng: np.random.Generator | None = None,
) -> SimulationResult:
    """Simulate the source path and the sampler separately.

    The receiver starts out knowing ``x(0)`` and overwrites its estimate at
    every sample.  ``s = c = 0`` is allowed and freezes the estimate at
    ``x(0)``.
    """
    s, c, horizon = _validate(source, s, c, horizon, allow_silent=True)
    rng = rng if rng is not None else _generator(seed)
    x = _initial_state(rng, source, x0)
    xhat = x
    t, events = 0.0, 0
    sojourn_end = -math.log(1.0 - rng.random()) / (source.mu if x == 1 else source.lam)
    occ = np.zeros(4)
    burn = BURN_IN_FRACTION * horizon
    while t < horizon:
        u = rng.random(BLOCK_SIZE)
        _, x, xhat, t, sojourn_end, events = _physical_kernel(
            u, 0, source.lam, source.mu, s, c, x, xhat, t, sojourn_end, burn, horizon, occ, events
        )
    return _result(occ, q, horizon, events, seed, "physical")


ENGINES = {"joint": simulate_joint, "physical": simulate_physical}


def replicate(
    engine: str,
    source: SourceParams,
    s: float,
    c: float,
    horizon: float,
    seed: int,
    replications: int,
    *,
    q: float = 0.5,
    threads: int = 1,
) -> list[SimulationResult]:
    """Independent replications, one spawned seed stream each.

    Kernels release the GIL, so ``threads > 1`` runs replications in
    parallel; results come back in replication order either way.
    """
    if engine not in ENGINES:
        raise ValidationError(f"unknown engine {engine!r}; expected one of {sorted(ENGINES)}")
    if replications < 1:
        raise ValidationError("replications must be >= 1")
    fn = ENGINES[engine]
    children = np.random.SeedSequence(seed).spawn(replications)

    def run(child):
        return fn(source, s, c, horizon, seed, q=q, rng=_generator(child))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(run, children))
