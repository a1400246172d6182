"""Experiment configuration documents.

A config is one JSON object::

    {
      "sources": [{"lambda": 1.3, "mu": 2.3}, ...],
      "q": 0.5,
      "budget": 10,
      "sweep_budget": {"start": 0.5, "stop": 40, "step": 0.05, "boundary_tol": 0.01},
      "sweep_heterogeneity": {"n": 5, "C": 20, "lambda": 1.0,
                              "k_start": 0.2, "k_stop": 1.0, "k_step": 0.05},
      "simulate": {"source": 1, "s": 2.0, "c": 1.0, "horizon": 1e6,
                   "seed": 42, "replications": 1, "engine": "both"},
      "oracle": {"step": 0.01, "max_sources": 2}
    }

Only the keys a command needs must be present; unknown keys are rejected
everywhere.  Source indices in configs and reports are 1-based.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, ValidationError
from .model import ProblemInstance, SourceParams
from .oracle import GridSpec

TOP_KEYS = {"sources", "q", "budget", "sweep_budget", "sweep_heterogeneity", "simulate", "oracle"}
SOURCE_KEYS = {"lambda", "mu"}
SWEEP_BUDGET_KEYS = {"start", "stop", "step", "boundary_tol"}
SWEEP_HET_KEYS = {"n", "C", "lambda", "k_start", "k_stop", "k_step"}
SIMULATE_KEYS = {"source", "s", "c", "horizon", "seed", "replications", "engine"}
ORACLE_KEYS = {"step", "max_sources"}


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    step: float

    def __post_init__(self):
        for name in ("start", "stop", "step"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"grid {name} must be finite")
        if self.step <= 0:
            raise ValidationError("grid step must be > 0")
        if self.stop < self.start:
            raise ValidationError("grid stop must be >= start")

    def values(self) -> list[float]:
        count = math.floor((self.stop - self.start) / self.step + 1e-9) + 1
        return [self.start + i * self.step for i in range(count)]


@dataclass(frozen=True)
class BudgetSweep:
    grid: Grid
    boundary_tol: float = 0.01


@dataclass(frozen=True)
class HeterogeneitySweep:
    n: int
    total_mu: float
    lam: float
    grid: Grid


@dataclass(frozen=True)
class SimulateSpec:
    source: int  # 0-based
    s: float | None
    c: float | None
    horizon: float = 1e6
    seed: int = 0
    replications: int = 1
    engine: str = "both"


@dataclass(frozen=True)
class ExperimentConfig:
    q: float | None = None
    budget: float | None = None
    sources: tuple[SourceParams, ...] | None = None
    sweep_budget: BudgetSweep | None = None
    sweep_heterogeneity: HeterogeneitySweep | None = None
    simulate: SimulateSpec | None = None
    oracle: GridSpec | None = None
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def instance(self, budget: float | None = None) -> ProblemInstance:
        if self.sources is None:
            raise ConfigError("config needs 'sources'")
        if self.q is None:
            raise ConfigError("config needs 'q'")
        budget = self.budget if budget is None else budget
        if budget is None:
            raise ConfigError("config needs 'budget'")
        return ProblemInstance(self.sources, self.q, budget)

    def require(self, section: str):
        value = getattr(self, section)
        if value is None:
            raise ConfigError(f"config needs a '{section}' section")
        return value


def _line_of(text: str | None, path: list) -> str:
    """Best-effort ' (line N)' suffix locating ``path`` inside ``text``."""
    if not text:
        return ""
    pos = 0
    for part in path:
        if isinstance(part, str):
            m = re.compile(r'"%s"\s*:' % re.escape(part)).search(text, pos)
            if m is None:
                break
            pos = m.start()
    return f" (line {text.count(chr(10), 0, pos) + 1})"


def _fmt(path: list) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else part)
    return out or "<root>"


class _Reader:
    def __init__(self, text: str | None):
        self.text = text

    def fail(self, path: list, msg: str):
        raise ConfigError(f"{_fmt(path)}: {msg}{_line_of(self.text, path)}")

    def obj(self, value: Any, path: list, allowed: set[str]) -> dict:
        if not isinstance(value, dict):
            self.fail(path, "expected an object")
        unknown = sorted(set(value) - allowed)
        if unknown:
            self.fail(path + [unknown[0]], f"unknown key {unknown[0]!r}")
        return value

    def number(self, value: Any, path: list) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            self.fail(path, "must be finite")
        return float(value)

    def integer(self, value: Any, path: list) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"expected an integer, got {value!r}")
        return value

    def get(self, d: dict, key: str, path: list, kind: str, default: Any = ...):
        if key not in d:
            if default is ...:
                self.fail(path + [key], "missing required key")
            return default
        conv = self.number if kind == "number" else self.integer
        return conv(d[key], path + [key])


def parse_config(data: Any, text: str | None = None) -> ExperimentConfig:
    """Validate a decoded config document; ``text`` only improves messages."""
    r = _Reader(text)
    top = r.obj(data, [], TOP_KEYS)

    sources = None
    if "sources" in top:
        if not isinstance(top["sources"], list) or not top["sources"]:
            r.fail(["sources"], "expected a non-empty array")
        built = []
        for i, item in enumerate(top["sources"]):
            path = ["sources", i]
            item = r.obj(item, path, SOURCE_KEYS)
            lam = r.get(item, "lambda", path, "number")
            mu = r.get(item, "mu", path, "number")
            try:
                built.append(SourceParams(lam, mu))
            except ValidationError as exc:
                r.fail(path, str(exc))
        sources = tuple(built)

    q = r.get(top, "q", [], "number", None)
    budget = r.get(top, "budget", [], "number", None)
    if q is not None and not 0 < q < 1:
        r.fail(["q"], f"must lie in (0, 1), got {q!r}")
    if budget is not None and budget < 0:
        r.fail(["budget"], f"must be >= 0, got {budget!r}")
    if sources is not None and q is not None:
        try:
            ProblemInstance(sources, q, budget if budget is not None else 0.0)
        except ValidationError as exc:
            r.fail(["sources"], str(exc))

    def grid(section: dict, path: list, keys: tuple[str, str, str]) -> Grid:
        vals = [r.get(section, k, path, "number") for k in keys]
        try:
            return Grid(*vals)
        except ValidationError as exc:
            r.fail(path, str(exc))

    sweep_budget = None
    if "sweep_budget" in top:
        path = ["sweep_budget"]
        sec = r.obj(top["sweep_budget"], path, SWEEP_BUDGET_KEYS)
        tol = r.get(sec, "boundary_tol", path, "number", 0.01)
        if tol <= 0:
            r.fail(path + ["boundary_tol"], "must be > 0")
        sweep_budget = BudgetSweep(grid(sec, path, ("start", "stop", "step")), tol)

    sweep_het = None
    if "sweep_heterogeneity" in top:
        path = ["sweep_heterogeneity"]
        sec = r.obj(top["sweep_heterogeneity"], path, SWEEP_HET_KEYS)
        n = r.get(sec, "n", path, "integer")
        total = r.get(sec, "C", path, "number")
        lam = r.get(sec, "lambda", path, "number", 1.0)
        g = grid(sec, path, ("k_start", "k_stop", "k_step"))
        if n < 1:
            r.fail(path + ["n"], "must be >= 1")
        if total <= n:
            r.fail(path + ["C"], f"must exceed n = {n}")
        if lam <= 0:
            r.fail(path + ["lambda"], "must be > 0")
        if g.start <= 0 or g.stop > 1:
            r.fail(path, "k grid must lie in (0, 1]")
        sweep_het = HeterogeneitySweep(n, total, lam, g)

    simulate = None
    if "simulate" in top:
        path = ["simulate"]
        sec = r.obj(top["simulate"], path, SIMULATE_KEYS)
        idx = r.get(sec, "source", path, "integer", 1)
        if sources is not None and not 1 <= idx <= len(sources):
            r.fail(path + ["source"], f"must be in 1..{len(sources)}")
        engine = sec.get("engine", "both")
        if engine not in ("joint", "physical", "both"):
            r.fail(path + ["engine"], "must be 'joint', 'physical' or 'both'")
        reps = r.get(sec, "replications", path, "integer", 1)
        if reps < 1:
            r.fail(path + ["replications"], "must be >= 1")
        horizon = r.get(sec, "horizon", path, "number", 1e6)
        if horizon <= 0:
            r.fail(path + ["horizon"], "must be > 0")
        seed = r.get(sec, "seed", path, "integer", 0)
        if seed < 0:
            r.fail(path + ["seed"], "must be >= 0")
        simulate = SimulateSpec(
            source=idx - 1,
            s=r.get(sec, "s", path, "number", None),
            c=r.get(sec, "c", path, "number", None),
            horizon=horizon,
            seed=seed,
            replications=reps,
            engine=engine,
        )

    oracle = None
    if "oracle" in top:
        path = ["oracle"]
        sec = r.obj(top["oracle"], path, ORACLE_KEYS)
        try:
            oracle = GridSpec(
                r.get(sec, "step", path, "number"),
                r.get(sec, "max_sources", path, "integer", 2),
            )
        except ValidationError as exc:
            r.fail(path, str(exc))

    return ExperimentConfig(
        q=q,
        budget=budget,
        sources=sources,
        sweep_budget=sweep_budget,
        sweep_heterogeneity=sweep_het,
        simulate=simulate,
        oracle=oracle,
        raw=top,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(data, text)
