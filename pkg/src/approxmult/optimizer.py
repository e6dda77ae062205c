"""Tree-structured Parzen Estimator over the per-HA option space.

Each searched HA is one categorical dimension with four options. After a
random start-up phase, trials are split into a good and a bad group by PDAE;
smoothed per-dimension frequencies give the densities l (good) and g (bad).
Candidates are drawn from l and ranked by sum(log l - log g).

Trials are produced in synchronous rounds of ``batch`` configurations. Round
``i`` draws from its own generator seeded with ``(seed, i)``, so a resumed
run picks up the exact stream of an uninterrupted one.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from .approx import ApproxConfig, config_from_indices
from .arch import MultSpec, SearchPlan, SpecError, make_plan
from .costmodel import CostBreakdown, ProxyCostModel, UnmeasuredError, fingerprint, pdae
from .errmetrics import DEFAULT_SAMPLES, EXHAUSTIVE_CAP, ErrorReport, error_metrics

log = logging.getLogger(__name__)

N_OPTIONS = 4


@dataclass(frozen=True)
class SearchSpace:
    k: int
    options_per_dim: int = N_OPTIONS

    @property
    def size(self) -> int:
        return self.options_per_dim ** self.k


@dataclass(frozen=True)
class TpeParams:
    n_startup: Optional[int] = None  # None: max(10, budget // 20)
    gamma: float = 0.25
    prior_weight: float = 1.0
    n_candidates: int = 24
    batch: Optional[int] = None  # None: worker count

    def validate(self):
        if self.n_startup is not None and self.n_startup < 0:
            raise SpecError("n_startup must be >= 0")
        if not 0.0 < self.gamma < 1.0:
            raise SpecError("gamma must lie in (0, 1)")
        if self.prior_weight <= 0:
            raise SpecError("prior_weight must be positive")
        if self.n_candidates < 1:
            raise SpecError("n_candidates must be >= 1")
        if self.batch is not None and self.batch < 1:
            raise SpecError("batch must be >= 1")

    def resolved(self, budget: int, workers: int) -> "TpeParams":
        return replace(
            self,
            n_startup=max(10, budget // 20) if self.n_startup is None else self.n_startup,
            batch=workers if self.batch is None else self.batch,
        )


@dataclass(frozen=True)
class Trial:
    index: int
    config: ApproxConfig
    fingerprint: str
    report: Optional[ErrorReport]
    cost: Optional[CostBreakdown]
    pdae: float  # inf for a failed trial
    origin: str  # "random" or "tpe"
    seed: int
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def random_config(space: SearchSpace, rng: np.random.Generator) -> ApproxConfig:
    return config_from_indices(rng.integers(0, N_OPTIONS, size=space.k))


def split_good_bad(history: Sequence[Trial], gamma: float):
    if not history:
        raise ValueError("history is empty")
    ranked = sorted(history, key=lambda t: (t.pdae, t.index))
    n_good = math.ceil(gamma * len(ranked))
    return ranked[:n_good], ranked[n_good:]


def categorical_density(counts, prior_weight: float) -> np.ndarray:
    """Smoothed frequencies; works on one count vector or a (k, 4) table."""
    counts = np.asarray(counts, dtype=float)
    return (counts + prior_weight) / (counts.sum(axis=-1, keepdims=True) + N_OPTIONS * prior_weight)


def _counts(trials: Sequence[Trial], k: int) -> np.ndarray:
    if not trials:
        return np.zeros((k, N_OPTIONS))
    idx = np.array([[int(o) for o in t.config.options] for t in trials], dtype=np.int64).reshape(len(trials), k)
    counts = np.zeros((k, N_OPTIONS))
    for c in range(N_OPTIONS):
        counts[:, c] = (idx == c).sum(axis=0)
    return counts


def _sample(probs: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws per dimension from per-dimension categorical ``probs`` (k, 4)."""
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random((n, probs.shape[0]))
    return (u[:, :, None] >= cdf[None, :, :]).sum(axis=2)


def tpe_suggest(
    history: Sequence[Trial], space: SearchSpace, params: TpeParams, rng: np.random.Generator, count: int = None
) -> List[ApproxConfig]:
    """``count`` (default ``params.batch``) distinct unevaluated configurations."""
    if count is None:
        count = params.batch or 1
    k = space.k
    seen = {t.config.options for t in history}
    picked: List[ApproxConfig] = []

    if history and k > 0:
        good, bad = split_good_bad(history, params.gamma)
        l = categorical_density(_counts(good, k), params.prior_weight)
        g = categorical_density(_counts(bad, k), params.prior_weight)
        ratio = np.log(l) - np.log(g)
        cand = _sample(l, params.n_candidates * count, rng)
        score = ratio[np.arange(k), cand].sum(axis=1)
        for i in np.argsort(-score, kind="stable"):
            cfg = config_from_indices(cand[i])
            if cfg.options not in seen:
                seen.add(cfg.options)
                picked.append(cfg)
                if len(picked) == count:
                    return picked

    # pad with uniform draws; duplicates allowed only once the space is spent
    attempts = 0
    while len(picked) < count:
        cfg = random_config(space, rng)
        attempts += 1
        if cfg.options in seen and len(seen) < space.size and attempts < 1000:
            continue
        seen.add(cfg.options)
        picked.append(cfg)
    return picked


def evaluate_config(
    spec: MultSpec,
    plan: SearchPlan,
    config: ApproxConfig,
    cost_model: Callable = None,
    cap: int = EXHAUSTIVE_CAP,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
):
    """(ErrorReport, CostBreakdown, pdae) of one configuration."""
    cost_model = cost_model or ProxyCostModel()
    cost = cost_model(spec, plan, config)
    report = error_metrics(spec, plan, config, cap=cap, n_samples=n_samples, seed=seed)
    return report, cost, pdae(cost.pda, report.mae, report.mse)


class Evaluator:
    """Turns configurations into trials, optionally on a thread pool."""

    def __init__(self, spec, plan, cost_model=None, workers=1, cap=EXHAUSTIVE_CAP,
                 n_samples=DEFAULT_SAMPLES, seed=0):
        self.spec = spec
        self.plan = plan
        self.cost_model = cost_model or ProxyCostModel()
        self.workers = workers
        self.cap = cap
        self.n_samples = n_samples
        self.seed = seed
        self._pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _one(self, job):
        index, config, origin = job
        fp = fingerprint(self.spec, self.plan, config)
        try:
            report, cost, value = evaluate_config(
                self.spec, self.plan, config, self.cost_model, self.cap, self.n_samples, self.seed
            )
        except UnmeasuredError as exc:
            return Trial(index, config, fp, None, None, math.inf, origin, self.seed, "failed", str(exc))
        return Trial(index, config, fp, report, cost, value, origin, self.seed)

    def run(self, jobs) -> List[Trial]:
        # map preserves submission order, so merged results never depend on timing
        if self._pool is None:
            return [self._one(j) for j in jobs]
        return list(self._pool.map(self._one, jobs))


def round_rng(seed: int, round_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, round_index])


def run_search(
    spec: MultSpec,
    r: float,
    budget: int,
    seed: int = 0,
    workers: int = 1,
    cost_model: Callable = None,
    params: TpeParams = None,
    rounding: str = "nearest",
    strategy: str = "tpe",
    history: Sequence[Trial] = (),
    on_trial: Callable[[Trial], None] = None,
    cap: int = EXHAUSTIVE_CAP,
    n_samples: int = DEFAULT_SAMPLES,
    plan: SearchPlan = None,
) -> List[Trial]:
    """Search ``budget`` trials; ``strategy="random"`` is the baseline.

    ``history`` holds trials already persisted by an interrupted run with the
    same arguments. They are kept as-is and never re-evaluated; ``on_trial``
    fires only for new trials.
    """
    if budget < 1:
        raise SpecError("budget must be >= 1")
    if workers < 1:
        raise SpecError("workers must be >= 1")
    if strategy not in ("tpe", "random"):
        raise SpecError(f"unknown strategy {strategy!r}")
    params = (params or TpeParams())
    params.validate()
    params = params.resolved(budget, workers)
    plan = plan or make_plan(spec, r, rounding)
    space = SearchSpace(plan.k)
    if plan.k == 0:
        log.warning("r=%s leaves no HA to search; every trial is the exact multiplier", r)

    trials = list(history)
    for i, t in enumerate(trials):
        if t.index != i:
            raise SpecError(f"persisted trials are not contiguous at index {i}")
    if len(trials) > budget:
        raise SpecError(f"{len(trials)} persisted trials exceed the budget of {budget}")

    batch = params.batch
    with Evaluator(spec, plan, cost_model, workers, cap, n_samples, seed) as ev:
        # persisted rounds are regenerated too, which checks them against the seeded stream
        for rnd in range(math.ceil(budget / batch)):
            start = rnd * batch
            count = min(batch, budget - start)
            rng = round_rng(seed, rnd)
            if strategy == "random" or start < params.n_startup:
                configs, origin = [random_config(space, rng) for _ in range(count)], "random"
            else:
                configs, origin = tpe_suggest(trials[:start], space, params, rng, count), "tpe"
            jobs = []
            for j, cfg in enumerate(configs):
                idx = start + j
                if idx < len(trials):
                    if trials[idx].config != cfg:
                        raise SpecError(f"persisted trial {idx} does not match the seeded stream; wrong seed or settings?")
                    continue
                jobs.append((idx, cfg, origin))
            for t in ev.run(jobs):
                trials.append(t)
                if on_trial is not None:
                    on_trial(t)
    return trials


def best_so_far(trials: Sequence[Trial]) -> List[float]:
    out, best = [], math.inf
    for t in trials:
        best = min(best, t.pdae)
        out.append(best)
    return out
