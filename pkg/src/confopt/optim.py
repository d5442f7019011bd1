"""Ask/tell optimizer sessions over discrete configuration spaces.

One loop drives every strategy: ask for a batch of grid configurations,
measure them, tell the session the scored observations, repeat until the
budget runs out or the space is exhausted. Sessions are deterministic
functions of (space, budget, batch size, seed, told history).

Strategies, by registry name:

* ``random``: uniform sampling without replacement.
* ``randominc``: full enumeration in a seed-shuffled dimension order.
* ``exhaustive``: full enumeration in canonical odometer order.
* ``bestconfig``: divide-and-diverge sampling with recursive bound shrink.
* ``bayesian-ei``: GP surrogate ranking candidates by expected improvement.
* ``moat``: screening trajectories exposed through the same interface.

Except for the two enumerators (whose whole point is a fixed visiting
order) and ``moat`` (whose trajectories may legitimately cross), a session
never proposes a configuration it was already told about.
"""

from __future__ import annotations

import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .gp import expected_improvement, gp_fit
from .screening import ScreeningStats, compute_stats, generate_trajectories
from .space import Configuration, SearchSpace

__all__ = [
    "Observation",
    "SpaceExhausted",
    "OptimizerSession",
    "RandomSearchSession",
    "RandomIncSession",
    "ExhaustiveSession",
    "BestConfigSession",
    "BayesianEISession",
    "MoatSession",
    "OPTIMIZERS",
    "create_optimizer",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Observation:
    """One scored evaluation, as fed back to a session."""

    config: Configuration
    slis: Mapping[str, float]
    utility: float
    feasible: bool
    eval_index: int
    failed: bool = False


class SpaceExhausted(RuntimeError):
    """No unevaluated configuration is left to propose."""


class OptimizerSession(ABC):
    """Shared ask/tell mechanics: budget, alternation, best tracking.

    ``ask`` returns at most ``batch_size`` configurations (fewer near the
    end of the budget or of the space) and must be followed by a ``tell``
    covering exactly the asked batch. The incumbent best is updated by
    strict improvement, so earlier observations win ties.
    """

    name = "base"

    def __init__(self, space: SearchSpace, budget: int, batch_size: int, seed: int):
        if budget < 1:
            raise ValueError(f"budget must be >= 1, got {budget}")
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        self.space = space
        self.budget = budget
        self.batch_size = batch_size
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.history: list[Observation] = []
        self._pending: list[Configuration] = []
        self._best: tuple[Configuration, float] | None = None

    @property
    def best_so_far(self) -> tuple[Configuration, float] | None:
        return self._best

    @property
    def told(self) -> int:
        return len(self.history)

    def ask(self) -> list[Configuration]:
        if self._pending:
            raise RuntimeError("previous batch has not been told yet")
        remaining = self.budget - self.told
        if remaining <= 0:
            raise RuntimeError(f"budget of {self.budget} evaluations exhausted")
        proposals = self._propose(min(self.batch_size, remaining))
        if not proposals:
            raise SpaceExhausted("every configuration has been evaluated")
        self._pending = list(proposals)
        return list(proposals)

    def tell(self, observations: Sequence[Observation]) -> None:
        outstanding = [c.settings for c in self._pending]
        for obs in observations:
            try:
                outstanding.remove(obs.config.settings)
            except ValueError:
                raise ValueError(
                    f"told about a configuration that was not asked: "
                    f"{self.space.config_text(obs.config)}"
                ) from None
        if outstanding:
            raise ValueError(
                f"{len(outstanding)} asked configurations missing from tell"
            )
        self._pending = []
        for obs in observations:
            self.history.append(obs)
            if self._best is None or obs.utility < self._best[1]:
                self._best = (obs.config, obs.utility)
        self._after_tell(list(observations))

    def _after_tell(self, observations: list[Observation]) -> None:
        pass

    @abstractmethod
    def _propose(self, n: int) -> list[Configuration]:
        """Return 1..n fresh proposals, or raise :class:`SpaceExhausted`."""

    # -- shared helpers ------------------------------------------------------

    def _seen_settings(self) -> set[tuple[int, ...]]:
        return {obs.config.settings for obs in self.history}

    def _level_counts(self) -> np.ndarray:
        return np.array([p.level_count for p in self.space.parameters])

    def _scan_unseen(
        self,
        n: int,
        seen: set[tuple[int, ...]],
        configs: Iterable[Configuration] | None = None,
    ) -> list[Configuration]:
        """Deterministic fallback: first unseen configurations in
        enumeration order."""
        found: list[Configuration] = []
        for cfg in configs if configs is not None else self.space.iter_configurations():
            if cfg.settings not in seen:
                seen.add(cfg.settings)
                found.append(cfg)
                if len(found) == n:
                    break
        return found

    def _random_unseen(self, n: int, seen: set[tuple[int, ...]]) -> list[Configuration]:
        """Up to ``n`` distinct unseen configurations by rejection sampling,
        falling back to a scan when collisions dominate."""
        counts = self._level_counts()
        out: list[Configuration] = []
        misses = 0
        while len(out) < n:
            indices = self.rng.integers(counts)
            cfg = self.space.config_from_indices([int(i) for i in indices])
            if cfg.settings in seen:
                misses += 1
                if misses >= 64:
                    out.extend(self._scan_unseen(n - len(out), seen))
                    break
                continue
            misses = 0
            seen.add(cfg.settings)
            out.append(cfg)
        if not out:
            raise SpaceExhausted("every configuration has been evaluated")
        return out


class RandomSearchSession(OptimizerSession):
    """Uniform random sampling without replacement."""

    name = "random"

    def _propose(self, n: int) -> list[Configuration]:
        return self._random_unseen(n, self._seen_settings())


class RandomIncSession(OptimizerSession):
    """Incremental enumeration in a seed-shuffled dimension order.

    Walks the whole grid exactly once, odometer style over the shuffled
    dimensions with the first shuffled dimension varying fastest, starting
    from the all-minimum configuration. Proposals follow this fixed stream,
    which is why the session is exempt from the fresh-proposal rule: the
    stream itself never repeats.
    """

    name = "randominc"

    def __init__(self, space: SearchSpace, budget: int, batch_size: int, seed: int):
        super().__init__(space, budget, batch_size, seed)
        self._order = [int(d) for d in self.rng.permutation(space.dimension)]
        self._cursor = 0

    def _propose(self, n: int) -> list[Configuration]:
        size = self.space.size
        take = min(n, size - self._cursor)
        if take <= 0:
            raise SpaceExhausted("space fully enumerated")
        out = [self._decode(i) for i in range(self._cursor, self._cursor + take)]
        self._cursor += take
        return out

    def _decode(self, linear: int) -> Configuration:
        indices = [0] * self.space.dimension
        remainder = linear
        for dim in self._order:
            remainder, digit = divmod(remainder, self.space.parameters[dim].level_count)
            indices[dim] = digit
        return self.space.config_from_indices(indices)


class ExhaustiveSession(OptimizerSession):
    """Canonical odometer enumeration; pair with a budget of ``space.size``."""

    name = "exhaustive"

    def __init__(self, space: SearchSpace, budget: int, batch_size: int, seed: int):
        super().__init__(space, budget, batch_size, seed)
        self._iterator: Iterator[Configuration] = space.iter_configurations()

    def _propose(self, n: int) -> list[Configuration]:
        out = list(itertools.islice(self._iterator, n))
        if not out:
            raise SpaceExhausted("space fully enumerated")
        return out


class BestConfigSession(OptimizerSession):
    """Divide-and-diverge sampling with recursive bound shrink.

    Each round stratifies every parameter's current range into one interval
    per sample (a latin hypercube over intervals) and draws one grid point
    inside each assigned interval. When a round improves the incumbent, the
    bounds shrink to the best sample's interval plus one adjacent interval
    on each side; otherwise they snap back to the full space.
    """

    name = "bestconfig"

    _REDRAWS = 20

    def __init__(self, space: SearchSpace, budget: int, batch_size: int, seed: int):
        super().__init__(space, budget, batch_size, seed)
        self._bounds = [(0, p.level_count - 1) for p in space.parameters]
        self._round_boundaries: list[list[int]] | None = None
        self._best_before: float | None = None

    @staticmethod
    def _chunk_boundaries(lo: int, hi: int, n: int) -> list[int]:
        length = hi - lo + 1
        return [lo + (j * length) // n for j in range(n + 1)]

    def _bounded_configs(self) -> Iterator[Configuration]:
        ranges = [range(lo, hi + 1) for lo, hi in self._bounds]
        for indices in itertools.product(*ranges):
            yield self.space.config_from_indices(indices)

    def _propose(self, n: int) -> list[Configuration]:
        k = self.space.dimension
        seen = self._seen_settings()
        boundaries = [
            self._chunk_boundaries(lo, hi, n) for lo, hi in self._bounds
        ]
        perms = [self.rng.permutation(n) for _ in range(k)]
        batch: list[Configuration] = []
        for s in range(n):
            config = None
            for _ in range(self._REDRAWS):
                indices = []
                for i in range(k):
                    cuts = boundaries[i]
                    j = int(perms[i][s])
                    lo_idx, hi_idx = cuts[j], cuts[j + 1] - 1
                    if hi_idx < lo_idx:
                        level = min(cuts[j], self._bounds[i][1])
                    else:
                        level = int(self.rng.integers(lo_idx, hi_idx + 1))
                    indices.append(level)
                candidate = self.space.config_from_indices(indices)
                if candidate.settings not in seen:
                    config = candidate
                    break
            if config is None:
                found = self._scan_unseen(1, seen, self._bounded_configs())
                if not found:
                    found = self._scan_unseen(1, seen)
                if not found:
                    if batch:
                        break
                    raise SpaceExhausted("every configuration has been evaluated")
                config = found[0]
            seen.add(config.settings)
            batch.append(config)
        self._round_boundaries = boundaries
        return batch

    def _after_tell(self, observations: list[Observation]) -> None:
        if not observations or self._round_boundaries is None:
            return
        best_obs = observations[0]
        for obs in observations[1:]:
            if obs.utility < best_obs.utility:
                best_obs = obs
        improved = self._best_before is None or best_obs.utility < self._best_before
        if improved:
            self._best_before = best_obs.utility
            indices = self.space.indices_of(best_obs.config)
            n = len(self._round_boundaries[0]) - 1
            new_bounds = []
            for i, level in enumerate(indices):
                cuts = self._round_boundaries[i]
                j = int(np.searchsorted(cuts, level, side="right")) - 1
                j = min(max(j, 0), n - 1)
                lo = cuts[max(j - 1, 0)]
                hi = cuts[min(j + 2, n)] - 1
                new_bounds.append((lo, max(lo, hi)))
            self._bounds = new_bounds
        else:
            self._bounds = [(0, p.level_count - 1) for p in self.space.parameters]


class BayesianEISession(OptimizerSession):
    """GP surrogate over normalized inputs, candidates ranked by expected
    improvement.

    Before the first full batch of results arrives the session proposes
    seeded random configurations. Afterwards it refits the surrogate on the
    whole history each round and scores a candidate set: the entire
    remaining grid for spaces up to ``GRID_LIMIT`` configurations, otherwise
    4096 seeded random points plus every observed point's grid neighbors.
    Expected-improvement ties resolve by candidate generation order.
    """

    name = "bayesian-ei"

    GRID_LIMIT = 100_000
    SAMPLED_CANDIDATES = 4096

    def __init__(self, space: SearchSpace, budget: int, batch_size: int, seed: int):
        super().__init__(space, budget, batch_size, seed)
        self._grid: tuple[list[Configuration], np.ndarray] | None = None

    def _ensure_grid(self) -> tuple[list[Configuration], np.ndarray]:
        if self._grid is None:
            configs = list(self.space.iter_configurations())
            self._grid = (configs, self.space.normalized_grid())
        return self._grid

    def _propose(self, n: int) -> list[Configuration]:
        if self.told < self.batch_size:
            return self._random_unseen(n, self._seen_settings())
        inputs = np.array([self.space.to_normalized(o.config) for o in self.history])
        targets = np.array([o.utility for o in self.history])
        model = gp_fit(inputs, targets)
        best = model.standardize(float(targets.min()))
        configs, candidates = self._candidates()
        if not configs:
            if self.space.size <= self.GRID_LIMIT:
                raise SpaceExhausted("every configuration has been evaluated")
            return self._random_unseen(n, self._seen_settings())
        mean, std = model.predict(candidates)
        ei = expected_improvement(mean, std, best)
        order = np.argsort(-ei, kind="stable")
        return [configs[int(i)] for i in order[:n]]

    def _candidates(self) -> tuple[list[Configuration], np.ndarray]:
        seen = self._seen_settings()
        if self.space.size <= self.GRID_LIMIT:
            configs, grid = self._ensure_grid()
            keep = [i for i, c in enumerate(configs) if c.settings not in seen]
            return [configs[i] for i in keep], grid[keep]
        counts = self._level_counts()
        picked: dict[tuple[int, ...], Configuration] = {}
        draws = self.rng.integers(counts, size=(self.SAMPLED_CANDIDATES, len(counts)))
        for row in draws:
            cfg = self.space.config_from_indices([int(i) for i in row])
            if cfg.settings not in seen and cfg.settings not in picked:
                picked[cfg.settings] = cfg
        for obs in self.history:
            indices = list(self.space.indices_of(obs.config))
            for dim in range(self.space.dimension):
                for step in (-1, 1):
                    j = indices[dim] + step
                    if not 0 <= j < counts[dim]:
                        continue
                    neighbor = indices.copy()
                    neighbor[dim] = j
                    cfg = self.space.config_from_indices(neighbor)
                    if cfg.settings not in seen and cfg.settings not in picked:
                        picked[cfg.settings] = cfg
        configs = list(picked.values())
        if not configs:
            return [], np.empty((0, self.space.dimension))
        matrix = np.array([self.space.to_normalized(c) for c in configs])
        return configs, matrix


class MoatSession(OptimizerSession):
    """Screening trajectories behind the common ask/tell interface.

    The budget buys ``r = budget // (k + 1)`` whole trajectories; any
    remainder is left unspent. Proposals follow the planned trajectory
    points in order, so a configuration revisited by a later trajectory is
    proposed again, which is the documented exception to the fresh-proposal
    rule. Once every point is told, :meth:`stats` aggregates the elementary
    effects.
    """

    name = "moat"

    def __init__(
        self,
        space: SearchSpace,
        budget: int,
        batch_size: int,
        seed: int,
        *,
        p: int | None = None,
    ):
        super().__init__(space, budget, batch_size, seed)
        k = space.dimension
        r = budget // (k + 1)
        if r < 1:
            raise ValueError(
                f"budget {budget} cannot fund one trajectory of {k + 1} evaluations"
            )
        if budget % (k + 1):
            logger.info(
                "moat: spending %d of %d budgeted evaluations (%d trajectories)",
                r * (k + 1),
                budget,
                r,
            )
        if p is None:
            counts = {spec.level_count for spec in space.parameters}
            if len(counts) != 1:
                raise ValueError(
                    "parameter level counts differ; pass p explicitly"
                )
            p = counts.pop()
        self.plans = generate_trajectories(space, r, p, seed)
        self._queue = [
            space.from_normalized(point) for plan in self.plans for point in plan.points
        ]
        self._cursor = 0

    def _propose(self, n: int) -> list[Configuration]:
        chunk = self._queue[self._cursor : self._cursor + n]
        if not chunk:
            raise SpaceExhausted("screening plan complete")
        self._cursor += len(chunk)
        return chunk

    def stats(
        self, metric: str = "p99_latency_ms", failure_value: float | None = None
    ) -> ScreeningStats:
        """Elementary-effect statistics once the whole plan has been told.

        Failed observations (or ones missing ``metric``) take
        ``failure_value``; without one they are an error.
        """
        if self.told < len(self._queue):
            raise RuntimeError(
                f"screening incomplete: {self.told} of {len(self._queue)} "
                f"evaluations told"
            )
        for position, obs in enumerate(self.history):
            if obs.config.settings != self._queue[position].settings:
                raise ValueError("observations were told out of plan order")

        def metric_of(obs: Observation) -> float:
            if not obs.failed and metric in obs.slis:
                return float(obs.slis[metric])
            if failure_value is None:
                raise ValueError(
                    f"observation {obs.eval_index} has no metric {metric!r} "
                    f"and no failure_value was given"
                )
            return failure_value

        k = self.space.dimension
        ee = np.empty((len(self.plans), k))
        for row, plan in enumerate(self.plans):
            base = row * (k + 1)
            ys = [metric_of(self.history[base + j]) for j in range(k + 1)]
            for step, dim in enumerate(plan.perturbed_dimension, start=1):
                signed = plan.points[step, dim] - plan.points[step - 1, dim]
                ee[row, dim] = (ys[step] - ys[step - 1]) / signed
        return compute_stats(ee, self.space.names)


OPTIMIZERS: dict[str, type[OptimizerSession]] = {
    cls.name: cls
    for cls in (
        RandomSearchSession,
        RandomIncSession,
        ExhaustiveSession,
        BestConfigSession,
        BayesianEISession,
        MoatSession,
    )
}


def create_optimizer(
    name: str,
    space: SearchSpace,
    budget: int,
    batch_size: int,
    seed: int,
    **options,
) -> OptimizerSession:
    """Instantiate a registered optimizer; unknown names list the registry."""
    try:
        cls = OPTIMIZERS[name.lower()]
    except KeyError:
        valid = ", ".join(sorted(OPTIMIZERS))
        raise ValueError(f"unknown optimizer {name!r}; valid names: {valid}") from None
    return cls(space, budget, batch_size, seed, **options)
