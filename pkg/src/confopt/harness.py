"""Experiment harness: drive optimizers, collect datasets, compare strategies.

Everything here is built for byte-level reproducibility: a fixed base seed
derives per-run seeds as ``base_seed + run_index``, comparison runs are
merged in run-index order no matter how they were parallelized, and every
emitted file is a pure function of its inputs (no timestamps).
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .backends import Backend, ReplayBackend, SliResult
from .optim import Observation, SpaceExhausted, create_optimizer
from .screening import reduce_bounds, run_screening
from .space import Configuration, ParameterSpec, SearchSpace
from .utility import CostWeights, SloSpec, UtilityFn, WorkloadSpec, allocation_cost

__all__ = [
    "RunTrace",
    "Dataset",
    "ComparisonReport",
    "SvbReport",
    "run_optimization",
    "sli_objective",
    "collect_exhaustive",
    "load_dataset",
    "compare",
    "screening_vs_standalone",
    "write_dataset_csv",
    "write_slo_cdf_csv",
    "write_trace_csv",
    "write_comparison_csvs",
    "write_svb_csv",
    "dataset_summary",
    "trace_summary",
    "comparison_summary",
    "svb_summary",
]

logger = logging.getLogger(__name__)

#: Largest space ``collect_exhaustive`` will walk.
EXHAUSTIVE_CAP = 100_000

_METRIC_COLUMNS = ("p99_latency_ms", "throughput_rps", "utility", "feasible", "failed")


def _fmt(value: float) -> str:
    return str(float(value))


def _bool(value: bool) -> str:
    return "true" if value else "false"


def failure_utility(slo: SloSpec) -> float:
    """Utility charged to failed evaluations: ``1 + 10 * threshold``,
    worse than any plausible measured violation."""
    return 1.0 + 10.0 * slo.threshold


def sli_objective(
    space: SearchSpace, backend: Backend, slo: SloSpec, workload: WorkloadSpec
) -> Callable[[Configuration], float]:
    """Wrap a backend as a plain SLI function for screening.

    Failed evaluations map to ten times the threshold so elementary
    effects stay finite.
    """

    def objective(config: Configuration) -> float:
        result = backend.evaluate(space.render(config), workload)
        if result.failed or slo.metric not in result.slis:
            return 10.0 * slo.threshold
        return float(result.slis[slo.metric])

    return objective


# -- run traces --------------------------------------------------------------


@dataclass(eq=False)
class RunTrace:
    """One optimizer run: observations in evaluation order plus the
    non-increasing best-so-far utility curve."""

    optimizer: str
    seed: int
    observations: tuple[Observation, ...]
    best_utilities: np.ndarray
    found_optimal_at: int | None = None

    @property
    def best(self) -> Observation:
        index = int(np.argmin([o.utility for o in self.observations]))
        return self.observations[index]


def score_result(
    config: Configuration,
    result: SliResult,
    utility_fn: UtilityFn,
    slo: SloSpec,
    cost_space: SearchSpace,
    weights: CostWeights | None,
    eval_index: int,
) -> Observation:
    """Turn a backend result into a scored observation.

    Failures (and results missing the SLO metric) score the fixed failure
    utility and are never feasible.
    """
    if result.failed or slo.metric not in result.slis:
        if not result.failed:
            logger.warning(
                "evaluation %d returned no %s; scoring as failed",
                eval_index,
                slo.metric,
            )
        return Observation(
            config=config,
            slis=dict(result.slis),
            utility=failure_utility(slo),
            feasible=False,
            eval_index=eval_index,
            failed=True,
        )
    sli = float(result.slis[slo.metric])
    cost = allocation_cost(config, cost_space, weights)
    utility = float(utility_fn(sli, slo.threshold, cost))
    return Observation(
        config=config,
        slis=dict(result.slis),
        utility=utility,
        feasible=utility < 1.0,
        eval_index=eval_index,
    )


def run_optimization(
    space: SearchSpace,
    optimizer: str,
    backend: Backend,
    budget: int,
    batch_size: int,
    seed: int,
    *,
    utility_fn: UtilityFn | None = None,
    slo: SloSpec | None = None,
    workload: WorkloadSpec | None = None,
    weights: CostWeights | None = None,
    cost_space: SearchSpace | None = None,
    optimum_settings: tuple[int, ...] | None = None,
    max_workers: int = 1,
    optimizer_options: dict | None = None,
) -> RunTrace:
    """Run one optimizer session to its budget (or space exhaustion).

    A replay backend short-circuits scoring and reuses the stored
    observations; any other backend needs ``utility_fn``, ``slo`` and
    ``workload``. ``cost_space`` supplies allocation-cost bounds when they
    differ from the searched space (runs inside reduced bounds).
    ``optimum_settings``, when known, drives ``found_optimal_at``.
    """
    session = create_optimizer(
        optimizer, space, budget, batch_size, seed, **(optimizer_options or {})
    )
    stored = backend if isinstance(backend, ReplayBackend) else None
    if stored is None and (utility_fn is None or slo is None or workload is None):
        raise ValueError(
            "utility_fn, slo and workload are required unless replaying a dataset"
        )
    observations: list[Observation] = []
    best_curve: list[float] = []
    found_at: int | None = None
    while session.told < budget:
        try:
            batch = session.ask()
        except SpaceExhausted:
            break
        base_index = len(observations)
        if stored is not None:
            scored = [
                replace(stored.lookup(c.settings), eval_index=base_index + i + 1)
                for i, c in enumerate(batch)
            ]
        else:
            scored = _evaluate_batch(
                space,
                batch,
                backend,
                utility_fn,
                slo,
                workload,
                cost_space or space,
                weights,
                base_index,
                max_workers,
            )
        session.tell(scored)
        for obs in scored:
            observations.append(obs)
            best = obs.utility if not best_curve else min(best_curve[-1], obs.utility)
            best_curve.append(best)
            if (
                found_at is None
                and optimum_settings is not None
                and obs.config.settings == optimum_settings
            ):
                found_at = obs.eval_index
    return RunTrace(
        optimizer=session.name,
        seed=seed,
        observations=tuple(observations),
        best_utilities=np.array(best_curve),
        found_optimal_at=found_at,
    )


def _evaluate_batch(
    space: SearchSpace,
    batch: Sequence[Configuration],
    backend: Backend,
    utility_fn: UtilityFn,
    slo: SloSpec,
    workload: WorkloadSpec,
    cost_space: SearchSpace,
    weights: CostWeights | None,
    base_index: int,
    max_workers: int,
) -> list[Observation]:
    rendered = [space.render(c) for c in batch]
    if max_workers > 1 and len(batch) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(
                pool.map(lambda p: backend.evaluate(p, workload), rendered)
            )
    else:
        results = [backend.evaluate(p, workload) for p in rendered]
    return [
        score_result(
            config, result, utility_fn, slo, cost_space, weights, base_index + i + 1
        )
        for i, (config, result) in enumerate(zip(batch, results))
    ]


# -- datasets ----------------------------------------------------------------


@dataclass(eq=False)
class Dataset:
    """An exhaustively measured space: one observation per configuration,
    in enumeration order. The optimum is the first row attaining the
    minimum utility."""

    space: SearchSpace
    rows: tuple[Observation, ...]
    slo: SloSpec | None = None

    def __post_init__(self) -> None:
        if len(self.rows) != self.space.size:
            raise ValueError(
                f"dataset has {len(self.rows)} rows for a space of "
                f"{self.space.size} configurations"
            )
        self._index = {obs.config.settings: obs for obs in self.rows}
        if len(self._index) != len(self.rows):
            raise ValueError("dataset contains duplicate configurations")
        best = self.rows[0]
        for obs in self.rows[1:]:
            if obs.utility < best.utility:
                best = obs
        self.optimum = best
        self._replay: ReplayBackend | None = None

    def lookup(self, settings: tuple[int, ...]) -> Observation:
        return self._index[settings]

    @property
    def feasible_fraction(self) -> float:
        return sum(1 for o in self.rows if o.feasible) / len(self.rows)

    def replay_backend(self) -> ReplayBackend:
        if self._replay is None:
            self._replay = ReplayBackend(self.space, self._index)
        return self._replay


def _dataset_header(space: SearchSpace) -> list[str]:
    return list(space.names) + list(_METRIC_COLUMNS)


def _dataset_row(obs: Observation) -> list[str]:
    p99 = obs.slis.get("p99_latency_ms", math.nan)
    throughput = obs.slis.get("throughput_rps", math.nan)
    return (
        [str(v) for v in obs.config.settings]
        + [_fmt(p99), _fmt(throughput), _fmt(obs.utility)]
        + [_bool(obs.feasible), _bool(obs.failed)]
    )


def _parse_dataset_rows(
    lines: Iterable[str], source: str
) -> tuple[list[str], list[tuple[tuple[int, ...], dict]]]:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError(f"{source}: empty dataset") from None
    if len(header) < len(_METRIC_COLUMNS) + 1 or tuple(
        header[-len(_METRIC_COLUMNS) :]
    ) != _METRIC_COLUMNS:
        raise ValueError(
            f"{source}: expected parameter columns followed by "
            f"{','.join(_METRIC_COLUMNS)}"
        )
    names = header[: -len(_METRIC_COLUMNS)]
    parsed = []
    for row in reader:
        if len(row) != len(header):
            break
        try:
            settings = tuple(int(v) for v in row[: len(names)])
            p99, throughput, utility = (
                float(row[len(names)]),
                float(row[len(names) + 1]),
                float(row[len(names) + 2]),
            )
            feasible, failed = row[len(names) + 3], row[len(names) + 4]
            if feasible not in ("true", "false") or failed not in ("true", "false"):
                break
        except ValueError:
            break
        parsed.append(
            (
                settings,
                {
                    "p99_latency_ms": p99,
                    "throughput_rps": throughput,
                    "utility": utility,
                    "feasible": feasible == "true",
                    "failed": failed == "true",
                },
            )
        )
    return names, parsed


def _row_to_observation(
    settings: tuple[int, ...], fields: dict, eval_index: int
) -> Observation:
    slis = {}
    if not fields["failed"]:
        if not math.isnan(fields["p99_latency_ms"]):
            slis["p99_latency_ms"] = fields["p99_latency_ms"]
        if not math.isnan(fields["throughput_rps"]):
            slis["throughput_rps"] = fields["throughput_rps"]
    return Observation(
        config=Configuration(settings),
        slis=slis,
        utility=fields["utility"],
        feasible=fields["feasible"],
        eval_index=eval_index,
        failed=fields["failed"],
    )


def collect_exhaustive(
    space: SearchSpace,
    backend: Backend,
    utility_fn: UtilityFn,
    slo: SloSpec,
    workload: WorkloadSpec,
    *,
    weights: CostWeights | None = None,
    cost_space: SearchSpace | None = None,
    out_path: str | Path | None = None,
    cap: int = EXHAUSTIVE_CAP,
    checkpoint_every: int = 100,
) -> Dataset:
    """Measure every configuration, optionally checkpointing to disk.

    With ``out_path`` the rows stream into ``<out_path>.partial`` with a
    flush every ``checkpoint_every`` rows and an atomic rename at the end.
    A restart re-reads the partial file and resumes after the last complete
    row instead of re-evaluating.
    """
    if space.size > cap:
        raise ValueError(
            f"space has {space.size} configurations, above the cap of {cap}; "
            f"screen first to reduce the bounds"
        )
    resumed: list[Observation] = []
    partial_path = None
    if out_path is not None:
        out_path = Path(out_path)
        partial_path = out_path.with_name(out_path.name + ".partial")
        if partial_path.exists():
            resumed = _resume_partial(partial_path, space)
            logger.info(
                "resuming exhaustive collection: %d rows already measured",
                len(resumed),
            )

    rows = list(resumed)
    handle = None
    if partial_path is not None:
        handle = open(partial_path, "a", encoding="utf-8", newline="")
        writer = csv.writer(handle, lineterminator="\n")
        if not rows:
            writer.writerow(_dataset_header(space))
            handle.flush()
    try:
        pending = 0
        for position, config in enumerate(space.iter_configurations(), start=1):
            if position <= len(resumed):
                continue
            result = backend.evaluate(space.render(config), workload)
            obs = score_result(
                config, result, utility_fn, slo, cost_space or space, weights, position
            )
            rows.append(obs)
            if handle is not None:
                writer.writerow(_dataset_row(obs))
                pending += 1
                if pending >= checkpoint_every:
                    handle.flush()
                    pending = 0
    finally:
        if handle is not None:
            handle.flush()
            handle.close()
    if partial_path is not None:
        os.replace(partial_path, out_path)
    return Dataset(space=space, rows=tuple(rows), slo=slo)


def _resume_partial(partial_path: Path, space: SearchSpace) -> list[Observation]:
    with open(partial_path, "r", encoding="utf-8", newline="") as handle:
        names, parsed = _parse_dataset_rows(handle, str(partial_path))
    if tuple(names) != space.names:
        raise ValueError(
            f"{partial_path}: parameter columns {names} do not match the "
            f"configured space {list(space.names)}"
        )
    rows = [
        _row_to_observation(settings, fields, i + 1)
        for i, (settings, fields) in enumerate(parsed)
    ]
    expected = zip(space.iter_configurations(), rows)
    for config, obs in expected:
        if config.settings != obs.config.settings:
            raise ValueError(
                f"{partial_path}: rows are not in enumeration order; "
                f"refusing to resume"
            )
    # Rewrite the good prefix so a torn final line cannot linger.
    with open(partial_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_dataset_header(space))
        for obs in rows:
            writer.writerow(_dataset_row(obs))
    return rows


def load_dataset(path: str | Path, slo: SloSpec | None = None) -> Dataset:
    """Load a collected dataset, inferring the space from its rows.

    Per parameter, the grid levels are the distinct values seen; the
    granularity is their greatest common step. The optimum is recomputed
    from the stored utilities, so a hand-edited file cannot smuggle in a
    stale one.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as handle:
        names, parsed = _parse_dataset_rows(handle, str(path))
    if not parsed:
        raise ValueError(f"{path}: no data rows")
    columns = list(zip(*(settings for settings, _ in parsed)))
    specs = []
    for name, column in zip(names, columns):
        levels = sorted(set(column))
        if len(levels) == 1:
            granularity = 1
        else:
            diffs = [b - a for a, b in zip(levels, levels[1:])]
            granularity = diffs[0]
            for d in diffs[1:]:
                granularity = math.gcd(granularity, d)
        specs.append(
            ParameterSpec(
                name=name,
                minimum=levels[0],
                maximum=levels[-1],
                granularity=granularity,
                allow_single_level=True,
            )
        )
    space = SearchSpace(tuple(specs))
    rows = [
        _row_to_observation(settings, fields, i + 1)
        for i, (settings, fields) in enumerate(parsed)
    ]
    return Dataset(space=space, rows=tuple(rows), slo=slo)


# -- comparisons -------------------------------------------------------------


@dataclass(eq=False)
class OptimizerComparison:
    """Per-budget curves for one optimizer across all runs."""

    fraction_found_optimal: np.ndarray
    distance_q99: np.ndarray


@dataclass(eq=False)
class ComparisonReport:
    """Replay comparison of several optimizers on one dataset."""

    budget: int
    runs: int
    base_seed: int
    batch_size: int
    optimum_utility: float
    slo_line: float
    optimizers: dict[str, OptimizerComparison]


def _single_comparison_run(
    dataset: Dataset, optimizer: str, budget: int, batch_size: int, seed: int
) -> tuple[int | None, np.ndarray]:
    trace = run_optimization(
        dataset.space,
        optimizer,
        dataset.replay_backend(),
        budget,
        batch_size,
        seed,
        optimum_settings=dataset.optimum.config.settings,
    )
    curve = np.empty(budget)
    n = len(trace.best_utilities)
    curve[:n] = trace.best_utilities
    if n < budget:
        curve[n:] = trace.best_utilities[-1]
    return trace.found_optimal_at, curve


_WORKER_STATE: dict = {}


def _compare_init(dataset: Dataset, budget: int, batch_size: int, base_seed: int) -> None:
    _WORKER_STATE["args"] = (dataset, budget, batch_size, base_seed)


def _compare_chunk(task: tuple[str, int, int]) -> tuple[str, int, list, np.ndarray]:
    optimizer, start, stop = task
    dataset, budget, batch_size, base_seed = _WORKER_STATE["args"]
    found = []
    curves = np.empty((stop - start, budget))
    for offset, run_index in enumerate(range(start, stop)):
        found_at, curve = _single_comparison_run(
            dataset, optimizer, budget, batch_size, base_seed + run_index
        )
        found.append(found_at)
        curves[offset] = curve
    return optimizer, start, found, curves


def _nearest_rank(sorted_values: np.ndarray, q: float) -> float:
    rank = math.ceil(q * len(sorted_values))
    rank = min(max(rank, 1), len(sorted_values))
    return float(sorted_values[rank - 1])


def compare(
    dataset: Dataset,
    optimizer_names: Sequence[str],
    runs: int,
    budget: int,
    base_seed: int,
    *,
    batch_size: int = 6,
    workers: int = 1,
) -> ComparisonReport:
    """Replay every optimizer ``runs`` times and aggregate per-budget curves.

    For each sample count ``n`` the report carries the fraction of runs
    that had already evaluated the dataset optimum, and the nearest-rank
    99th percentile of the distance between the best utility so far and
    the optimum's utility. Run ``i`` uses seed ``base_seed + i``; results
    are merged in run order, so ``workers`` does not change a single output
    byte.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if not optimizer_names:
        raise ValueError("at least one optimizer required")
    if len(set(optimizer_names)) != len(optimizer_names):
        raise ValueError("duplicate optimizer names")

    per_optimizer: dict[str, tuple[list, np.ndarray]] = {}
    if workers <= 1:
        for name in optimizer_names:
            found = []
            curves = np.empty((runs, budget))
            for run_index in range(runs):
                found_at, curve = _single_comparison_run(
                    dataset, name, budget, batch_size, base_seed + run_index
                )
                found.append(found_at)
                curves[run_index] = curve
            per_optimizer[name] = (found, curves)
    else:
        chunk = max(1, math.ceil(runs / (workers * 4)))
        tasks = [
            (name, start, min(start + chunk, runs))
            for name in optimizer_names
            for start in range(0, runs, chunk)
        ]
        pieces: dict[tuple[str, int], tuple[list, np.ndarray]] = {}
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_compare_init,
            initargs=(dataset, budget, batch_size, base_seed),
        ) as pool:
            for name, start, found, curves in pool.map(_compare_chunk, tasks):
                pieces[(name, start)] = (found, curves)
        for name in optimizer_names:
            found = []
            blocks = []
            for start in range(0, runs, chunk):
                part_found, part_curves = pieces[(name, start)]
                found.extend(part_found)
                blocks.append(part_curves)
            per_optimizer[name] = (found, np.vstack(blocks))

    optimum_utility = dataset.optimum.utility
    report: dict[str, OptimizerComparison] = {}
    for name in optimizer_names:
        found, curves = per_optimizer[name]
        distances = np.abs(curves - optimum_utility)
        fraction = np.empty(budget)
        q99 = np.empty(budget)
        found_arr = np.array([f if f is not None else budget + 1 for f in found])
        for n in range(1, budget + 1):
            fraction[n - 1] = float(np.count_nonzero(found_arr <= n)) / runs
            q99[n - 1] = _nearest_rank(np.sort(distances[:, n - 1]), 0.99)
        report[name] = OptimizerComparison(
            fraction_found_optimal=fraction, distance_q99=q99
        )
    return ComparisonReport(
        budget=budget,
        runs=runs,
        base_seed=base_seed,
        batch_size=batch_size,
        optimum_utility=optimum_utility,
        slo_line=abs(1.0 - optimum_utility),
        optimizers=report,
    )


# -- screening versus standalone ---------------------------------------------


@dataclass(eq=False)
class SvbRepetition:
    """One matched-budget repetition of the reduction study."""

    repetition: int
    seed: int
    screening_evals: int
    reduced_space: SearchSpace
    reduced_size: int
    combined_best_config: Configuration
    combined_best_utility: float
    combined_in_reduced_bounds: bool
    combined_found_reduced_optimum: bool | None
    reduced_optimum_utility: float | None
    standalone_best_config: Configuration
    standalone_best_utility: float
    standalone_in_reduced_bounds: bool
    standalone_found_global_optimum: bool | None


@dataclass(eq=False)
class SvbReport:
    total_budget: int
    r: int
    repetitions: tuple[SvbRepetition, ...]


def screening_vs_standalone(
    space: SearchSpace,
    backend: Backend,
    utility_fn: UtilityFn,
    slo: SloSpec,
    workload: WorkloadSpec,
    *,
    total_budget: int,
    r: int = 10,
    p: int | None = None,
    batch_size: int = 6,
    repetitions: int = 1,
    base_seed: int = 0,
    weights: CostWeights | None = None,
    relaxed_factor: float = 1.25,
    strict_factor: float = 0.75,
    known_global_optimum: tuple[int, ...] | None = None,
    reduced_optimum_limit: int = EXHAUSTIVE_CAP,
) -> SvbReport:
    """Screening-plus-BO against standalone BO at the same total budget.

    Each repetition spends ``r * (k + 1)`` evaluations on screening, puts
    the remainder of ``total_budget`` into BO inside the reduced bounds,
    and separately gives standalone BO the full ``total_budget`` on the
    original space. Failed screening evaluations enter the elementary
    effects with an SLI of ten times the threshold.

    Per repetition the report records both best utilities, whether each
    best lies inside that repetition's reduced bounds, and (for reduced
    spaces up to ``reduced_optimum_limit``) whether the combined pipeline
    evaluated the reduced space's true optimum. When the caller knows the
    global optimum it can pass its settings to get the matching flag for
    standalone BO.
    """
    k = space.dimension
    screening_cost = r * (k + 1)
    if screening_cost > total_budget:
        raise ValueError(
            f"screening alone needs {screening_cost} evaluations, above the "
            f"total budget {total_budget}"
        )
    reps = []
    for rep in range(repetitions):
        seed = base_seed + rep
        screened: list[tuple[Configuration, float]] = []

        def objective(config: Configuration) -> float:
            result = backend.evaluate(space.render(config), workload)
            if result.failed or slo.metric not in result.slis:
                sli = 10.0 * slo.threshold
                utility = failure_utility(slo)
            else:
                sli = float(result.slis[slo.metric])
                utility = float(
                    utility_fn(sli, slo.threshold, allocation_cost(config, space, weights))
                )
            screened.append((config, utility))
            return sli

        outcome = run_screening(space, objective, r=r, p=p, seed=seed)
        reduction = reduce_bounds(
            space,
            outcome.stats,
            outcome.evaluations,
            slo.threshold,
            relaxed_factor=relaxed_factor,
            strict_factor=strict_factor,
        )
        reduced = reduction.reduced_space

        combined: list[tuple[Configuration, float]] = list(screened)
        bo_budget = total_budget - screening_cost
        if bo_budget > 0:
            bo_trace = run_optimization(
                reduced,
                "bayesian-ei",
                backend,
                bo_budget,
                batch_size,
                seed + 1_000_003,
                utility_fn=utility_fn,
                slo=slo,
                workload=workload,
                weights=weights,
                cost_space=space,
            )
            combined.extend((o.config, o.utility) for o in bo_trace.observations)
        combined_best_config, combined_best_utility = _first_seen_min(combined)

        reduced_optimum = None
        if reduced.size <= reduced_optimum_limit:
            reduced_optimum = _brute_force_optimum(
                reduced, backend, utility_fn, slo, workload, weights, space
            )
        combined_found = (
            any(c.settings == reduced_optimum[0].settings for c, _ in combined)
            if reduced_optimum is not None
            else None
        )

        standalone_trace = run_optimization(
            space,
            "bayesian-ei",
            backend,
            total_budget,
            batch_size,
            seed + 2_000_003,
            utility_fn=utility_fn,
            slo=slo,
            workload=workload,
            weights=weights,
        )
        standalone_best = standalone_trace.best
        standalone_found = (
            any(
                o.config.settings == known_global_optimum
                for o in standalone_trace.observations
            )
            if known_global_optimum is not None
            else None
        )

        reps.append(
            SvbRepetition(
                repetition=rep,
                seed=seed,
                screening_evals=screening_cost,
                reduced_space=reduced,
                reduced_size=reduced.size,
                combined_best_config=combined_best_config,
                combined_best_utility=combined_best_utility,
                combined_in_reduced_bounds=reduced.contains(combined_best_config),
                combined_found_reduced_optimum=combined_found,
                reduced_optimum_utility=(
                    reduced_optimum[1] if reduced_optimum is not None else None
                ),
                standalone_best_config=standalone_best.config,
                standalone_best_utility=standalone_best.utility,
                standalone_in_reduced_bounds=reduced.contains(standalone_best.config),
                standalone_found_global_optimum=standalone_found,
            )
        )
    return SvbReport(total_budget=total_budget, r=r, repetitions=tuple(reps))


def _first_seen_min(
    pairs: Sequence[tuple[Configuration, float]]
) -> tuple[Configuration, float]:
    best_config, best_utility = pairs[0]
    for config, utility in pairs[1:]:
        if utility < best_utility:
            best_config, best_utility = config, utility
    return best_config, best_utility


def _brute_force_optimum(
    space: SearchSpace,
    backend: Backend,
    utility_fn: UtilityFn,
    slo: SloSpec,
    workload: WorkloadSpec,
    weights: CostWeights | None,
    cost_space: SearchSpace,
) -> tuple[Configuration, float]:
    best: tuple[Configuration, float] | None = None
    for position, config in enumerate(space.iter_configurations(), start=1):
        obs = score_result(
            config,
            backend.evaluate(space.render(config), workload),
            utility_fn,
            slo,
            cost_space,
            weights,
            position,
        )
        if best is None or obs.utility < best[1]:
            best = (config, obs.utility)
    assert best is not None
    return best


# -- emission ----------------------------------------------------------------


def _write_csv(path: str | Path, rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerows(rows)


def write_dataset_csv(dataset: Dataset, path: str | Path) -> None:
    rows = [_dataset_header(dataset.space)]
    rows.extend(_dataset_row(obs) for obs in dataset.rows)
    _write_csv(path, rows)


def write_slo_cdf_csv(dataset: Dataset, path: str | Path) -> None:
    """Empirical CDF of p99 latency over successful evaluations."""
    latencies = sorted(
        obs.slis["p99_latency_ms"]
        for obs in dataset.rows
        if not obs.failed and "p99_latency_ms" in obs.slis
    )
    rows: list[Sequence] = [["p99_latency_ms", "cumulative_fraction"]]
    total = len(latencies)
    for i, latency in enumerate(latencies, start=1):
        rows.append([_fmt(latency), _fmt(i / total)])
    _write_csv(path, rows)


def write_trace_csv(trace: RunTrace, space: SearchSpace, path: str | Path) -> None:
    header = (
        ["eval_index"]
        + list(space.names)
        + ["p99_latency_ms", "throughput_rps", "utility", "feasible", "failed", "best_so_far"]
    )
    rows: list[Sequence] = [header]
    for obs, best in zip(trace.observations, trace.best_utilities):
        rows.append([str(obs.eval_index)] + _dataset_row(obs) + [_fmt(best)])
    _write_csv(path, rows)


def write_comparison_csvs(report: ComparisonReport, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    paths = []
    for name, result in report.optimizers.items():
        path = out_dir / f"compare_{name}.csv"
        rows: list[Sequence] = [["n", "fraction_found_optimal", "distance_q99"]]
        for n in range(1, report.budget + 1):
            rows.append(
                [
                    str(n),
                    _fmt(result.fraction_found_optimal[n - 1]),
                    _fmt(result.distance_q99[n - 1]),
                ]
            )
        _write_csv(path, rows)
        paths.append(path)
    return paths


def write_svb_csv(report: SvbReport, path: str | Path) -> None:
    header = [
        "repetition",
        "seed",
        "screening_evals",
        "reduced_size",
        "reduced_optimum_utility",
        "combined_best_utility",
        "combined_in_reduced_bounds",
        "combined_found_reduced_optimum",
        "standalone_best_utility",
        "standalone_in_reduced_bounds",
        "standalone_found_global_optimum",
    ]
    rows: list[Sequence] = [header]
    for rep in report.repetitions:
        rows.append(
            [
                str(rep.repetition),
                str(rep.seed),
                str(rep.screening_evals),
                str(rep.reduced_size),
                "" if rep.reduced_optimum_utility is None else _fmt(rep.reduced_optimum_utility),
                _fmt(rep.combined_best_utility),
                _bool(rep.combined_in_reduced_bounds),
                "" if rep.combined_found_reduced_optimum is None else _bool(rep.combined_found_reduced_optimum),
                _fmt(rep.standalone_best_utility),
                _bool(rep.standalone_in_reduced_bounds),
                "" if rep.standalone_found_global_optimum is None else _bool(rep.standalone_found_global_optimum),
            ]
        )
    _write_csv(path, rows)


def dataset_summary(dataset: Dataset) -> str:
    feasible = sum(1 for o in dataset.rows if o.feasible)
    failed = sum(1 for o in dataset.rows if o.failed)
    lines = [
        f"configurations: {len(dataset.rows)}",
        f"feasible: {feasible} ({_fmt(feasible / len(dataset.rows))})",
        f"failed: {failed}",
    ]
    if dataset.slo is not None:
        lines.append(f"slo: {dataset.slo.metric} <= {_fmt(dataset.slo.threshold)}")
    lines.append(f"optimum: {dataset.space.config_text(dataset.optimum.config)}")
    lines.append(f"optimum_utility: {_fmt(dataset.optimum.utility)}")
    return "\n".join(lines) + "\n"


def trace_summary(trace: RunTrace, space: SearchSpace) -> str:
    best = trace.best
    lines = [
        f"optimizer: {trace.optimizer}",
        f"seed: {trace.seed}",
        f"evaluations: {len(trace.observations)}",
        f"best: {space.config_text(best.config)}",
        f"best_utility: {_fmt(best.utility)}",
        f"found_optimal_at: "
        + (str(trace.found_optimal_at) if trace.found_optimal_at is not None else "unknown"),
    ]
    return "\n".join(lines) + "\n"


def comparison_summary(report: ComparisonReport) -> str:
    lines = [
        f"runs: {report.runs}",
        f"budget: {report.budget}",
        f"base_seed: {report.base_seed}",
        f"batch_size: {report.batch_size}",
        f"optimum_utility: {_fmt(report.optimum_utility)}",
        f"slo_line: {_fmt(report.slo_line)}",
    ]
    for name, result in report.optimizers.items():
        lines.append(
            f"{name}: fraction_found_optimal={_fmt(result.fraction_found_optimal[-1])} "
            f"distance_q99={_fmt(result.distance_q99[-1])}"
        )
    return "\n".join(lines) + "\n"


def svb_summary(report: SvbReport) -> str:
    reps = report.repetitions
    lines = [
        f"total_budget: {report.total_budget}",
        f"trajectories: {report.r}",
        f"repetitions: {len(reps)}",
    ]
    combined_known = [r for r in reps if r.combined_found_reduced_optimum is not None]
    if combined_known:
        hits = sum(1 for r in combined_known if r.combined_found_reduced_optimum)
        lines.append(
            f"combined_found_reduced_optimum: {hits}/{len(combined_known)}"
        )
    standalone_known = [r for r in reps if r.standalone_found_global_optimum is not None]
    if standalone_known:
        hits = sum(1 for r in standalone_known if r.standalone_found_global_optimum)
        lines.append(
            f"standalone_found_global_optimum: {hits}/{len(standalone_known)}"
        )
    feasible = sum(1 for r in reps if r.standalone_best_utility < 1.0)
    lines.append(f"standalone_best_within_slo: {feasible}/{len(reps)}")
    for rep in reps:
        lines.append(
            f"rep {rep.repetition}: reduced_size={rep.reduced_size} "
            f"combined_best={_fmt(rep.combined_best_utility)} "
            f"standalone_best={_fmt(rep.standalone_best_utility)}"
        )
    return "\n".join(lines) + "\n"
