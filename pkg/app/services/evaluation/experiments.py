"""Enrollment/verification protocols repeated over random draws.

Every iteration draws its utterances from ``default_rng([seed, m, iteration])``,
so results do not depend on the order in which iterations run.
"""

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TypeVar

import numpy as np
from loguru import logger

from app.db.models.dvector import DVectorStore
from app.services.evaluation.metrics import (
    GRID_SIZE,
    crossing,
    equal_error_rate,
    error_rates,
    error_rates_at,
    score_matrix,
)
from app.services.evaluation.schema import (
    Array,
    ErrorRateCurve,
    ExperimentRow,
    IterationOutcome,
    TrialSet,
)
from app.services.exceptions import InsufficientUtterancesError, PartitionEmptyError

T = TypeVar("T")

MIN_ENROLLMENT = 2


@dataclass(frozen=True, slots=True)
class SpeakerPool:
    """D-vectors of one speaker as a matrix with their durations."""

    speaker_id: str
    vectors: Array
    durations: Array

    @property
    def size(self) -> int:
        """Number of d-vectors."""
        return int(self.vectors.shape[0])


def speaker_pools(store: DVectorStore) -> list[SpeakerPool]:
    """The store grouped by speaker in sorted speaker order."""
    return [
        SpeakerPool(
            speaker,
            np.stack([r.vector for r in records]),
            np.array([r.duration_seconds for r in records]),
        )
        for speaker, records in store.by_speaker().items()
    ]


def check_m(m: int) -> None:
    """Raise InsufficientUtterancesError when M is below 2."""
    if m < MIN_ENROLLMENT:
        msg = f"M must be at least {MIN_ENROLLMENT}, got {m}."
        raise InsufficientUtterancesError(msg)


def check_pool_sizes(pools: list[SpeakerPool], needed: int) -> None:
    """Require two speakers with at least `needed` d-vectors each."""
    if len(pools) < 2:  # noqa: PLR2004
        msg = f"Verification needs at least two speakers, the store has {len(pools)}."
        raise InsufficientUtterancesError(msg)
    small = [p.speaker_id for p in pools if p.size < needed]
    if small:
        msg = f"Speakers {small} have fewer than {needed} d-vectors."
        raise InsufficientUtterancesError(msg)


def iteration_rng(seed: int, m: int, iteration: int) -> np.random.Generator:
    """Independent stream of one iteration."""
    return np.random.default_rng([seed, m, iteration])


def run_iterations(func: Callable[[int], T], iterations: int, workers: int = 1) -> list[T]:
    """`func` over iteration indices, on a thread pool when `workers` > 1, in index order."""
    if workers <= 1:
        return [func(i) for i in range(iterations)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, range(iterations)))


def trials_from_scores(scores: Array, owners: Array) -> TrialSet:
    """Split a (tests × models) score matrix into genuine and impostor trials.

    `owners[r]` is the model index of the speaker of test row r.
    """
    genuine_mask = np.zeros(scores.shape, dtype=bool)
    genuine_mask[np.arange(scores.shape[0]), owners] = True
    return TrialSet(genuine=scores[genuine_mask], impostor=scores[~genuine_mask])


def split_draw(
    pools: list[SpeakerPool], m: int, rng: np.random.Generator
) -> tuple[Array, Array, Array]:
    """Draw 2M d-vectors per speaker and halve them into enrollment and verification.

    Returns:
        Speaker models (S, D), verification d-vectors (S·M, D) and their owners (S·M,).
    """
    models = []
    tests = []
    for pool in pools:
        picks = rng.choice(pool.size, size=2 * m, replace=False)
        models.append(pool.vectors[picks[:m]].mean(axis=0))
        tests.append(pool.vectors[picks[m:]])
    owners = np.repeat(np.arange(len(pools)), m)
    return np.stack(models), np.concatenate(tests), owners


def draw_trials(pools: list[SpeakerPool], m: int, rng: np.random.Generator) -> TrialSet:
    """Exhaustive trials of one enrollment/verification draw."""
    models, tests, owners = split_draw(pools, m, rng)
    return trials_from_scores(score_matrix(tests, models), owners)


def outcome(trials: TrialSet, threshold: float | None = None) -> IterationOutcome:
    """EER of the trials and FAR/FRR at `threshold` (default: the EER threshold)."""
    eer, eer_threshold = equal_error_rate(trials)
    at = eer_threshold if threshold is None else threshold
    far, frr = error_rates_at(trials, at)
    return IterationOutcome(eer=eer, threshold=eer_threshold, far=far, frr=frr)


def evaluate_store(
    store: DVectorStore,
    m: int,
    iterations: int,
    seed: int = 0,
    workers: int = 1,
    experiment: str = "evaluate",
    subset: str = "all",
) -> ExperimentRow:
    """Mean EER over `iterations` draws of 2M d-vectors per speaker.

    Raises:
        InsufficientUtterancesError: If M < 2 or a speaker has fewer than 2M d-vectors.
    """
    check_m(m)
    pools = speaker_pools(store)
    check_pool_sizes(pools, 2 * m)
    outcomes = run_iterations(
        lambda i: outcome(draw_trials(pools, m, iteration_rng(seed, m, i))), iterations, workers
    )
    return ExperimentRow.from_outcomes(experiment, subset, m, outcomes)


def run_m_sweep(
    store: DVectorStore,
    m_values: Sequence[int] = (2, 3, 4, 7, 10, 15),
    iterations: int = 1000,
    seed: int = 0,
    workers: int = 1,
    subset: str = "all",
) -> list[ExperimentRow]:
    """One :func:`evaluate_store` row per enrollment size M."""
    for m in m_values:
        check_m(m)
    check_pool_sizes(speaker_pools(store), 2 * max(m_values))
    rows = []
    for m in m_values:
        row = evaluate_store(store, m, iterations, seed, workers, "sweep-m", subset)
        logger.info(f"M={m}: mean EER {row.eer:.4f} (standard error {row.std_error:.4f}).")
        rows.append(row)
    return rows


@dataclass(slots=True)
class FixedThresholdResult:
    """Threshold averaged on the development store and the rows of every test store."""

    threshold: float
    dev: ExperimentRow
    tests: list[ExperimentRow]


def run_fixed_threshold(
    dev_store: DVectorStore,
    test_stores: dict[str, DVectorStore],
    m: int = 2,
    iterations: int = 1000,
    seed: int = 0,
    workers: int = 1,
) -> FixedThresholdResult:
    """Apply the mean EER threshold of the dev store unchanged to each test store.

    Test rows report the mean EER and the mean FAR/FRR at the fixed threshold.
    """
    dev = evaluate_store(dev_store, m, iterations, seed, workers, "fixed-threshold", "dev")
    threshold = dev.threshold
    logger.info(f"Fixed threshold {threshold:.4f} from the development store.")

    rows = []
    for name, store in test_stores.items():
        pools = speaker_pools(store)
        check_pool_sizes(pools, 2 * m)
        outcomes = run_iterations(
            lambda i, pools=pools: outcome(
                draw_trials(pools, m, iteration_rng(seed, m, i)), threshold
            ),
            iterations,
            workers,
        )
        row = ExperimentRow.from_outcomes("fixed-threshold", name, m, outcomes)
        row.threshold = threshold
        rows.append(row)
    return FixedThresholdResult(threshold=threshold, dev=dev, tests=rows)


SUBSETS = ("short", "long", "all")


def _partition_mask(durations: Array, subset: str, boundary: float) -> Array:
    if subset == "short":
        return durations <= boundary
    if subset == "long":
        return durations > boundary
    return np.ones(durations.shape, dtype=bool)


def run_duration_split(
    store: DVectorStore,
    boundary_seconds: float = 4.0,
    m: int = 2,
    iterations: int = 1000,
    seed: int = 0,
    workers: int = 1,
) -> list[ExperimentRow]:
    """EER with verification limited to short (≤ boundary), long and all utterances.

    Enrollment draws M d-vectors per speaker regardless of duration; the
    remaining d-vectors of each partition are verified against every model.

    Raises:
        InsufficientUtterancesError: If M < 2 or a speaker has no d-vector beyond M.
        PartitionEmptyError: If a partition never yields genuine and impostor trials.
    """
    check_m(m)
    pools = speaker_pools(store)
    check_pool_sizes(pools, m + 1)
    for subset in SUBSETS:
        if not any(_partition_mask(p.durations, subset, boundary_seconds).any() for p in pools):
            msg = f"No {subset} utterance (boundary {boundary_seconds} s) in the store."
            raise PartitionEmptyError(msg)

    def iteration(i: int) -> dict[str, IterationOutcome]:
        rng = iteration_rng(seed, m, i)
        models = []
        tests: dict[str, list[Array]] = {s: [] for s in SUBSETS}
        owners: dict[str, list[Array]] = {s: [] for s in SUBSETS}
        for index, pool in enumerate(pools):
            order = rng.permutation(pool.size)
            models.append(pool.vectors[order[:m]].mean(axis=0))
            rest = order[m:]
            for subset in SUBSETS:
                kept = rest[_partition_mask(pool.durations[rest], subset, boundary_seconds)]
                tests[subset].append(pool.vectors[kept])
                owners[subset].append(np.full(kept.size, index))
        model_matrix = np.stack(models)
        results = {}
        for subset in SUBSETS:
            test_matrix = np.concatenate(tests[subset])
            owner = np.concatenate(owners[subset])
            if test_matrix.shape[0] == 0:
                continue
            trials = trials_from_scores(score_matrix(test_matrix, model_matrix), owner)
            if trials.genuine.size and trials.impostor.size:
                results[subset] = outcome(trials)
        return results

    per_iteration = run_iterations(iteration, iterations, workers)
    rows = []
    for subset in SUBSETS:
        outcomes = [result[subset] for result in per_iteration if subset in result]
        if not outcomes:
            msg = f"The {subset} partition produced no trials in {iterations} iterations."
            raise PartitionEmptyError(msg)
        row = ExperimentRow.from_outcomes("duration-split", subset, m, outcomes)
        logger.info(f"{subset}: mean EER {row.eer:.4f} over {len(outcomes)} iterations.")
        rows.append(row)
    return rows


def average_error_curve(
    store: DVectorStore,
    m: int = 2,
    iterations: int = 100,
    seed: int = 0,
    n_thresholds: int = GRID_SIZE,
    workers: int = 1,
) -> ErrorRateCurve:
    """FAR and FRR averaged over iterations on a fixed threshold grid spanning [-1, 1]."""
    check_m(m)
    pools = speaker_pools(store)
    check_pool_sizes(pools, 2 * m)
    grid = np.linspace(-1.0, 1.0, n_thresholds)

    def iteration(i: int) -> tuple[Array, Array]:
        trials = draw_trials(pools, m, iteration_rng(seed, m, i))
        trials.check_non_empty()
        return error_rates(trials, grid)

    curves = run_iterations(iteration, iterations, workers)
    far = np.mean([c[0] for c in curves], axis=0)
    frr = np.mean([c[1] for c in curves], axis=0)
    eer, eer_threshold = crossing(grid, far, frr)
    return ErrorRateCurve(grid, far, frr, eer, eer_threshold)
