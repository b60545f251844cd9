import csv
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from loguru import logger

from app.db.codecs.checkpoints import Checkpoint
from app.db.models.dvector import DVectorStore
from app.services.evaluation.experiments import (
    check_m,
    check_pool_sizes,
    draw_trials,
    iteration_rng,
    outcome,
    run_iterations,
    speaker_pools,
)
from app.services.evaluation.extraction import utterance_dvector
from app.services.evaluation.schema import (
    CURVE_HEADER,
    REPORT_HEADER,
    ErrorRateCurve,
    ExperimentRow,
    WindowSpec,
)
from app.services.frontend.schema import FeatureMatrix
from app.services.network.schema import NetworkParams


class EvaluationService:
    """Embeds utterances and runs the verification experiments."""

    def __init__(self, window: WindowSpec | None = None, workers: int = 1) -> None:
        self.window = window or WindowSpec()
        self.workers = workers

    def embed(
        self, params: NetworkParams, items: Sequence[tuple[FeatureMatrix, float]]
    ) -> DVectorStore:
        """D-vector store of (features, source duration) pairs."""
        vectors = run_iterations(
            lambda i: utterance_dvector(params, items[i][0], self.window, items[i][1]),
            len(items),
            self.workers,
        )
        store = DVectorStore(dim=int(params.proj_w.shape[0]))
        for dvector in vectors:
            store.add(dvector)
        logger.info(f"Embedded {len(store)} utterances of {len(store.speakers)} speakers.")
        return store

    def run_checkpoint_sweep(
        self,
        checkpoints: Sequence[tuple[str, Checkpoint]],
        items: Sequence[tuple[FeatureMatrix, float]],
        m: int = 2,
        iterations: int = 100,
        seed: int = 0,
    ) -> list[ExperimentRow]:
        """Embed the same utterances with each checkpoint and report EER, FAR and FRR.

        FAR and FRR are read at each iteration's EER threshold and averaged.
        """
        check_m(m)
        rows = []
        for name, checkpoint in checkpoints:
            pools = speaker_pools(self.embed(checkpoint.params, items))
            check_pool_sizes(pools, 2 * m)
            outcomes = run_iterations(
                lambda i, pools=pools: outcome(draw_trials(pools, m, iteration_rng(seed, m, i))),
                iterations,
                self.workers,
            )
            row = ExperimentRow.from_outcomes("checkpoint-sweep", name, m, outcomes)
            logger.info(f"{name}: EER {row.eer:.4f}, FAR {row.far:.4f}, FRR {row.frr:.4f}.")
            rows.append(row)
        return rows

    @staticmethod
    def write_report(path: Path, rows: Sequence[ExperimentRow]) -> None:
        """CSV with one line per row."""
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(REPORT_HEADER)
            writer.writerows(row.as_row() for row in rows)
        logger.info(f"Report written to {path}.")

    @staticmethod
    def write_curve(path: Path, curve: ErrorRateCurve) -> None:
        """CSV of threshold, FAR and FRR."""
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(CURVE_HEADER)
            writer.writerows(
                np.column_stack([curve.thresholds, curve.far, curve.frr]).tolist()
            )
        logger.info(f"Curve written to {path}.")
