import csv
from pathlib import Path
from typing import TextIO

import numpy as np
from loguru import logger

from app.db.codecs.checkpoints import Checkpoint, write_checkpoint
from app.services.exceptions import NumericalError, ShapeError
from app.services.loss.ge2e import ge2e_loss
from app.services.loss.schema import LossScale, Reduction
from app.services.network.lstm import (
    backward_batch,
    forward_batch,
    init_params,
    normalization_backward,
    normalize_outputs,
)
from app.services.network.schema import NetConfig, NetworkParams
from app.services.training.optimizer import adam_step, clip_gradients
from app.services.training.sampler import BatchPrefetcher
from app.services.training.schema import (
    METRICS_HEADER,
    SCALE_B,
    SCALE_W,
    Array,
    OptimizerState,
    PartialUtteranceCorpus,
    StepMetrics,
    TrainBatch,
    TrainConfig,
    TrainResult,
)

METRICS_FILE = "metrics.csv"
FINAL_CHECKPOINT = "final.ge2e"


def checkpoint_name(epoch: int) -> str:
    """File name of the checkpoint written after `epoch`."""
    return f"epoch_{epoch:04d}.ge2e"


def batch_gradients(
    params: NetworkParams,
    scale: LossScale,
    batch: TrainBatch,
    reduction: Reduction = Reduction.MEAN,
    projection_grad_scale: float = 1.0,
) -> tuple[float, dict[str, Array]]:
    """Loss of one batch and the gradients of every network tensor and of (w, b).

    Raises:
        NumericalError: If the loss is not finite.
    """
    raw, tape = forward_batch(params, batch.features)
    unit = normalize_outputs(raw)
    n, m = batch.n_speakers, batch.m_utterances
    result = ge2e_loss(unit.reshape(n, m, -1), scale, reduction)
    if not np.isfinite(result.loss):
        msg = f"Loss is not finite ({result.loss})."
        raise NumericalError(msg)

    grad_raw = normalization_backward(raw, result.gradients.embeddings.reshape(n * m, -1))
    grads = backward_batch(params, tape, grad_raw, projection_grad_scale).named_tensors()
    grads[SCALE_W] = np.asarray(result.gradients.w)
    grads[SCALE_B] = np.asarray(result.gradients.b)
    return result.loss, grads


class TrainerService:
    """Runs the optimisation loop of the embedding network and the loss scale."""

    def __init__(self, net_config: NetConfig, config: TrainConfig, run_name: str = "train") -> None:
        self.net_config = net_config
        self.config = config
        self.log = logger.bind(run=run_name)

    def train_step(
        self,
        params: NetworkParams,
        scale: LossScale,
        state: OptimizerState,
        batch: TrainBatch,
    ) -> tuple[NetworkParams, LossScale, OptimizerState, StepMetrics]:
        """Gradients, clipping and one Adam update for one batch."""
        loss, grads = batch_gradients(
            params, scale, batch, self.config.reduction, self.config.projection_grad_scale
        )
        if not self.config.learnable_scale:
            grads[SCALE_W] = np.zeros(())
            grads[SCALE_B] = np.zeros(())

        if self.config.clip_scale_gradients:
            grads, grad_norm = clip_gradients(grads, self.config.clip_norm)
        else:
            scale_grads = {name: grads.pop(name) for name in (SCALE_W, SCALE_B)}
            grads, grad_norm = clip_gradients(grads, self.config.clip_norm)
            grads.update(scale_grads)

        params, scale, state = adam_step(params, scale, grads, state)
        metrics = StepMetrics(
            step=state.step, loss=loss, grad_norm=grad_norm, w=scale.w, b=scale.b, t=batch.frames
        )
        return params, scale, state, metrics

    def _write_checkpoint(
        self, out_dir: Path | None, name: str, params: NetworkParams, scale: LossScale
    ) -> Path | None:
        if out_dir is None:
            return None
        path = out_dir / name
        write_checkpoint(path, Checkpoint(params, scale))
        self.log.info(f"Checkpoint written to {path}.")
        return path

    def _open_metrics(self, out_dir: Path | None) -> TextIO | None:
        if out_dir is None:
            return None
        out_dir.mkdir(parents=True, exist_ok=True)
        handle = (out_dir / METRICS_FILE).open("w", encoding="utf-8", newline="")
        csv.writer(handle).writerow(METRICS_HEADER)
        return handle

    def train(
        self,
        corpus: PartialUtteranceCorpus,
        out_dir: Path | None = None,
        initial: Checkpoint | None = None,
    ) -> TrainResult:
        """Train from `initial` (or a fresh initialisation) and write checkpoints to `out_dir`.

        A checkpoint is written after every `checkpoint_interval` epochs and as
        `final.ge2e` at the end of the run; `metrics.csv` holds one row per step.

        Raises:
            ShapeError: If the features do not match the network input dimension.
            CorpusTooSmallError: If a batch cannot be filled.
            NumericalError: If a loss or gradient becomes non-finite.
        """
        cfg = self.config
        if corpus.total_partials and corpus.feature_dim != self.net_config.input_dim:
            msg = (
                f"Corpus features have {corpus.feature_dim} bands,"
                f" the network expects {self.net_config.input_dim}."
            )
            raise ShapeError(msg)

        if initial is None:
            params = init_params(self.net_config, cfg.seed)
            scale = LossScale(*cfg.initial_scale)
        else:
            params, scale = initial.params, initial.scale
        state = OptimizerState.initial(params, cfg)

        steps_per_epoch = cfg.steps_per_epoch(corpus.total_partials)
        total_steps = cfg.epochs * steps_per_epoch
        if cfg.max_steps is not None:
            total_steps = min(total_steps, cfg.max_steps)
        self.log.info(
            f"Training {params.parameter_count} parameters on {len(corpus.speakers)} speakers"
            f" ({corpus.total_partials} partial utterances): {cfg.epochs} epochs of"
            f" {steps_per_epoch} steps, {total_steps} steps in total."
        )

        result = TrainResult(params=params, scale=scale, optimizer=state)
        metrics_file = self._open_metrics(out_dir)
        writer = csv.writer(metrics_file) if metrics_file else None
        rng = np.random.default_rng([cfg.seed, 1])
        try:
            with BatchPrefetcher(
                corpus, cfg.batch, rng, total_steps, cfg.prefetch_capacity
            ) as batches:
                for batch in batches:
                    params, scale, state, metrics = self.train_step(params, scale, state, batch)
                    result.metrics.append(metrics)
                    if writer is not None and metrics_file is not None:
                        writer.writerow(metrics.as_row())
                        metrics_file.flush()
                    if metrics.step % cfg.log_interval == 0 or metrics.step == 1:
                        self.log.info(
                            f"step={metrics.step} loss={metrics.loss:.4f}"
                            f" grad_norm={metrics.grad_norm:.4f} w={metrics.w:.4f}"
                            f" b={metrics.b:.4f} t={metrics.t}"
                        )
                    if metrics.step % steps_per_epoch == 0:
                        epoch = metrics.step // steps_per_epoch
                        self.log.info(f"Epoch {epoch} finished.")
                        if epoch % cfg.checkpoint_interval == 0:
                            path = self._write_checkpoint(
                                out_dir, checkpoint_name(epoch), params, scale
                            )
                            if path is not None:
                                result.checkpoints.append(path)
        finally:
            if metrics_file is not None:
                metrics_file.close()

        final_path = self._write_checkpoint(out_dir, FINAL_CHECKPOINT, params, scale)
        if final_path is not None:
            result.checkpoints.append(final_path)
        result.params, result.scale, result.optimizer = params, scale, state
        return result
