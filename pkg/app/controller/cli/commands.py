"""Subcommands of the `ge2e` command line.

Each subcommand is a pydantic model whose fields are its flags (kebab case on the
command line) and whose `cli_cmd` runs the matching service.
"""

from pathlib import Path
from typing import Literal

from loguru import logger
from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings, CliApp, CliSubCommand, SettingsConfigDict

from app.core.config import settings
from app.core.server import run_server
from app.db.codecs.checkpoints import read_checkpoint
from app.db.codecs.dvectors import read_store, write_store
from app.db.manifest import cap_speaker_duration, duration_statistics, ingest
from app.db.models.dvector import DVectorStore
from app.db.models.manifest import Manifest, Split
from app.services.evaluation.experiments import (
    average_error_curve,
    evaluate_store,
    run_duration_split,
    run_fixed_threshold,
    run_m_sweep,
)
from app.services.evaluation.schema import ExperimentRow, WindowSpec
from app.services.evaluation.service import EvaluationService
from app.services.frontend.service import FrontendService
from app.services.loss.schema import Reduction
from app.services.network.schema import NetConfig
from app.services.synthesis.schema import SynthSpec
from app.services.synthesis.service import generate_synthetic_corpus
from app.services.training.schema import BatchSpec, TrainConfig
from app.services.training.service import TrainerService

EvalSplit = Literal["dev", "test", "all"]


def _splits(split: EvalSplit) -> tuple[Split, ...]:
    if split == "all":
        return (Split.DEV, Split.TEST)
    return (Split(split),)


def _load_manifest(path: Path, max_speaker_seconds: float | None) -> Manifest:
    manifest = ingest(path)
    if max_speaker_seconds is not None:
        manifest = cap_speaker_duration(manifest, max_speaker_seconds)
    return manifest


def _report(rows: list[ExperimentRow], path: Path | None) -> None:
    for row in rows:
        logger.info(
            f"{row.experiment} [{row.subset}] M={row.m}: EER {row.eer:.4f}"
            f" FAR {row.far:.4f} FRR {row.frr:.4f} threshold {row.threshold:.4f}"
        )
    if path is not None:
        EvaluationService.write_report(path, rows)


class CommandBase(BaseModel):
    """Flags shared by every command."""

    seed: int = Field(default=0, description="Seed of every random draw.")
    config: Path | None = Field(
        default=None, description="key=value file with flag values; explicit flags win."
    )


class PreprocessCommand(CommandBase):
    """Turn an audio manifest into feature files and a feature manifest."""

    manifest: Path = Field(description="Audio manifest (TSV).")
    out: Path = Field(description="Output directory for .fmx files and manifest.tsv.")
    max_speaker_seconds: float | None = Field(default=None, gt=0)
    workers: int = Field(default=1, ge=1)

    def cli_cmd(self) -> None:
        manifest = _load_manifest(self.manifest, self.max_speaker_seconds)
        FrontendService(workers=self.workers).preprocess_manifest(manifest, self.out)


class SynthCommand(CommandBase):
    """Generate a synthetic speaker corpus of WAV files with its manifest."""

    out: Path = Field(description="Output directory.")
    n_speakers: int = Field(default=8, ge=0, description="Training speakers.")
    n_dev_speakers: int = Field(default=0, ge=0)
    n_test_speakers: int = Field(default=0, ge=0)
    utterances: int = Field(default=20, ge=1, description="Utterances per speaker.")
    min_duration: float = 3.0
    max_duration: float = 6.0
    noise: float = Field(default=0.05, ge=0)

    def cli_cmd(self) -> None:
        spec = SynthSpec(
            n_speakers=self.n_speakers,
            n_dev_speakers=self.n_dev_speakers,
            n_test_speakers=self.n_test_speakers,
            utterances_per_speaker=self.utterances,
            duration_range=(self.min_duration, self.max_duration),
            noise_level=self.noise,
            seed=self.seed,
        )
        generate_synthetic_corpus(spec, self.out)


class TrainCommand(CommandBase):
    """Train the embedding network with the GE2E loss."""

    manifest: Path = Field(description="Manifest whose train split is used.")
    out: Path = Field(description="Directory for checkpoints and metrics.csv.")
    n: int = Field(default=16, ge=2, description="Speakers per batch.")
    m: int = Field(default=5, ge=2, description="Utterances per speaker in a batch.")
    min_frames: int = Field(default=140, ge=1)
    max_frames: int = Field(default=180, ge=1)
    lr: float = Field(default=1e-4, gt=0)
    epochs: int = Field(default=1, ge=0)
    batches_per_epoch: int | None = Field(default=None, ge=1)
    checkpoint_interval: int = Field(default=1, ge=1)
    max_steps: int | None = Field(default=None, ge=0)
    reduction: Reduction = Reduction.MEAN
    clip_norm: float = Field(default=3.0, gt=0)
    clip_scale_gradients: bool = False
    learnable_scale: bool = True
    hidden: int = Field(default=768, ge=1)
    layers: int = Field(default=3, ge=1)
    embedding: int = Field(default=256, ge=1)
    n_mels: int = Field(default=40, ge=1, description="Feature bands (network input).")
    dual_bias: bool = True
    max_speaker_seconds: float | None = Field(default=None, gt=0)
    resume: Path | None = Field(default=None, description="Checkpoint to continue from.")
    log_interval: int = Field(default=10, ge=1)
    workers: int = Field(default=1, ge=1)

    def cli_cmd(self) -> None:
        manifest = _load_manifest(self.manifest, self.max_speaker_seconds)
        corpus = FrontendService(workers=self.workers).load_training_corpus(manifest)
        initial = read_checkpoint(self.resume) if self.resume is not None else None
        net_config = (
            initial.config
            if initial is not None
            else NetConfig(
                input_dim=self.n_mels,
                hidden_dim=self.hidden,
                num_layers=self.layers,
                embedding_dim=self.embedding,
                dual_bias=self.dual_bias,
            )
        )
        config = TrainConfig(
            seed=self.seed,
            epochs=self.epochs,
            batches_per_epoch=self.batches_per_epoch,
            checkpoint_interval=self.checkpoint_interval,
            reduction=self.reduction,
            batch=BatchSpec(
                n_speakers=self.n,
                m_utterances=self.m,
                frame_range=(self.min_frames, self.max_frames),
            ),
            learning_rate=self.lr,
            clip_norm=self.clip_norm,
            clip_scale_gradients=self.clip_scale_gradients,
            learnable_scale=self.learnable_scale,
            max_steps=self.max_steps,
            prefetch_capacity=settings.PREFETCH_CAPACITY,
            log_interval=self.log_interval,
        )
        TrainerService(net_config, config, run_name=self.out.name).train(corpus, self.out, initial)


class EmbedCommand(CommandBase):
    """Compute utterance d-vectors of the evaluation splits with a checkpoint."""

    checkpoint: Path
    manifest: Path
    out: Path = Field(description="D-vector store to write.")
    split: EvalSplit = "all"
    window: int = Field(default=160, ge=1, description="Window length in frames.")
    step: int = Field(default=80, ge=1, description="Window step in frames.")
    workers: int = Field(default=settings.EVAL_WORKERS, ge=1)

    def cli_cmd(self) -> None:
        checkpoint = read_checkpoint(self.checkpoint)
        manifest = ingest(self.manifest)
        items = FrontendService(workers=self.workers).load_eval_features(
            manifest, _splits(self.split)
        )
        service = EvaluationService(
            WindowSpec(window_frames=self.window, step_frames=self.step), self.workers
        )
        write_store(self.out, service.embed(checkpoint.params, items))


class EvaluateCommand(CommandBase):
    """Mean EER of a d-vector store over repeated random enrollments."""

    store: Path
    m: int = Field(default=2, description="Enrollment utterances per speaker.")
    iters: int = Field(default=1000, ge=1)
    report: Path | None = None
    curve: Path | None = Field(default=None, description="CSV of the averaged FAR/FRR curve.")
    workers: int = Field(default=settings.EVAL_WORKERS, ge=1)

    def cli_cmd(self) -> None:
        store = read_store(self.store)
        row = evaluate_store(store, self.m, self.iters, self.seed, self.workers)
        _report([row], self.report)
        if self.curve is not None:
            curve = average_error_curve(
                store, self.m, self.iters, self.seed, workers=self.workers
            )
            EvaluationService.write_curve(self.curve, curve)


class SweepMCommand(CommandBase):
    """Mean EER for several enrollment sizes."""

    store: Path
    m_list: list[int] = Field(default=[2, 3, 4, 7, 10, 15])
    iters: int = Field(default=1000, ge=1)
    report: Path | None = None
    workers: int = Field(default=settings.EVAL_WORKERS, ge=1)

    def cli_cmd(self) -> None:
        rows = run_m_sweep(
            read_store(self.store), self.m_list, self.iters, self.seed, self.workers
        )
        _report(rows, self.report)


class FixedThresholdCommand(CommandBase):
    """Transfer the mean EER threshold of a development store to test stores."""

    dev: Path
    test: list[Path]
    m: int = 2
    iters: int = Field(default=1000, ge=1)
    report: Path | None = None
    workers: int = Field(default=settings.EVAL_WORKERS, ge=1)

    def cli_cmd(self) -> None:
        tests: dict[str, DVectorStore] = {path.stem: read_store(path) for path in self.test}
        result = run_fixed_threshold(
            read_store(self.dev), tests, self.m, self.iters, self.seed, self.workers
        )
        _report([result.dev, *result.tests], self.report)


class DurationSplitCommand(CommandBase):
    """EER of short, long and all verification utterances."""

    store: Path
    boundary: float = Field(default=4.0, gt=0, description="Short means at most this many s.")
    m: int = 2
    iters: int = Field(default=1000, ge=1)
    report: Path | None = None
    workers: int = Field(default=settings.EVAL_WORKERS, ge=1)

    def cli_cmd(self) -> None:
        rows = run_duration_split(
            read_store(self.store), self.boundary, self.m, self.iters, self.seed, self.workers
        )
        _report(rows, self.report)


class CheckpointSweepCommand(CommandBase):
    """EER, FAR and FRR of each checkpoint of a training run on the same utterances."""

    checkpoints: list[Path]
    manifest: Path
    split: EvalSplit = "all"
    m: int = 2
    iters: int = Field(default=100, ge=1)
    report: Path | None = None
    workers: int = Field(default=settings.EVAL_WORKERS, ge=1)

    def cli_cmd(self) -> None:
        manifest = ingest(self.manifest)
        items = FrontendService(workers=self.workers).load_eval_features(
            manifest, _splits(self.split)
        )
        checkpoints = [(path.name, read_checkpoint(path)) for path in self.checkpoints]
        rows = EvaluationService(workers=self.workers).run_checkpoint_sweep(
            checkpoints, items, self.m, self.iters, self.seed
        )
        _report(rows, self.report)


class StatsCommand(CommandBase):
    """Utterance counts per split below and above a duration boundary."""

    manifest: Path
    boundary: float = Field(default=4.0, gt=0)

    def cli_cmd(self) -> None:
        manifest = ingest(self.manifest, check_paths=False)
        for stats in duration_statistics(manifest, self.boundary):
            logger.info(
                f"{stats.split.value}: {stats.speakers} speakers, {stats.utterances} utterances"
                f" ({stats.short} ≤ {self.boundary} s, {stats.long} longer),"
                f" {stats.total_seconds / 3600:.2f} h"
            )


class ServeCommand(CommandBase):
    """Start the HTTP verification API."""

    host: str | None = None
    port: int | None = None
    workers: int | None = None

    def cli_cmd(self) -> None:
        run_server(self.host, self.port, self.workers)


class Ge2eCli(BaseSettings):
    """Text-independent speaker verification with GE2E-trained d-vectors."""

    model_config = SettingsConfigDict(
        cli_prog_name="ge2e",
        cli_kebab_case=True,
        cli_exit_on_error=False,
        env_prefix="GE2E_CLI_",
    )

    preprocess: CliSubCommand[PreprocessCommand]
    synth: CliSubCommand[SynthCommand]
    train: CliSubCommand[TrainCommand]
    embed: CliSubCommand[EmbedCommand]
    evaluate: CliSubCommand[EvaluateCommand]
    sweep_m: CliSubCommand[SweepMCommand] = Field(alias="sweep-m")
    fixed_threshold: CliSubCommand[FixedThresholdCommand] = Field(alias="fixed-threshold")
    duration_split: CliSubCommand[DurationSplitCommand] = Field(alias="duration-split")
    checkpoint_sweep: CliSubCommand[CheckpointSweepCommand] = Field(alias="checkpoint-sweep")
    stats: CliSubCommand[StatsCommand]
    serve: CliSubCommand[ServeCommand]

    def cli_cmd(self) -> None:
        CliApp.run_subcommand(self)


def command_flags() -> dict[str, set[str]]:
    """Flag names of every command, keyed by command name."""
    flags = {}
    for name, field in Ge2eCli.model_fields.items():
        command = field.alias or name
        model = field.annotation
        # CliSubCommand[X] is Annotated[X | None, ...]; the model is the first union member.
        for candidate in getattr(model, "__args__", (model,)):
            if isinstance(candidate, type) and issubclass(candidate, BaseModel):
                flags[command] = {f.replace("_", "-") for f in candidate.model_fields}
                break
    return flags
