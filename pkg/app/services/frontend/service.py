from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import TypeVar

from loguru import logger

from app.db.codecs.audio import read_wav
from app.db.codecs.features import read_features, write_features
from app.db.manifest import write_manifest
from app.db.models.manifest import Manifest, ManifestEntry, Split
from app.services.exceptions import NoSpeechError
from app.services.frontend.dsp import preprocess_eval_utterance, preprocess_training_utterance
from app.services.frontend.schema import FeatureMatrix, FrameSpec, SourceId, VadConfig
from app.services.training.schema import PartialUtteranceCorpus

T = TypeVar("T")
R = TypeVar("R")

AUDIO_SUFFIXES = (".wav", ".flac")
FEATURE_SUFFIX = ".fmx"


def _map(func: Callable[[T], R], items: Iterable[T], workers: int) -> list[R]:
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


class FrontendService:
    """Turns manifest entries into feature matrices."""

    def __init__(
        self,
        vad: VadConfig | None = None,
        frames: FrameSpec | None = None,
        workers: int = 1,
    ) -> None:
        self.vad = vad or VadConfig()
        self.frames = frames or FrameSpec()
        self.workers = workers

    def span_seconds(self, features: FeatureMatrix) -> float:
        """Seconds of audio covered by the frames of a feature matrix."""
        return (features.num_frames - 1) * self.frames.frame_step + self.frames.frame_width

    @staticmethod
    def is_audio(entry: ManifestEntry) -> bool:
        """Whether the entry points to audio rather than a feature file."""
        return entry.path.suffix.lower() in AUDIO_SUFFIXES

    def training_features(self, manifest: Manifest, entry: ManifestEntry) -> list[FeatureMatrix]:
        """Partial utterances of a training entry (audio is preprocessed, FMX1 read as is)."""
        path = manifest.resolve(entry)
        if not self.is_audio(entry):
            return [read_features(path, SourceId(entry.speaker_id, entry.utterance_id, 0))]
        waveform = read_wav(path, self.frames.sample_rate)
        partials = preprocess_training_utterance(
            waveform, self.vad, self.frames, entry.speaker_id, entry.utterance_id
        )
        return [p.features for p in partials]

    def eval_features(self, manifest: Manifest, entry: ManifestEntry) -> FeatureMatrix | None:
        """Features of an evaluation entry, or None when it holds no usable speech."""
        path = manifest.resolve(entry)
        source = SourceId(entry.speaker_id, entry.utterance_id, 0)
        if not self.is_audio(entry):
            return read_features(path, source)
        try:
            return preprocess_eval_utterance(
                read_wav(path, self.frames.sample_rate),
                self.vad,
                self.frames,
                entry.speaker_id,
                entry.utterance_id,
            )
        except NoSpeechError as error:
            logger.warning(f"Skipping {entry.speaker_id}/{entry.utterance_id}: {error.message}")
            return None

    def load_training_corpus(self, manifest: Manifest) -> PartialUtteranceCorpus:
        """Partial utterances of the train split grouped by speaker."""
        entries = manifest.split(Split.TRAIN).entries
        results = _map(lambda e: self.training_features(manifest, e), entries, self.workers)
        utterances: dict[str, list[FeatureMatrix]] = {}
        for entry, partials in zip(entries, results, strict=True):
            utterances.setdefault(entry.speaker_id, []).extend(partials)
        corpus = PartialUtteranceCorpus(utterances)
        logger.info(
            f"Training corpus: {len(corpus.speakers)} speakers,"
            f" {corpus.total_partials} partial utterances."
        )
        return corpus

    def load_eval_features(
        self, manifest: Manifest, splits: tuple[Split, ...] = (Split.DEV, Split.TEST)
    ) -> list[tuple[FeatureMatrix, float]]:
        """Evaluation features with the duration of their source utterance."""
        entries = [e for e in manifest.entries if e.split in splits]
        results = _map(lambda e: self.eval_features(manifest, e), entries, self.workers)
        items = [
            (features, entry.duration_seconds)
            for entry, features in zip(entries, results, strict=True)
            if features is not None
        ]
        logger.info(f"Loaded features of {len(items)} of {len(entries)} evaluation utterances.")
        return items

    def preprocess_manifest(self, manifest: Manifest, out_dir: Path) -> Manifest:
        """Write FMX1 files for every audio entry and return the feature manifest.

        Training entries become one `<utterance>-<segment>` entry per partial
        utterance; evaluation entries keep their id and source duration.
        """
        out_dir.mkdir(parents=True, exist_ok=True)

        def convert(entry: ManifestEntry) -> list[ManifestEntry]:
            items: list[tuple[str, FeatureMatrix, float]] = []
            if entry.split is Split.TRAIN:
                for partial in self.training_features(manifest, entry):
                    utterance_id = f"{entry.utterance_id}-{partial.source_id.segment}"
                    items.append((utterance_id, partial, self.span_seconds(partial)))
            elif (features := self.eval_features(manifest, entry)) is not None:
                items.append((entry.utterance_id, features, entry.duration_seconds))
            converted = []
            for utterance_id, features, duration in items:
                relative = Path(entry.speaker_id) / f"{utterance_id}{FEATURE_SUFFIX}"
                write_features(out_dir / relative, features)
                converted.append(
                    ManifestEntry(
                        speaker_id=entry.speaker_id,
                        utterance_id=utterance_id,
                        path=relative,
                        duration_seconds=duration,
                        split=entry.split,
                    )
                )
            return converted

        converted = _map(convert, manifest.entries, self.workers)
        features_manifest = Manifest(
            entries=[e for group in converted for e in group], root=out_dir.resolve()
        )
        write_manifest(out_dir / "manifest.tsv", features_manifest)
        logger.info(
            f"Preprocessed {len(manifest)} utterances into {len(features_manifest)} feature files"
            f" under {out_dir}."
        )
        return features_manifest
