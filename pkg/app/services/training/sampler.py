"""Batch construction and the bounded prefetch queue feeding the optimizer."""

import queue
import threading
from collections.abc import Iterator
from types import TracebackType

import numpy as np
from loguru import logger

from app.services.exceptions import CorpusTooSmallError
from app.services.training.schema import BatchSpec, PartialUtteranceCorpus, TrainBatch


def build_batch(
    corpus: PartialUtteranceCorpus, spec: BatchSpec, rng: np.random.Generator
) -> TrainBatch:
    """Draw N speakers, M partial utterances each, and one t-frame slice of every utterance.

    Speakers and utterances are drawn without replacement; a speaker with fewer
    than M usable partial utterances is sampled with replacement. Only partial
    utterances with at least t frames are usable.

    Raises:
        CorpusTooSmallError: If fewer than N speakers have a usable partial utterance.
    """
    low, high = spec.frame_range
    frames = int(rng.integers(low, high + 1))

    usable = {
        speaker: [item for item in corpus.utterances[speaker] if item.num_frames >= frames]
        for speaker in corpus.speakers
    }
    eligible = [speaker for speaker, items in usable.items() if items]
    if len(eligible) < spec.n_speakers:
        msg = (
            f"Batch needs {spec.n_speakers} speakers with partial utterances of"
            f" {frames} frames, corpus has {len(eligible)}."
        )
        raise CorpusTooSmallError(msg)

    chosen = rng.choice(len(eligible), size=spec.n_speakers, replace=False)
    segments = []
    sources = []
    speaker_ids = []
    for speaker_index in chosen.tolist():
        speaker = eligible[speaker_index]
        items = usable[speaker]
        replace = len(items) < spec.m_utterances
        picks = rng.choice(len(items), size=spec.m_utterances, replace=replace)
        speaker_ids.append(speaker)
        for pick in picks.tolist():
            item = items[pick]
            offset = int(rng.integers(0, item.num_frames - frames + 1))
            segments.append(item.data[offset : offset + frames])
            sources.append((speaker, item.source_id.utterance_id, item.source_id.segment, offset))
    return TrainBatch(
        features=np.stack(segments),
        speaker_ids=tuple(speaker_ids),
        m_utterances=spec.m_utterances,
        sources=tuple(sources),
    )


class BatchPrefetcher:
    """Builds `count` batches on a background thread into a bounded queue.

    The producer owns `rng`, so the batch sequence depends only on its seed.
    Errors raised while building a batch are re-raised by the consumer.
    """

    _DONE = object()

    def __init__(
        self,
        corpus: PartialUtteranceCorpus,
        spec: BatchSpec,
        rng: np.random.Generator,
        count: int,
        capacity: int = 4,
    ) -> None:
        self._corpus = corpus
        self._spec = spec
        self._rng = rng
        self._count = count
        self._queue: queue.Queue[object] = queue.Queue(maxsize=capacity)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._produce, name="batch-prefetch", daemon=True)

    def _put(self, item: object) -> bool:
        while not self._stop.is_set():
            try:
                self._queue.put(item, timeout=0.1)
            except queue.Full:
                continue
            return True
        return False

    def _produce(self) -> None:
        try:
            for _ in range(self._count):
                if not self._put(build_batch(self._corpus, self._spec, self._rng)):
                    return
        except Exception as error:
            self._put(error)
            return
        self._put(self._DONE)

    def __enter__(self) -> "BatchPrefetcher":
        self._thread.start()
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        traceback: TracebackType | None,
    ) -> None:
        self._stop.set()
        self._thread.join()
        logger.debug("Batch prefetcher stopped.")

    def __iter__(self) -> Iterator[TrainBatch]:
        while True:
            item = self._queue.get()
            if item is self._DONE:
                return
            if isinstance(item, Exception):
                raise item
            assert isinstance(item, TrainBatch)  # noqa: S101
            yield item
