"""Sliding-window utterance d-vectors."""

import numpy as np

from app.db.models.dvector import DVector
from app.services.exceptions import TooShortError
from app.services.evaluation.schema import WindowSpec
from app.services.frontend.schema import FeatureMatrix, FrameSpec
from app.services.network.lstm import forward_batch, normalize_outputs
from app.services.network.schema import NetworkParams


def window_count(num_frames: int, spec: WindowSpec | None = None) -> int:
    """⌊(T − window) / step⌋ + 1, or 0 when T is shorter than one window."""
    spec = spec or WindowSpec()
    if num_frames < spec.window_frames:
        return 0
    return (num_frames - spec.window_frames) // spec.step_frames + 1


def window_offsets(num_frames: int, spec: WindowSpec | None = None) -> list[int]:
    """Start frames of the complete windows; an incomplete tail is dropped.

    Raises:
        TooShortError: If the utterance is shorter than one window.
    """
    spec = spec or WindowSpec()
    count = window_count(num_frames, spec)
    if count == 0:
        msg = f"{num_frames} frames are fewer than one {spec.window_frames}-frame window."
        raise TooShortError(msg)
    return [index * spec.step_frames for index in range(count)]


def features_duration(features: FeatureMatrix, frames: FrameSpec | None = None) -> float:
    """Seconds of speech covered by the frames of a feature matrix."""
    frames = frames or FrameSpec()
    return (features.num_frames - 1) * frames.frame_step + frames.frame_width


def utterance_dvector(
    params: NetworkParams,
    features: FeatureMatrix,
    spec: WindowSpec | None = None,
    duration_seconds: float | None = None,
) -> DVector:
    """Mean of the unit-norm embeddings of every window (the mean is not re-normalised).

    The d-vector takes its ids from the features' source id; the duration
    defaults to the span of the frames.

    Raises:
        TooShortError: If the utterance is shorter than one window.
        DegenerateEmbeddingError: If a window embeds to a zero vector.
    """
    spec = spec or WindowSpec()
    offsets = window_offsets(features.num_frames, spec)
    windows = np.stack([features.data[o : o + spec.window_frames] for o in offsets])
    raw, _ = forward_batch(params, windows)
    vector = normalize_outputs(raw).mean(axis=0)
    return DVector(
        vector=vector,
        speaker_id=features.source_id.speaker_id,
        utterance_id=features.source_id.utterance_id,
        duration_seconds=(
            features_duration(features) if duration_seconds is None else duration_seconds
        ),
    )
