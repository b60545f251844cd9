"""Waveform to log-mel feature extraction.

Pipeline: RMS volume normalisation, frame-energy VAD, Hann-windowed STFT,
HTK mel filterbank (0 Hz to Nyquist, unnormalised triangles) and a floored
natural logarithm. Every function is pure.
"""

from functools import lru_cache

import librosa
import numpy as np
from loguru import logger
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import NDArray
from scipy.signal import get_window

from app.services.exceptions import (
    NoSpeechError,
    SampleRateMismatchError,
    SilentInputError,
    TooShortError,
)
from app.services.frontend.schema import (
    LOG_FLOOR,
    MIN_PARTIAL_FRAMES,
    TARGET_RMS,
    FeatureMatrix,
    FrameSpec,
    PartialUtterance,
    SourceId,
    VadConfig,
    Waveform,
)

Interval = tuple[int, int]


def normalize_volume(waveform: Waveform, target_rms: float = TARGET_RMS) -> Waveform:
    """Rescale a waveform so that its RMS equals `target_rms`.

    Samples pushed beyond full scale by the gain are clipped to [-1, 1].

    Raises:
        SilentInputError: If the waveform is empty or all zeros.
    """
    if len(waveform) == 0:
        msg = "Cannot normalise an empty waveform."
        raise SilentInputError(msg)
    rms = float(np.sqrt(np.mean(np.square(waveform.samples))))
    if rms == 0.0:
        msg = "Cannot normalise digital silence."
        raise SilentInputError(msg)
    scaled = np.clip(waveform.samples * (target_rms / rms), -1.0, 1.0)
    return Waveform(scaled, waveform.sample_rate)


def detect_voice_intervals(waveform: Waveform, cfg: VadConfig | None = None) -> list[Interval]:
    """Find voiced regions as sorted, non-overlapping `[start, end)` sample intervals.

    The signal is cut into consecutive windows of `cfg.window_length`. A window is
    speech when it has energy and its level is within `cfg.prune_threshold_db` of
    the `cfg.reference_percentile` level of all windows that have energy. Speech
    runs separated by less than `cfg.max_silence_length` are merged.
    """
    cfg = cfg or VadConfig()
    n_samples = len(waveform)
    if n_samples == 0:
        return []

    window = max(1, round(cfg.window_length * waveform.sample_rate))
    n_windows = -(-n_samples // window)
    padded = np.zeros(n_windows * window)
    padded[:n_samples] = np.square(waveform.samples)
    counts = np.full(n_windows, window, dtype=np.float64)
    counts[-1] = n_samples - (n_windows - 1) * window
    energy = padded.reshape(n_windows, window).sum(axis=1) / counts

    voiced = energy > 0.0
    if not voiced.any():
        return []
    levels = np.full(n_windows, -np.inf)
    levels[voiced] = 10.0 * np.log10(energy[voiced])
    reference = float(np.percentile(levels[voiced], cfg.reference_percentile))
    speech = voiced & (levels >= reference - cfg.prune_threshold_db)

    edges = np.diff(np.concatenate(([0], speech.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1) * window
    ends = np.minimum(np.flatnonzero(edges == -1) * window, n_samples)

    max_gap = round(cfg.max_silence_length * waveform.sample_rate)
    intervals: list[Interval] = []
    for start, end in zip(starts.tolist(), ends.tolist(), strict=True):
        if intervals and start - intervals[-1][1] < max_gap:
            intervals[-1] = (intervals[-1][0], end)
        else:
            intervals.append((start, end))
    return intervals


def frame_count(n_samples: int, spec: FrameSpec) -> int:
    """Number of whole frames in `n_samples` (0 when shorter than one frame)."""
    if n_samples < spec.frame_samples:
        return 0
    return (n_samples - spec.frame_samples) // spec.step_samples + 1


@lru_cache(maxsize=16)
def mel_filterbank(sample_rate: int, fft_size: int, n_mels: int) -> NDArray[np.float64]:
    """HTK-scale triangular filters of shape (n_mels, fft_size // 2 + 1), peak 1."""
    return librosa.filters.mel(
        sr=sample_rate,
        n_fft=fft_size,
        n_mels=n_mels,
        fmin=0.0,
        fmax=sample_rate / 2.0,
        htk=True,
        norm=None,
        dtype=np.float64,
    )


@lru_cache(maxsize=16)
def _hann(frame_samples: int) -> NDArray[np.float64]:
    return np.asarray(get_window("hann", frame_samples), dtype=np.float64)


def _check_rate(waveform: Waveform, spec: FrameSpec) -> None:
    if waveform.sample_rate != spec.sample_rate:
        msg = f"Expected {spec.sample_rate} Hz audio, got {waveform.sample_rate} Hz."
        raise SampleRateMismatchError(msg)


def extract_log_mel(
    waveform: Waveform,
    interval: Interval,
    spec: FrameSpec | None = None,
    source_id: SourceId = SourceId(),
) -> FeatureMatrix:
    """Log-mel energies of `waveform[start:end]`, one row per frame.

    Raises:
        TooShortError: If the interval is shorter than one frame.
        SampleRateMismatchError: If the waveform is not at `spec.sample_rate`.
    """
    spec = spec or FrameSpec()
    _check_rate(waveform, spec)
    start, end = interval
    if not 0 <= start <= end <= len(waveform):
        msg = f"Interval {interval} lies outside a waveform of {len(waveform)} samples."
        raise ValueError(msg)
    segment = waveform.samples[start:end]
    if frame_count(segment.shape[0], spec) == 0:
        msg = f"Interval of {segment.shape[0]} samples is shorter than one frame."
        raise TooShortError(msg)

    frames = sliding_window_view(segment, spec.frame_samples)[:: spec.step_samples]
    spectrum = np.fft.rfft(frames * _hann(spec.frame_samples), n=spec.fft_size, axis=1)
    power = np.square(spectrum.real) + np.square(spectrum.imag)
    mel = power @ mel_filterbank(spec.sample_rate, spec.fft_size, spec.n_mels).T
    return FeatureMatrix(np.log(mel + LOG_FLOOR), source_id)


def _long_intervals(intervals: list[Interval], spec: FrameSpec) -> list[Interval]:
    return [(s, e) for s, e in intervals if frame_count(e - s, spec) > MIN_PARTIAL_FRAMES]


def preprocess_training_utterance(
    waveform: Waveform,
    vad: VadConfig | None = None,
    spec: FrameSpec | None = None,
    speaker_id: str = "",
    utterance_id: str = "",
) -> list[PartialUtterance]:
    """Split one recording into partial utterances longer than 180 frames.

    Digital silence yields no partial utterance. The segment index of each
    partial is the position of its interval among all detected intervals.
    """
    spec = spec or FrameSpec()
    _check_rate(waveform, spec)
    try:
        normalized = normalize_volume(waveform)
    except SilentInputError:
        logger.warning(f"Utterance {speaker_id}/{utterance_id} is silent, skipping.")
        return []

    intervals = detect_voice_intervals(normalized, vad)
    partials = []
    for segment, interval in enumerate(intervals):
        if frame_count(interval[1] - interval[0], spec) <= MIN_PARTIAL_FRAMES:
            logger.debug(f"Dropping short interval {interval} of {speaker_id}/{utterance_id}.")
            continue
        source = SourceId(speaker_id, utterance_id, segment)
        partials.append(PartialUtterance(extract_log_mel(normalized, interval, spec, source)))
    return partials


def preprocess_eval_utterance(
    waveform: Waveform,
    vad: VadConfig | None = None,
    spec: FrameSpec | None = None,
    speaker_id: str = "",
    utterance_id: str = "",
) -> FeatureMatrix:
    """Features of the concatenation of all voice intervals longer than 180 frames.

    Raises:
        SilentInputError: If the recording is digital silence.
        NoSpeechError: If no interval is long enough.
    """
    spec = spec or FrameSpec()
    _check_rate(waveform, spec)
    normalized = normalize_volume(waveform)
    surviving = _long_intervals(detect_voice_intervals(normalized, vad), spec)
    if not surviving:
        msg = f"No voice interval longer than {MIN_PARTIAL_FRAMES} frames in {utterance_id!r}."
        raise NoSpeechError(msg)

    joined = Waveform(
        np.concatenate([normalized.samples[s:e] for s, e in surviving]),
        normalized.sample_rate,
    )
    source = SourceId(speaker_id, utterance_id, 0)
    return extract_log_mel(joined, (0, len(joined)), spec, source)
