import numpy as np
import pytest
from pydantic import ValidationError

from app.services.exceptions import (
    InvalidInputError,
    NoSpeechError,
    SampleRateMismatchError,
    SilentInputError,
    TooShortError,
)
from app.services.frontend.dsp import (
    detect_voice_intervals,
    extract_log_mel,
    frame_count,
    mel_filterbank,
    normalize_volume,
    preprocess_eval_utterance,
    preprocess_training_utterance,
)
from app.services.frontend.schema import LOG_FLOOR, FrameSpec, VadConfig, Waveform
from tests.signals import silence, tone, waveform

SPEC = FrameSpec()
VAD_WINDOW = round(VadConfig().window_length * SPEC.sample_rate)


def rms(samples: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(samples))))


def test_normalize_sine_to_target_rms() -> None:
    """A sine keeps its shape and reaches an RMS of 0.1."""
    source = waveform(tone(1.0, amplitude=0.1))
    normalized = normalize_volume(source)
    assert rms(normalized.samples) == pytest.approx(0.1, abs=1e-12)
    ratio = normalized.samples[source.samples != 0] / source.samples[source.samples != 0]
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-9)


def test_normalize_is_identity_at_target() -> None:
    """A waveform already at the target level is unchanged."""
    samples = tone(1.0)
    source = waveform(samples * (0.1 / rms(samples)))
    np.testing.assert_allclose(normalize_volume(source).samples, source.samples, atol=1e-9)


def test_normalize_gain_invariance() -> None:
    """Waveforms differing only by gain normalise to the same signal."""
    rng = np.random.default_rng(0)
    for _ in range(100):
        samples = rng.uniform(-1.0, 1.0, 800)
        gain = float(rng.uniform(1e-3, 1.0))
        np.testing.assert_allclose(
            normalize_volume(waveform(samples)).samples,
            normalize_volume(waveform(samples * gain)).samples,
            atol=1e-9,
        )


def test_normalize_clips_to_full_scale() -> None:
    """A lone spike needs a gain above one; the result stays within [-1, 1]."""
    samples = np.zeros(1600)
    samples[800] = 1.0
    normalized = normalize_volume(waveform(samples))
    assert np.max(np.abs(normalized.samples)) == 1.0


def test_waveform_rejects_out_of_range_samples() -> None:
    """Amplitudes beyond full scale are invalid input."""
    with pytest.raises(InvalidInputError):
        Waveform(np.array([0.0, 1.5, -0.2]))
    assert len(Waveform(np.array([1.0, -1.0]))) == 2


def test_normalize_rejects_silence() -> None:
    """Digital silence cannot be normalised."""
    with pytest.raises(SilentInputError):
        normalize_volume(waveform(silence(0.5)))


def test_vad_on_silence() -> None:
    """No voice in digital silence."""
    assert detect_voice_intervals(waveform(silence(1.0))) == []


def test_vad_two_intervals() -> None:
    """A 0.5 s pause separates two intervals, boundaries within one VAD window."""
    intervals = detect_voice_intervals(waveform(tone(1.0), silence(0.5), tone(1.0)))
    assert len(intervals) == 2
    (first_start, first_end), (second_start, second_end) = intervals
    assert first_start == 0
    assert abs(first_end - 16_000) < VAD_WINDOW
    assert abs(second_start - 24_000) < VAD_WINDOW
    assert second_end == 40_000


def test_vad_bridges_short_gap() -> None:
    """A 4 ms pause does not split the interval."""
    intervals = detect_voice_intervals(waveform(tone(1.0), silence(0.004), tone(1.0)))
    assert intervals == [(0, 32_064)]


def test_vad_prunes_quiet_windows() -> None:
    """Windows 40 dB below the speech level are not speech."""
    intervals = detect_voice_intervals(
        waveform(tone(1.0), tone(1.0, amplitude=0.005), tone(1.0))
    )
    assert len(intervals) == 2


def test_frame_count_formula() -> None:
    """Whole 25 ms frames every 10 ms."""
    assert frame_count(399, SPEC) == 0
    assert frame_count(400, SPEC) == 1
    assert frame_count(32_000, SPEC) == 198


def test_extract_two_seconds() -> None:
    """2 s at 16 kHz gives 198 frames of 40 bands."""
    features = extract_log_mel(waveform(tone(2.0)), (0, 32_000), SPEC)
    assert features.data.shape == (198, 40)


def test_extract_single_frame() -> None:
    """An interval of exactly one frame width gives one row."""
    features = extract_log_mel(waveform(tone(1.0)), (1000, 1400), SPEC)
    assert features.num_frames == 1


def test_extract_too_short() -> None:
    """Less than one frame cannot be analysed."""
    with pytest.raises(TooShortError):
        extract_log_mel(waveform(tone(1.0)), (0, 399), SPEC)


def test_extract_rejects_other_sample_rate() -> None:
    """Only audio at the configured rate is accepted."""
    with pytest.raises(SampleRateMismatchError):
        extract_log_mel(Waveform(tone(1.0, sample_rate=8000), 8000), (0, 8000), SPEC)


def naive_log_mel(samples: np.ndarray, spec: FrameSpec) -> np.ndarray:
    """Frame loop, explicit DFT and triangles built from the HTK mel formula."""
    n_bins = spec.fft_size // 2 + 1
    top = 2595.0 * np.log10(1.0 + (spec.sample_rate / 2) / 700.0)
    points = 700.0 * (10 ** (np.linspace(0.0, top, spec.n_mels + 2) / 2595.0) - 1.0)
    bin_freqs = np.arange(n_bins) * spec.sample_rate / spec.fft_size
    filters = np.zeros((spec.n_mels, n_bins))
    for m in range(spec.n_mels):
        low, centre, high = points[m], points[m + 1], points[m + 2]
        for k, f in enumerate(bin_freqs):
            filters[m, k] = max(0.0, min((f - low) / (centre - low), (high - f) / (high - centre)))

    width = spec.frame_samples
    window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(width) / width)
    dft = np.exp(-2j * np.pi * np.outer(np.arange(n_bins), np.arange(width)) / spec.fft_size)
    rows = []
    for start in range(0, len(samples) - width + 1, spec.step_samples):
        spectrum = dft @ (samples[start : start + width] * window)
        rows.append(np.log(filters @ np.abs(spectrum) ** 2 + LOG_FLOOR))
    return np.array(rows)


def test_filterbank_matches_htk_triangles() -> None:
    """Unnormalised triangles with unit peaks between 0 Hz and Nyquist."""
    bank = mel_filterbank(SPEC.sample_rate, SPEC.fft_size, SPEC.n_mels)
    assert bank.shape == (40, 257)
    assert bank.max() <= 1.0 + 1e-12
    assert np.all(bank >= 0)


def test_extract_matches_naive_oracle() -> None:
    """A tone at a filter centre dominates that filter; values match a naive implementation."""
    top = 2595.0 * np.log10(1.0 + 8000.0 / 700.0)
    centres = 700.0 * (10 ** (np.linspace(0.0, top, SPEC.n_mels + 2) / 2595.0) - 1.0)
    band = 10
    samples = tone(0.2, frequency=float(centres[band + 1]))

    features = extract_log_mel(waveform(samples), (0, len(samples)), SPEC)
    assert np.all(features.data.argmax(axis=1) == band)
    np.testing.assert_allclose(features.data, naive_log_mel(samples, SPEC), rtol=1e-6, atol=1e-9)


def test_training_utterance_on_silence() -> None:
    """Silence-only recordings give no partial utterance."""
    assert preprocess_training_utterance(waveform(silence(3.0)), spec=SPEC) == []


def test_training_utterance_five_seconds() -> None:
    """One 5 s voiced interval gives one partial utterance of 498 frames."""
    partials = preprocess_training_utterance(
        waveform(tone(5.0)), spec=SPEC, speaker_id="s1", utterance_id="u1"
    )
    assert len(partials) == 1
    assert partials[0].features.num_frames == 498
    assert partials[0].min_frames_satisfied
    assert partials[0].features.source_id == ("s1", "u1", 0)


def test_training_utterance_drops_short_interval() -> None:
    """Of a 1 s and a 3 s interval only the 3 s one survives."""
    partials = preprocess_training_utterance(
        waveform(tone(1.0), silence(0.5), tone(3.0)), spec=SPEC, utterance_id="u2"
    )
    assert len(partials) == 1
    assert partials[0].features.source_id.segment == 1
    assert 290 <= partials[0].features.num_frames <= 300


def test_training_utterance_is_gain_invariant() -> None:
    """Features do not depend on the recording level."""
    quiet = preprocess_training_utterance(waveform(tone(3.0, amplitude=0.01)), spec=SPEC)
    loud = preprocess_training_utterance(waveform(tone(3.0, amplitude=0.9)), spec=SPEC)
    np.testing.assert_allclose(quiet[0].features.data, loud[0].features.data, atol=1e-6)


def test_eval_utterance_single_interval() -> None:
    """With one interval the features equal extract_log_mel of the normalised signal."""
    source = waveform(tone(3.0))
    expected = extract_log_mel(normalize_volume(source), (0, len(source)), SPEC)
    features = preprocess_eval_utterance(source, spec=SPEC)
    np.testing.assert_array_equal(features.data, expected.data)


def test_eval_utterance_concatenates_intervals() -> None:
    """Row count follows from the combined length of the surviving intervals."""
    source = waveform(tone(2.5), silence(0.5), tone(2.5))
    intervals = detect_voice_intervals(normalize_volume(source))
    assert len(intervals) == 2
    combined = sum(end - start for start, end in intervals)
    features = preprocess_eval_utterance(source, spec=SPEC)
    assert features.num_frames == frame_count(combined, SPEC)


def test_eval_utterance_without_long_interval() -> None:
    """Only short intervals: no speech to embed."""
    with pytest.raises(NoSpeechError):
        preprocess_eval_utterance(waveform(tone(1.0), silence(0.5), tone(1.0)), spec=SPEC)


def test_eval_utterance_on_silence() -> None:
    """Silence is reported as silent input."""
    with pytest.raises(SilentInputError):
        preprocess_eval_utterance(waveform(silence(3.0)), spec=SPEC)


def test_frame_spec_validation() -> None:
    """The FFT must be a power of two at least one frame long."""
    with pytest.raises(ValidationError):
        FrameSpec(fft_size=384)
    with pytest.raises(ValidationError):
        FrameSpec(fft_size=256)
    with pytest.raises(ValidationError):
        VadConfig(window_length=0.005)


def test_frame_count_sweep() -> None:
    """Row counts follow floor((n - 400) / 160) + 1 for random intervals."""
    source = waveform(tone(2.0))
    rng = np.random.default_rng(12)
    for _ in range(100):
        start = int(rng.integers(0, 8000))
        length = int(rng.integers(400, len(source) - start + 1))
        features = extract_log_mel(source, (start, start + length), SPEC)
        assert features.num_frames == (length - 400) // 160 + 1
        assert features.num_frames == frame_count(length, SPEC)


def test_vad_on_its_own_output() -> None:
    """The concatenated intervals are detected again as speech, up to one window per interval."""
    source = normalize_volume(waveform(tone(1.0), silence(0.5), tone(1.5), silence(0.3), tone(0.7)))
    intervals = detect_voice_intervals(source)
    voiced = np.concatenate([source.samples[start:end] for start, end in intervals])
    again = detect_voice_intervals(waveform(voiced))
    covered = sum(end - start for start, end in again)
    assert abs(covered - len(voiced)) <= VAD_WINDOW * len(intervals)
