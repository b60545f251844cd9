"""Deterministic synthetic speakers for desk-scale experiments.

A speaker is a set of resonances on a mel-spaced frequency grid, each with
its own slow amplitude modulation. An utterance is a few voiced stretches of
that signature, with random phases and a small amplitude jitter, separated
by digital silence so that voice activity detection has work to do.
"""

from pathlib import Path

import librosa
import numpy as np
from loguru import logger
from numpy.typing import NDArray

from app.db.codecs.audio import write_wav
from app.db.manifest import write_manifest
from app.db.models.dvector import DVector, DVectorStore
from app.db.models.manifest import Manifest, ManifestEntry, Split
from app.services.frontend.schema import Waveform
from app.services.synthesis.schema import (
    MAX_EDGE_SECONDS,
    MAX_GAP_SECONDS,
    MIN_VOICED_SECONDS,
    DVectorSynthSpec,
    SpeakerSignature,
    SynthSpec,
)

FADE_SECONDS = 0.01
PEAK = 0.5
AMPLITUDE_JITTER = 0.1
MIN_EDGE_SECONDS = 0.1
MIN_GAP_SECONDS = 0.25


def speaker_id(index: int) -> str:
    """Id of the index-th synthetic speaker."""
    return f"spk-{index:04d}"


def split_of(index: int, spec: SynthSpec) -> Split:
    """Speakers are assigned to train, then dev, then test in index order."""
    if index < spec.n_speakers:
        return Split.TRAIN
    if index < spec.n_speakers + spec.n_dev_speakers:
        return Split.DEV
    return Split.TEST


def speaker_signatures(spec: SynthSpec) -> list[SpeakerSignature]:
    """One signature per speaker, no two with the same set of frequencies."""
    rng = np.random.default_rng([spec.seed, 0])
    f_low, f_high = spec.frequency_range
    grid = librosa.mel_frequencies(n_mels=spec.frequency_grid, fmin=f_low, fmax=f_high, htk=True)
    used: set[tuple[int, ...]] = set()
    signatures = []
    while len(signatures) < spec.total_speakers:
        count = int(rng.integers(spec.partials_range[0], spec.partials_range[1] + 1))
        picks = tuple(sorted(rng.choice(grid.size, size=count, replace=False).tolist()))
        if picks in used:
            continue
        used.add(picks)
        signatures.append(
            SpeakerSignature(
                frequencies=grid[list(picks)],
                modulation_rates=rng.uniform(*spec.modulation_range, size=count),
                amplitudes=rng.uniform(0.5, 1.0, size=count),
            )
        )
    return signatures


def _voiced(
    signature: SpeakerSignature, n_samples: int, spec: SynthSpec, rng: np.random.Generator
) -> NDArray[np.float64]:
    t = np.arange(n_samples) / spec.sample_rate
    count = signature.frequencies.size
    phases = rng.uniform(0, 2 * np.pi, size=count)
    mod_phases = rng.uniform(0, 2 * np.pi, size=count)
    jitter = rng.uniform(1 - AMPLITUDE_JITTER, 1 + AMPLITUDE_JITTER, size=count)

    envelope = 1 + spec.modulation_depth * np.sin(
        2 * np.pi * signature.modulation_rates[:, None] * t + mod_phases[:, None]
    )
    tones = np.sin(2 * np.pi * signature.frequencies[:, None] * t + phases[:, None])
    segment = ((signature.amplitudes * jitter)[:, None] * envelope * tones).sum(axis=0)
    if spec.noise_level > 0:
        segment += spec.noise_level * rng.standard_normal(n_samples)

    fade = min(int(FADE_SECONDS * spec.sample_rate), n_samples // 2)
    if fade:
        ramp = np.linspace(0.0, 1.0, fade, endpoint=False)
        segment[:fade] *= ramp
        segment[-fade:] *= ramp[::-1]
    return segment


def synthesize_utterance(
    signature: SpeakerSignature, spec: SynthSpec, rng: np.random.Generator
) -> Waveform:
    """One utterance: silence, voiced stretches of at least 2 s separated by gaps, silence."""
    rate = spec.sample_rate
    duration = rng.uniform(*spec.duration_range)
    lead, tail = rng.uniform(MIN_EDGE_SECONDS, MAX_EDGE_SECONDS, size=2)
    available = duration - lead - tail
    stretches = max(1, int(available // (MIN_VOICED_SECONDS + MAX_GAP_SECONDS)))
    gaps = rng.uniform(MIN_GAP_SECONDS, MAX_GAP_SECONDS, size=stretches - 1)
    voiced_each = (available - gaps.sum()) / stretches

    parts = [np.zeros(round(lead * rate))]
    for index in range(stretches):
        parts.append(_voiced(signature, round(voiced_each * rate), spec, rng))
        if index < stretches - 1:
            parts.append(np.zeros(round(gaps[index] * rate)))
    parts.append(np.zeros(round(tail * rate)))

    samples = np.concatenate(parts)
    samples *= PEAK / np.max(np.abs(samples))
    return Waveform(samples, rate)


def generate_synthetic_corpus(spec: SynthSpec, out_dir: Path) -> Manifest:
    """Write every utterance as 16-bit WAV under `out_dir` with a `manifest.tsv` next to them.

    The output depends on `spec` alone: each utterance has its own random
    stream derived from (seed, speaker, utterance).
    """
    signatures = speaker_signatures(spec)
    entries = []
    for index, signature in enumerate(signatures):
        speaker = speaker_id(index)
        for utterance in range(spec.utterances_per_speaker):
            rng = np.random.default_rng([spec.seed, 1, index, utterance])
            waveform = synthesize_utterance(signature, spec, rng)
            utterance_id = f"{speaker}-u{utterance:03d}"
            relative = Path(speaker) / f"{utterance_id}.wav"
            write_wav(out_dir / relative, waveform)
            entries.append(
                ManifestEntry(
                    speaker_id=speaker,
                    utterance_id=utterance_id,
                    path=relative,
                    duration_seconds=waveform.duration_seconds,
                    split=split_of(index, spec),
                )
            )
        logger.debug(f"Synthesised {spec.utterances_per_speaker} utterances of {speaker}.")

    manifest = Manifest(entries=entries, root=out_dir.resolve())
    write_manifest(out_dir / "manifest.tsv", manifest)
    logger.info(
        f"Synthetic corpus of {spec.total_speakers} speakers and {len(entries)} utterances"
        f" written to {out_dir}."
    )
    return manifest


def synthesize_dvector_store(spec: DVectorSynthSpec) -> DVectorStore:
    """D-vectors scattered around one random unit centre per speaker.

    Each d-vector adds isotropic noise of expected norm `spread` to its
    speaker's centre; utterances no longer than `short_boundary` get their
    noise multiplied by `short_noise_scale`.
    """
    rng = np.random.default_rng(spec.seed)
    centres = rng.standard_normal((spec.n_speakers, spec.dim))
    centres /= np.linalg.norm(centres, axis=1, keepdims=True)

    store = DVectorStore(dim=spec.dim)
    for index, centre in enumerate(centres):
        for utterance in range(spec.utterances_per_speaker):
            duration = float(rng.uniform(*spec.duration_range))
            scale = spec.short_noise_scale if duration <= spec.short_boundary else 1.0
            noise = rng.standard_normal(spec.dim) * spec.spread * scale / np.sqrt(spec.dim)
            store.add(
                DVector(
                    vector=centre + noise,
                    speaker_id=speaker_id(index),
                    utterance_id=f"{speaker_id(index)}-u{utterance:03d}",
                    duration_seconds=duration,
                )
            )
    return store
