"""Mono 16-bit PCM WAV input and output."""

import io
from pathlib import Path

import numpy as np
import soundfile as sf

from app.db.codecs.binary import atomic_write
from app.db.exceptions import FormatError
from app.services.exceptions import SampleRateMismatchError, ShapeError
from app.services.frontend.schema import Waveform


def decode_wav(payload: bytes | Path, sample_rate: int | None = None, source: str = "") -> Waveform:
    """Decode WAV data into a float waveform in [-1, 1).

    Raises:
        FormatError: If the data is not a readable audio file.
        ShapeError: If the audio has more than one channel.
        SampleRateMismatchError: If `sample_rate` is given and differs from the file's.
    """
    source = source or (str(payload) if isinstance(payload, Path) else "<bytes>")
    handle = payload if isinstance(payload, Path) else io.BytesIO(payload)
    try:
        samples, rate = sf.read(handle, dtype="float64", always_2d=True)
    except (sf.SoundFileError, RuntimeError) as error:
        msg = f"{source}: not a readable audio file ({error})."
        raise FormatError(msg) from error
    if samples.shape[1] != 1:
        msg = f"{source}: expected mono audio, got {samples.shape[1]} channels."
        raise ShapeError(msg)
    if sample_rate is not None and rate != sample_rate:
        msg = f"{source}: sample rate {rate} Hz, expected {sample_rate} Hz."
        raise SampleRateMismatchError(msg)
    return Waveform(samples[:, 0], int(rate))


def read_wav(path: Path, sample_rate: int | None = None) -> Waveform:
    """Read a mono WAV file."""
    return decode_wav(path, sample_rate)


def encode_wav(waveform: Waveform) -> bytes:
    """PCM-16 WAV bytes of a waveform (clipped to [-1, 1])."""
    buffer = io.BytesIO()
    sf.write(
        buffer,
        np.clip(waveform.samples, -1.0, 1.0),
        waveform.sample_rate,
        subtype="PCM_16",
        format="WAV",
    )
    return buffer.getvalue()


def write_wav(path: Path, waveform: Waveform) -> None:
    """Atomically write a PCM-16 WAV file."""
    atomic_write(path, encode_wav(waveform))
