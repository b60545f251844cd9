import io
import struct
from pathlib import Path

import numpy as np
import pytest
import soundfile as sf

from app.db.codecs.audio import decode_wav, encode_wav, read_wav, write_wav
from app.db.codecs.binary import BinaryReader
from app.db.codecs.checkpoints import (
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    read_checkpoint,
    write_checkpoint,
)
from app.db.codecs.dvectors import decode_store, encode_store, read_store, write_store
from app.db.codecs.features import (
    decode_features,
    encode_features,
    read_features,
    write_features,
)
from app.db.exceptions import FormatError
from app.db.models.dvector import DVector, DVectorStore
from app.services.exceptions import InvalidInputError, SampleRateMismatchError
from app.services.frontend.schema import FeatureMatrix
from app.services.loss.schema import LossScale
from app.services.network.lstm import init_params
from app.services.network.schema import NetConfig
from tests.signals import tone, waveform

# Store of one record: speaker "a", utterance "b", 1.5 s, vector (1, -2).
GOLDEN_DVST = bytes.fromhex(
    "44565354"  # DVST
    "01000000"  # version
    "02000000"  # dim
    "01000000"  # count
    "010061"
    "010062"
    "000000000000f83f"
    "000000000000f03f"
    "00000000000000c0"
)


def small_store() -> DVectorStore:
    rng = np.random.default_rng(0)
    store = DVectorStore(dim=3)
    for speaker in ("spk-1", "spk-2"):
        for index in range(2):
            store.add(DVector(rng.normal(size=3), speaker, f"{speaker}-{index}", 2.5 + index))
    return store


def test_features_keep_float32_values() -> None:
    """FMX1 stores float32, so values come back rounded to single precision."""
    data = np.random.default_rng(1).normal(size=(7, 40))
    decoded = decode_features(BinaryReader(encode_features(FeatureMatrix(data))))
    np.testing.assert_array_equal(decoded.data, data.astype(np.float32).astype(np.float64))


def test_features_header() -> None:
    """Magic, rows and columns precede the values."""
    payload = encode_features(FeatureMatrix(np.zeros((3, 2))))
    assert payload[:4] == b"FMX1"
    assert struct.unpack("<II", payload[4:12]) == (3, 2)
    assert len(payload) == 12 + 3 * 2 * 4


def test_features_file(tmp_path: Path) -> None:
    """Files are written whole, without a leftover temporary file."""
    path = tmp_path / "nested" / "u1.fmx"
    write_features(path, FeatureMatrix(np.ones((2, 4))))
    assert read_features(path).data.shape == (2, 4)
    assert [p.name for p in path.parent.iterdir()] == ["u1.fmx"]


@pytest.mark.parametrize(
    "payload",
    [
        b"FMX2" + struct.pack("<II", 1, 1) + b"\0" * 4,
        b"FMX1" + struct.pack("<II", 2, 2) + b"\0" * 12,
        b"FMX1" + struct.pack("<II", 1, 1) + b"\0" * 8,
        b"FMX1\x01\x00",
    ],
    ids=["magic", "truncated", "trailing", "header"],
)
def test_features_rejects_bad_payload(payload: bytes) -> None:
    """Bad magic, truncation and trailing bytes are format errors."""
    with pytest.raises(FormatError):
        decode_features(BinaryReader(payload))


def test_store_golden_bytes() -> None:
    """The encoder produces the documented layout byte for byte."""
    store = DVectorStore(dim=2)
    store.add(DVector(np.array([1.0, -2.0]), "a", "b", 1.5))
    assert encode_store(store) == GOLDEN_DVST
    decoded = decode_store(BinaryReader(GOLDEN_DVST))
    assert decoded.records == store.records


def test_store_file_round_trip(tmp_path: Path) -> None:
    """Records, order and durations survive a write and read."""
    store = small_store()
    path = tmp_path / "test.dvst"
    write_store(path, store)
    loaded = read_store(path)
    assert loaded.dim == 3
    assert loaded.records == store.records
    assert [p.name for p in tmp_path.iterdir()] == ["test.dvst"]


def test_store_unicode_ids() -> None:
    """Identifiers are UTF-8."""
    store = DVectorStore(dim=1)
    store.add(DVector(np.array([0.5]), "sprecher-ü", "äußerung-1", 3.0))
    assert decode_store(BinaryReader(encode_store(store))).records[0].speaker_id == "sprecher-ü"


def test_store_rejects_bad_payload() -> None:
    """Bad magic, unknown version, truncation and trailing bytes are refused."""
    with pytest.raises(FormatError):
        decode_store(BinaryReader(b"XVST" + GOLDEN_DVST[4:]))
    with pytest.raises(FormatError):
        decode_store(BinaryReader(GOLDEN_DVST[:4] + struct.pack("<I", 2) + GOLDEN_DVST[8:]))
    with pytest.raises(FormatError):
        decode_store(BinaryReader(GOLDEN_DVST[:-1]))
    with pytest.raises(FormatError):
        decode_store(BinaryReader(GOLDEN_DVST + b"\0"))


def test_store_rejects_duplicate_records() -> None:
    """A file listing the same utterance twice is malformed."""
    record = GOLDEN_DVST[16:]
    payload = GOLDEN_DVST[:12] + struct.pack("<I", 2) + record + record
    with pytest.raises(FormatError):
        decode_store(BinaryReader(payload))


def test_checkpoint_round_trip(tmp_path: Path) -> None:
    """Every tensor, the configuration and the loss scale are restored exactly."""
    cfg = NetConfig(input_dim=5, hidden_dim=4, num_layers=2, embedding_dim=3, dual_bias=False)
    params = init_params(cfg, seed=4)
    checkpoint = Checkpoint(params, LossScale(w=12.5, b=-6.25))
    path = tmp_path / "final.ge2e"
    write_checkpoint(path, checkpoint)
    loaded = read_checkpoint(path)

    assert loaded.config == cfg
    assert loaded.scale == checkpoint.scale
    expected = params.named_tensors()
    restored = loaded.params.named_tensors()
    assert restored.keys() == expected.keys()
    for name, tensor in expected.items():
        np.testing.assert_array_equal(restored[name], tensor)


def test_checkpoint_rejects_bad_payload(tiny_checkpoint: Checkpoint) -> None:
    """Bad magic, version and truncation are format errors."""
    payload = encode_checkpoint(tiny_checkpoint)
    assert payload[:4] == b"GE2E"
    with pytest.raises(FormatError):
        decode_checkpoint(BinaryReader(b"GE2F" + payload[4:]))
    with pytest.raises(FormatError):
        decode_checkpoint(BinaryReader(payload[:4] + struct.pack("<I", 9) + payload[8:]))
    with pytest.raises(FormatError):
        decode_checkpoint(BinaryReader(payload[:-3]))


def test_checkpoint_rejects_mismatched_configuration(tiny_checkpoint: Checkpoint) -> None:
    """A header announcing other dimensions than the tensors carry is refused."""
    payload = bytearray(encode_checkpoint(tiny_checkpoint))
    payload[12:16] = struct.pack("<I", 9)  # hidden_dim
    with pytest.raises(FormatError):
        decode_checkpoint(BinaryReader(bytes(payload)))


def test_wav_round_trip(tmp_path: Path) -> None:
    """PCM-16 keeps samples within one quantisation step."""
    source = waveform(tone(0.5, amplitude=0.3))
    path = tmp_path / "tone.wav"
    write_wav(path, source)
    loaded = read_wav(path, sample_rate=16_000)
    assert loaded.sample_rate == 16_000
    np.testing.assert_allclose(loaded.samples, source.samples, atol=1 / 32_768)


def test_wav_rejects_other_rate_and_garbage() -> None:
    """Audio at another rate or bytes that are not audio are refused."""
    payload = encode_wav(waveform(tone(0.1)))
    with pytest.raises(SampleRateMismatchError):
        decode_wav(payload, sample_rate=8000)
    with pytest.raises(FormatError):
        decode_wav(b"not a wav file at all")


def test_wav_rejects_float_samples_beyond_full_scale() -> None:
    """A float WAV holding amplitudes above 1 is invalid input."""
    buffer = io.BytesIO()
    sf.write(buffer, np.array([0.0, 1.5, -0.5]), 16_000, format="WAV", subtype="FLOAT")
    with pytest.raises(InvalidInputError):
        decode_wav(buffer.getvalue(), sample_rate=16_000)


def test_features_random_round_trips() -> None:
    """Single-precision matrices of any shape come back bit for bit."""
    rng = np.random.default_rng(21)
    for _ in range(100):
        shape = (int(rng.integers(1, 30)), int(rng.integers(1, 64)))
        data = (rng.normal(scale=10.0, size=shape)).astype(np.float32).astype(np.float64)
        decoded = decode_features(BinaryReader(encode_features(FeatureMatrix(data))))
        np.testing.assert_array_equal(decoded.data, data)


def test_store_random_round_trips() -> None:
    """Stores of any dimension and size keep records, order and values."""
    rng = np.random.default_rng(22)
    for _ in range(100):
        dim = int(rng.integers(1, 17))
        store = DVectorStore(dim=dim)
        for index in range(int(rng.integers(0, 7))):
            speaker = f"spk-{int(rng.integers(0, 3))}"
            store.add(
                DVector(rng.normal(size=dim), speaker, f"utt-{index}", float(rng.uniform(0.1, 20)))
            )
        decoded = decode_store(BinaryReader(encode_store(store)))
        assert decoded.dim == dim
        assert decoded.records == store.records


def test_checkpoint_random_round_trips() -> None:
    """Random configurations, parameters and loss scales are restored exactly."""
    rng = np.random.default_rng(23)
    for _ in range(100):
        cfg = NetConfig(
            input_dim=int(rng.integers(1, 9)),
            hidden_dim=int(rng.integers(1, 9)),
            num_layers=int(rng.integers(1, 4)),
            embedding_dim=int(rng.integers(1, 9)),
            dual_bias=bool(rng.integers(0, 2)),
        )
        checkpoint = Checkpoint(
            init_params(cfg, seed=int(rng.integers(0, 2**31))),
            LossScale(w=float(rng.uniform(1e-6, 50)), b=float(rng.normal(scale=10))),
        )
        loaded = decode_checkpoint(BinaryReader(encode_checkpoint(checkpoint)))
        assert loaded.config == cfg
        assert loaded.scale == checkpoint.scale
        for name, tensor in checkpoint.params.named_tensors().items():
            np.testing.assert_array_equal(loaded.params.named_tensors()[name], tensor)
