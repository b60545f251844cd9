"""GE2E checkpoint files.

Layout (little-endian): magic "GE2E", u32 version, the network configuration as
five u32 (input_dim, hidden_dim, num_layers, embedding_dim, dual_bias), u32
tensor count, then per tensor a u16-length UTF-8 name, u32 rank, rank × u32
dims and the f64 values in row-major order. The loss scale is stored as the
rank-0 tensors "loss.w" and "loss.b".
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from app.db.codecs.binary import U32, BinaryReader, atomic_write, pack_text, read_payload
from app.db.exceptions import FormatError
from app.services.exceptions import ShapeError
from app.services.loss.schema import LossScale
from app.services.network.schema import Array, NetConfig, NetworkParams

MAGIC = b"GE2E"
VERSION = 1
SCALE_W = "loss.w"
SCALE_B = "loss.b"


@dataclass(frozen=True, slots=True)
class Checkpoint:
    """Network parameters with the loss scale they were trained with."""

    params: NetworkParams
    scale: LossScale

    @property
    def config(self) -> NetConfig:
        """Network configuration."""
        return self.params.config


def _pack_tensor(name: str, tensor: Array) -> bytes:
    array = np.ascontiguousarray(tensor, dtype="<f8")
    dims = b"".join(U32.pack(dim) for dim in array.shape)
    return pack_text(name) + U32.pack(array.ndim) + dims + array.tobytes()


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    """Serialise a checkpoint."""
    cfg = checkpoint.config
    tensors = checkpoint.params.named_tensors()
    tensors[SCALE_W] = np.asarray(checkpoint.scale.w)
    tensors[SCALE_B] = np.asarray(checkpoint.scale.b)
    header = [
        MAGIC,
        U32.pack(VERSION),
        U32.pack(cfg.input_dim),
        U32.pack(cfg.hidden_dim),
        U32.pack(cfg.num_layers),
        U32.pack(cfg.embedding_dim),
        U32.pack(int(cfg.dual_bias)),
        U32.pack(len(tensors)),
    ]
    return b"".join(header) + b"".join(_pack_tensor(n, t) for n, t in tensors.items())


def decode_checkpoint(reader: BinaryReader) -> Checkpoint:
    """Parse a checkpoint payload."""
    reader.expect_magic(MAGIC)
    version = reader.u32()
    if version != VERSION:
        msg = f"{reader.source}: unsupported checkpoint version {version}."
        raise FormatError(msg)
    try:
        config = NetConfig(
            input_dim=reader.u32(),
            hidden_dim=reader.u32(),
            num_layers=reader.u32(),
            embedding_dim=reader.u32(),
            dual_bias=bool(reader.u32()),
        )
    except ValidationError as error:
        msg = f"{reader.source}: invalid network configuration."
        raise FormatError(msg) from error

    tensors: dict[str, Array] = {}
    for _ in range(reader.u32()):
        name = reader.text()
        shape = tuple(reader.u32() for _ in range(reader.u32()))
        tensors[name] = reader.array("<f8", int(np.prod(shape, dtype=np.int64))).reshape(shape)
    reader.expect_end()

    if SCALE_W not in tensors or SCALE_B not in tensors:
        msg = f"{reader.source}: loss scale tensors are missing."
        raise FormatError(msg)
    scale = LossScale(w=float(tensors.pop(SCALE_W)), b=float(tensors.pop(SCALE_B)))
    try:
        params = NetworkParams.from_named_tensors(config, tensors)
    except ShapeError as error:
        msg = f"{reader.source}: {error.message}"
        raise FormatError(msg) from error
    return Checkpoint(params, scale)


def write_checkpoint(path: Path, checkpoint: Checkpoint) -> None:
    """Atomically write a checkpoint file."""
    atomic_write(path, encode_checkpoint(checkpoint))


def read_checkpoint(path: Path) -> Checkpoint:
    """Read a checkpoint file.

    Raises:
        FormatError: On a bad magic or version, truncation, or tensors not matching the header.
    """
    return decode_checkpoint(read_payload(path))
