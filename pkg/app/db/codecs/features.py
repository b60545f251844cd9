"""FMX1 feature matrix files.

Layout: magic "FMX1", u32 rows, u32 columns, rows × columns float32, all little-endian.
"""

from pathlib import Path

import numpy as np

from app.db.codecs.binary import U32, BinaryReader, atomic_write, read_payload
from app.db.exceptions import FormatError
from app.services.exceptions import BaseExceptionError
from app.services.frontend.schema import FeatureMatrix, SourceId

MAGIC = b"FMX1"


def encode_features(features: FeatureMatrix) -> bytes:
    """Serialise a feature matrix (values rounded to float32)."""
    rows, columns = features.data.shape
    return (
        MAGIC
        + U32.pack(rows)
        + U32.pack(columns)
        + np.ascontiguousarray(features.data, dtype="<f4").tobytes()
    )


def decode_features(reader: BinaryReader, source_id: SourceId = SourceId()) -> FeatureMatrix:
    """Parse an FMX1 payload."""
    reader.expect_magic(MAGIC)
    rows = reader.u32()
    columns = reader.u32()
    data = reader.array("<f4", rows * columns).reshape(rows, columns)
    reader.expect_end()
    try:
        return FeatureMatrix(data, source_id)
    except BaseExceptionError as error:
        msg = f"{reader.source}: {error.message}"
        raise FormatError(msg) from error


def write_features(path: Path, features: FeatureMatrix) -> None:
    """Atomically write an FMX1 file."""
    atomic_write(path, encode_features(features))


def read_features(path: Path, source_id: SourceId = SourceId()) -> FeatureMatrix:
    """Read an FMX1 file.

    Raises:
        FormatError: On a bad magic, truncation, trailing bytes or invalid content.
    """
    return decode_features(read_payload(path), source_id)
