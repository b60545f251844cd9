"""DVST d-vector store files.

Layout (little-endian): magic "DVST", u32 version, u32 dim, u32 count, then per
record a u16-length UTF-8 speaker id, a u16-length UTF-8 utterance id, the f64
duration in seconds and dim f64 values.
"""

from pathlib import Path

import numpy as np
from loguru import logger

from app.db.codecs.binary import F64, U32, BinaryReader, atomic_write, pack_text, read_payload
from app.db.exceptions import FormatError
from app.db.models.dvector import DVector, DVectorStore
from app.services.exceptions import BaseExceptionError

MAGIC = b"DVST"
VERSION = 1


def encode_store(store: DVectorStore) -> bytes:
    """Serialise a store."""
    parts = [MAGIC, U32.pack(VERSION), U32.pack(store.dim), U32.pack(len(store))]
    for record in store:
        parts.append(pack_text(record.speaker_id))
        parts.append(pack_text(record.utterance_id))
        parts.append(F64.pack(record.duration_seconds))
        parts.append(np.ascontiguousarray(record.vector, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_store(reader: BinaryReader) -> DVectorStore:
    """Parse a DVST payload."""
    reader.expect_magic(MAGIC)
    version = reader.u32()
    if version != VERSION:
        msg = f"{reader.source}: unsupported store version {version}."
        raise FormatError(msg)
    dim = reader.u32()
    count = reader.u32()
    try:
        store = DVectorStore(dim=dim)
        for _ in range(count):
            speaker_id = reader.text()
            utterance_id = reader.text()
            duration = reader.f64()
            store.add(DVector(reader.array("<f8", dim), speaker_id, utterance_id, duration))
    except BaseExceptionError as error:
        msg = f"{reader.source}: {error.message}"
        raise FormatError(msg) from error
    reader.expect_end()
    return store


def write_store(path: Path, store: DVectorStore) -> None:
    """Atomically write a DVST file."""
    atomic_write(path, encode_store(store))
    logger.info(f"Wrote {len(store)} d-vectors of dimension {store.dim} to {path}.")


def read_store(path: Path) -> DVectorStore:
    """Read a DVST file.

    Raises:
        FormatError: On a bad magic or version, truncation, or invalid records.
    """
    return decode_store(read_payload(path))
