"""Little-endian primitives shared by the binary file formats.

Writers build the whole payload in memory and publish it with an atomic
rename, so readers never observe a partially written file.
"""

import os
import struct
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from app.db.exceptions import FormatError

U16 = struct.Struct("<H")
U32 = struct.Struct("<I")
F64 = struct.Struct("<d")


def atomic_write(path: Path, payload: bytes) -> None:
    """Write `payload` to a sibling temporary file, then rename it over `path`."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(f".{path.name}.tmp")
    with tmp_path.open("wb") as file:
        file.write(payload)
        file.flush()
        os.fsync(file.fileno())
    tmp_path.replace(path)


def pack_text(value: str) -> bytes:
    """u16 byte length followed by UTF-8 bytes."""
    encoded = value.encode("utf-8")
    if len(encoded) > 0xFFFF:  # noqa: PLR2004
        msg = f"Identifier of {len(encoded)} bytes does not fit a u16 length."
        raise ValueError(msg)
    return U16.pack(len(encoded)) + encoded


class BinaryReader:
    """Sequential reader raising FormatError on truncation."""

    def __init__(self, payload: bytes, source: str = "<bytes>") -> None:
        self._payload = memoryview(payload)
        self._offset = 0
        self.source = source

    def take(self, size: int) -> bytes:
        """Next `size` bytes."""
        end = self._offset + size
        if size < 0 or end > len(self._payload):
            msg = f"{self.source}: truncated at byte {self._offset} (needed {size} more)."
            raise FormatError(msg)
        chunk = bytes(self._payload[self._offset : end])
        self._offset = end
        return chunk

    def expect_magic(self, magic: bytes) -> None:
        """Consume and check the file magic."""
        found = self.take(len(magic))
        if found != magic:
            msg = f"{self.source}: bad magic {found!r}, expected {magic!r}."
            raise FormatError(msg)

    def u16(self) -> int:
        """Unsigned 16-bit integer."""
        return int(U16.unpack(self.take(U16.size))[0])

    def u32(self) -> int:
        """Unsigned 32-bit integer."""
        return int(U32.unpack(self.take(U32.size))[0])

    def f64(self) -> float:
        """64-bit float."""
        return float(F64.unpack(self.take(F64.size))[0])

    def text(self) -> str:
        """u16-length UTF-8 string."""
        raw = self.take(self.u16())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as error:
            msg = f"{self.source}: identifier is not valid UTF-8."
            raise FormatError(msg) from error

    def array(self, dtype: str, count: int) -> NDArray[np.float64]:
        """`count` little-endian values of `dtype` ("<f4" or "<f8") as float64."""
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(count * itemsize), dtype=dtype).astype(np.float64)

    def expect_end(self) -> None:
        """Reject trailing bytes."""
        if self._offset != len(self._payload):
            msg = f"{self.source}: {len(self._payload) - self._offset} unexpected trailing bytes."
            raise FormatError(msg)


def read_payload(path: Path) -> BinaryReader:
    """Reader over the full contents of `path`."""
    return BinaryReader(path.read_bytes(), source=str(path))
