"""Tab-separated corpus manifests.

The first line is the header ``speaker_id, utterance_id, path, duration_seconds, split``
(tab-separated); every following non-blank line is one utterance. Relative paths
resolve against the manifest's directory.
"""

import csv
import io
from collections import defaultdict
from pathlib import Path

from loguru import logger
from pydantic import BaseModel, ValidationError

from app.db.codecs.binary import atomic_write
from app.db.exceptions import (
    DuplicateEntryError,
    EmptyManifestError,
    ManifestError,
    MissingFileError,
    OpenSetViolationError,
)
from app.db.models.manifest import Manifest, ManifestEntry, Split

HEADER = ("speaker_id", "utterance_id", "path", "duration_seconds", "split")


def parse_manifest(text: str, root: Path = Path(), source: str = "<manifest>") -> Manifest:
    """Parse manifest text without touching the file system.

    Raises:
        ManifestError: If the header is wrong or a row is malformed.
        EmptyManifestError: If there is no entry.
        DuplicateEntryError: If a (speaker_id, utterance_id) pair repeats.
    """
    rows = [row for row in csv.reader(io.StringIO(text), delimiter="\t") if any(row)]
    if not rows:
        msg = f"{source}: manifest is empty."
        raise EmptyManifestError(msg)
    if tuple(rows[0]) != HEADER:
        msg = f"{source}: expected header {'/'.join(HEADER)}, got {'/'.join(rows[0])}."
        raise ManifestError(msg)

    entries: list[ManifestEntry] = []
    seen: set[tuple[str, str]] = set()
    for line_number, row in enumerate(rows[1:], start=2):
        if len(row) != len(HEADER):
            msg = f"{source}:{line_number}: expected {len(HEADER)} fields, got {len(row)}."
            raise ManifestError(msg)
        try:
            entry = ManifestEntry.model_validate(dict(zip(HEADER, row, strict=True)))
        except ValidationError as error:
            msg = f"{source}:{line_number}: {error.errors()[0]['msg']}."
            raise ManifestError(msg) from error
        if entry.key in seen:
            msg = f"{source}:{line_number}: duplicate entry {entry.key}."
            raise DuplicateEntryError(msg)
        seen.add(entry.key)
        entries.append(entry)

    if not entries:
        msg = f"{source}: manifest has a header but no entry."
        raise EmptyManifestError(msg)
    return Manifest(entries=entries, root=root)


def check_open_set(manifest: Manifest) -> None:
    """Raise OpenSetViolationError if a training speaker is also a dev or test speaker."""
    train = set(manifest.speakers(Split.TRAIN))
    for split in (Split.DEV, Split.TEST):
        overlap = sorted(train.intersection(manifest.speakers(split)))
        if overlap:
            msg = f"Speakers {overlap} appear in both train and {split.value}."
            raise OpenSetViolationError(msg)


def check_files(manifest: Manifest) -> None:
    """Raise MissingFileError for the first entry whose file does not exist."""
    for entry in manifest.entries:
        path = manifest.resolve(entry)
        if not path.is_file():
            msg = f"File {path} of {entry.speaker_id}/{entry.utterance_id} does not exist."
            raise MissingFileError(msg)


def ingest(manifest_path: Path, *, check_paths: bool = True) -> Manifest:
    """Load and validate a manifest file.

    Raises:
        ManifestError: Any of its subclasses, see :func:`parse_manifest`,
            :func:`check_files` and :func:`check_open_set`.
    """
    if not manifest_path.is_file():
        msg = f"Manifest {manifest_path} does not exist."
        raise MissingFileError(msg)
    manifest = parse_manifest(
        manifest_path.read_text(encoding="utf-8"),
        root=manifest_path.resolve().parent,
        source=str(manifest_path),
    )
    if check_paths:
        check_files(manifest)
    check_open_set(manifest)
    logger.info(
        f"Loaded {len(manifest)} utterances of {len(manifest.speakers())} speakers"
        f" from {manifest_path}."
    )
    return manifest


def format_manifest(manifest: Manifest) -> str:
    """Manifest text with paths written as stored on the entries."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter="\t", lineterminator="\n")
    writer.writerow(HEADER)
    for entry in manifest.entries:
        writer.writerow(
            (
                entry.speaker_id,
                entry.utterance_id,
                entry.path.as_posix(),
                repr(entry.duration_seconds),
                entry.split.value,
            )
        )
    return buffer.getvalue()


def write_manifest(path: Path, manifest: Manifest) -> None:
    """Atomically write a manifest file."""
    atomic_write(path, format_manifest(manifest).encode("utf-8"))


def cap_speaker_duration(manifest: Manifest, max_seconds: float) -> Manifest:
    """Keep each speaker's utterances in order until the next one would exceed `max_seconds`."""
    used: defaultdict[str, float] = defaultdict(float)
    kept = []
    for entry in manifest.entries:
        if used[entry.speaker_id] + entry.duration_seconds > max_seconds:
            continue
        used[entry.speaker_id] += entry.duration_seconds
        kept.append(entry)
    dropped = len(manifest) - len(kept)
    if dropped:
        logger.info(f"Speech cap of {max_seconds:.0f} s dropped {dropped} utterances.")
    return Manifest(entries=kept, root=manifest.root)


class DurationStatistics(BaseModel):
    """Utterance counts of one split on both sides of a duration boundary."""

    split: Split
    speakers: int
    utterances: int
    short: int
    long: int
    total_seconds: float


def duration_statistics(manifest: Manifest, boundary: float = 4.0) -> list[DurationStatistics]:
    """Per split: speakers, utterances ≤ boundary (short), > boundary (long), total seconds."""
    stats = []
    for split in Split:
        entries = manifest.split(split).entries
        if not entries:
            continue
        short = sum(1 for e in entries if e.duration_seconds <= boundary)
        stats.append(
            DurationStatistics(
                split=split,
                speakers=len({e.speaker_id for e in entries}),
                utterances=len(entries),
                short=short,
                long=len(entries) - short,
                total_seconds=sum(e.duration_seconds for e in entries),
            )
        )
    return stats
