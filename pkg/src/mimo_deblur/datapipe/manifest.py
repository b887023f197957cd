"""Manifest parsing and validation.

A manifest is a text file with one record per line, tab-separated::

    blurry.png<TAB>sharp.png
    SEQ<TAB>frames_dir<TAB>7

Blank lines and lines starting with ``#`` are ignored. Paths are relative to
the manifest's directory.
"""

from pathlib import Path

import numpy as np

from mimo_deblur.core.entities import (
    DatasetManifest,
    FrameSequence,
    PairRecord,
    SequenceRecord,
    Split,
)
from mimo_deblur.core.errors import InputError, ValidationError
from mimo_deblur.core.interfaces import ImageCodec

SEQUENCE_TAG = "SEQ"
FRAME_SUFFIXES = (".png",)


def load_manifest(path: Path, split: Split | str = Split.TRAIN) -> DatasetManifest:
    """Parse ``path`` into pair and sequence records; malformed lines raise ValidationError."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"Manifest not found: {path}")
    root = path.parent
    manifest = DatasetManifest(path=path, split=Split(split))
    problems: list[str] = []

    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if fields[0] == SEQUENCE_TAG:
            if len(fields) != 3:
                problems.append(f"line {number}: expected SEQ<TAB>dir<TAB>M, got {len(fields)} fields")
                continue
            try:
                frames_per_blur = int(fields[2])
            except ValueError:
                problems.append(f"line {number}: frame count {fields[2]!r} is not an integer")
                continue
            manifest.sequences.append(
                SequenceRecord(root / fields[1], frames_per_blur, line=number)
            )
        elif len(fields) == 2:
            manifest.pairs.append(PairRecord(root / fields[0], root / fields[1], line=number))
        else:
            problems.append(f"line {number}: expected blurry<TAB>sharp, got {len(fields)} fields")

    if problems:
        raise ValidationError(f"Manifest {path} has {len(problems)} malformed line(s)", problems)
    return manifest


def frame_paths(sequence_dir: Path) -> list[Path]:
    """Frame files of a sequence directory in name order."""
    return sorted(
        p for p in Path(sequence_dir).iterdir() if p.suffix.lower() in FRAME_SUFFIXES
    )


def load_sequence(record: SequenceRecord, codec: ImageCodec) -> FrameSequence:
    if not record.sequence_dir.is_dir():
        raise InputError(f"Sequence directory not found: {record.sequence_dir}")
    return FrameSequence([codec.decode(p) for p in frame_paths(record.sequence_dir)])


def load_pair(record: PairRecord, codec: ImageCodec) -> tuple[np.ndarray, np.ndarray]:
    blurry = codec.decode(record.blurry_path)
    sharp = codec.decode(record.sharp_path)
    if blurry.shape != sharp.shape:
        raise InputError(
            f"{record.blurry_path.name} is {blurry.shape[2:]} but "
            f"{record.sharp_path.name} is {sharp.shape[2:]}"
        )
    return blurry, sharp


def _check_pair(record: PairRecord, codec: ImageCodec) -> str | None:
    for path in (record.blurry_path, record.sharp_path):
        if not path.exists():
            return f"line {record.line} ({record.record_id}): missing file {path}"
    try:
        load_pair(record, codec)
    except InputError as e:
        return f"line {record.line} ({record.record_id}): {e}"
    except Exception as e:
        return f"line {record.line} ({record.record_id}): cannot decode: {e}"
    return None


def _check_sequence(record: SequenceRecord, codec: ImageCodec) -> str | None:
    label = f"line {record.line} ({record.record_id})"
    if not record.sequence_dir.is_dir():
        return f"{label}: missing directory {record.sequence_dir}"
    if record.frames_per_blur < 1 or record.frames_per_blur % 2 == 0:
        return f"{label}: frames per blur must be a positive odd number, got {record.frames_per_blur}"
    try:
        sequence = load_sequence(record, codec)
    except InputError as e:
        return f"{label}: {e}"
    except Exception as e:
        return f"{label}: cannot decode: {e}"
    if len(sequence) < record.frames_per_blur:
        return f"{label}: {len(sequence)} frames, need at least {record.frames_per_blur}"
    return None


def validate_manifest(manifest: DatasetManifest, codec: ImageCodec) -> None:
    """Decode every record; raise ValidationError listing each one that fails."""
    problems = [_check_pair(r, codec) for r in manifest.pairs]
    problems += [_check_sequence(r, codec) for r in manifest.sequences]
    problems = [p for p in problems if p]
    if problems:
        raise ValidationError(
            f"{len(problems)} of {len(manifest)} record(s) in {manifest.path} failed validation",
            problems,
        )
