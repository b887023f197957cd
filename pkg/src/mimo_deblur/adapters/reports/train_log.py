"""Append-only tab-separated training log."""

from pathlib import Path

from mimo_deblur.core.entities import TrainLogRecord
from mimo_deblur.core.errors import InputError

SEPARATOR = "\t"


def _format(value: float | int) -> str:
    return repr(value) if isinstance(value, float) else str(value)


class TrainLogWriter:
    """Writes one line per optimizer step under a header row naming the columns.

    Opening an existing log appends after its last line, so a resumed run
    continues the same file.
    """

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if not self.path.exists() or self.path.stat().st_size == 0:
            self.path.write_text(SEPARATOR.join(TrainLogRecord.COLUMNS) + "\n", encoding="utf-8")

    def append(self, record: TrainLogRecord) -> None:
        values = [getattr(record, column) for column in TrainLogRecord.COLUMNS]
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(SEPARATOR.join(_format(v) for v in values) + "\n")

    def truncate_after(self, step: int) -> None:
        """Drop rows past ``step``; used when resuming from an earlier checkpoint."""
        records = [r for r in read_train_log(self.path) if r.step <= step]
        self.path.write_text(SEPARATOR.join(TrainLogRecord.COLUMNS) + "\n", encoding="utf-8")
        for record in records:
            self.append(record)


def read_train_log(path: Path) -> list[TrainLogRecord]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"Training log not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split(SEPARATOR)) != TrainLogRecord.COLUMNS:
        raise InputError(f"{path} does not start with the training log header")
    records = []
    for line in lines[1:]:
        if not line:
            continue
        step, epoch, lr, l_cont, l_msfr, l_total, wall_time = line.split(SEPARATOR)
        records.append(
            TrainLogRecord(
                step=int(step),
                epoch=int(epoch),
                lr=float(lr),
                l_cont=float(l_cont),
                l_msfr=float(l_msfr),
                l_total=float(l_total),
                wall_time=float(wall_time),
            )
        )
    return records
