"""Evaluation report: per-image TSV rows followed by a YAML summary block."""

import math
from pathlib import Path

import yaml

from mimo_deblur.core.entities import EvalReport
from mimo_deblur.core.errors import InputError

COLUMNS = ("id", "psnr", "ssim", "inference_ms", "error")
SUMMARY_MARKER = "# summary"


def _number(value: float) -> str:
    if math.isinf(value):
        return "inf"
    if math.isnan(value):
        return "nan"
    return repr(value)


def _yaml_number(value: float) -> float | str:
    return _number(value) if not math.isfinite(value) else value


def write_eval_report(report: EvalReport, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(COLUMNS)]
    for row in report.rows:
        error = (row.error or "").replace("\t", " ").replace("\n", " ")
        lines.append(
            "\t".join(
                [row.record_id, _number(row.psnr), _number(row.ssim), _number(row.inference_ms), error]
            )
        )
    summary = {
        "variant": report.variant,
        "config_sha256": report.config_hash,
        "ensemble": report.ensemble,
        "images": len(report.rows),
        "failed": len(report.failed),
        "mean_psnr": _yaml_number(report.mean_psnr),
        "mean_ssim": _yaml_number(report.mean_ssim),
        "mean_ms": _yaml_number(report.mean_ms),
        "infinite_psnr": report.infinite_psnr_count,
    }
    text = "\n".join(lines) + "\n" + SUMMARY_MARKER + "\n"
    text += yaml.safe_dump(summary, sort_keys=False, default_flow_style=False)
    path.write_text(text, encoding="utf-8")


def read_eval_summary(path: Path) -> dict:
    """Parse the YAML block that follows the per-image rows."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"Report not found: {path}")
    text = path.read_text(encoding="utf-8")
    marker = "\n" + SUMMARY_MARKER + "\n"
    if marker not in text:
        raise InputError(f"{path} has no summary block")
    return yaml.safe_load(text.split(marker, 1)[1]) or {}
