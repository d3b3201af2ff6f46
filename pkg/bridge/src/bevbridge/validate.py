"""Schema and integrity validation of a conditioning set."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .data import EXPECTED_SIZE, image_size, load_rgb, read_index


@dataclass
class ValidationReport:
    total: int = 0
    valid: int = 0
    problems: list = field(default_factory=list)  # [(id, message)]

    @property
    def ok(self) -> bool:
        return self.total > 0 and not self.problems

    def offending_ids(self) -> list:
        return [sid for sid, _ in self.problems]

    def summary(self) -> str:
        lines = [f"{self.valid}/{self.total} samples valid"]
        for sid, message in self.problems:
            lines.append(f"  {sid}: {message}")
        if self.total == 0:
            lines.append("  conditioning set is empty")
        return "\n".join(lines)


def validate_conditioning_set(root) -> ValidationReport:
    """Check the index schema, image readability, and 512x512 consistency.

    Purely read-only; an empty set is reported as invalid.
    """
    root = Path(root)
    report = ValidationReport()
    records = read_index(root)  # index-level schema errors raise
    report.total = len(records)
    for record in records:
        problem = _check_record(root, record)
        if problem:
            report.problems.append((record.id, problem))
        else:
            report.valid += 1
    return report


def _check_record(root: Path, record) -> str | None:
    for role, rel in (("condition", record.condition), ("target", record.target)):
        path = root / rel
        if not path.is_file():
            return f"{role} file missing: {rel}"
        try:
            width, height = image_size(path)
            load_rgb(path)  # decodes fully; catches truncated files
        except OSError as exc:
            return f"{role} unreadable: {exc}"
        if (width, height) != (EXPECTED_SIZE, EXPECTED_SIZE):
            return (
                f"{role} is {width}x{height}, "
                f"expected {EXPECTED_SIZE}x{EXPECTED_SIZE}"
            )
    if not record.caption:
        return "empty caption"
    return None
