"""Structured evaluation reports with input digests and a command echo."""

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

from crlscore.formatting import format_block, jsonable

SCHEMA = "crlscore.report/1"

ReportFormat = Literal["text", "json"]


def file_digest(path: str | Path) -> str:
    """Content hash in the form "sha256:<hexdigest>"."""
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return f"sha256:{digest}"


@dataclass
class Report:
    """Results of one command, traceable to its inputs.

    Sections keep insertion order; every value must be JSON-ready after
    `formatting.jsonable`.
    """

    version: str
    command: list[str]
    inputs: dict[str, str] = field(default_factory=dict)
    sections: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def add_input(self, path: str | Path | None) -> None:
        if path is not None:
            self.inputs[str(path)] = file_digest(path)

    def add_section(self, name: str, data: Any) -> None:
        self.sections[name] = jsonable(data)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "schema": SCHEMA,
            "tool": {"name": "crlscore", "version": self.version},
            "command": list(self.command),
            "inputs": dict(sorted(self.inputs.items())),
            "sections": self.sections,
        }
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


def render_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def render_text(report: Report) -> str:
    lines = [
        f"crlscore {report.version}",
        f"command: {' '.join(report.command)}",
    ]
    if report.inputs:
        lines.append("inputs:")
        for path, digest in sorted(report.inputs.items()):
            lines.append(f"  {path}: {digest}")
    for name, data in report.sections.items():
        lines.append(f"[{name}]")
        lines.extend(format_block(data))
    if report.warnings:
        lines.append("warnings:")
        lines.extend(f"  - {w}" for w in report.warnings)
    return "\n".join(lines) + "\n"


def emit_report(report: Report, fmt: ReportFormat = "text") -> bytes:
    text = render_json(report) if fmt == "json" else render_text(report)
    return text.encode("utf-8")


def write_report(report: Report, fmt: ReportFormat, out: str | Path | None) -> None:
    """Write to `out`, or to standard output when it is None or "-"."""
    data = emit_report(report, fmt)
    if out is None or str(out) == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    Path(out).write_bytes(data)
