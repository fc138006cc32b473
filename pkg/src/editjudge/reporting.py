"""Markdown and CSV table emission.

Every table is written twice: a markdown view for humans and a CSV for
downstream analysis. Each file embeds the full effective run config as a
provenance header so tables are self-describing, and writes are atomic
(temp file, then rename). Nothing time-dependent goes into the output,
so identical configs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

Cell = str | int | float | None


@dataclass
class Table:
    name: str  # file stem, e.g. "summary"
    title: str
    columns: list[str]
    rows: list[list[Cell]] = field(default_factory=list)


def format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def provenance_line(config: Mapping[str, object]) -> str:
    return json.dumps(dict(sorted(config.items())), ensure_ascii=False, sort_keys=True)


def to_markdown(tables: Sequence[Table], config: Mapping[str, object]) -> str:
    out = io.StringIO()
    out.write("# editjudge report\n\n")
    out.write("```config\n")
    out.write(provenance_line(config))
    out.write("\n```\n")
    for table in tables:
        out.write(f"\n## {table.title}\n\n")
        if not table.rows:
            out.write("(empty)\n")
            continue
        out.write("| " + " | ".join(table.columns) + " |\n")
        out.write("|" + "|".join(" --- " for _ in table.columns) + "|\n")
        for row in table.rows:
            out.write("| " + " | ".join(format_cell(c) for c in row) + " |\n")
    return out.getvalue()


def to_csv(table: Table, config: Mapping[str, object]) -> str:
    out = io.StringIO()
    out.write(f"# config: {provenance_line(config)}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_cell(c) for c in row])
    return out.getvalue()


def write_atomic(path: Path, content: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(content, encoding="utf-8")
    os.replace(tmp, path)


def write_report(
    out_dir: str | Path,
    tables: Sequence[Table],
    config: Mapping[str, object],
    markdown_name: str = "report.md",
) -> list[Path]:
    """Write one markdown file with all tables plus one CSV per table."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    md_path = out_dir / markdown_name
    write_atomic(md_path, to_markdown(tables, config))
    written.append(md_path)
    for table in tables:
        csv_path = out_dir / f"{table.name}.csv"
        write_atomic(csv_path, to_csv(table, config))
        written.append(csv_path)
    return written
