"""Plot-data emission: gnuplot-friendly tables plus a JSON sidecar.

No plotting dependency; each emitted dataset is a whitespace-separated .dat
file whose sidecar records axes, labels and which columns are error bars.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence


def emit_plotdata(
    path_prefix: str | Path,
    columns: Sequence[str],
    rows: Sequence[Sequence],
    x_label: str,
    y_label: str,
    title: str = "",
    error_columns: dict[str, str] | None = None,
) -> list[Path]:
    """Write `<prefix>.dat` and `<prefix>.json`; returns both paths."""
    if not rows:
        raise ValueError("no rows to emit")
    if any(len(r) != len(columns) for r in rows):
        raise ValueError("row width does not match column count")
    prefix = Path(path_prefix)
    dat = prefix.with_suffix(".dat")
    sidecar = prefix.with_suffix(".json")
    lines = ["# " + " ".join(columns)]
    for row in rows:
        lines.append(" ".join(_format_cell(v) for v in row))
    dat.write_text("\n".join(lines) + "\n")
    meta = {
        "columns": list(columns),
        "x_label": x_label,
        "y_label": y_label,
        "title": title,
        "error_columns": error_columns or {},
        "data_file": dat.name,
    }
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return [dat, sidecar]


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)
