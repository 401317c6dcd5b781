"""Deterministic table writers (csv, json, dat) with a configuration header."""
from __future__ import annotations

import json
import math
from pathlib import Path

from . import __version__

FORMATS = ("csv", "json", "dat")


def fmt(x) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _json_value(x):
    if isinstance(x, float):
        return fmt(x) if not math.isfinite(x) else float(fmt(x))
    return x


def header_lines(config: dict) -> list[str]:
    lines = [f"shearwave {__version__}"]
    lines += [f"{k}={fmt(v) if isinstance(v, float) else v}" for k, v in sorted(config.items())]
    return lines


def render(columns, rows, config: dict, fmt_name: str = "csv", notes=()) -> str:
    """Serialize ``rows`` (sequences matching ``columns``) in one of FORMATS."""
    if fmt_name not in FORMATS:
        raise ValueError(f"unknown format {fmt_name!r}")
    head = header_lines(config) + [f"note: {n}" for n in notes]
    if fmt_name == "json":
        doc = {
            "header": {"version": __version__, "config": {k: _json_value(v) for k, v in sorted(config.items())}},
            "notes": list(notes),
            "columns": list(columns),
            "rows": [[_json_value(x) for x in row] for row in rows],
        }
        return json.dumps(doc, indent=1) + "\n"
    sep = "," if fmt_name == "csv" else " "
    out = [f"# {line}" for line in head]
    out.append(sep.join(columns) if fmt_name == "csv" else "# " + " ".join(columns))
    out += [sep.join(fmt(x) for x in row) for row in rows]
    return "\n".join(out) + "\n"


def write_table(path: Path, columns, rows, config: dict, fmt_name: str = "csv", notes=()) -> Path:
    path = Path(f"{path}.{fmt_name}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(columns, rows, config, fmt_name, notes), encoding="utf-8")
    return path
