"""Flat result records shared by the GenRF test and the comparators."""

from __future__ import annotations

import json
import math

RECORD_FIELDS = ("method", "statistic", "p_value", "n", "p", "q", "n_eigen_dropped", "method_note")


def to_record(result, n_variants: int) -> dict:
    """Flatten a GENRF, SKAT or LINEAR result into one record."""
    return {
        "method": result.method,
        "statistic": float(result.statistic),
        "p_value": float(result.p_value),
        "n": int(result.n),
        "p": int(n_variants),
        "q": int(result.q),
        "n_eigen_dropped": int(result.n_eigen_dropped),
        "method_note": result.method_note,
    }


def _tsv_cell(key, value):
    if key == "p_value":
        return f"{value:.6g}"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value).replace("\t", " ").replace("\n", " ")


def format_records(records, fmt: str = "tsv") -> str:
    """Render records as a TSV table or as JSON lines.

    TSV p-values carry six significant digits; JSON keeps full precision.
    """
    if fmt == "jsonl":
        return "".join(json.dumps(r, sort_keys=False) + "\n" for r in records)
    if fmt != "tsv":
        raise ValueError(f"unknown record format {fmt!r}")
    lines = ["\t".join(RECORD_FIELDS)]
    for r in records:
        lines.append("\t".join(_tsv_cell(k, r[k]) for k in RECORD_FIELDS))
    return "\n".join(lines) + "\n"


def write_records(records, path, fmt: str | None = None) -> None:
    """Write records to ``path``; ``.jsonl``/``.json`` suffixes select JSON lines."""
    path = str(path)
    if fmt is None:
        fmt = "jsonl" if path.endswith((".jsonl", ".json")) else "tsv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_records(records, fmt))
