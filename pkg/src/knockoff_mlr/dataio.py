"""CSV matrices, JSONL result records, trace archives, result schema."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from importlib import resources

import numpy as np

from .errors import DataError
from .model_core import GibbsTrace

__all__ = [
    "read_matrix_csv",
    "write_matrix_csv",
    "records_to_dicts",
    "write_results_jsonl",
    "read_results_jsonl",
    "load_results_schema",
    "validate_records",
    "save_trace_npz",
    "load_trace_npz",
]


def _row_is_numeric(row: list[str]) -> bool:
    for cell in row:
        try:
            float(cell)
        except ValueError:
            return False
    return True


def read_matrix_csv(path: str, header: bool | None = None) -> np.ndarray:
    """Read a numeric CSV as a float64 matrix.

    ``header=None`` sniffs: a single non-numeric first row is treated as a
    header.  ``True`` always skips the first row, ``False`` never does.
    Parse failures report the offending 0-based row and column.
    """
    with open(path, newline="") as fh:
        raw = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not raw:
        raise DataError(f"{path}: no data rows")
    if header is None:
        start = 0 if _row_is_numeric(raw[0]) else 1
    else:
        start = 1 if header else 0
    if start == len(raw):
        raise DataError(f"{path}: header only, no data rows")
    width = len(raw[start])
    out = np.empty((len(raw) - start, width))
    for i, row in enumerate(raw[start:], start=start):
        if len(row) != width:
            raise DataError(f"{path}: expected {width} columns, got {len(row)}", row=i)
        for j, cell in enumerate(row):
            try:
                out[i - start, j] = float(cell)
            except ValueError:
                raise DataError(f"{path}: not a number: {cell.strip()!r}", row=i, col=j) from None
    return out


def write_matrix_csv(path: str, arr: np.ndarray, header: list[str] | None = None) -> None:
    """Write a vector or matrix as CSV with %.17g cells (round-trip exact)."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DataError("only 1-d or 2-d arrays are written")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            if len(header) != arr.shape[1]:
                raise DataError("header width mismatch")
            writer.writerow(header)
        for row in arr:
            writer.writerow([f"{v:.17g}" for v in row])


# ---------------------------------------------------------------------------
# Result records


def records_to_dicts(records) -> list[dict]:
    """RepRecord sequence to plain schema-shaped dicts.

    Absent timings and in-memory-only fields (normalized count) are dropped
    so every emitted dict validates against the published schema.
    """
    out = []
    for rec in records:
        d = asdict(rec) if not isinstance(rec, dict) else dict(rec)
        if d.get("runtime_ms") is None:
            d.pop("runtime_ms", None)
        d.pop("normalized", None)
        out.append(d)
    return out


def write_results_jsonl(path: str, records) -> None:
    """One compact JSON object per line, keys sorted.

    With timings disabled the byte stream is a pure function of the record
    values, so identical runs produce identical files.
    """
    dicts = records_to_dicts(records)
    with open(path, "w") as fh:
        for d in dicts:
            fh.write(json.dumps(d, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_results_jsonl(path: str) -> list[dict]:
    out = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: bad JSON on line {i + 1}: {exc}") from None
    return out


def load_results_schema() -> dict:
    text = resources.files("knockoff_mlr").joinpath("schema/results-v1.json").read_text()
    return json.loads(text)


def validate_records(dicts: list[dict]) -> None:
    """Validate result dicts against the bundled schema (needs jsonschema)."""
    import jsonschema

    schema = load_results_schema()
    for i, d in enumerate(dicts):
        try:
            jsonschema.validate(d, schema)
        except jsonschema.ValidationError as exc:
            raise DataError(f"record {i} fails schema: {exc.message}") from None


# ---------------------------------------------------------------------------
# Trace archives


def save_trace_npz(path: str, trace: GibbsTrace) -> None:
    np.savez_compressed(
        path,
        eta=trace.eta,
        sign_indicators=trace.sign_indicators,
        sigma2=trace.sigma2,
        tau2=trace.tau2,
        p0=trace.p0,
        burn_in=np.int64(trace.burn_in),
        chain_ids=trace.chain_ids,
    )


def load_trace_npz(path: str) -> GibbsTrace:
    with np.load(path) as data:
        return GibbsTrace(
            eta=data["eta"],
            sign_indicators=data["sign_indicators"],
            sigma2=data["sigma2"],
            tau2=data["tau2"],
            p0=data["p0"],
            burn_in=int(data["burn_in"]),
            chain_ids=data["chain_ids"],
        )
