# latent_composite/dataio.py
"""
Patient CSV ingestion and result writers.

Input schema (header required, exact names): id,treat,y10,y20,y1,y2,y3,y4.
Empty cells are missing values; rows with any missing value are excluded.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from latent_composite.core.records import Dataset

logger = logging.getLogger(__name__)

COLUMNS = ("id", "treat", "y10", "y20", "y1", "y2", "y3", "y4")
_NUMERIC = COLUMNS[1:]


class DataFormatError(ValueError):
    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[str] = None,
        value: Optional[str] = None,
    ):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.column = column
        self.value = value


def file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def parse_frame(frame: pd.DataFrame, k3: int = 5) -> Dataset:
    """Validate a string-typed frame (one row per patient) into a Dataset."""
    missing_cols = [c for c in COLUMNS if c not in frame.columns]
    if missing_cols:
        raise DataFormatError(f"missing column {missing_cols[0]!r}", line=1, column=missing_cols[0])
    extra = [c for c in frame.columns if c not in COLUMNS]
    if extra:
        raise DataFormatError(f"unexpected column {extra[0]!r}", line=1, column=extra[0])

    raw = frame[list(COLUMNS)].astype(str).apply(lambda s: s.str.strip())
    empty = raw == ""
    values = {}
    for col in _NUMERIC:
        num = pd.to_numeric(raw[col].where(~empty[col]), errors="coerce")
        bad = (~empty[col]) & ~np.isfinite(num.to_numpy(dtype=float))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataFormatError(
                f"non-numeric value {raw[col].iloc[row]!r} in column {col!r}",
                line=row + 2,
                column=col,
                value=raw[col].iloc[row],
            )
        values[col] = num

    checks = {
        "treat": lambda v: v.isin([0, 1]),
        "y3": lambda v: (v == np.round(v)) & (v >= 1) & (v <= k3),
        "y4": lambda v: v.isin([0, 1]),
    }
    for col, ok in checks.items():
        v = values[col]
        bad = v.notna() & ~ok(v)
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            allowed = f"an integer in 1..{k3}" if col == "y3" else "0 or 1"
            raise DataFormatError(
                f"column {col!r} must be {allowed}, got {raw[col].iloc[row]!r}",
                line=row + 2,
                column=col,
                value=raw[col].iloc[row],
            )

    complete = ~empty.any(axis=1)
    n_excluded = int((~complete).sum())
    if n_excluded:
        logger.info("excluded %d of %d rows with missing values", n_excluded, len(frame))
    if not complete.any():
        raise DataFormatError("no complete rows after excluding missing values")

    keep = complete.to_numpy()
    return Dataset.from_arrays(
        *(values[c].to_numpy()[keep] for c in _NUMERIC),
        k3=k3,
        ids=raw["id"].to_numpy()[keep].tolist(),
        n_excluded=n_excluded,
    )


def read_dataset(path: str | Path, k3: int = 5) -> Dataset:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise DataFormatError(f"no such file: {path}") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataFormatError(f"unreadable CSV: {e}") from None
    return parse_frame(frame, k3)


# ---------------------------
# Writers
# ---------------------------
def to_jsonable(obj: Any) -> Any:
    """JSON-safe copy: pydantic models dumped, numpy unwrapped, NaN/inf as null."""
    if isinstance(obj, BaseModel):
        return to_jsonable(obj.model_dump())
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path: str | Path, obj: Any) -> None:
    text = json.dumps(to_jsonable(obj), sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_table(path: str | Path, frame: pd.DataFrame, provenance: Mapping[str, Any]) -> None:
    """CSV with `# key: value` provenance lines ahead of the header."""
    head = "".join(f"# {k}: {v}\n" for k, v in provenance.items())
    body = frame.to_csv(index=False, float_format="%.6g", lineterminator="\n")
    Path(path).write_text(head + body, encoding="utf-8")
