"""CSV ingestion for fit data: columns x, y and optionally sigma."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def parse_csv(text: str) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Read (x, y[, sigma]).  A header row is detected and skipped, ``#`` lines ignored.

    With a header, columns are picked by name (x, y, sigma/stderr/err) when
    present, otherwise by position.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    if not rows:
        raise ValueError("no data rows")
    cols = (0, 1, 2) if len(rows[0]) > 2 else (0, 1, None)
    if not all(_is_number(t) for t in rows[0]):
        header = [h.strip().lower() for h in rows[0]]
        rows = rows[1:]
        pick = {}
        for i, name in enumerate(header):
            if name in ("x", "x_value", "t", "time", "p", "power") and "x" not in pick:
                pick["x"] = i
            elif name in ("y", "signal", "value") and "y" not in pick:
                pick["y"] = i
            elif name in ("sigma", "stderr", "err", "error", "stderr_over_members"):
                pick["s"] = i
        cols = (pick.get("x", 0), pick.get("y", 1), pick.get("s", 2 if len(header) > 2 else None))
    if not rows:
        raise ValueError("no data rows")
    try:
        data = [[float(r[c].strip()) for c in cols if c is not None] for r in rows]
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed data row: {exc}") from None
    arr = np.array(data, dtype=float)
    x, y = arr[:, 0], arr[:, 1]
    sigma = arr[:, 2] if arr.shape[1] > 2 else None
    if sigma is not None and np.all(sigma == 0):
        sigma = None
    return x, y, sigma


def load_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    return parse_csv(Path(path).read_text())
