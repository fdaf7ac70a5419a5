"""Matrix CSV reading/writing: comma separated, no header, full precision.

Values are written with 17 significant digits so a write/read round trip
reproduces every float64 bit pattern. Vectors are single-column files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class MatrixFileError(ValueError):
    """Raised when a matrix file cannot be parsed into a dense matrix."""


def write_matrix(path, matrix) -> None:
    arr = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    lines = [",".join(f"{v:.17g}" for v in row) for row in arr]
    Path(path).write_text("\n".join(lines) + "\n")


def write_vector(path, vector) -> None:
    arr = np.asarray(vector, dtype=np.float64).reshape(-1, 1)
    write_matrix(path, arr)


def read_matrix(path) -> np.ndarray:
    """Parse a CSV matrix file; errors name the file and the offending row."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MatrixFileError(f"{path}: cannot read file ({exc})") from exc
    rows: list[list[float]] = []
    width: int | None = None
    for index, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            values = [float(field) for field in fields]
        except ValueError as exc:
            raise MatrixFileError(f"{path}: row {index}: {exc}") from exc
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise MatrixFileError(
                f"{path}: row {index} has {len(values)} entries, expected {width}"
            )
        rows.append(values)
    if not rows:
        raise MatrixFileError(f"{path}: empty matrix file")
    arr = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise MatrixFileError(f"{path}: entries must be finite")
    return arr


def read_vector(path) -> np.ndarray:
    """Read a single-column CSV file as a 1-D vector."""
    arr = read_matrix(path)
    if arr.shape[1] != 1:
        raise MatrixFileError(
            f"{path}: expected a single-column vector file, got {arr.shape[1]} columns"
        )
    return arr[:, 0]
