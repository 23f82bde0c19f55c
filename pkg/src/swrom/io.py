"""On-disk formats: the SWRM binary matrix container and CSV tables.

SWRM layout (all little-endian)::

    b"SWRM"  u32 version  u64 rows  u64 cols  float64[rows * cols] column-major

Every writer goes through a temporary file in the destination directory and
renames it into place, so readers never see a half-written file.
"""

from __future__ import annotations

import csv
import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAGIC = b"SWRM"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
HEADER_SIZE = _HEADER.size


class FormatError(ValueError):
    pass


@contextmanager
def atomic_path(path):
    """Yield a temporary path next to ``path``; rename it over ``path`` on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix(path, M) -> None:
    M = np.asarray(M, dtype="<f8")
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise ValueError("only 1-d and 2-d arrays can be stored")
    with atomic_path(path) as tmp, open(tmp, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, M.shape[0], M.shape[1]))
        f.write(M.tobytes(order="F"))


def read_header(f) -> tuple[int, int]:
    raw = f.read(HEADER_SIZE)
    if len(raw) != HEADER_SIZE:
        raise FormatError("truncated header")
    magic, version, rows, cols = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    return rows, cols


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as f:
        rows, cols = read_header(f)
        payload = f.read()
    if len(payload) != 8 * rows * cols:
        raise FormatError(f"payload has {len(payload)} bytes, expected {8 * rows * cols}")
    data = np.frombuffer(payload, dtype="<f8")
    return data.reshape((rows, cols), order="F").astype(np.float64)


class ColumnWriter:
    """Stream columns of a ``rows x cols`` matrix to an SWRM file.

    The column count is patched into the header on :meth:`close`; the file
    only appears at ``path`` once closed cleanly.
    """

    def __init__(self, path, rows: int):
        self.path = Path(path)
        self.rows = int(rows)
        self.cols = 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, self._tmp = tempfile.mkstemp(prefix=f".{self.path.name}.", dir=self.path.parent)
        self._f = os.fdopen(fd, "wb")
        self._f.write(_HEADER.pack(MAGIC, VERSION, self.rows, 0))

    def append(self, col) -> None:
        col = np.asarray(col, dtype="<f8")
        if col.shape != (self.rows,):
            raise ValueError(f"column must have length {self.rows}")
        self._f.write(col.tobytes())
        self.cols += 1

    def close(self) -> None:
        if self._f.closed:
            return
        self._f.seek(0)
        self._f.write(_HEADER.pack(MAGIC, VERSION, self.rows, self.cols))
        self._f.close()
        os.replace(self._tmp, self.path)

    def abort(self) -> None:
        if not self._f.closed:
            self._f.close()
        if os.path.exists(self._tmp):
            os.unlink(self._tmp)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self.abort()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with atomic_path(path) as tmp, open(tmp, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def write_report(path, rows: Iterable[tuple[str, float]]) -> None:
    write_csv(path, ("quantity", "value"), rows)


def read_report(path) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as f:
        r = csv.reader(f)
        header = next(r)
        if header != ["quantity", "value"]:
            raise FormatError(f"unexpected header {header}")
        return {q: float(v) for q, v in r}


def write_conserved(path, times, table) -> None:
    """``step,time,H,Z,M,V`` rows from a ``(K, 4)`` conserved-quantity table."""
    table = np.asarray(table, dtype=float)
    write_csv(
        path,
        ("step", "time", "H", "Z", "M", "V"),
        ([k, float(times[k])] + [float(x) for x in table[k]] for k in range(table.shape[0])),
    )


def read_conserved(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as f:
        r = csv.reader(f)
        next(r)
        return np.array([[float(x) for x in row[2:]] for row in r])
