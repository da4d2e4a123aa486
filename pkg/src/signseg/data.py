"""Dataset ingestion, interval/triple types, and the deterministic RNG contract.

Time indices are 1-based everywhere in the public API: row ``i`` of a data
matrix is the observation at time ``i``, and a change point at ``k`` means the
mean shifts between times ``k`` and ``k+1``.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import DomainError, as_data_matrix

_MASK64 = (1 << 64) - 1


class ParseError(ValueError):
    """A CSV cell or row could not be parsed."""

    def __init__(self, message: str, *, row: int | None = None, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyInput(ParseError):
    """The input file holds no data rows."""


class OrientationWarning(UserWarning):
    """The data looks transposed relative to the expected n < p regime."""


@dataclass(frozen=True)
class SegmentTriple:
    """A candidate split ``k`` of the window ``[l, m]`` into ``[l, k]`` and ``[k+1, m]``.

    Both blocks must hold at least two points, since the statistics sum over
    ordered pairs of distinct indices inside each block.
    """

    k: int
    l: int
    m: int

    def __post_init__(self):
        if not (self.l <= self.k < self.m):
            raise DomainError(f"need l <= k < m, got (k={self.k}; l={self.l}, m={self.m})")
        if self.k - self.l + 1 < 2:
            raise DomainError(f"left block [{self.l}, {self.k}] needs >= 2 points")
        if self.m - self.k < 2:
            raise DomainError(f"right block [{self.k + 1}, {self.m}] needs >= 2 points")

    def validate_against(self, n: int) -> None:
        if self.l < 1 or self.m > n:
            raise DomainError(f"triple {self} does not fit in 1..{n}")


@dataclass(frozen=True)
class RandomStream:
    """Counter-based randomness keyed by ``(seed, stream_id)``.

    Identical keys produce identical draw sequences no matter how work is
    chunked across threads or processes, which is what makes every Monte
    Carlo routine in this package reproducible under parallelism. Replicate
    ``r`` of a task conventionally uses ``substream(r)``; distinct tasks
    should use distinct seeds.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.seed & _MASK64) | ((self.stream_id & _MASK64) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, stream_id: int) -> "RandomStream":
        return RandomStream(self.seed, stream_id)


def load_csv(path, has_header: bool = False) -> np.ndarray:
    """Read a rectangular numeric CSV into a data matrix.

    Rows are time points, columns are coordinates. Accepts LF or CRLF line
    endings and an optional single header row (skipped when ``has_header``).

    Raises ParseError on ragged rows or non-numeric cells (1-based positions
    reported), EmptyInput when no data rows remain.
    """
    with open(path, "r", encoding="utf-8-sig", newline="") as fh:
        return _parse_csv(fh, has_header)


def _parse_csv(fh, has_header: bool) -> np.ndarray:
    reader = csv.reader(fh)
    rows: list[list[float]] = []
    width = None
    for lineno, record in enumerate(reader, start=1):
        if has_header and lineno == 1:
            continue
        if not record or all(cell.strip() == "" for cell in record):
            continue
        if width is None:
            width = len(record)
        elif len(record) != width:
            raise ParseError(
                f"row {lineno} has {len(record)} fields, expected {width}", row=lineno
            )
        parsed = []
        for colno, cell in enumerate(record, start=1):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"row {lineno}, column {colno}: not a number: {cell!r}",
                    row=lineno,
                    column=colno,
                ) from None
        rows.append(parsed)
    if not rows:
        raise EmptyInput("no data rows in input")
    return as_data_matrix(rows)


def loads_csv(text: str, has_header: bool = False) -> np.ndarray:
    """`load_csv` over an in-memory string (handy in tests and pipelines)."""
    return _parse_csv(io.StringIO(text), has_header)


def save_csv(data, path, header: list[str] | None = None) -> None:
    """Write a data matrix as CSV with full float64 round-trip precision."""
    arr = as_data_matrix(data)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            if len(header) != arr.shape[1]:
                raise DomainError("header length must match column count")
            writer.writerow(header)
        for row in arr:
            writer.writerow([f"{v:.17g}" for v in row])


def transpose_guard(data, expect_n_less_than_p: bool = True) -> np.ndarray:
    """Warn when a matrix looks oriented against the wide-data convention.

    The statistics here target the n << p regime. If the flag is set and the
    matrix has more rows than columns, a warning is emitted; the data is
    never silently transposed.
    """
    arr = as_data_matrix(data)
    n, p = arr.shape
    if expect_n_less_than_p and n > p:
        warnings.warn(
            f"data has n={n} rows > p={p} columns; if rows are coordinates "
            "rather than time points, transpose before calling",
            OrientationWarning,
            stacklevel=2,
        )
    return arr
