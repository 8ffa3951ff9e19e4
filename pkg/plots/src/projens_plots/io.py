"""Reading the experiment CSV contract.

The renderer consumes archived result files only; it never calls back into
the library that produced them, so the header is validated against a local
copy of the contract.
"""
from __future__ import annotations

import csv
from pathlib import Path

EXPECTED_HEADER = (
    "experiment,trial,seed,n_a,n_b,k,t,f_k,f_haar,delta_sq,l1_exact,"
    "alpha1_re,alpha1_im,one_norm,wall_ms"
)

_INT_COLUMNS = {"trial", "seed", "n_a", "n_b", "k"}
_STR_COLUMNS = {"experiment"}


class ResultsFormatError(ValueError):
    """The input file does not satisfy the results.csv contract."""


def read_results(path: str | Path) -> list[dict]:
    """Parse results.csv into row dicts; empty metric cells become None.

    Raises ResultsFormatError naming the first bad column on a header
    mismatch, and on a file with no data rows.
    """
    path = Path(path)
    if not path.is_file():
        raise ResultsFormatError(f"input file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ResultsFormatError("empty file: missing header") from None
        expected = EXPECTED_HEADER.split(",")
        if header != expected:
            for i, want in enumerate(expected):
                got = header[i] if i < len(header) else "<missing>"
                if got != want:
                    raise ResultsFormatError(
                        f"header mismatch at column {i + 1}: expected {want!r}, got {got!r}"
                    )
            raise ResultsFormatError(
                f"header has {len(header)} columns, expected {len(expected)}"
            )
        rows = []
        for raw in reader:
            if not raw:
                continue
            row = {}
            for name, cell in zip(expected, raw):
                if name in _STR_COLUMNS:
                    row[name] = cell
                elif cell == "":
                    row[name] = None
                elif name in _INT_COLUMNS:
                    row[name] = int(cell)
                else:
                    row[name] = float(cell)
            rows.append(row)
    if not rows:
        raise ResultsFormatError("no rows")
    return rows


def group_mean(rows: list[dict], keys: tuple[str, ...], value: str) -> dict[tuple, float]:
    """Mean of a metric over trials, grouped by the given key columns.

    Rows with the metric absent are skipped; groups where it never appears
    are dropped.
    """
    buckets: dict[tuple, list[float]] = {}
    for row in rows:
        v = row[value]
        if v is None:
            continue
        buckets.setdefault(tuple(row[k] for k in keys), []).append(v)
    return {key: sum(vals) / len(vals) for key, vals in buckets.items()}
