"""Time series containers, CSV ingestion, differencing and chronological splits."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SeriesFrame:
    """Immutable multivariate series indexed (time, feature).

    ``values`` is always a 2-D float array with finite entries; the time
    index is a unitless, strictly increasing integer tick.
    """

    values: np.ndarray
    feature_names: list[str] = field(default_factory=list)
    time_index: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValidationError(f"values must be 2-D (time, feature), got ndim={values.ndim}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("series contains NaN or Inf values")
        object.__setattr__(self, "values", values)

        names = list(self.feature_names) or [f"f{i}" for i in range(values.shape[1])]
        if len(names) != values.shape[1]:
            raise ValidationError(
                f"{len(names)} feature names for {values.shape[1]} columns"
            )
        object.__setattr__(self, "feature_names", names)

        if self.time_index is None:
            tick = np.arange(values.shape[0], dtype=np.int64)
        else:
            tick = np.asarray(self.time_index, dtype=np.int64)
        if tick.shape != (values.shape[0],):
            raise ValidationError("time_index length does not match values")
        if tick.size > 1 and np.any(np.diff(tick) <= 0):
            raise ValidationError("time_index must be strictly increasing")
        object.__setattr__(self, "time_index", tick)
        self.values.setflags(write=False)
        self.time_index.setflags(write=False)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def feature(self, name: str) -> np.ndarray:
        """1-D view of one feature column."""
        try:
            j = self.feature_names.index(name)
        except ValueError:
            raise ValidationError(f"unknown feature {name!r}") from None
        return self.values[:, j]

    def slice(self, start: int, stop: int) -> "SeriesFrame":
        return SeriesFrame(
            self.values[start:stop],
            self.feature_names,
            self.time_index[start:stop],
        )


@dataclass(frozen=True)
class SplitSpec:
    """Chronological split fractions plus windowing geometry."""

    train_fraction: float
    val_fraction: float = 0.0
    context_length: int = 1
    horizon: int = 1

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must be in (0, 1)")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValidationError("val_fraction must be in [0, 1)")
        if self.train_fraction + self.val_fraction >= 1.0:
            raise ValidationError("train_fraction + val_fraction must be < 1")
        if self.context_length < 1 or self.horizon < 1:
            raise ValidationError("context_length and horizon must be positive")


def load_csv(path, has_header: bool = True) -> SeriesFrame:
    """Read a comma-separated numeric file into a SeriesFrame.

    Accepts LF or CRLF line endings and an optional single header row.
    Non-numeric or non-finite cells are rejected with the offending
    row/column named.
    """
    with open(path, "r", newline="") as fh:
        return _parse_csv(fh, has_header, str(path))


def loads_csv(text: str, has_header: bool = True) -> SeriesFrame:
    return _parse_csv(io.StringIO(text), has_header, "<string>")


def _parse_csv(fh, has_header: bool, source: str) -> SeriesFrame:
    reader = csv.reader(fh)
    rows = [row for row in reader if row]
    if not rows:
        raise ValidationError(f"{source}: empty CSV")
    names: list[str] = []
    if has_header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ValidationError(f"{source}: header but no data rows")
    width = len(rows[0])
    data = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValidationError(
                f"{source}: ragged row {i}: expected {width} cells, got {len(row)}"
            )
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ValidationError(
                    f"{source}: non-numeric cell at row {i}, column {j}: {cell!r}"
                ) from None
            if not np.isfinite(v):
                raise ValidationError(
                    f"{source}: non-finite value at row {i}, column {j}: {cell!r}"
                )
            data[i, j] = v
    return SeriesFrame(data, names)


def write_csv(frame: SeriesFrame, path) -> None:
    """Emit LF-terminated CSV with a header row and 17-significant-digit reals."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(frame.feature_names) + "\n")
        for row in frame.values:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def difference(frame: SeriesFrame, order: int = 1) -> SeriesFrame:
    """x_t - x_{t-order}; output is ``order`` steps shorter."""
    if order < 1:
        raise ValidationError("order must be a positive integer")
    if order >= len(frame):
        raise ValidationError(f"order {order} >= series length {len(frame)}")
    values = frame.values[order:] - frame.values[:-order]
    return SeriesFrame(values, frame.feature_names, frame.time_index[order:])


def split(frame: SeriesFrame, spec: SplitSpec) -> tuple[SeriesFrame, SeriesFrame, SeriesFrame]:
    """Chronological train/val/test split.

    Boundary rounding: floor on train, floor on val, remainder to test.
    The validation frame may be empty when val_fraction is 0; empty train
    or test segments are an error.
    """
    n = len(frame)
    n_train = int(np.floor(spec.train_fraction * n))
    n_val = int(np.floor(spec.val_fraction * n))
    n_test = n - n_train - n_val
    if n_train == 0 or n_test == 0:
        raise ValidationError(
            f"split of {n} steps with fractions ({spec.train_fraction}, "
            f"{spec.val_fraction}) produces an empty train or test segment"
        )
    if spec.context_length + spec.horizon > n_train:
        raise ValidationError(
            f"context_length + horizon = {spec.context_length + spec.horizon} "
            f"exceeds training length {n_train}"
        )
    return (
        frame.slice(0, n_train),
        frame.slice(n_train, n_train + n_val),
        frame.slice(n_train + n_val, n),
    )


def windows(
    frame: SeriesFrame, context_length: int, horizon: int, stride: int = 1
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Sliding (context, target) pairs with contexts starting at stride multiples."""
    l, h = context_length, horizon
    if l < 1 or h < 1 or stride < 1:
        raise ValidationError("context_length, horizon and stride must be positive")
    n = len(frame)
    if l + h > n:
        raise ValidationError(f"context + horizon = {l + h} exceeds series length {n}")
    out = []
    for start in range(0, n - l - h + 1, stride):
        out.append((frame.values[start : start + l], frame.values[start + l : start + l + h]))
    return out
