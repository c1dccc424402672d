"""Price/return panels: CSV ingestion, return conversion, train/test split."""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .io import atomic_write_text
from .errors import (
    BoundaryOutOfRange,
    EmptyPanel,
    EmptySplit,
    MalformedRow,
    NonPositivePrice,
    TooFewRows,
)

POLICIES = ("drop", "strict")


def _as_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    return dt.date.fromisoformat(str(value))


def _check_dates(dates: Sequence[dt.date]) -> None:
    for a, b in zip(dates, dates[1:]):
        if not a < b:
            raise ValueError(f"dates not strictly increasing at {b}")


@dataclass(frozen=True)
class PricePanel:
    dates: tuple[dt.date, ...]
    assets: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        prices.setflags(write=False)
        object.__setattr__(self, "dates", tuple(_as_date(d) for d in self.dates))
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "prices", prices)
        if prices.shape != (len(self.dates), len(self.assets)):
            raise ValueError(
                f"price matrix shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.assets)} assets"
            )
        _check_dates(self.dates)
        if prices.size and not np.all(prices > 0):
            t, i = np.argwhere(~(prices > 0))[0]
            raise NonPositivePrice(self.dates[t], self.assets[i], prices[t, i])

    @property
    def shape(self):
        return self.prices.shape


@dataclass(frozen=True)
class ReturnPanel:
    dates: tuple[dt.date, ...]
    assets: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        returns = np.array(self.returns, dtype=float)
        returns.setflags(write=False)
        object.__setattr__(self, "dates", tuple(_as_date(d) for d in self.dates))
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "returns", returns)
        if returns.ndim != 2 or returns.shape != (len(self.dates), len(self.assets)):
            raise ValueError(
                f"return matrix shape {returns.shape} does not match "
                f"{len(self.dates)} dates x {len(self.assets)} assets"
            )
        _check_dates(self.dates)
        if returns.size and not np.all(returns > -1.0):
            t, i = np.argwhere(~(returns > -1.0))[0]
            raise ValueError(f"return {returns[t, i]} <= -1 for {self.assets[i]} on {self.dates[t]}")

    @property
    def shape(self):
        return self.returns.shape

    def __len__(self):
        return len(self.dates)

    def select(self, assets: Sequence[str]) -> "ReturnPanel":
        idx = [self.assets.index(a) for a in assets]
        return ReturnPanel(self.dates, tuple(assets), self.returns[:, idx])

    def rows(self, start: int, stop: int) -> "ReturnPanel":
        return ReturnPanel(self.dates[start:stop], self.assets, self.returns[start:stop])


def _read_table(path, policy: str, kind: str):
    if policy not in POLICIES:
        raise ValueError(f"unknown missing-data policy {policy!r}; expected one of {POLICIES}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in row]
                if len(header) < 2 or header[0].lower() != "date":
                    raise MalformedRow(line, "header must be 'date,TICKER1,...'")
                if len(set(header[1:])) != len(header) - 1:
                    raise MalformedRow(line, "duplicate ticker in header")
                continue
            if len(row) != len(header):
                raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise MalformedRow(line, f"date {row[0]!r} is not ISO-8601") from None
            values = []
            missing = False
            for cell in row[1:]:
                try:
                    v = float(cell)
                except ValueError:
                    missing = True
                    break
                if not math.isfinite(v):
                    missing = True
                    break
                values.append(v)
            if missing:
                if policy == "strict":
                    raise MalformedRow(line, "missing or non-numeric value")
                continue
            rows.append((date, line, values))

    if header is None:
        raise EmptyPanel(f"{path}: no header row")
    if not rows:
        raise EmptyPanel(f"{path}: no usable rows")

    rows.sort(key=lambda r: r[0])
    for (d0, _, _), (d1, line, _) in zip(rows, rows[1:]):
        if d0 == d1:
            raise MalformedRow(line, f"duplicate date {d1}")

    dates = [r[0] for r in rows]
    matrix = np.array([r[2] for r in rows], dtype=float)
    assets = header[1:]
    if kind == "prices":
        bad = np.argwhere(matrix <= 0)
        if bad.size:
            t, i = bad[0]
            raise NonPositivePrice(dates[t], assets[i], matrix[t, i])
    else:
        bad = np.argwhere(matrix <= -1)
        if bad.size:
            t, _ = bad[0]
            raise MalformedRow(rows[t][1], f"return {matrix[tuple(bad[0])]} <= -1")
    return dates, assets, matrix


def load_prices(path, policy: str = "drop") -> PricePanel:
    """Read a ``date,TICKER1,...`` price file.

    Under ``policy="drop"`` any row with a blank or non-numeric price is
    removed; under ``policy="strict"`` such a row raises :class:`MalformedRow`.
    """
    dates, assets, matrix = _read_table(path, policy, "prices")
    return PricePanel(dates, assets, matrix)


def load_returns(path, policy: str = "drop") -> ReturnPanel:
    """Same schema as :func:`load_prices` with net returns as values."""
    dates, assets, matrix = _read_table(path, policy, "returns")
    return ReturnPanel(dates, assets, matrix)


def to_returns(panel: PricePanel) -> ReturnPanel:
    """Net returns ``p[t+1]/p[t] - 1`` dated by the later observation."""
    if panel.prices.shape[0] < 2:
        raise TooFewRows(f"need at least 2 price rows, got {panel.prices.shape[0]}")
    p = panel.prices
    r = p[1:] / p[:-1] - 1.0
    return ReturnPanel(panel.dates[1:], panel.assets, r)


def split_panel(panel: ReturnPanel, boundary) -> tuple[ReturnPanel, ReturnPanel]:
    """Rows dated on or before ``boundary`` train, rows after it test."""
    boundary = _as_date(boundary)
    if not panel.dates or boundary < panel.dates[0] or boundary > panel.dates[-1]:
        raise BoundaryOutOfRange(
            f"boundary {boundary} outside panel range "
            f"{panel.dates[0] if panel.dates else None}..{panel.dates[-1] if panel.dates else None}"
        )
    n_train = sum(1 for d in panel.dates if d <= boundary)
    if n_train == 0 or n_train == len(panel.dates):
        raise EmptySplit(f"boundary {boundary} leaves an empty train or test window")
    return panel.rows(0, n_train), panel.rows(n_train, len(panel.dates))


def write_panel(path, dates, assets, matrix, header_lines=()) -> None:
    """Write a panel in the ingestion schema; floats use shortest round-trip repr."""
    path = Path(path)
    lines = [f"# {h}" for h in header_lines]
    lines.append(",".join(["date", *assets]))
    for d, row in zip(dates, np.asarray(matrix)):
        lines.append(",".join([_as_date(d).isoformat(), *(repr(float(v)) for v in row)]))
    atomic_write_text(path, "\n".join(lines) + "\n")
