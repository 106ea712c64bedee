"""CSV ingestion: build the LLMM design from a delimited file with a header.

* An intercept column of ones comes first in X (unless disabled).
* Numeric fixed effects pass through unchanged.
* A categorical fixed effect with L levels contributes L - 1 indicator
  columns; the reference (dropped) level is the first in the level order.
* Each random-effect grouping column with L levels contributes L indicator
  columns to Z and forms one block with q_j = L.
* The response must parse as the number 0 or 1; anything else is an error.

A fixed-effect column is categorical if it is listed in ``categorical`` or
if any of its cells fails to parse as a finite number.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError
from .model import ModelSpec, PriorSpec

LEVEL_ORDERS = ("sorted", "appearance")
MISSING = {"", "na", "nan", "null", "none"}
INTERCEPT_NAME = "(Intercept)"


@dataclass(frozen=True)
class DatasetFile:
    path: str
    response: str
    fixed: tuple = ()
    random: tuple = ()
    categorical: tuple = ()
    level_order: str = "sorted"
    intercept: bool = True
    delimiter: str = ","

    def __post_init__(self):
        for name in ("fixed", "random", "categorical"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.level_order not in LEVEL_ORDERS:
            raise InputError(f"level_order must be one of {LEVEL_ORDERS}, got {self.level_order!r}")
        if not self.random:
            raise InputError("at least one random-effect grouping column is required")
        if not self.fixed and not self.intercept:
            raise InputError("the fixed-effect design is empty")
        cols = [self.response, *self.fixed, *self.random]
        if len(set(cols)) != len(cols):
            raise InputError("response, fixed and random columns must be distinct")
        unknown = set(self.categorical) - set(self.fixed)
        if unknown:
            raise InputError(f"categorical columns {sorted(unknown)} are not fixed effects")


@dataclass(frozen=True, eq=False)
class Design:
    X: np.ndarray
    Z: np.ndarray
    y: np.ndarray
    blocks: tuple
    x_names: tuple
    z_names: tuple
    block_names: tuple
    levels: dict = field(default_factory=dict)


def _read_table(dataset):
    path = Path(dataset.path)
    if not path.is_file():
        raise InputError(f"dataset file not found: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, delimiter=dataset.delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        rows = []
        for i, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", row=i)
            rows.append((i, [c.strip() for c in row]))
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names in header")
    if not rows:
        raise ParseError(f"{path} has no data rows")
    return header, rows


def _column(header, rows, name):
    try:
        j = header.index(name)
    except ValueError:
        raise ParseError(f"column {name!r} not in header {header}") from None
    out = []
    for i, row in rows:
        cell = row[j]
        if cell.lower() in MISSING:
            raise ParseError("missing value", row=i, column=name)
        out.append((i, cell))
    return out


def _as_number(cell):
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if np.isfinite(v) else None


def _levels(cells, order):
    seen = list(dict.fromkeys(c for _, c in cells))
    return sorted(seen) if order == "sorted" else seen


def _indicators(cells, levels):
    index = {lv: k for k, lv in enumerate(levels)}
    out = np.zeros((len(cells), len(levels)))
    for r, (_, c) in enumerate(cells):
        out[r, index[c]] = 1.0
    return out


def read_design(dataset):
    """Parse ``dataset`` into design matrices, responses and column names."""
    header, rows = _read_table(dataset)
    n = len(rows)

    y = np.empty(n)
    for r, (i, cell) in enumerate(_column(header, rows, dataset.response)):
        v = _as_number(cell)
        if v not in (0.0, 1.0):
            raise ParseError(f"response value {cell!r} is not 0 or 1", row=i, column=dataset.response)
        y[r] = v

    x_cols, x_names, levels = [], [], {}
    if dataset.intercept:
        x_cols.append(np.ones((n, 1)))
        x_names.append(INTERCEPT_NAME)
    for name in dataset.fixed:
        cells = _column(header, rows, name)
        values = [_as_number(c) for _, c in cells]
        if name not in dataset.categorical and all(v is not None for v in values):
            x_cols.append(np.array(values)[:, None])
            x_names.append(name)
            continue
        lv = _levels(cells, dataset.level_order)
        if len(lv) < 2:
            raise ParseError(f"categorical column has a single level {lv[0]!r}", column=name)
        levels[name] = lv
        x_cols.append(_indicators(cells, lv)[:, 1:])
        x_names.extend(f"{name}={v}" for v in lv[1:])

    z_cols, z_names, blocks = [], [], []
    for name in dataset.random:
        cells = _column(header, rows, name)
        lv = _levels(cells, dataset.level_order)
        levels[name] = lv
        z_cols.append(_indicators(cells, lv))
        z_names.extend(f"{name}={v}" for v in lv)
        blocks.append(len(lv))

    return Design(
        X=np.hstack(x_cols),
        Z=np.hstack(z_cols),
        y=y,
        blocks=tuple(blocks),
        x_names=tuple(x_names),
        z_names=tuple(z_names),
        block_names=tuple(dataset.random),
        levels=levels,
    )


def _broadcast(value, size, what):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return np.full(size, float(arr[0]))
    if arr.size != size:
        raise InputError(f"{what} has {arr.size} entries, expected 1 or {size}")
    return arr


def build_prior(p, r, mu0=0.0, Q=0.0, a=0.0, b=0.0):
    """Prior from config values.

    ``mu0`` is a scalar or a length-p list. ``Q`` is a scalar c (meaning
    c I, with 0 the flat prior), a length-p list (a diagonal) or a p x p
    matrix. ``a`` and ``b`` are scalars or one value per block.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 0:
        Q = float(Q) * np.eye(p)
    elif Q.ndim == 1:
        Q = np.diag(_broadcast(Q, p, "Q diagonal"))
    elif Q.shape != (p, p):
        raise InputError(f"Q has shape {Q.shape}, expected ({p}, {p})")
    return PriorSpec(
        mu0=_broadcast(mu0, p, "mu0"),
        Q=Q,
        a=_broadcast(a, r, "a"),
        b_rate=_broadcast(b, r, "b"),
    )


def ingest(dataset, prior=None):
    """Read ``dataset`` into a :class:`ModelSpec`.

    ``prior`` is a :class:`PriorSpec` or a mapping of :func:`build_prior`
    keyword arguments (default: flat beta prior, a = b = 0).
    """
    d = read_design(dataset)
    if not isinstance(prior, PriorSpec):
        prior = build_prior(d.X.shape[1], len(d.blocks), **(prior or {}))
    return ModelSpec(d.X, d.Z, d.y, d.blocks, prior,
                     x_names=d.x_names, z_names=d.z_names, block_names=d.block_names)
