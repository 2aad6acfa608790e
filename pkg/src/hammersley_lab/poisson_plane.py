"""Reproducible rate-one Poisson points on the space-time plane.

The plane is cut into cells ``(s*w, (s+1)*w] x (c*h, (c+1)*h]`` indexed by
strip ``s`` and time chunk ``c``. Each cell draws its points from its own
Philox stream whose counter encodes ``(s, c)``, so a cell's content depends
only on the global seed and its index. Realizing cells in a different order,
or querying a wider window later, never changes points already handed out.

Mutation: :meth:`PointStore.query` (and :func:`points_in`) realize missing
cells into the store's cache. Everything else is read-only. Cells are
independent, so separate stores with the same seed can be filled in
parallel and will agree.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

_MASK64 = (1 << 64) - 1


class PlanarPoint(NamedTuple):
    x: float
    t: float


@dataclass(frozen=True)
class Rectangle:
    """Half-open rectangle ``(x_lo, x_hi] x (t_lo, t_hi]``."""

    x_lo: float
    x_hi: float
    t_lo: float
    t_hi: float

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError(f"need x_lo < x_hi, got {self.x_lo} and {self.x_hi}")
        if not self.t_lo < self.t_hi:
            raise ValueError(f"need t_lo < t_hi, got {self.t_lo} and {self.t_hi}")

    @property
    def area(self) -> float:
        return (self.x_hi - self.x_lo) * (self.t_hi - self.t_lo)

    def mask(self, xs: np.ndarray, ts: np.ndarray) -> np.ndarray:
        return (xs > self.x_lo) & (xs <= self.x_hi) & (ts > self.t_lo) & (ts <= self.t_hi)

    def contains(self, p: PlanarPoint) -> bool:
        return self.x_lo < p.x <= self.x_hi and self.t_lo < p.t <= self.t_hi


class PointStore:
    """Lazily realized Poisson process keyed by ``(global_seed, strip, chunk)``.

    ``strip_width`` sets the spatial cell size, ``chunk_height`` the temporal
    one. Both are part of the realization: stores only agree when seed and
    cell geometry agree.
    """

    def __init__(self, global_seed: int, strip_width: float = 1.0, chunk_height: float = 64.0):
        if strip_width <= 0 or chunk_height <= 0:
            raise ValueError("strip_width and chunk_height must be positive")
        if global_seed < 0:
            raise ValueError("global_seed must be nonnegative")
        self.global_seed = int(global_seed)
        self.strip_width = float(strip_width)
        self.chunk_height = float(chunk_height)
        self._cells: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def __repr__(self):
        return (f"PointStore(global_seed={self.global_seed}, strip_width={self.strip_width}, "
                f"chunk_height={self.chunk_height}, cells={len(self._cells)})")

    @property
    def realized_cells(self) -> int:
        return len(self._cells)

    def _cell(self, strip: int, chunk: int) -> tuple[np.ndarray, np.ndarray]:
        key = (strip, chunk)
        cell = self._cells.get(key)
        if cell is None:
            cell = self._realize(strip, chunk)
            self._cells[key] = cell
        return cell

    def _realize(self, strip: int, chunk: int) -> tuple[np.ndarray, np.ndarray]:
        # draws advance the low counter words; the cell id sits in the high ones
        counter = np.array([0, 0, strip & _MASK64, chunk & _MASK64], dtype=np.uint64)
        bitgen = np.random.Philox(key=self.global_seed, counter=counter)
        rng = np.random.Generator(bitgen)
        w, h = self.strip_width, self.chunk_height
        x0, t0 = strip * w, chunk * h
        count = int(rng.poisson(w * h))
        # 1 - U lies in (0, 1], matching the half-open cell
        xs = x0 + w * (1.0 - rng.random(count))
        ts = t0 + h * (1.0 - rng.random(count))
        while True:
            order = np.argsort(xs, kind="stable")
            xs, ts = xs[order], ts[order]
            dup = np.zeros(count, dtype=bool)
            dup[1:] = xs[1:] == xs[:-1]
            t_order = np.argsort(ts, kind="stable")
            t_dup = np.zeros(count, dtype=bool)
            t_dup[1:] = ts[t_order[1:]] == ts[t_order[:-1]]
            dup[t_order[t_dup]] = True
            k = int(dup.sum())
            if k == 0:
                return xs, ts
            xs[dup] = x0 + w * (1.0 - rng.random(k))
            ts[dup] = t0 + h * (1.0 - rng.random(k))

    def query(self, rect: Rectangle) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of the points in ``rect`` as arrays sorted by x."""
        w, h = self.strip_width, self.chunk_height
        # one extra cell on each side absorbs rounding at cell borders
        s_lo = math.floor(rect.x_lo / w) - 1
        s_hi = math.ceil(rect.x_hi / w)
        c_lo = max(math.floor(rect.t_lo / h) - 1, 0)
        c_hi = math.ceil(rect.t_hi / h)
        xs_parts, ts_parts = [], []
        for s in range(s_lo, s_hi + 1):
            for c in range(c_lo, c_hi + 1):
                cx, ct = self._cell(s, c)
                if cx.size:
                    xs_parts.append(cx)
                    ts_parts.append(ct)
        if not xs_parts:
            return np.empty(0), np.empty(0)
        xs = np.concatenate(xs_parts)
        ts = np.concatenate(ts_parts)
        keep = rect.mask(xs, ts)
        xs, ts = xs[keep], ts[keep]
        order = np.lexsort((ts, xs))
        return xs[order], ts[order]


class PointSet:
    """An explicit finite point configuration with the store's query API."""

    def __init__(self, xs: Iterable[float], ts: Iterable[float]):
        xs = np.asarray(xs, dtype=float).ravel()
        ts = np.asarray(ts, dtype=float).ravel()
        if xs.shape != ts.shape:
            raise ValueError("xs and ts must have the same length")
        order = np.lexsort((ts, xs))
        self.xs = xs[order]
        self.ts = ts[order]

    @classmethod
    def from_points(cls, points: Sequence[PlanarPoint]) -> PointSet:
        if len(points) == 0:
            return cls([], [])
        arr = np.asarray(points, dtype=float)
        return cls(arr[:, 0], arr[:, 1])

    def __len__(self):
        return self.xs.size

    def points(self) -> list[PlanarPoint]:
        return [PlanarPoint(float(x), float(t)) for x, t in zip(self.xs, self.ts)]

    def query(self, rect: Rectangle) -> tuple[np.ndarray, np.ndarray]:
        keep = rect.mask(self.xs, self.ts)
        return self.xs[keep], self.ts[keep]

    def scaled(self, lam: float) -> PointSet:
        if lam <= 0:
            raise ValueError("scale factor must be positive")
        return PointSet(self.xs * lam, self.ts / lam)


def points_in(store, rect: Rectangle) -> list[PlanarPoint]:
    """Points of ``store`` inside ``rect``, sorted by x."""
    xs, ts = store.query(rect)
    return [PlanarPoint(float(x), float(t)) for x, t in zip(xs, ts)]


def scale_points(points: Sequence[PlanarPoint], lam: float) -> list[PlanarPoint]:
    """Map each ``(x, t)`` to ``(lam*x, t/lam)``; area-preserving."""
    if lam <= 0:
        raise ValueError(f"scale factor must be positive, got {lam}")
    out = [PlanarPoint(p.x * lam, p.t / lam) for p in points]
    out.sort()
    return out


def write_points_csv(path, xs: np.ndarray, ts: np.ndarray) -> None:
    """Dump points as ``x,t`` rows with 17 significant digits."""
    order = np.lexsort((ts, xs))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "t"])
        for i in order:
            w.writerow([f"{xs[i]:.17g}", f"{ts[i]:.17g}"])


def read_points_csv(path) -> PointSet:
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh)]
    return PointSet([float(r["x"]) for r in rows], [float(r["t"]) for r in rows])
