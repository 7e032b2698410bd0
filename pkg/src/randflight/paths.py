"""Polylines in C([0,1], R^d) and the exact sup-metric between them."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Polyline",
    "PathSample",
    "sup_distance",
    "sup_norm",
    "pairwise_sup_distance",
    "write_paths_jsonl",
    "read_paths_jsonl",
    "write_paths_csv",
]


@dataclass(frozen=True, eq=False)
class Polyline:
    """Continuous piecewise-linear path on ``[0, 1]``.

    ``t`` holds strictly increasing breakpoints with ``t[0] == 0`` and
    ``t[-1] == 1``; ``v`` has shape ``(len(t), d)``.
    """

    t: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        v = np.array(self.v, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a polyline needs at least two breakpoints")
        if v.shape[0] != t.size or v.shape[1] < 1:
            raise ValueError("values must have one row per breakpoint")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(t) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("breakpoints and values must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_knots(cls, t, v) -> "Polyline":
        """Build from a non-decreasing knot list, merging coincident knots.

        Ties keep the value of the last knot in the tied run.
        """
        t = np.asarray(t, dtype=float)
        v = np.asarray(v, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if np.any(np.diff(t) < 0):
            raise ValueError("knots must be non-decreasing")
        keep = np.ones(t.size, dtype=bool)
        keep[:-1] = t[1:] != t[:-1]
        return cls(t[keep], v[keep])

    @classmethod
    def zero(cls, d: int = 1) -> "Polyline":
        return cls(np.array([0.0, 1.0]), np.zeros((2, d)))

    @property
    def d(self) -> int:
        return self.v.shape[1]

    def eval(self, t: float) -> np.ndarray:
        """Path value at a single time ``t`` in ``[0, 1]``."""
        t = float(t)
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"t = {t} outside [0, 1]")
        return self.values_at(np.array([t]))[0]

    def values_at(self, ts) -> np.ndarray:
        """Vectorized evaluation; ``ts`` must lie in ``[0, 1]``. Shape ``(len(ts), d)``."""
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < 0.0 or ts.max() > 1.0):
            raise ValueError("evaluation times must lie in [0, 1]")
        return _interp(ts, self.t, self.v)

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.v, axis=1)))

    def to_dict(self) -> dict:
        return {"d": self.d, "t": self.t.tolist(), "v": self.v.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "Polyline":
        path = cls(obj["t"], obj["v"])
        if "d" in obj and int(obj["d"]) != path.d:
            raise ValueError("declared dimension does not match values")
        return path


def _interp(ts: np.ndarray, knots: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.empty((ts.size, values.shape[1]))
    for c in range(values.shape[1]):
        out[:, c] = np.interp(ts, knots, values[:, c])
    return out


def sup_distance(a: Polyline, b: Polyline) -> float:
    """``sup_{t in [0,1]} |a(t) - b(t)|`` with the Euclidean norm.

    ``a - b`` is affine between consecutive points of the merged breakpoint
    set and a norm is convex, so the maximum over that set is exact.
    """
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    grid = np.union1d(a.t, b.t)
    diff = _interp(grid, a.t, a.v) - _interp(grid, b.t, b.v)
    return float(np.max(np.linalg.norm(diff, axis=1)))


def sup_norm(a: Polyline) -> float:
    return a.sup_norm()


def pairwise_sup_distance(A: Sequence[Polyline], B: Sequence[Polyline]) -> np.ndarray:
    """Matrix of :func:`sup_distance` over all pairs ``(A[i], B[j])``.

    Each path of one side is interpolated once at the concatenated knots of
    the whole other side; maxima are then reduced per path with
    ``np.maximum.reduceat``. Same exactness argument as :func:`sup_distance`.
    """
    if not A or not B:
        raise ValueError("empty path collection")
    d = A[0].d
    if any(p.d != d for p in A) or any(p.d != d for p in B):
        raise ValueError("dimension mismatch")
    ta = np.concatenate([p.t for p in A])
    va = np.concatenate([p.v for p in A])
    tb = np.concatenate([p.t for p in B])
    vb = np.concatenate([p.v for p in B])
    starts_a = np.cumsum([0] + [p.t.size for p in A[:-1]])
    starts_b = np.cumsum([0] + [p.t.size for p in B[:-1]])

    out = np.empty((len(A), len(B)))
    for j, b in enumerate(B):
        # b against the knots of every path in A
        gap = np.linalg.norm(_interp(ta, b.t, b.v) - va, axis=1)
        out[:, j] = np.maximum.reduceat(gap, starts_a)
    for i, a in enumerate(A):
        gap = np.linalg.norm(_interp(tb, a.t, a.v) - vb, axis=1)
        np.maximum(out[i], np.maximum.reduceat(gap, starts_b), out=out[i])
    return out


@dataclass(frozen=True, eq=False)
class PathSample:
    """Equal-weight empirical measure on paths, with generation metadata."""

    paths: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        paths = tuple(self.paths)
        if not paths:
            raise ValueError("a path sample must be nonempty")
        d = paths[0].d
        if any(p.d != d for p in paths):
            raise ValueError("all paths in a sample must share the dimension d")
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def __getitem__(self, i):
        return self.paths[i]

    @property
    def d(self) -> int:
        return self.paths[0].d

    def sup_norms(self) -> np.ndarray:
        return np.array([p.sup_norm() for p in self.paths])


def write_paths_jsonl(paths: Iterable[Polyline], fh) -> None:
    """One JSON object ``{d, t, v}`` per line."""
    for p in paths:
        fh.write(json.dumps(p.to_dict()) + "\n")


def read_paths_jsonl(fh) -> list[Polyline]:
    return [Polyline.from_dict(json.loads(line)) for line in fh if line.strip()]


def write_paths_csv(paths: Iterable[Polyline], fh) -> None:
    """Rows ``path_id, knot_index, t, v_1..v_d``."""
    paths = list(paths)
    if not paths:
        return
    d = paths[0].d
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["path_id", "knot_index", "t"] + [f"v_{c + 1}" for c in range(d)])
    for pid, p in enumerate(paths):
        for k in range(p.t.size):
            writer.writerow([pid, k, repr(float(p.t[k]))] + [repr(float(x)) for x in p.v[k]])
