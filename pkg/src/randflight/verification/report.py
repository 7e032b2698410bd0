from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = ["CheckReport", "envelope_bounded", "loglog_slope", "relative_margin"]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        # JSON has no inf/nan
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    return obj


@dataclass
class CheckReport:
    """Outcome of one numerical certification.

    ``slack`` is signed: non-negative exactly when the measured statistic
    satisfies its bound (after any stated Monte Carlo allowance).
    """

    name: str
    params: dict
    stat: dict
    bound: object
    slack: float
    verdict: bool
    replicas: int = 0
    seeds: list = field(default_factory=list)
    runtime_ms: float = 0.0

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def __str__(self):
        mark = "PASS" if self.verdict else "FAIL"
        return f"[{mark}] {self.name} slack={self.slack:.4g}"


def envelope_bounded(values, rtol: float = 0.25):
    """Whether ``|values|`` stops growing along an increasing grid.

    Compares the largest magnitude on the upper half of the grid with the
    largest on the lower half. Returns ``(ok, head_max, tail_max, slack)``.
    An ``O(1)`` sequence passes; one growing like a positive power of the
    grid variable across a few decades does not.
    """
    vals = np.abs(np.asarray(values, dtype=float))
    if vals.size < 2:
        raise ValueError("need at least two grid points")
    half = vals.size // 2
    head = float(vals[: vals.size - half].max())
    tail = float(vals[vals.size - half:].max())
    limit = (1.0 + rtol) * head
    return tail <= limit, head, tail, limit - tail


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x`` over positive ``y``.

    Returns ``-inf`` when fewer than two points are positive: the quantity
    reached zero, which is faster decay than any power.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = y > 0
    if keep.sum() < 2:
        return -math.inf
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def relative_margin(limit: float, value: float) -> float:
    """``(limit - value) / |limit|``; sign says whether ``value <= limit``."""
    if limit == 0:
        return 0.0 if value == 0 else math.copysign(math.inf, -value)
    return (limit - value) / abs(limit)
