"""Evaluation metrics: P2MP efficiency and overhead-linearity regression."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

# Reference point-to-point bandwidth of the system interconnect, bytes/cycle.
DEFAULT_IDEAL_BANDWIDTH = 64.0


@dataclass(frozen=True)
class EfficiencyPoint:
    mechanism: str
    n_bytes: int
    n_dst: int
    measured_cycles: int
    eta: float


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float


def eta_p2mp(
    n_bytes: int,
    n_dst: int,
    measured_cycles: int,
    bw_ideal: float = DEFAULT_IDEAL_BANDWIDTH,
) -> float:
    """Measured P2MP efficiency: ideal serialized P2P latency over measured.

    A mechanism with no data duplication tops out at 1.0; the ideal chained
    or multicast transfer approaches n_dst.
    """
    if n_bytes <= 0 or n_dst <= 0 or bw_ideal <= 0:
        raise ValueError("bytes, destination count, and bandwidth must be positive")
    if measured_cycles <= 0:
        raise ValueError("measured_cycles must be positive")
    return (n_dst * n_bytes / bw_ideal) / measured_cycles


def fit_linear(points: Iterable[tuple[float, float]]) -> RegressionFit:
    """Ordinary least squares y = slope * x + intercept with r squared.

    r_squared is 1 - SS_res/SS_tot, taken as 1.0 when the responses are
    constant. Degenerate inputs (fewer than two distinct x) raise ValueError.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 2 or len({x for x, _ in pts}) < 2:
        raise ValueError("need at least two points with distinct x values")
    n = len(pts)
    mx = sum(x for x, _ in pts) / n
    my = sum(y for _, y in pts) / n
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    sxy = sum((x - mx) * (y - my) for x, y in pts)
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_res = sum((y - (intercept + slope * x)) ** 2 for x, y in pts)
    ss_tot = sum((y - my) ** 2 for _, y in pts)
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RegressionFit(slope, intercept, r_squared)
