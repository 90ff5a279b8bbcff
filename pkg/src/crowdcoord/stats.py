"""Rank tests and corpus-level aggregation.

Mann-Whitney U with exact small-sample enumeration and a tie/continuity
corrected normal approximation, banded p-values, median-split quadrant
summaries, and decile-binned heatmaps.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from statistics import median
from typing import Optional, Sequence

import numpy as np

BANDS = ("p001", "p01", "p05", "ns")

# exact enumeration is used up to this product of sample sizes (tie-free only)
EXACT_LIMIT = 400

QUADRANT_KEYS = (
    ("low", "low"),
    ("low", "high"),
    ("high", "low"),
    ("high", "high"),
)  # (size_level, team_level)


@dataclass(frozen=True)
class UTestResult:
    u_statistic: float
    p_value: float
    band: str
    method: str


def significance_band(p: float) -> str:
    """Band for a p-value; thresholds 0.001 / 0.01 / 0.05 are strict."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if p < 0.001:
        return "p001"
    if p < 0.01:
        return "p01"
    if p < 0.05:
        return "p05"
    return "ns"


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for idx in order[i : j + 1]:
            ranks[idx] = avg
        i = j + 1
    return ranks


@lru_cache(maxsize=None)
def _u_count(n1: int, n2: int, u: int) -> int:
    """Number of tie-free arrangements of n1 + n2 values with first-sample U == u."""
    if u < 0:
        return 0
    if n1 == 0 or n2 == 0:
        return 1 if u == 0 else 0
    return _u_count(n1 - 1, n2, u - n2) + _u_count(n1, n2 - 1, u)


def _exact_two_sided_p(u_min: float, n1: int, n2: int) -> float:
    u = int(round(u_min))
    total = math.comb(n1 + n2, n1)
    tail = sum(_u_count(n1, n2, v) for v in range(u + 1))
    return min(1.0, 2.0 * tail / total)


def _normal_two_sided_p(u_min: float, n1: int, n2: int, combined: Sequence[float]) -> float:
    n = n1 + n2
    tie_term = sum(t**3 - t for t in Counter(combined).values())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0.0:
        return 1.0  # every value tied across both samples
    mean = n1 * n2 / 2.0
    d = u_min - mean
    if d < 0:
        d += 0.5
    elif d > 0:
        d -= 0.5
    z = d / math.sqrt(var)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def mann_whitney_u(
    sample_a: Sequence[float], sample_b: Sequence[float], method: str = "auto"
) -> UTestResult:
    """Two-sided Mann-Whitney U test; U reported as min(U_a, U_b).

    Exact enumeration when n_a * n_b <= 400 and the pooled sample is
    tie-free, otherwise a normal approximation with tie and continuity
    corrections.
    """
    a = [float(v) for v in sample_a]
    b = [float(v) for v in sample_b]
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    combined = a + b
    ranks = _average_ranks(combined)
    r1 = sum(ranks[:n1])
    u1 = n1 * n2 + n1 * (n1 + 1) / 2.0 - r1
    u2 = n1 * n2 - u1
    u_min = min(u1, u2)
    has_ties = len(set(combined)) < len(combined)

    if method == "auto":
        method = "exact" if (n1 * n2 <= EXACT_LIMIT and not has_ties) else "normal_approx"
    if method == "exact":
        if has_ties:
            raise ValueError("exact method requires tie-free samples")
        p = _exact_two_sided_p(u_min, n1, n2)
    elif method == "normal_approx":
        p = _normal_two_sided_p(u_min, n1, n2, combined)
    else:
        raise ValueError(f"unknown method {method!r}")
    return UTestResult(u_statistic=u_min, p_value=p, band=significance_band(p), method=method)


@dataclass(frozen=True)
class QuadrantCell:
    median_coordination: Optional[float]
    median_per_member: Optional[float]
    count: int


@dataclass(frozen=True)
class QuadrantSummary:
    cells: dict[tuple[str, str], QuadrantCell]
    p_values: dict[tuple[tuple[str, str], tuple[str, str]], UTestResult]
    median_size: float
    median_team: float


def median_split_quadrants(records: Sequence[tuple[float, float, float]]) -> QuadrantSummary:
    """Split (size, team_size, coordination) records at the two medians.

    Values equal to a median go to the high bucket.  Each populated cell
    reports median coordination, median coordination per team member, and
    its count; all pairwise cells are compared with the U test.
    """
    records = list(records)
    if len(records) < 4:
        raise ValueError(f"need at least 4 records, got {len(records)}")
    if any(team <= 0 for _, team, _ in records):
        raise ValueError("team_size must be positive")
    med_size = float(median([r[0] for r in records]))
    med_team = float(median([r[1] for r in records]))

    groups: dict[tuple[str, str], list[tuple[float, float]]] = {k: [] for k in QUADRANT_KEYS}
    for size, team, coordination in records:
        key = (
            "low" if size < med_size else "high",
            "low" if team < med_team else "high",
        )
        groups[key].append((coordination, coordination / team))

    cells = {}
    for key in QUADRANT_KEYS:
        members = groups[key]
        cells[key] = QuadrantCell(
            median_coordination=float(median([m[0] for m in members])) if members else None,
            median_per_member=float(median([m[1] for m in members])) if members else None,
            count=len(members),
        )

    p_values = {}
    for i, key_a in enumerate(QUADRANT_KEYS):
        for key_b in QUADRANT_KEYS[i + 1 :]:
            if groups[key_a] and groups[key_b]:
                p_values[(key_a, key_b)] = mann_whitney_u(
                    [m[0] for m in groups[key_a]], [m[0] for m in groups[key_b]]
                )
    return QuadrantSummary(
        cells=cells, p_values=p_values, median_size=med_size, median_team=med_team
    )


@dataclass(frozen=True)
class BinnedGrid:
    values: np.ndarray  # rows = team decile (0 = lowest), cols = size decile
    counts: np.ndarray
    team_edges: tuple[float, ...]
    size_edges: tuple[float, ...]
    agg: str


def _decile_edges(values: Sequence[float]) -> list[float]:
    # nearest-rank percentiles at 10%, 20%, ..., 90%
    ordered = sorted(values)
    n = len(ordered)
    return [ordered[math.ceil(p / 100.0 * n) - 1] for p in range(10, 100, 10)]


def _decile_index(edges: Sequence[float], value: float) -> int:
    return bisect_left(edges, value)


def decile_heatmap(
    records: Sequence[tuple[float, float, float]], agg: str = "mean"
) -> BinnedGrid:
    """10x10 percentile-binned aggregation of log1p(coordination).

    Binning depends only on the order of the axis values, so the grid is
    invariant under strictly monotone transforms of size and team_size.
    """
    records = list(records)
    if len(records) < 10:
        raise ValueError(f"need at least 10 records, got {len(records)}")
    if agg not in ("mean", "median"):
        raise ValueError(f"agg must be 'mean' or 'median', got {agg!r}")
    size_edges = _decile_edges([r[0] for r in records])
    team_edges = _decile_edges([r[1] for r in records])

    buckets: dict[tuple[int, int], list[float]] = {}
    for size, team, coordination in records:
        key = (_decile_index(team_edges, team), _decile_index(size_edges, size))
        buckets.setdefault(key, []).append(math.log1p(coordination))

    values = np.full((10, 10), np.nan)
    counts = np.zeros((10, 10), dtype=int)
    for (ti, si), members in buckets.items():
        counts[ti, si] = len(members)
        values[ti, si] = float(np.mean(members)) if agg == "mean" else float(median(members))
    return BinnedGrid(
        values=values,
        counts=counts,
        team_edges=tuple(team_edges),
        size_edges=tuple(size_edges),
        agg=agg,
    )


def quadrants_to_csv(summary: QuadrantSummary) -> str:
    lines = [
        f"# median_size={summary.median_size:.6f}",
        f"# median_team={summary.median_team:.6f}",
        "size_level,team_level,median_coordination,median_per_member,count",
    ]
    for key in QUADRANT_KEYS:
        cell = summary.cells[key]
        mc = f"{cell.median_coordination:.6f}" if cell.median_coordination is not None else "NA"
        mm = f"{cell.median_per_member:.6f}" if cell.median_per_member is not None else "NA"
        lines.append(f"{key[0]},{key[1]},{mc},{mm},{cell.count}")
    lines.append("# pairwise p-values")
    lines.append("cell_a,cell_b,u,p,band,method")
    for (key_a, key_b), result in summary.p_values.items():
        lines.append(
            f"{key_a[0]}/{key_a[1]},{key_b[0]}/{key_b[1]},"
            f"{result.u_statistic:.6f},{result.p_value:.6f},{result.band},{result.method}"
        )
    return "\n".join(lines) + "\n"


def binned_grid_to_csv(grid: BinnedGrid) -> str:
    lines = [
        f"# agg={grid.agg}",
        "# rows=team_decile columns=size_decile",
        "# size_edges=" + ";".join(f"{e:.6f}" for e in grid.size_edges),
        "# team_edges=" + ";".join(f"{e:.6f}" for e in grid.team_edges),
    ]
    for row in grid.values:
        lines.append(",".join("NA" if math.isnan(v) else f"{v:.6f}" for v in row))
    lines.append("# counts")
    for row in grid.counts:
        lines.append(",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"
