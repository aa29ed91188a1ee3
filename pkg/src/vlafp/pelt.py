"""PELT: exact penalized change-point detection with an L2 cost."""

from __future__ import annotations

import numpy as np

# Pruning slack guards against float rounding breaking the exact-min guarantee.
PRUNE_SLACK = 1e-9


def l2_segment_cost(series: np.ndarray, a: int, b: int) -> float:
    """Sum of squared deviations from the mean on series[a:b]."""
    seg = series[a:b]
    return float(np.sum((seg - seg.mean()) ** 2))


def segmentation_cost(series: np.ndarray, breakpoints: list[int], penalty: float) -> float:
    """Total penalized cost of a segmentation given as end indices (last = len)."""
    x = np.asarray(series, dtype=np.float64)
    total = 0.0
    prev = 0
    for b in breakpoints:
        total += l2_segment_cost(x, prev, b) + penalty
        prev = b
    return total


def default_penalty(series: np.ndarray) -> float:
    """BIC-style default: 2 * ln(n) * var(series)."""
    x = np.asarray(series, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        return 1.0
    return float(2.0 * np.log(n) * np.var(x))


def pelt_changepoints(
    series: np.ndarray, penalty: float, min_size: int = 1, jump: int = 1
) -> list[int]:
    """Optimal segmentation of a 1-D series under SSE cost + per-segment penalty.

    Returns segment end indices in increasing order, final entry = len(series).
    Admissible boundaries lie on the jump grid (the final index always
    qualifies); every segment spans at least min_size points. Candidate
    pruning never discards the optimum for this cost class.
    """
    if penalty <= 0:
        raise ValueError(f"penalty must be positive, got {penalty}")
    if min_size < 1 or jump < 1:
        raise ValueError("min_size and jump must be >= 1")
    x = np.asarray(series, dtype=np.float64)
    n = x.shape[0]
    if n < 2 * min_size:
        return [n]

    s1 = np.concatenate([[0.0], np.cumsum(x)])
    s2 = np.concatenate([[0.0], np.cumsum(x * x)])

    def cost(a: int, b: int) -> float:
        m = b - a
        seg_sum = s1[b] - s1[a]
        return (s2[b] - s2[a]) - seg_sum * seg_sum / m

    ends = sorted({t for t in range(jump, n + 1, jump)} | {n})
    best_cost = {0: -penalty}
    prev_bp = {0: 0}
    candidates = [0]
    for t in ends:
        admissible = [s for s in candidates if t - s >= min_size]
        if not admissible:
            continue
        costs = [best_cost[s] + cost(s, t) + penalty for s in admissible]
        k = int(np.argmin(costs))
        best_cost[t] = costs[k]
        prev_bp[t] = admissible[k]
        kept = [
            s
            for s, c in zip(admissible, costs)
            if c - penalty <= best_cost[t] + PRUNE_SLACK
        ]
        not_yet = [s for s in candidates if t - s < min_size]
        candidates = kept + not_yet + [t]

    if n not in best_cost:
        return [n]
    bps = [n]
    while bps[-1] != 0:
        bps.append(prev_bp[bps[-1]])
    return list(reversed(bps))[1:]
