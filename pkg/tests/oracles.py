"""Independent reference implementations shared by the test modules."""

import numpy as np


def dp_oracle(series, penalty, min_size=1, jump=1):
    """Unpruned O(n^2) dynamic program over the admissible boundary set."""
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if n < 2 * min_size:
        return [n]
    ends = sorted({t for t in range(jump, n + 1, jump)} | {n})
    best = {0: -penalty}
    prev = {}
    for t in ends:
        options = []
        for s in [0] + [e for e in ends if e < t]:
            if s in best and t - s >= min_size:
                seg = x[s:t]
                options.append((best[s] + np.sum((seg - seg.mean()) ** 2) + penalty, s))
        if options:
            best[t], prev[t] = min(options, key=lambda o: o[0])
    bps = [n]
    while bps[-1] != 0:
        bps.append(prev[bps[-1]])
    return list(reversed(bps))[1:]


def naive_convolve(x, h):
    """Direct O(n*m) linear convolution truncated to len(x)."""
    out = np.zeros(len(x))
    for i in range(len(out)):
        lo = max(0, i - len(h) + 1)
        for j in range(lo, i + 1):
            out[i] += x[j] * h[i - j]
    return out


def exhaustive_best_f1(scores, labels):
    """Enumerate every candidate threshold; recompute P/R/F1 from scratch."""
    best = (-1.0, None, None, None)
    for th in sorted(set(scores)) + [np.inf]:
        tp = sum(1 for s, l in zip(scores, labels) if s >= th and l)
        fp = sum(1 for s, l in zip(scores, labels) if s >= th and not l)
        fn = sum(1 for s, l in zip(scores, labels) if s < th and l)
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        if f1 > best[0]:
            best = (f1, th, p, r)
    return best
