"""Nonparametric paired and unpaired tests with exact small-sample p-values.

Both tests are two-sided. Small samples get exact p-values by
enumerating the null distribution over the observed (mid)ranks; larger
samples use the normal approximation with tie correction and a 0.5
continuity correction. The cutoffs (15 paired differences; 14 pooled
observations) keep 25-run comparisons on the approximation path, the
common practice for repeated-experiment comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

WILCOXON_EXACT_MAX_N = 15
MANN_WHITNEY_EXACT_MAX_N = 14


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str  # "wilcoxon_signed_rank" | "mann_whitney_u"
    exact: bool
    degenerate: bool = False


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1  # ranks are 1-based
        for pos in range(i, j + 1):
            ranks[order[pos]] = avg
        i = j + 1
    return ranks


def _tie_term(values: Sequence[float]) -> float:
    """Sum of t^3 - t over tie groups."""
    seen: dict[float, int] = {}
    for v in values:
        seen[v] = seen.get(v, 0) + 1
    return float(sum(t**3 - t for t in seen.values() if t > 1))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Paired two-sided test; statistic is min(W+, W-) over nonzero differences.

    Zero differences are dropped. Exact p enumerates sign assignments
    when at most 15 differences remain; beyond that, normal
    approximation with tie correction.
    """
    if len(a) != len(b) or not a:
        raise ValueError("wilcoxon needs two equal-length, non-empty samples")
    diffs = [x - y for x, y in zip(a, b) if x != y]
    n = len(diffs)
    if n == 0:
        return TestResult(0.0, 1.0, "wilcoxon_signed_rank", exact=True, degenerate=True)

    ranks = _midranks([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    w = min(w_plus, w_minus)

    if n <= WILCOXON_EXACT_MAX_N:
        total = sum(ranks)
        # doubled ranks are integers even with midrank ties
        int_ranks = [round(2 * r) for r in ranks]
        dist = [0] * (sum(int_ranks) + 1)
        dist[0] = 1
        for r in int_ranks:
            for s in range(len(dist) - 1 - r, -1, -1):
                if dist[s]:
                    dist[s + r] += dist[s]
        w2 = round(2 * w)
        count = sum(dist[: w2 + 1])
        # the sign-flip symmetry of W+ makes min(W+, W-) <= w twice as likely
        p = 1.0 if 2 * w >= total else min(1.0, 2.0 * count / 2**n)
        return TestResult(float(w), p, "wilcoxon_signed_rank", exact=True)

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term(ranks) / 48.0
    if var <= 0:
        return TestResult(float(w), 1.0, "wilcoxon_signed_rank", exact=False, degenerate=True)
    z = (w - mean + 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * _normal_cdf(z))
    return TestResult(float(w), p, "wilcoxon_signed_rank", exact=False)


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Unpaired two-sided test; statistic is min(U_a, U_b) from pooled midranks."""
    if not a or not b:
        raise ValueError("mann-whitney needs two non-empty samples")
    na, nb = len(a), len(b)
    pooled = list(a) + list(b)
    ranks = _midranks(pooled)
    r_a = sum(ranks[:na])
    u_a = r_a - na * (na + 1) / 2.0
    u_b = na * nb - u_a
    u = min(u_a, u_b)

    if na + nb <= MANN_WHITNEY_EXACT_MAX_N:
        total = 0
        hits = 0
        for subset in combinations(range(na + nb), na):
            r = sum(ranks[i] for i in subset)
            ua = r - na * (na + 1) / 2.0
            total += 1
            if min(ua, na * nb - ua) <= u:
                hits += 1
        return TestResult(float(u), hits / total, "mann_whitney_u", exact=True)

    n = na + nb
    mean = na * nb / 2.0
    var = na * nb / 12.0 * ((n + 1) - _tie_term(pooled) / (n * (n - 1)))
    if var <= 0:
        return TestResult(float(u), 1.0, "mann_whitney_u", exact=False, degenerate=True)
    z = (u - mean + 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * _normal_cdf(z))
    return TestResult(float(u), p, "mann_whitney_u", exact=False)
