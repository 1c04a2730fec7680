"""Shared helpers: record builders and independent brute-force oracles.

The oracles here deliberately avoid the library's fast paths: correlation by
O(n^2) pair scan, BH by direct threshold enumeration, pooled variance by
direct computation.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from releval.core import (
    PopularitySegment,
    QueryRecord,
    RankedPage,
    StratumKey,
)

SEGMENTS = list(PopularitySegment)


def sk(interest: str, popularity: str = "head") -> StratumKey:
    return StratumKey(interest=interest, popularity=PopularitySegment(popularity))


def page(*levels: int) -> RankedPage:
    return RankedPage.from_levels(levels)


def record(query_id: str, control, treatment=None, stratum=None, market="US",
           control_reference=None, treatment_reference=None) -> QueryRecord:
    return QueryRecord(
        query_id=query_id,
        market=market,
        stratum=stratum or sk("art"),
        control=control if isinstance(control, RankedPage) else page(*control),
        treatment=(treatment if treatment is None or isinstance(treatment, RankedPage)
                   else page(*treatment)),
        control_reference=control_reference,
        treatment_reference=treatment_reference,
    )


def raw_record(query_id: str, control_levels, treatment_levels=None,
               interest="art", popularity="head", market="US") -> dict:
    obj = {
        "query_id": query_id,
        "market": market,
        "stratum": {"interest": interest, "popularity": popularity},
        "control": [{"rank": i + 1, "label": lab} for i, lab in enumerate(control_levels)],
    }
    if treatment_levels is not None:
        obj["treatment"] = [{"rank": i + 1, "label": lab}
                            for i, lab in enumerate(treatment_levels)]
    return obj


# -- oracles ------------------------------------------------------------------

def brute_kendall_tau(x, y) -> float:
    """Tau-b by blocked O(n^2) sign scan; independent of the merge-count path."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    s = 0.0
    block = 512
    for lo in range(0, n, block):
        dx = np.sign(x[lo:lo + block, None] - x[None, :])
        dy = np.sign(y[lo:lo + block, None] - y[None, :])
        s += float((dx * dy).sum())
    s /= 2.0  # each unordered pair counted twice; diagonal contributes 0
    n0 = n * (n - 1) / 2.0
    t_x = sum(c * (c - 1) / 2.0 for c in np.unique(x, return_counts=True)[1])
    t_y = sum(c * (c - 1) / 2.0 for c in np.unique(y, return_counts=True)[1])
    return s / math.sqrt((n0 - t_x) * (n0 - t_y))


def brute_spearman_rho(x, y) -> float:
    """Midrank Pearson via scipy-free direct computation."""
    def midranks(a):
        a = np.asarray(a, dtype=float)
        order = np.argsort(a)
        ranks = np.empty(len(a))
        i = 0
        while i < len(a):
            j = i
            while j + 1 < len(a) and a[order[j + 1]] == a[order[i]]:
                j += 1
            ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
            i = j + 1
        return ranks

    rx = midranks(x)
    ry = midranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx * ry).sum() / math.sqrt((rx ** 2).sum() * (ry ** 2).sum()))


def brute_bh_rejections(p_values, q) -> list[bool]:
    """Step-up by direct enumeration of the sorted thresholds."""
    m = len(p_values)
    order = sorted(range(m), key=lambda i: (p_values[i], i))
    k_star = 0
    for pos, i in enumerate(order, start=1):
        if p_values[i] <= pos * q / m:
            k_star = pos
    rejected = [False] * m
    for pos, i in enumerate(order, start=1):
        if pos <= k_star:
            rejected[i] = True
    return rejected


def pooled_population_variance(values) -> float:
    arr = np.asarray(values, dtype=float)
    return float(arr.var())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
