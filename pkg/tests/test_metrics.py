import math

import numpy as np
import pytest

from releval.errors import EmptyPage, MissingArm
from releval.metrics import paired_delta, sdcg_at_k

from conftest import page, record

# frozen from arbitrary-precision evaluation of the score formula
SDCG_L5_L1_AT_2 = 0.6905177542123668


def test_all_top_labels_score_one():
    for k in (1, 2, 5, 25):
        assert sdcg_at_k(page(*([5] * 30)), k).value == pytest.approx(1.0, abs=1e-12)


def test_all_bottom_labels_score_point_two():
    for k in (1, 3, 25):
        assert sdcg_at_k(page(*([1] * 30)), k).value == pytest.approx(0.2, abs=1e-12)


def test_two_result_anchor():
    assert sdcg_at_k(page(5, 1), 2).value == pytest.approx(SDCG_L5_L1_AT_2, abs=1e-6)


def test_single_result_ratio():
    assert sdcg_at_k(page(3), 1).value == pytest.approx(0.6, abs=1e-12)


def test_short_page_truncates_and_flags():
    score = sdcg_at_k(page(5, 1), 25)
    assert score.short_page
    assert score.k_effective == 2
    assert score.value == pytest.approx(SDCG_L5_L1_AT_2, abs=1e-12)
    assert not sdcg_at_k(page(5, 1), 2).short_page


def test_empty_page_rejected():
    with pytest.raises(EmptyPage):
        sdcg_at_k(page(), 25)


def test_entries_beyond_k_never_affect_score(rng):
    for _ in range(100):
        k = int(rng.integers(1, 10))
        levels = list(rng.integers(1, 6, size=k + int(rng.integers(1, 10))))
        base = sdcg_at_k(page(*levels), k).value
        tail_changed = levels[:k] + list(rng.integers(1, 6, size=len(levels) - k))
        assert sdcg_at_k(page(*tail_changed), k).value == base


def test_raising_any_label_strictly_increases(rng):
    for _ in range(300):
        k = int(rng.integers(1, 12))
        levels = list(rng.integers(1, 5, size=k))  # leave headroom to raise
        i = int(rng.integers(0, k))
        raised = list(levels)
        raised[i] += 1
        assert sdcg_at_k(page(*raised), k).value > sdcg_at_k(page(*levels), k).value


def test_swapping_higher_label_earlier_strictly_increases(rng):
    for _ in range(300):
        k = int(rng.integers(2, 12))
        levels = list(rng.integers(1, 6, size=k))
        i, j = sorted(rng.choice(k, size=2, replace=False))
        if levels[i] == levels[j]:
            levels[j] = levels[i] % 5 + 1
        lo_first = list(levels)
        lo_first[i], lo_first[j] = min(levels[i], levels[j]), max(levels[i], levels[j])
        hi_first = list(levels)
        hi_first[i], hi_first[j] = max(levels[i], levels[j]), min(levels[i], levels[j])
        assert sdcg_at_k(page(*hi_first), k).value > sdcg_at_k(page(*lo_first), k).value


def test_accumulation_insensitivity():
    levels = [((i * 7) % 5) + 1 for i in range(500)]
    forward = sdcg_at_k(page(*levels), 500).value
    disc = [1.0 / math.log2(1.0 + k) for k in range(1, 501)]
    reverse_num = sum(lab * d for lab, d in zip(reversed(levels), reversed(disc)))
    reverse = reverse_num / (5.0 * sum(reversed(disc)))
    assert forward == pytest.approx(reverse, rel=1e-12)


def test_paired_delta_examples():
    same = record("q", page(4, 3), page(4, 3))
    assert paired_delta(same, 2) == 0.0
    extremes = record("q", page(1, 1, 1), page(5, 5, 5))
    assert paired_delta(extremes, 3) == pytest.approx(0.8, abs=1e-12)
    mixed = record("q", page(1, 1), page(5, 1))
    assert paired_delta(mixed, 2) == pytest.approx(SDCG_L5_L1_AT_2 - 0.2, abs=1e-6)


def test_paired_delta_antisymmetry(rng):
    for _ in range(100):
        k = int(rng.integers(1, 8))
        a = page(*rng.integers(1, 6, size=k))
        b = page(*rng.integers(1, 6, size=k))
        fwd = paired_delta(record("q", a, b), k)
        rev = paired_delta(record("q", b, a), k)
        assert fwd == -rev


def test_paired_delta_requires_both_arms():
    with pytest.raises(MissingArm):
        paired_delta(record("q", page(5)), 1)


def test_delta_range():
    worst = paired_delta(record("q", page(5, 5), page(1, 1)), 2)
    assert worst == pytest.approx(-0.8, abs=1e-12)
    best = paired_delta(record("q", page(1, 1), page(5, 5)), 2)
    assert best == pytest.approx(0.8, abs=1e-12)
