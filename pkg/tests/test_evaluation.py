from __future__ import annotations

import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as scipy_stats

from cigdp.errors import InvalidArgumentError
from cigdp.evaluation import (
    EvaluationWarning,
    RunRecord,
    gap,
    npi,
    npi_alt,
    performance_profile,
    profile_ratios,
    shared_ranks,
    signed_rank_distribution,
    summarize,
    wilcoxon_signed_rank,
)


def test_gap_cases():
    assert gap(40, 40) == 0
    assert gap(50, 40) == pytest.approx(0.25)
    assert gap(0, 0) == 0
    assert gap(3, 0) is None


# -- primal integrals ------------------------------------------------------------


def test_npi_boundaries_exact():
    assert npi([(100, 0.0)], 100, 10) == 1.0
    assert npi([], 100, 10) == 1.1
    assert npi([(115, 1.0), (110, 3.0)], 100, 7.3) == 1.1  # nothing below 1.1 f*


def test_npi_hand_integrated_trace():
    # 1.1 on [0, 2), 1.08 on [2, 6), 1.0 on [6, 10]: area 2.2 + 4.32 + 4.0
    assert npi([(108, 2.0), (100, 6.0)], 100, 10) == pytest.approx(1.052, abs=1e-12)


def test_npi_clamps_late_times_with_warning():
    with pytest.warns(EvaluationWarning):
        value = npi([(100, 12.0)], 100, 10)
    assert value == pytest.approx(1.1)


def test_npi_rejects_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        npi([], 0, 10)
    with pytest.raises(InvalidArgumentError):
        npi([], 10, 0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 500), st.floats(0, 100)), max_size=12), st.floats(0.1, 100))
def test_npi_range_when_f_star_is_best(trace, t_max):
    trace = [(v, min(t, t_max)) for v, t in trace]
    f_star = min([v for v, _ in trace], default=37)
    value = npi(trace, f_star, t_max)
    assert 1.0 - 1e-12 <= value <= 1.1 + 1e-12
    alt = npi_alt(trace, f_star, t_max)
    assert 0.0 <= alt <= 1.0 + 1e-12


def test_npi_alt_values():
    assert npi_alt([(100, 0.0)], 100, 10) == 0.0
    assert npi_alt([], 100, 10) == 1.0
    # gap 1 on [0, 5), (120 - 100) / 120 on [5, 10]
    assert npi_alt([(120, 5.0)], 100, 10) == pytest.approx(0.5 + 0.5 * 20 / 120)


# -- performance profiles --------------------------------------------------------


def test_profile_dominating_heuristic():
    values = {"i1": {"a": 1, "b": 3}, "i2": {"a": 2, "b": 5}}
    prof = performance_profile(values, [1.0, 2.0, 2.5, 3.0])
    assert prof["a"].tolist() == [1.0, 1.0, 1.0, 1.0]
    assert prof["b"].tolist() == [0.0, 0.0, 0.5, 1.0]


def test_profile_all_equal_and_zero_best():
    values = {"i1": {"a": 4, "b": 4}, "i2": {"a": 0, "b": 0}, "i3": {"a": 0, "b": 2}}
    ratios = profile_ratios(values)
    assert ratios["i2"] == {"a": 1.0, "b": 1.0}
    assert ratios["i3"]["b"] == float("inf")
    prof = performance_profile(values, [1.0])
    assert prof["a"][0] == 1.0


def test_profile_at_one_equals_best_counts(rng):
    values = {f"i{k}": {h: int(rng.integers(1, 6)) for h in "abc"} for k in range(50)}
    prof = performance_profile(values, [1.0, 1.5, 10.0])
    for h in "abc":
        wins = sum(cells[h] == min(cells.values()) for cells in values.values())
        assert prof[h][0] == wins / 50
        assert np.all(np.diff(prof[h]) >= 0) and prof[h][-1] == 1.0


def test_profile_drops_missing_cells():
    with pytest.warns(EvaluationWarning):
        prof = performance_profile({"i1": {"a": 1, "b": 2}, "i2": {"a": 1}}, [1.0])
    assert prof["b"][0] == 0.0 and prof["a"][0] == 1.0


# -- Wilcoxon -------------------------------------------------------------------


def test_wilcoxon_identical_is_no_test():
    result = wilcoxon_signed_rank([1, 2, 3], [1, 2, 3])
    assert result.method == "no-test" and result.p_value is None and not result.significant


def test_wilcoxon_constant_shift_exact_table():
    b = np.arange(10, dtype=float) * 3
    a = b + 2.5
    result = wilcoxon_signed_rank(a, b)
    # every difference has the same sign: 2 of the 2^10 sign patterns are as extreme
    patterns = list(itertools.product([-1, 1], repeat=10))
    ranks = [5.5] * 10  # all |differences| tie
    w = [sum(r for r, s in zip(ranks, p) if s > 0) for p in patterns]
    observed = sum(ranks)
    p_brute = sum(x >= observed for x in w) / len(w) * 2
    assert result.method == "exact"
    assert result.p_value == pytest.approx(p_brute) == pytest.approx(0.001953125)
    assert result.significant


def test_signed_rank_distribution_matches_enumeration():
    ranks = [1, 2.5, 2.5, 4, 5, 6]
    dist = signed_rank_distribution(ranks)
    counts = {}
    for signs in itertools.product([0, 1], repeat=6):
        w = sum(r for r, s in zip(ranks, signs) if s)
        counts[w] = counts.get(w, 0) + 1
    assert dist == pytest.approx({w: c / 64 for w, c in counts.items()})


def test_wilcoxon_statistic_matches_brute_force_ranks(rng):
    for _ in range(30):
        a = rng.integers(0, 20, size=8).astype(float)
        b = rng.integers(0, 20, size=8).astype(float)
        diff = a - b
        diff = diff[diff != 0]
        if len(diff) == 0:
            continue
        mags = np.abs(diff)
        ranks = np.array([np.sum(mags < m) + (np.sum(mags == m) + 1) / 2 for m in mags])
        w_plus = ranks[diff > 0].sum()
        result = wilcoxon_signed_rank(a, b)
        assert result.w_plus == pytest.approx(w_plus)
        assert result.statistic == pytest.approx(min(w_plus, ranks[diff < 0].sum()))


@pytest.mark.parametrize("n", [8, 20])
def test_wilcoxon_exact_agrees_with_scipy(rng, n):
    a = rng.normal(size=n)
    b = a + rng.normal(0.3, 1, size=n)
    ours = wilcoxon_signed_rank(a, b)
    ref = scipy_stats.wilcoxon(a, b, method="exact")
    assert ours.method == "exact"
    assert ours.statistic == pytest.approx(ref.statistic)
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_wilcoxon_normal_agrees_with_scipy_under_ties(rng):
    a = rng.normal(size=40).round(1)
    b = (a + rng.normal(0.3, 1, size=40)).round(1)
    ours = wilcoxon_signed_rank(a, b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ref = scipy_stats.wilcoxon(a, b, method="approx", correction=True)
    assert ours.method == "normal"
    assert ours.statistic == pytest.approx(ref.statistic)
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-9)


# -- tables ----------------------------------------------------------------------


def test_summarize_group_means():
    recs = [
        RunRecord("x", "g", 0, 10, 1.0, [(12, 0.1), (10, 0.5)]),
        RunRecord("x", "g", 1, 12, 2.0, [(12, 0.2)]),
        RunRecord("x", "h", 0, 11, 1.5, [(11, 0.3)]),
        RunRecord("y", "g", 0, 20, 3.0, [(20, 1.0)]),
        RunRecord("y", "h", 0, 25, 4.0, [(25, 2.0)]),
        RunRecord("z", "g", 0, 7, 0.5, [(7, 0.1)]),
        RunRecord("z", "h", 0, 8, 0.5, [(9, 0.1), (8, 0.2)]),
        RunRecord("z", "h", 1, 7, 0.6, [(7, 0.4)]),
        RunRecord("w", "g", 0, 0, 0.1, [(0, 0.0)]),
        RunRecord("w", "h", 0, 1, 0.1, [(1, 0.0)]),
    ]
    groups = {"x": (2,), "y": (2,), "z": (3,), "w": (3,)}
    optima = {"x": 10, "y": 20, "z": 7, "w": 0}
    with pytest.warns(EvaluationWarning):
        table = summarize(recs, groups, ("layers",), optima)
    assert table.reference == "optimum"
    rows = {(r.group, r.heuristic): r for r in table.rows}
    assert rows[((2,), "g")].gap == pytest.approx((0 + 0.2 + 0) / 3)
    assert rows[((2,), "g")].seconds == pytest.approx(2.0)
    assert rows[((2,), "h")].gap == pytest.approx((0.1 + 0.25) / 2)
    assert rows[((3,), "h")].gap == pytest.approx((1 / 7 + 0) / 2)
    assert rows[((3,), "h")].undefined_gaps == 1
    assert rows[((3,), "g")].gap == 0
    assert table.warnings and "undefined gap" in table.warnings[0]
    assert table.to_csv().splitlines()[0].startswith("layers,heuristic,runs,gap,")


def test_summarize_bks_mode():
    recs = [RunRecord("x", "g", 0, 10, 1.0, [(10, 0.5)]), RunRecord("x", "h", 0, 12, 1.0, [(12, 0.5)])]
    table = summarize(recs)
    assert table.reference == "bks"
    assert table.overall() == {"g": 0.0, "h": pytest.approx(0.2)}
    assert ",bks_gap," in table.to_csv().splitlines()[0]


def test_shared_ranks():
    assert shared_ranks({"a": 54.72, "b": 54.72, "c": 60.0}) == {"a": 1, "b": 1, "c": 3}
