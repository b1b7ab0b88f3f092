import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wcrt import reference
from wcrt.errors import DegenerateInputError, DomainError
from wcrt.waves import (
    all_pair_waves,
    split_waves,
    wave_correlations,
    wave_estimates,
    wave_m1,
    wave_m2,
    wave_m3,
)

HALF = reference.HALF_WAVE


@pytest.mark.parametrize("n, sizes", [(10, (5, 5)), (415, (208, 207)), (9, (5, 4))])
def test_split_sizes(n, sizes):
    s = split_waves(np.arange(n))
    assert (s.n1, s.n2) == sizes
    assert list(s.wave1) + list(s.wave2) == list(range(n))


def test_split_fraction_and_errors():
    s = split_waves(np.arange(10), 0.3)
    assert (s.n1, s.n2) == (3, 7)
    with pytest.raises(DomainError):
        split_waves(np.arange(3))
    with pytest.raises(DomainError):
        split_waves(np.arange(10), 1.0)


@pytest.mark.parametrize("x", [0.955, 0.0, -0.3])
def test_m1_is_late_wave(x):
    assert wave_m1(x) == x


def test_m2_examples():
    assert wave_m2(0.928, 0.955, HALF, HALF) == pytest.approx(0.969, abs=0.002)
    assert wave_m2(0.4, 0.4, 10, 30) == 0.4
    assert wave_m2(0.0, 1.0, 7, 7) == pytest.approx(1.5)


def test_m3_examples():
    est, trunc = wave_m3(0.928, 0.955, HALF, HALF, 415, bounded=True)
    assert est == pytest.approx(0.997, abs=0.005) and not trunc
    est, trunc = wave_m3(0.709, 0.517, HALF, HALF, 3735, bounded=True)
    assert est == -1.0 and trunc
    assert wave_m3(0.709, 0.517, HALF, HALF, 3735)[0] == pytest.approx(-1.31, abs=0.01)
    assert wave_m3(0.3, 0.3, 11, 19, 5000, bounded=True) == (0.3, False)


def test_means_are_never_clipped():
    est = wave_estimates(2.0, 5.0, 10, 10, [100], "mean")
    assert est.m3(100).estimate == pytest.approx(5 + 3 * 110 / 20)
    assert not est.m3(100).truncated


def test_wave_errors():
    with pytest.raises(DomainError):
        wave_m2(0.1, 0.2, 0, 10)
    with pytest.raises(DomainError):
        wave_m3(0.1, 0.2, 10, 10, 0)
    with pytest.raises(DomainError):
        wave_estimates(0.1, 0.2, 10, 10, [5], "median")
    with pytest.raises(KeyError):
        wave_estimates(0.1, 0.2, 10, 10, [5]).m3(6)


def test_table_row_reproduction():
    # Every published M2/M3 value follows from the two wave correlations.
    for pair, (x1, x2, m2, *m3s) in reference.WAVE_TABLE.items():
        est = reference.recomputed_waves()[pair]
        assert est.m2 == pytest.approx(m2, abs=0.002), pair
        for n3, printed in zip(reference.NONRESPONSE_SCENARIOS, m3s):
            assert est.m3(n3).estimate == pytest.approx(printed, abs=0.005), (pair, n3)


def _two_wave_scores(r_early, r_late, n_per_wave, seed=0):
    """Scores whose per-wave sample correlations are exactly the requested values."""
    rng = np.random.default_rng(seed)
    cols = []
    for r in (r_early, r_late):
        a, b = rng.normal(size=(2, n_per_wave))
        a = (a - a.mean()) / a.std()
        b = b - b.mean()
        b = b - (b @ a) / (a @ a) * a
        b = b / b.std()
        cols.append((a, r * a + math.sqrt(1 - r * r) * b))
    x = np.concatenate([cols[0][0], cols[1][0]])
    y = np.concatenate([cols[0][1], cols[1][1]])
    return {"X": x, "Y": y}


def test_wave_correlations_follow_linear_trend():
    scores = _two_wave_scores(0.6, 0.4, 50)
    est = wave_correlations(scores, ("X", "Y"), 0.5, [100, 1000])
    assert (est.x1, est.x2) == pytest.approx((0.6, 0.4), abs=1e-12)
    assert est.m2 == pytest.approx(0.4 - 0.2 * 0.5)
    assert est.m3(100).estimate == pytest.approx(0.4 - 0.2 * 150 / 100)
    assert est.m3(1000).estimate == -1.0 and est.m3(1000).truncated


def test_wave_order_reversal_swaps_waves():
    scores = _two_wave_scores(0.7, 0.2, 40, seed=5)
    fwd = wave_correlations(scores, ("X", "Y"))
    back = wave_correlations({k: v[::-1] for k, v in scores.items()}, ("X", "Y"))
    assert (back.x1, back.x2) == pytest.approx((fwd.x2, fwd.x1), abs=1e-12)


def test_wave_size_override():
    scores = _two_wave_scores(0.6, 0.4, 50)
    est = wave_correlations(scores, ("X", "Y"), wave_sizes=(1.0, 3.0), n3_scenarios=[4])
    assert est.m2 == pytest.approx(0.4 - 0.2 * 3 / 4)


def test_degenerate_wave_is_named():
    x = np.r_[np.ones(10), np.arange(10.0)]
    with pytest.raises(DegenerateInputError, match="wave 1"):
        wave_correlations({"X": x, "Y": np.arange(20.0)}, ("X", "Y"))


def test_all_pairs():
    rng = np.random.default_rng(1)
    scores = {k: rng.normal(size=30) for k in "ABC"}
    out = all_pair_waves(scores, ["A", "B", "C"], n3_scenarios=[10])
    assert list(out) == [("A", "B"), ("A", "C"), ("B", "C")]


corr = st.floats(-0.99, 0.99)
size = st.floats(1, 1000)


@given(corr, corr, size, size, st.floats(1, 10 ** 5))
def test_estimates_ordered_along_trend(x1, x2, n1, n2, n3):
    est = wave_estimates(x1, x2, n1, n2, [n3], "mean")
    raw = est.m3(n3).raw
    if x2 > x1:
        assert est.m1 <= est.m2 <= raw
    elif x2 < x1:
        assert est.m1 >= est.m2 >= raw
    else:
        assert est.m1 == est.m2 == raw


@given(corr, corr, size, size, st.floats(1, 10 ** 5))
def test_m3_minus_m2_identity(x1, x2, n1, n2, n3):
    est = wave_estimates(x1, x2, n1, n2, [n3], "correlation")
    m2_raw = x2 + (x2 - x1) * n2 / (n1 + n2)
    assert est.m3(n3).raw - m2_raw == pytest.approx((x2 - x1) * n3 / (n1 + n2), abs=1e-9)
    assert est.m3(n3).truncated == (abs(est.m3(n3).raw) > 1)


@given(corr, corr, size, size, st.floats(1, 10 ** 4), st.floats(1, 10 ** 4))
def test_truncated_m3_monotone_in_n3(x1, x2, n1, n2, a, b):
    lo, hi = sorted((a, b))
    est = wave_estimates(x1, x2, n1, n2, [lo, hi])
    e_lo, e_hi = est.m3(lo).estimate, est.m3(hi).estimate
    if x2 >= x1:
        assert e_hi >= e_lo - 1e-12
    else:
        assert e_hi <= e_lo + 1e-12
