import json
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wcrt import reference
from wcrt.dataset import (
    Scale,
    ScaleConfig,
    ScaleScores,
    build_scales,
    correlation_matrix,
    load_csv,
    reverse_code,
    scale_alphas,
    significance_marker,
)
from wcrt.errors import ConfigError, DataError, DegenerateInputError, DomainError
from wcrt.solver import TestSpec
from wcrt.synthetic import SyntheticSurveyConfig, generate, write_survey
from wcrt.waves import wave_correlations


def write(tmp_path, text, name="s.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- ingestion -------------------------------------------------------------

def test_three_rows_in_order(tmp_path):
    t = load_csv(write(tmp_path, "a,b\n1,2\n3,4\n5,6\n"))
    assert t.items == ["a", "b"]
    assert t.values.tolist() == [[1, 2], [3, 4], [5, 6]]
    assert t.complete.all() and len(t) == 3


def test_blank_cell_marks_row_incomplete(tmp_path):
    t = load_csv(write(tmp_path, "a,b\n1,2\n3,\n5,6\n"))
    assert t.complete.tolist() == [True, False, True]


@pytest.mark.parametrize("body, row, col", [
    ("a,b\n1,2\n3,9\n", 2, "b"),
    ("a,b\n1,x\n", 1, "b"),
    ("a,b\n0,2\n", 1, "a"),
])
def test_bad_cells_report_location(tmp_path, body, row, col):
    with pytest.raises(DataError) as exc:
        load_csv(write(tmp_path, body))
    assert exc.value.row == row and exc.value.column == col
    assert f"row {row}" in str(exc.value) and col in str(exc.value)


@pytest.mark.parametrize("body", ["", "a,a\n1,2\n", "a,b\n1,2,3\n"])
def test_malformed_files(tmp_path, body):
    with pytest.raises(DataError):
        load_csv(write(tmp_path, body))


def test_timestamp_reorders(tmp_path):
    body = "id,timestamp,a\nr1,2024-01-03T10:00:00,1\nr2,2024-01-01T09:00:00Z,2\nr3,2024-01-02,3\n"
    t = load_csv(write(tmp_path, body), id_columns=("id",))
    assert t.items == ["a"]
    assert t.values[:, 0].tolist() == [2, 3, 1]
    assert t.row_numbers == [2, 3, 1]
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "timestamp,a\nyesterday,1\n", "b.csv"))


def test_custom_scale_points(tmp_path):
    t = load_csv(write(tmp_path, "a\n10\n1\n"), scale_points=10)
    assert t.values[:, 0].tolist() == [10, 1]


def test_unknown_column(tmp_path):
    t = load_csv(write(tmp_path, "a\n1\n"))
    with pytest.raises(ConfigError):
        t.column("b")


# --- scales ----------------------------------------------------------------

@pytest.mark.parametrize("x, y", [(1, 7), (4, 4), (7, 1)])
def test_reverse_code_examples(x, y):
    assert reverse_code(x, 7) == y


@given(st.lists(st.integers(1, 9), min_size=1), st.integers(2, 9))
def test_reverse_code_involution(vals, k):
    vals = [min(v, k) for v in vals]
    assert reverse_code(reverse_code(vals, k), k).tolist() == vals


def _table(tmp_path, rows, header="i1,i2,i3,j1,j2"):
    body = header + "\n" + "\n".join(",".join(str(v) for v in r) for r in rows) + "\n"
    return load_csv(write(tmp_path, body))


CFG = ScaleConfig((Scale("I", ("i1", "i2", "i3")), Scale("J", ("j1", "j2"), reversed=("j2",))))


def test_scale_sums_and_reverse(tmp_path):
    t = _table(tmp_path, [[2, 5, 7, 1, 1], [1, 1, 1, 7, 7], [3, 3, "", 4, 4]])
    s = build_scales(t, CFG)
    assert s.scores.tolist() == [[14, 8], [3, 8]]
    assert s.row_numbers == [1, 2]
    kept = build_scales(t, CFG, drop_incomplete=False)
    assert len(kept) == 3 and np.isnan(kept.scores[2, 0])


def test_scale_config_validation_and_json(tmp_path):
    with pytest.raises(ConfigError):
        ScaleConfig((Scale("A", ("x",), reversed=("y",)),))
    with pytest.raises(ConfigError):
        ScaleConfig((Scale("A", ("x",)), Scale("B", ("x",))))
    with pytest.raises(ConfigError):
        ScaleConfig.from_dict({"scales": [{"items": ["x"]}]})
    p = write(tmp_path, json.dumps(reference.SCALE_CONFIG.to_dict()), "c.json")
    assert ScaleConfig.from_json(p) == reference.SCALE_CONFIG
    with pytest.raises(ConfigError):
        ScaleConfig.from_json(write(tmp_path, "{", "bad.json"))


def test_missing_configured_item(tmp_path):
    t = _table(tmp_path, [[1, 2, 3, 4, 5]])
    with pytest.raises(ConfigError):
        build_scales(t, ScaleConfig((Scale("K", ("k1",)),)))


@given(st.permutations([0, 1, 2]))
def test_scale_scores_ignore_item_order(perm):
    rng = np.random.default_rng(4)
    items = ["i1", "i2", "i3"]
    from wcrt.dataset import SurveyTable
    t = SurveyTable(items, rng.integers(1, 8, size=(20, 3)).astype(float), list(range(1, 21)))
    a = build_scales(t, ScaleConfig((Scale("I", tuple(items), ("i2",)),)))
    b = build_scales(t, ScaleConfig((Scale("I", tuple(items[k] for k in perm), ("i2",)),)))
    assert np.array_equal(a.scores, b.scores)


@given(st.lists(st.booleans(), min_size=5, max_size=40))
def test_dropping_incomplete_preserves_order(holes):
    from wcrt.dataset import SurveyTable
    n = len(holes)
    vals = np.column_stack([np.arange(1, n + 1) % 7 + 1, np.ones(n)]).astype(float)
    vals[np.array(holes), 1] = np.nan
    t = SurveyTable(["a", "b"], vals, list(range(1, n + 1)))
    s = build_scales(t, ScaleConfig((Scale("A", ("a",)),)), drop_incomplete=True)
    assert s.row_numbers == sorted(s.row_numbers)
    assert s.row_numbers == [k + 1 for k in range(n) if not holes[k]]


# --- correlations ----------------------------------------------------------

def _scores(cols, names=None):
    m = np.column_stack(cols).astype(float)
    return ScaleScores(names or [f"S{i}" for i in range(m.shape[1])], m, list(range(len(m))))


def test_correlation_matrix_shape_and_markers():
    rng = np.random.default_rng(9)
    base = rng.normal(size=200)
    s = _scores([base, base + rng.normal(size=200), rng.normal(size=200)])
    mat = correlation_matrix(s)
    assert np.allclose(mat.r, mat.r.T) and np.all(np.diag(mat.r) == 1.0)
    assert mat.marker(0, 1) == "***" and mat.marker(0, 0) == ""
    assert mat.significant[0, 1]
    assert [p[:2] for p in mat.pairs()] == [("S0", "S1"), ("S0", "S2"), ("S1", "S2")]


def test_independent_noise_is_uncorrelated():
    rng = np.random.default_rng(2024)
    mat = correlation_matrix(_scores([rng.normal(size=1000), rng.normal(size=1000)]))
    assert abs(mat.r[0, 1]) < 0.1


def test_correlation_matrix_errors():
    with pytest.raises(DegenerateInputError, match="FLAT"):
        correlation_matrix(_scores([np.arange(10), np.ones(10)], ["A", "FLAT"]))
    with pytest.raises(DomainError):
        correlation_matrix(_scores([np.arange(3), np.arange(3)[::-1]]))


def test_one_tailed_p_values():
    rng = np.random.default_rng(1)
    x = rng.normal(size=100)
    s = _scores([x, -x + rng.normal(size=100)])
    up = correlation_matrix(s, TestSpec("correlation", "upper"))
    down = correlation_matrix(s, TestSpec("correlation", "lower"))
    assert up.p[0, 1] > 0.99 and down.p[0, 1] < 0.01
    assert not up.significant[0, 1] and down.significant[0, 1]


@given(st.floats(0.1, 10), st.floats(-10, 10))
def test_correlations_invariant_to_affine_rescaling(scale, shift):
    rng = np.random.default_rng(7)
    x = rng.normal(size=60)
    y = x + rng.normal(size=60)
    a = correlation_matrix(_scores([x, y])).r[0, 1]
    b = correlation_matrix(_scores([x * scale + shift, y])).r[0, 1]
    assert a == pytest.approx(b, abs=1e-12)


@pytest.mark.parametrize("p, mark", [(0.0005, "***"), (0.005, "**"), (0.03, "*"), (0.2, "")])
def test_significance_marker(p, mark):
    assert significance_marker(p) == mark


# --- synthetic survey -------------------------------------------------------

def test_synthetic_survey_shape_and_determinism(tmp_path):
    data, cfg = write_survey(tmp_path)
    table = load_csv(data)
    assert len(table) == reference.N_TOTAL
    assert int(table.complete.sum()) == reference.N_COMPLETE
    again = generate(SyntheticSurveyConfig())
    assert all(np.array_equal(again[k], table.column(k), equal_nan=True) for k in again)
    config = ScaleConfig.from_json(cfg)
    alphas = scale_alphas(table, config)
    assert set(alphas) == set(config.names) and all(0.7 < a < 1 for a in alphas.values())


# --- published data (optional) ---------------------------------------------

DATA = os.environ.get("WCRT_DATA")
needs_data = pytest.mark.skipif(not DATA, reason="set WCRT_DATA to the published survey CSV")


@pytest.fixture(scope="module")
def published():
    table = load_csv(Path(DATA))
    scores = build_scales(table, reference.SCALE_CONFIG)
    return table, scores


@needs_data
def test_published_counts(published):
    table, scores = published
    assert len(table) == reference.N_TOTAL
    assert int(table.complete.sum()) == reference.N_COMPLETE == len(scores)


@needs_data
def test_published_alphas(published):
    table, _ = published
    alphas = scale_alphas(table, reference.SCALE_CONFIG)
    for name, expected in reference.CRONBACH_ALPHA.items():
        assert alphas[name] == pytest.approx(expected, abs=0.005)


@needs_data
def test_published_correlations(published):
    _, scores = published
    mat = correlation_matrix(scores)
    assert mat.r[0, 1] == pytest.approx(0.94, abs=0.005)
    assert all(p < 0.001 for i, row in enumerate(mat.p) for j, p in enumerate(row) if i < j)


@needs_data
def test_published_wave_row(published):
    _, scores = published
    est = wave_correlations(scores.as_dict(), ("EXP", "SAT"), 0.5, reference.NONRESPONSE_SCENARIOS)
    x1, x2, m2, *m3s = reference.WAVE_TABLE["EXP, SAT"]
    assert (est.x1, est.x2, est.m2) == pytest.approx((x1, x2, m2), abs=0.01)
    assert [est.m3(n).estimate for n in reference.NONRESPONSE_SCENARIOS] == pytest.approx(m3s, abs=0.01)
