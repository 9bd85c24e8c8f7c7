import numpy as np
import pytest

from src.config import SepScoreConfig
from src.errors import ManifestError, NegativeInputForLog, ZeroSum
from src.evaluation import (
    CandidateRow,
    EmbeddingCandidate,
    Normalization,
    SeparabilityEvaluator,
    adjust_grid_pvalues,
    avg_rank_table,
    normalize,
    score_candidate,
    select_best,
)
from src.models import ALL_INDICES, IndexId, IndexScore
from src.significance import NullModelSummary

from .conftest import make_cloud


@pytest.mark.parametrize(
    "matrix, scheme, expected",
    [
        ([[1, 1], [2, 2]], "DRS", [[0.5, 0.5], [0.5, 0.5]]),
        ([[1, 3], [3, 1]], "DCS", [[0.25, 0.75], [0.75, 0.25]]),
        ([[9, 99]], "LOG", [[1, 2]]),
        ([[1.5, -2.0]], "NON", [[1.5, -2.0]]),
    ],
)
def test_normalize(matrix, scheme, expected):
    np.testing.assert_allclose(normalize(np.array(matrix, float), scheme), expected)


def test_normalize_errors():
    with pytest.raises(ZeroSum):
        normalize(np.array([[1.0, -1.0], [2.0, 2.0]]), Normalization.DRS)
    with pytest.raises(ZeroSum):
        normalize(np.array([[0.0, 1.0], [0.0, 2.0]]), Normalization.DCS)
    with pytest.raises(NegativeInputForLog):
        normalize(np.array([[-1.0]]), Normalization.LOG)


def test_normalize_returns_copy():
    original = np.array([[1.0, 2.0]])
    normalize(original, "NON")[0, 0] = 7.0
    assert original[0, 0] == 1.0


def _candidate(method, cloud, **params):
    return EmbeddingCandidate.create(method, cloud, params=params)


def test_score_candidate_all_indices(three_separated_1d):
    row = score_candidate(_candidate("isomap", three_separated_1d, k=5), ALL_INDICES, 0, seed=0)
    assert set(row.scores) == set(ALL_INDICES)
    assert row.value(IndexId.PSI_ROC) == 1.0
    assert row.null == {}


def test_score_candidate_respects_selection(three_separated_1d):
    row = score_candidate(_candidate("isomap", three_separated_1d), [IndexId.TH], 0, seed=0)
    assert list(row.scores) == [IndexId.TH]


def test_score_candidate_deterministic(gaussian_groups):
    candidate = _candidate("tsne", gaussian_groups, p=30)
    first = score_candidate(candidate, [IndexId.PSI_ROC, IndexId.TH], 25, seed=3)
    second = score_candidate(candidate, [IndexId.PSI_ROC, IndexId.TH], 25, seed=3)
    assert first.scores == second.scores
    assert first.null == second.null


def _rows(method, index_id, values):
    cloud = make_cloud([[0.0], [1.0], [2.0], [3.0]], ["a", "a", "b", "b"])
    rows = []
    for position, value in enumerate(values):
        candidate = _candidate(method, cloud, setting=position)
        rows.append(
            CandidateRow(candidate=candidate, scores={index_id: IndexScore.of(index_id, value)})
        )
    return rows


def test_select_best_keeps_plural_optima():
    rows = _rows("tsne", IndexId.PSI_PR, [1.0, 1.0, 0.9])
    best = select_best(rows, IndexId.PSI_PR)
    assert [row.candidate.params for row in best] == [(("setting", 0),), (("setting", 1),)]


def test_select_best_single_row():
    rows = _rows("tsne", IndexId.TH, [0.3])
    assert select_best(rows, IndexId.TH) == rows


def test_select_best_lower_is_better():
    rows = _rows("tsne", IndexId.PSI_P, [0.01, 0.5])
    assert select_best(rows, IndexId.PSI_P) == [rows[0]]


def test_select_best_relative_tolerance():
    rows = _rows("tsne", IndexId.CH, [100.0, 100.0 * (1 + 1e-12), 99.0])
    assert len(select_best(rows, IndexId.CH)) == 2


def test_select_best_infinity_ties_only_infinity():
    rows = _rows("tsne", IndexId.DN, [float("inf"), 1e300, float("inf")])
    assert len(select_best(rows, IndexId.DN)) == 2


def test_select_best_invariant_under_monotone_transform():
    values = [0.2, 0.7, 0.7, 0.1]
    plain = select_best(_rows("m", IndexId.TH, values), IndexId.TH)
    transformed = select_best(_rows("m", IndexId.TH, [np.exp(3 * v) for v in values]), IndexId.TH)
    assert [row.candidate.key for row in plain] == [row.candidate.key for row in transformed]


def _with_null(rows, index_id, p_values):
    result = []
    for row, p in zip(rows, p_values):
        summary = NullModelSummary(index_id, 0.0, 0.0, 0.0, p, 100, 0)
        result.append(CandidateRow(candidate=row.candidate, scores=row.scores, null={index_id: summary}))
    return result


@pytest.mark.parametrize(
    "raw, expected",
    [
        ([0.01, 0.02, 0.03], [0.03, 0.03, 0.03]),
        ([0.04], [0.04]),
        ([0.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
    ],
)
def test_adjust_grid_pvalues(raw, expected):
    rows = _with_null(_rows("tsne", IndexId.TH, [0.5] * len(raw)), IndexId.TH, raw)
    adjusted = adjust_grid_pvalues(rows)
    np.testing.assert_allclose([row.p_bh[IndexId.TH] for row in adjusted], expected)


def test_adjust_grid_pvalues_per_method_family():
    tsne = _with_null(_rows("tsne", IndexId.TH, [0.5, 0.5]), IndexId.TH, [0.01, 0.02])
    isomap = _with_null(_rows("isomap", IndexId.TH, [0.5]), IndexId.TH, [0.01])
    adjusted = adjust_grid_pvalues(tsne + isomap)
    np.testing.assert_allclose([row.p_bh[IndexId.TH] for row in adjusted], [0.02, 0.02, 0.01])


def test_avg_rank_unanimous():
    best = {
        "A": {index_id: 0.9 if index_id is not IndexId.PSI_P else 0.01 for index_id in ALL_INDICES},
        "B": {index_id: 0.1 if index_id is not IndexId.PSI_P else 0.5 for index_id in ALL_INDICES},
    }
    table = avg_rank_table(best, ALL_INDICES)
    assert table["method"].tolist() == ["A", "B"]
    assert table["avg_rank"].tolist() == [1.0, 2.0]


def test_avg_rank_ties_average():
    indices = [IndexId.TH, IndexId.SH]
    best = {"A": {IndexId.TH: 0.5, IndexId.SH: 0.9}, "B": {IndexId.TH: 0.5, IndexId.SH: 0.1}}
    table = avg_rank_table(best, indices).set_index("method")
    assert table.loc["A", "th"] == 1.5
    assert table.loc["B", "th"] == 1.5
    assert table.loc["A", "avg_rank"] == pytest.approx(1.25)
    assert table.loc["B", "avg_rank"] == pytest.approx(1.75)


def _brute_force_ranks(values, higher_better=True):
    ranks = []
    for value in values:
        better = sum(1 for other in values if (other > value if higher_better else other < value))
        tied = sum(1 for other in values if other == value)
        ranks.append(better + (tied + 1) / 2.0)
    return ranks


def test_avg_rank_hand_built_fixture():
    methods = ["isomap", "mce", "tsne"]
    columns = {
        IndexId.PSI_P: [0.01, 0.01, 0.2],
        IndexId.PSI_ROC: [0.9, 1.0, 0.8],
        IndexId.PSI_PR: [0.9, 0.95, 0.9],
        IndexId.SH: [0.3, 0.5, 0.1],
        IndexId.CH: [120.0, 80.0, 80.0],
        IndexId.DN: [0.2, 0.4, 0.1],
        IndexId.BZ: [1.1, 1.5, 0.9],
        IndexId.DB_STAR: [0.4, 0.45, 0.4],
        IndexId.TH: [0.95, 1.0, 0.9],
    }
    best = {m: {index_id: columns[index_id][i] for index_id in ALL_INDICES} for i, m in enumerate(methods)}
    table = avg_rank_table(best, ALL_INDICES).set_index("method")
    expected_avg = {m: 0.0 for m in methods}
    for index_id, values in columns.items():
        ranks = _brute_force_ranks(values, higher_better=index_id is not IndexId.PSI_P)
        assert table.loc[methods, index_id.key].tolist() == ranks
        assert sum(ranks) == len(methods) * (len(methods) + 1) / 2
        for m, r in zip(methods, ranks):
            expected_avg[m] += r / len(ALL_INDICES)
    for m in methods:
        assert table.loc[m, "avg_rank"] == pytest.approx(expected_avg[m])
        assert 1.0 <= table.loc[m, "avg_rank"] <= len(methods)
    assert table.index.tolist()[0] == "mce"


def _evaluation_candidates(gaussian_groups):
    rng = np.random.default_rng(4)
    shuffled = gaussian_groups.with_labels(rng.permutation(gaussian_groups.labels))
    return [
        EmbeddingCandidate.create("hd", gaussian_groups),
        EmbeddingCandidate.create("tsne", gaussian_groups, params={"p": 5}),
        EmbeddingCandidate.create("tsne", shuffled, params={"p": 50}),
        EmbeddingCandidate.create("isomap", shuffled, params={"k": 3}),
    ]


def test_evaluate_report_structure(clean_env, gaussian_groups):
    evaluator = SeparabilityEvaluator(SepScoreConfig())
    indices = [IndexId.PSI_ROC, IndexId.TH, IndexId.SH]
    report = evaluator.evaluate(_evaluation_candidates(gaussian_groups), indices, dataset="toy", replicates=20, seed=1)
    assert len(report.rows) == 4
    assert sorted(report.avg_rank["method"]) == ["hd", "isomap", "tsne"]
    assert report.best_per_method["tsne"][IndexId.PSI_ROC][0].candidate.params == (("p", 5),)
    assert report.best_per_index[IndexId.TH]
    assert set(report.hd_gap) == {"isomap", "tsne"}
    assert report.hd_gap["tsne"][IndexId.TH] == pytest.approx(0.0)
    assert report.hd_gap["isomap"][IndexId.TH] < 0.0
    assert all(IndexId.TH in row.p_bh for row in report.rows)


def test_evaluate_is_order_invariant(clean_env, gaussian_groups):
    evaluator = SeparabilityEvaluator(SepScoreConfig())
    candidates = _evaluation_candidates(gaussian_groups)
    indices = [IndexId.PSI_ROC, IndexId.TH]
    first = evaluator.evaluate(candidates, indices, replicates=10, seed=5)
    second = evaluator.evaluate(list(reversed(candidates)), indices, replicates=10, seed=5)
    assert [row.candidate_id for row in first.rows] == [row.candidate_id for row in second.rows]
    for a, b in zip(first.rows, second.rows):
        assert a.scores == b.scores
        assert a.null == b.null
    assert first.avg_rank.equals(second.avg_rank)


def test_evaluate_rejects_duplicate_candidates(clean_env, gaussian_groups):
    evaluator = SeparabilityEvaluator(SepScoreConfig())
    duplicate = [EmbeddingCandidate.create("tsne", gaussian_groups, params={"p": 5})] * 2
    with pytest.raises(ManifestError):
        evaluator.evaluate(duplicate, [IndexId.TH], replicates=0)


def test_compare_configurations_counts_optima(clean_env, gaussian_groups):
    evaluator = SeparabilityEvaluator(SepScoreConfig())
    candidates = [
        EmbeddingCandidate.create("tsne", gaussian_groups, params={"p": p}) for p in (5, 10, 30)
    ]
    report = evaluator.evaluate(candidates, [IndexId.PSI_ROC], replicates=0, seed=0)
    frame = evaluator.compare_configurations(report, IndexId.PSI_ROC)
    assert frame.loc[0, "n_optima"] == 3


def test_candidate_identity():
    cloud = make_cloud([[0.0], [1.0]], ["a", "b"])
    candidate = EmbeddingCandidate.create("isomap", cloud, params={"k": 7}, normalization="log")
    assert candidate.candidate_id == "isomap[k=7]/LOG"
    assert candidate.key == ("isomap", "k=7", "LOG")
    assert candidate.params == (("k", 7),)
