import pytest

from cbcms.dataset import default_rule_table, generate_dataset
from cbcms.forest import ForestParams
from cbcms.tuning import (
    DEFAULT_GRID,
    TuningError,
    _fold_assignment,
    cross_validate,
    grid_search,
)


@pytest.fixture(scope="module")
def small_dataset():
    return generate_dataset(default_rule_table(), 250, noise_rate=0.05, seed=55)


class TestFolds:
    def test_near_equal_sizes(self):
        folds = _fold_assignment(100, 5, seed=1)
        assert [len(f) for f in folds] == [20] * 5

    def test_uneven_sizes(self):
        folds = _fold_assignment(103, 5, seed=1)
        assert [len(f) for f in folds] == [21, 21, 21, 20, 20]

    def test_partition(self):
        folds = _fold_assignment(57, 5, seed=3)
        combined = sorted(int(i) for fold in folds for i in fold)
        assert combined == list(range(57))

    def test_same_seed_same_assignment(self):
        a = _fold_assignment(50, 5, seed=9)
        b = _fold_assignment(50, 5, seed=9)
        assert all((x == y).all() for x, y in zip(a, b))


class TestCrossValidate:
    def test_reports_per_fold_and_mean(self, small_dataset):
        params = ForestParams(n_trees=5, seed=2)
        cv = cross_validate(small_dataset, params, k=5)
        assert len(cv.folds) == 5
        f1s = [f.report.macro_overall.f1 for f in cv.folds]
        assert cv.mean_f1 == pytest.approx(sum(f1s) / 5)

    def test_k_too_small(self, small_dataset):
        with pytest.raises(TuningError):
            cross_validate(small_dataset, ForestParams(), k=1)


class TestGridSearch:
    def test_single_candidate(self, small_dataset):
        result = grid_search(small_dataset, {"n_trees": [5]}, k=3)
        assert result.best_params.n_trees == 5
        assert len(result.table) == 1

    def test_best_comes_from_grid(self, small_dataset):
        grid = {"n_trees": [3, 6], "max_depth": [6, 12]}
        result = grid_search(small_dataset, grid, k=3)
        assert result.best_params.n_trees in grid["n_trees"]
        assert result.best_params.max_depth in grid["max_depth"]
        assert len(result.table) == 4

    def test_tie_break_prefers_fewer_trees(self, small_dataset):
        # same depth twice: identical CV scores, smaller tree count must win
        result = grid_search(small_dataset, {"n_trees": [6, 3], "max_depth": [12, 12]}, k=3)
        candidates = {
            (cv.params.n_trees, cv.params.max_depth): cv.mean_f1 for cv in result.table
        }
        best_score = max(candidates.values())
        tied = [p for p, score in candidates.items() if score == best_score]
        assert (result.best_params.n_trees, result.best_params.max_depth) == min(tied)

    def test_default_grid_is_81_points(self):
        total = 1
        for values in DEFAULT_GRID.values():
            total *= len(values)
        assert total == 81

    def test_empty_grid_rejected(self, small_dataset):
        with pytest.raises(TuningError):
            grid_search(small_dataset, {"n_trees": []})

    def test_csv_table(self, small_dataset):
        result = grid_search(small_dataset, {"n_trees": [3]}, k=3)
        lines = result.to_csv().strip().splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("n_trees,")
