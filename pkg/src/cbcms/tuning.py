"""K-fold cross-validation and exhaustive grid search for forest parameters."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset
from .forest import ForestModel, ForestParams, evaluate_model, train_forest
from .metrics import EvalReport, MacroMetrics


class TuningError(ValueError):
    pass


@dataclass(frozen=True)
class FoldResult:
    fold: int
    report: EvalReport


@dataclass(frozen=True)
class CrossValidationResult:
    params: ForestParams
    folds: tuple[FoldResult, ...]
    mean_macro: MacroMetrics

    @property
    def mean_f1(self) -> float:
        return self.mean_macro.f1


def _fold_assignment(n: int, k: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(order[start : start + size])
        start += size
    return folds


def cross_validate(
    dataset: Dataset, params: ForestParams, k: int = 5, seed: int | None = None
) -> CrossValidationResult:
    """Seeded shuffle into k near-equal folds; train on k-1, evaluate on 1."""
    if k < 2:
        raise TuningError("k must be >= 2")
    n = len(dataset)
    if n < k:
        raise TuningError(f"need at least {k} entries for {k}-fold CV")
    seed = params.seed if seed is None else seed
    folds = _fold_assignment(n, k, seed)

    results = []
    macros = []
    for i, test_idx in enumerate(folds):
        test_set = set(int(x) for x in test_idx)
        train_entries = tuple(e for j, e in enumerate(dataset.entries) if j not in test_set)
        test_entries = tuple(dataset.entries[int(j)] for j in test_idx)
        train = Dataset(train_entries, dataset.seed, dataset.noise_rate, dataset.metadata)
        test = Dataset(test_entries, dataset.seed, dataset.noise_rate, dataset.metadata)
        model = train_forest(train, params)
        report = evaluate_model(model, test)
        results.append(FoldResult(i, report))
        macros.append(report.macro_overall)

    mean = MacroMetrics(
        precision=sum(m.precision for m in macros) / k,
        recall=sum(m.recall for m in macros) / k,
        f1=sum(m.f1 for m in macros) / k,
        n_labels=int(round(sum(m.n_labels for m in macros) / k)),
    )
    return CrossValidationResult(params, tuple(results), mean)


DEFAULT_GRID = {
    "n_trees": [50, 100, 150],
    "max_depth": [10, 15, 20],
    "min_samples_split": [2, 5, 10],
    "min_samples_leaf": [2, 4, 6],
}


@dataclass(frozen=True)
class GridSearchResult:
    best_params: ForestParams
    best_mean_f1: float
    table: tuple[CrossValidationResult, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(
            ["n_trees", "max_depth", "min_samples_split", "min_samples_leaf",
             "mean_precision", "mean_recall", "mean_f1"]
            + [f"fold{i}_f1" for i in range(len(self.table[0].folds))]
        )
        for cv in self.table:
            p = cv.params
            writer.writerow(
                [p.n_trees, p.max_depth, p.min_samples_split, p.min_samples_leaf,
                 f"{cv.mean_macro.precision:.6f}", f"{cv.mean_macro.recall:.6f}", f"{cv.mean_macro.f1:.6f}"]
                + [f"{f.report.macro_overall.f1:.6f}" for f in cv.folds]
            )
        return buf.getvalue()


def grid_search(
    dataset: Dataset,
    grid: dict[str, list] | None = None,
    k: int = 5,
    base_params: ForestParams | None = None,
    progress=None,
) -> GridSearchResult:
    """Evaluate every grid point with k-fold CV; best = highest mean macro F1.

    Ties break toward fewer trees, then shallower depth, then grid order.
    """
    grid = grid or DEFAULT_GRID
    base = base_params or ForestParams()
    names = list(grid)
    if not names or any(not grid[name] for name in names):
        raise TuningError("grid must be non-empty")

    table = []
    best: CrossValidationResult | None = None
    for values in itertools.product(*(grid[name] for name in names)):
        params = replace(base, **dict(zip(names, values)))
        cv = cross_validate(dataset, params, k=k, seed=base.seed)
        table.append(cv)
        if progress is not None:
            progress(cv)
        if best is None or _better(cv, best):
            best = cv
    assert best is not None
    return GridSearchResult(best.params, best.mean_f1, tuple(table))


def _better(candidate: CrossValidationResult, incumbent: CrossValidationResult) -> bool:
    if candidate.mean_f1 != incumbent.mean_f1:
        return candidate.mean_f1 > incumbent.mean_f1
    if candidate.params.n_trees != incumbent.params.n_trees:
        return candidate.params.n_trees < incumbent.params.n_trees
    if candidate.params.max_depth != incumbent.params.max_depth:
        return candidate.params.max_depth < incumbent.params.max_depth
    return False


def train_final(dataset: Dataset, params: ForestParams, n_jobs: int = 1) -> ForestModel:
    return train_forest(dataset, params, n_jobs=n_jobs)
