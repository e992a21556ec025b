import numpy as np
import pytest

from twodsel import (METHODS, ScenarioSpec, ValidationError, benchmark_col_row, benchmark_row_col,
                     benchmark_structured_lasso, run_method, simulate)
from twodsel.benchmarks import (GroupedGLMProblem, grouped_glm_fit, grouped_lambda_grid,
                                grouped_weights)


@pytest.fixture(scope="module")
def truth():
    return simulate(ScenarioSpec(n=300, seed=3), 0)


@pytest.fixture(scope="module")
def data(truth):
    return truth[0]


def test_problem_design_orientation(data):
    rows = GroupedGLMProblem(data, "rows").design()
    cols = GroupedGLMProblem(data, "cols", active_mask=[1, 3]).design()
    np.testing.assert_array_equal(rows, data.X)
    np.testing.assert_array_equal(cols, data.X.transpose(0, 2, 1)[:, :, [1, 3]])
    with pytest.raises(ValidationError):
        GroupedGLMProblem(data, "diagonals")
    with pytest.raises(ValidationError):
        GroupedGLMProblem(data, "rows", active_mask=[10])


def test_grid_top_keeps_every_group_at_zero(data):
    problem = GroupedGLMProblem(data, "rows")
    weights, _ = grouped_weights(problem)
    top = grouped_lambda_grid(problem, weights, n_lambda=5)[0]
    fit = grouped_glm_fit(problem, top * 1.001, weights)
    assert fit.active_groups == []
    fit = grouped_glm_fit(problem, top * 0.5, weights)
    assert fit.active_groups


def test_unpenalized_grouped_fit_recovers_noise_free_truth(truth):
    # responses are exact logistic means of <B, X_i>, so the full GLM fit is B itself
    data, B = truth
    for grouping, norms in (("rows", np.linalg.norm(B, axis=1)), ("cols", np.linalg.norm(B, axis=0))):
        weights, fit = grouped_weights(GroupedGLMProblem(data, grouping))
        np.testing.assert_allclose(weights, np.maximum(norms, 1e-6), atol=1e-3)
        np.testing.assert_allclose(fit.C, B if grouping == "rows" else B.T, atol=1e-3)


def test_sequential_benchmarks_select_without_false_positives(data):
    for report in (benchmark_row_col(data, n_lambda=20), benchmark_col_row(data, n_lambda=20)):
        assert report.active_rows and set(report.active_rows) <= {1, 3, 5, 7, 9}
        assert report.active_cols and set(report.active_cols) <= {0, 2, 4, 6, 8}
        zero_rows = [j for j in range(10) if j not in report.active_rows]
        zero_cols = [k for k in range(10) if k not in report.active_cols]
        assert not report.B_hat[zero_rows].any() and not report.B_hat[:, zero_cols].any()
        assert report.chosen_rank is None


def test_structured_lasso_is_rank_one(data):
    report = benchmark_structured_lasso(data, n_lambda=10)
    assert report.chosen_rank == 1
    assert all(row["rank"] == 1 for row in report.ic_table)


def test_run_method_dispatch(data):
    assert METHODS == ("proposed", "row_col", "col_row", "structured")
    with pytest.raises(ValidationError):
        run_method("lasso", data)
    report = run_method("proposed", data, ranks=(3,), n_lambda=10)
    assert report.chosen_rank == 3
