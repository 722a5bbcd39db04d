"""Reference bucketed-predictor path: oracles, contracts, grid bridging."""

import numpy as np
import pytest
from scipy.stats import spearmanr

from cbobench.problems import evaluate_many, spec
from cbobench.sampling import latin_hypercube, scale_to_bounds
from cbobench.surrogates import (
    TARGETS_ALL,
    TARGETS_OBJECTIVE,
    Dataset,
    bucket_grid,
    bucketize_gaussian,
    ppd_predict,
    reference_ppd_surrogate,
)


def _dataset(pid: str, n: int, seed: int = 0) -> Dataset:
    problem = spec(pid, "corrected")
    design = latin_hypercube(n, problem.dimension, seed)
    raw = scale_to_bounds(design, problem)
    f, g, _ = evaluate_many(problem, raw)
    return Dataset(X=design.points, raw_X=raw, y=f, g_mat=g)


def _dataset_1d(xs, ys) -> Dataset:
    xs = np.asarray(xs, dtype=float)[:, None]
    ys = np.asarray(ys, dtype=float)
    return Dataset(X=xs, raw_X=xs, y=ys, g_mat=np.zeros((len(ys), 1)))


# ---------------------------------------------------------------------------
# inference-count and frozen-state contracts


def test_single_inference_serves_all_targets_even_with_eleven_constraints():
    D = _dataset("cantilever_beam", 12)
    assert D.n_constraints == 11
    surr = reference_ppd_surrogate(bucket_count=100)
    before = surr.inference_call_count
    batch = ppd_predict(surr, D, TARGETS_ALL, np.random.default_rng(0).uniform(size=(5, D.d)))
    assert surr.inference_call_count == before + 1
    assert batch.n_targets == 1 + 11
    assert batch.n_queries == 5


def test_state_hash_unchanged_by_any_number_of_predictions():
    D = _dataset("jlh2", 10)
    surr = reference_ppd_surrogate(bucket_count=50)
    h0 = surr.state_hash()
    for k in range(4):
        ppd_predict(surr, D, TARGETS_ALL, np.random.default_rng(k).uniform(size=(3, D.d)))
    assert surr.state_hash() == h0


def test_every_returned_distribution_sums_to_one():
    D = _dataset("gkxwc1", 15, seed=2)
    surr = reference_ppd_surrogate(bucket_count=333)
    batch = ppd_predict(surr, D, TARGETS_ALL, np.random.default_rng(1).uniform(size=(7, D.d)))
    sums = batch.probs.sum(axis=2)
    np.testing.assert_allclose(sums, 1.0, rtol=0, atol=1e-9)
    assert np.all(batch.probs >= 0.0)


def test_predict_does_not_mutate_dataset():
    D = _dataset("jlh1", 8)
    y_copy = D.y.copy()
    surr = reference_ppd_surrogate(bucket_count=64)
    ppd_predict(surr, D, TARGETS_ALL, np.array([[0.5, 0.5]]))
    np.testing.assert_array_equal(D.y, y_copy)
    with pytest.raises(ValueError):
        D.y[0] = 99.0  # snapshot arrays are write-locked


# ---------------------------------------------------------------------------
# weighted-mean oracles


def test_linear_dataset_midpoint_query_matches_linear_interpolation():
    xs = np.linspace(0.0, 1.0, 11)
    ys = 2.0 * xs + 0.3
    D = _dataset_1d(xs, ys)
    surr = reference_ppd_surrogate(bucket_count=1000)
    batch = ppd_predict(surr, D, TARGETS_OBJECTIVE, np.array([[0.45]]))
    got = batch.distribution(0, 0).bucketed_mean()
    assert got == pytest.approx(2.0 * 0.45 + 0.3, abs=0.05)


def test_symmetric_dataset_query_at_center_recovers_arithmetic_mean():
    # four points equidistant from the query with mirror-symmetric targets:
    # equal kernel weights make the weighted mean the arithmetic mean, and
    # the bucket grid is centred on it, so discretization cancels exactly
    a, c1, c2 = 0.3, 1.0, 2.0
    X = np.array([[0.5 + a, 0.5], [0.5 - a, 0.5], [0.5, 0.5 + a], [0.5, 0.5 - a]])
    y = np.array([c1, c1, c2, c2])
    D = Dataset(X=X, raw_X=X, y=y, g_mat=np.zeros((4, 1)))
    surr = reference_ppd_surrogate(bucket_count=1000)
    batch = ppd_predict(surr, D, TARGETS_OBJECTIVE, np.array([[0.5, 0.5]]))
    got = batch.distribution(0, 0).bucketed_mean()
    assert got == pytest.approx((c1 + c2) / 2.0, abs=1e-9)


def test_single_observation_concentrates_near_that_target():
    D = _dataset_1d([0.4], [3.7])
    surr = reference_ppd_surrogate(bucket_count=200)
    batch = ppd_predict(surr, D, TARGETS_OBJECTIVE, np.array([[0.4], [0.9]]))
    width = float(np.diff(batch.edges[0]).max())
    for q in range(2):
        got = batch.distribution(q, 0).bucketed_mean()
        assert abs(got - 3.7) <= width


def test_bucketed_means_track_nadaraya_watson_oracle():
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(20, 2))
    y = np.sin(4 * X[:, 0]) + X[:, 1] ** 2
    D = Dataset(X=X, raw_X=X, y=y, g_mat=np.zeros((20, 1)))
    h = 0.25
    surr = reference_ppd_surrogate(bucket_count=4000, bandwidth_rule=h)
    Xq = rng.uniform(0.2, 0.8, size=(6, 2))
    batch = ppd_predict(surr, D, TARGETS_OBJECTIVE, Xq)
    width = float(np.diff(batch.edges[0]).max())
    for q in range(6):
        w = np.exp(-0.5 * ((Xq[q] - X) ** 2).sum(axis=1) / h**2)
        oracle = float(np.dot(w, y) / w.sum())
        got = batch.distribution(q, 0).bucketed_mean()
        # bucketed mean = NW mean up to grid quantization and tail folding
        assert abs(got - oracle) <= 3 * width


def test_rank_correlation_with_true_objective_on_ackley2():
    problem = spec("ackley2", "corrected")
    design = latin_hypercube(20, 2, 7)
    raw = scale_to_bounds(design, problem)
    f, g, _ = evaluate_many(problem, raw)
    D = Dataset(X=design.points, raw_X=raw, y=f, g_mat=g)

    grid_design = latin_hypercube(100, 2, 11)
    grid_raw = scale_to_bounds(grid_design, problem)
    true_f, _, _ = evaluate_many(problem, grid_raw)

    surr = reference_ppd_surrogate(bucket_count=1000)
    batch = ppd_predict(surr, D, TARGETS_OBJECTIVE, grid_design.points)
    means = [batch.distribution(q, 0).bucketed_mean() for q in range(100)]
    rho = spearmanr(means, true_f).statistic
    assert rho > 0.5


def test_far_query_falls_back_to_empirical_mixture():
    xs = np.array([0.1, 0.5, 0.9])
    ys = np.array([1.0, 2.0, 6.0])
    D = _dataset_1d(xs, ys)
    surr = reference_ppd_surrogate(bucket_count=2000, bandwidth_rule=1e-3)
    batch = ppd_predict(surr, D, TARGETS_OBJECTIVE, np.array([[1e6]]))
    width = float(np.diff(batch.edges[0]).max())
    got = batch.distribution(0, 0).bucketed_mean()
    assert abs(got - ys.mean()) <= 3 * width


# ---------------------------------------------------------------------------
# argument validation


def test_empty_dataset_is_a_precondition_error():
    D = Dataset(X=np.zeros((0, 2)), raw_X=np.zeros((0, 2)), y=np.zeros(0), g_mat=np.zeros((0, 1)))
    surr = reference_ppd_surrogate()
    with pytest.raises(ValueError):
        ppd_predict(surr, D, TARGETS_ALL, np.array([[0.5, 0.5]]))


def test_bad_target_selector_rejected():
    D = _dataset_1d([0.2, 0.8], [1.0, 2.0])
    surr = reference_ppd_surrogate(bucket_count=32)
    with pytest.raises(ValueError):
        ppd_predict(surr, D, "everything", np.array([[0.5]]))


def test_constructor_validation():
    with pytest.raises(ValueError):
        reference_ppd_surrogate(bucket_count=9)
    with pytest.raises(ValueError):
        reference_ppd_surrogate(bandwidth_rule="banana")
    # numeric and named rules are both fine
    reference_ppd_surrogate(bucket_count=10, bandwidth_rule=0.2)
    reference_ppd_surrogate(bandwidth_rule="median")


def test_objective_only_has_one_target():
    D = _dataset("jlh2", 9, seed=3)
    surr = reference_ppd_surrogate(bucket_count=40)
    batch = ppd_predict(surr, D, TARGETS_OBJECTIVE, np.array([[0.2, 0.7]]))
    assert batch.n_targets == 1
    assert batch.edges.shape == (1, 41)


# ---------------------------------------------------------------------------
# gaussian-to-bucket bridge


def test_bucketize_gaussian_normalizes_exactly():
    edges = np.linspace(-8.0, 8.0, 101)
    probs = bucketize_gaussian(0.0, 1.0, edges)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_bucketize_gaussian_symmetric_mass_split():
    edges = np.linspace(-6.0, 6.0, 1201)  # bucket boundary exactly at 0
    probs = bucketize_gaussian(0.0, 1.0, edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    below = probs[mids < 0].sum()
    assert below == pytest.approx(0.5, abs=1e-6)


def test_bucketize_gaussian_mean_quadrature():
    edges = np.linspace(-8.0, 8.0, 1001)
    probs = bucketize_gaussian(0.0, 1.0, edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    assert float(probs @ mids) == pytest.approx(0.0, abs=1e-4)


def test_bucketize_gaussian_rejects_nonpositive_std():
    with pytest.raises(ValueError):
        bucketize_gaussian(0.0, 0.0, np.linspace(-1, 1, 11))


def test_bucketize_gaussian_vector_form_matches_scalar_loop():
    edges = np.linspace(-5.0, 9.0, 301)
    means = np.array([-1.0, 0.3, 4.0])
    stds = np.array([0.5, 1.0, 2.5])
    vec = bucketize_gaussian(means, stds, edges)
    for i in range(3):
        np.testing.assert_allclose(
            vec[i], bucketize_gaussian(float(means[i]), float(stds[i]), edges), atol=1e-14
        )


def test_bucket_grid_spans_three_spreads_and_handles_constants():
    vals = np.array([1.0, 3.0, 5.0])
    edges = bucket_grid(vals, 100)
    sd = vals.std()
    assert edges[0] == pytest.approx(1.0 - 3 * sd)
    assert edges[-1] == pytest.approx(5.0 + 3 * sd)
    assert len(edges) == 101

    const_edges = bucket_grid(np.full(4, 2.0), 10)
    assert np.all(np.diff(const_edges) > 0)


def test_tails_fold_into_end_buckets():
    # a gaussian centred far outside the grid puts all mass in one end bucket
    edges = np.linspace(0.0, 1.0, 11)
    probs = bucketize_gaussian(50.0, 0.1, edges)
    assert probs[-1] == pytest.approx(1.0, abs=1e-12)
    probs = bucketize_gaussian(-50.0, 0.1, edges)
    assert probs[0] == pytest.approx(1.0, abs=1e-12)
