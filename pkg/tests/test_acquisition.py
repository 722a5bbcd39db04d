"""Acquisition layer: penalty schedule, EI / feasibility forms, compositions.

Gaussian-form oracles are independent quadrature (scipy.integrate.quad over
the integrand definition), not the closed form the implementation uses.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import ndtr
from scipy.stats import norm

from cbobench.acquisition import (
    Incumbent,
    PenaltyState,
    cei,
    cei_plus,
    expected_improvement_bucketed,
    expected_improvement_gaussian,
    incumbent_update,
    penalty_transform,
    prob_feasible_bucketed,
    prob_feasible_gaussian,
    update_rho,
)
from cbobench.problems import EvalResult
from cbobench.surrogates import bucketize_gaussian


# ---------------------------------------------------------------------------
# penalty transform


def test_penalty_transform_pinned_arithmetic():
    assert penalty_transform(2.0, (-1.0, 0.5), 1.0) == pytest.approx(2.25)
    assert penalty_transform(2.0, (-1.0, 0.5), 2.0) == pytest.approx(2.5)
    assert penalty_transform(7.0, (-1.0, -0.3, 0.0), 5.0) == pytest.approx(7.0)


def test_penalty_transform_batched_matches_scalar_loop():
    rng = np.random.default_rng(3)
    f = rng.normal(size=8)
    g = rng.normal(size=(8, 3))
    batched = penalty_transform(f, g, 1.7)
    for i in range(8):
        assert batched[i] == pytest.approx(penalty_transform(f[i], g[i], 1.7))


def test_penalty_transform_rejects_negative_rho():
    with pytest.raises(ValueError):
        penalty_transform(1.0, (0.5,), -0.1)


@given(
    st.floats(-10, 10),
    st.lists(st.floats(-5, 5), min_size=1, max_size=6),
    st.floats(0, 10),
    st.floats(0, 10),
)
def test_penalty_monotone_in_rho_when_violated(f, g, rho1, rho2):
    lo, hi = sorted((rho1, rho2))
    if any(gi > 0 for gi in g):
        assert penalty_transform(f, g, lo) <= penalty_transform(f, g, hi) + 1e-12
    else:
        assert penalty_transform(f, g, lo) == pytest.approx(f)


# ---------------------------------------------------------------------------
# rho schedule


def test_rho_fires_on_fifth_stall():
    state = PenaltyState(rho=1.0, stall_count=4)
    nxt = update_rho(state, improved=False)
    assert nxt == PenaltyState(rho=1.5, stall_count=0)


def test_rho_reset_on_improvement_keeps_rho():
    state = PenaltyState(rho=1.5, stall_count=2)
    assert update_rho(state, improved=True) == PenaltyState(rho=1.5, stall_count=0)


def test_ten_consecutive_stalls_fire_twice():
    state = PenaltyState()
    for _ in range(10):
        state = update_rho(state, improved=False)
    assert state.rho == pytest.approx(2.25)
    assert state.stall_count == 0


@given(st.lists(st.booleans(), max_size=60))
def test_rho_replay_matches_counting_oracle(flags):
    state = PenaltyState()
    for improved in flags:
        state = update_rho(state, improved)
    # oracle: walk the flags counting stalls-in-a-row-of-5 firings
    rho, stall = 1.0, 0
    for improved in flags:
        if improved:
            stall = 0
        else:
            stall += 1
            if stall == 5:
                rho *= 1.5
                stall = 0
    assert state.rho == pytest.approx(rho)
    assert state.stall_count == stall


def test_penalty_state_validation():
    with pytest.raises(AssertionError):
        PenaltyState(rho=0.5)
    with pytest.raises(AssertionError):
        PenaltyState(stall_count=-1)


# ---------------------------------------------------------------------------
# expected improvement, gaussian


def _ei_quadrature(f_star, mean, std):
    val, _ = quad(
        lambda y: max(0.0, f_star - y) * norm.pdf(y, loc=mean, scale=std),
        mean - 12 * std,
        mean + 12 * std,
        limit=200,
    )
    return val


def test_ei_gaussian_frozen_values():
    assert expected_improvement_gaussian(1.0, 0.0, 1.0) == pytest.approx(1.083316, abs=1e-3)
    assert expected_improvement_gaussian(0.0, 0.0, 1.0) == pytest.approx(0.398942, abs=1e-3)


def test_ei_gaussian_matches_quadrature_oracle():
    cases = [(1.0, 0.0, 1.0), (0.0, 0.0, 1.0), (-0.5, 1.0, 2.0), (3.0, -1.0, 0.3)]
    for f_star, mean, std in cases:
        got = expected_improvement_gaussian(f_star, mean, std)
        assert got == pytest.approx(_ei_quadrature(f_star, mean, std), abs=1e-9)


def test_ei_gaussian_degenerate_std():
    assert expected_improvement_gaussian(1.0, 2.0, 0.0) == 0.0
    assert expected_improvement_gaussian(1.0, 1.0, 0.0) == 0.0
    assert expected_improvement_gaussian(1.0, 0.25, 0.0) == pytest.approx(0.75)


def test_ei_gaussian_rejects_negative_std():
    with pytest.raises(ValueError):
        expected_improvement_gaussian(1.0, 0.0, -1.0)


def test_ei_gaussian_vector_matches_scalar():
    means = np.array([-1.0, 0.0, 2.0])
    stds = np.array([0.5, 0.0, 1.5])
    vec = expected_improvement_gaussian(0.3, means, stds)
    for i in range(3):
        assert vec[i] == pytest.approx(
            expected_improvement_gaussian(0.3, float(means[i]), float(stds[i]))
        )


def test_ei_monotonicity_grids():
    # non-increasing in mean at fixed std
    means = np.linspace(-3, 3, 61)
    ei = expected_improvement_gaussian(0.0, means, np.ones_like(means))
    assert np.all(np.diff(ei) <= 1e-12)
    # non-decreasing in std when mean > f_star
    stds = np.linspace(0.0, 4.0, 41)
    ei = expected_improvement_gaussian(0.0, np.full_like(stds, 1.5), stds)
    assert np.all(np.diff(ei) >= -1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 5))
def test_ei_gaussian_nonnegative(f_star, mean, std):
    assert expected_improvement_gaussian(f_star, mean, std) >= 0.0


# ---------------------------------------------------------------------------
# expected improvement, bucketed


def test_ei_bucketed_no_mass_below_incumbent():
    edges = np.array([2.0, 3.0])
    probs = np.array([1.0])
    assert expected_improvement_bucketed(1.0, edges, probs) == 0.0


def test_ei_bucketed_two_equal_buckets():
    # midpoints at f_star - 1 and f_star + 1, half the mass each
    f_star = 2.0
    edges = np.array([0.5, 1.5, 2.5, 3.5])
    probs = np.array([0.5, 0.0, 0.5])
    assert expected_improvement_bucketed(f_star, edges, probs) == pytest.approx(0.5)


def test_ei_bucketed_gaussian_grid_matches_closed_form():
    edges = np.linspace(-6.0, 6.0, 1001)
    probs = bucketize_gaussian(0.0, 1.0, edges)
    got = expected_improvement_bucketed(1.0, edges, probs)
    assert got == pytest.approx(1.083316, abs=1e-3)


def test_ei_bucketed_batched_matches_scalar():
    edges = np.linspace(-4, 4, 201)
    probs = np.vstack(
        [bucketize_gaussian(m, s, edges) for m, s in [(-1, 0.7), (0, 1.0), (2, 0.4)]]
    )
    batched = expected_improvement_bucketed(0.5, edges, probs)
    for i in range(3):
        assert batched[i] == pytest.approx(
            expected_improvement_bucketed(0.5, edges, probs[i])
        )


# ---------------------------------------------------------------------------
# probability of feasibility


def test_pfeas_gaussian_pinned_forms():
    assert prob_feasible_gaussian(0.0, 1.0) == pytest.approx(0.5)
    assert prob_feasible_gaussian(-1.0, 1.0) == pytest.approx(0.841345, abs=1e-6)
    assert prob_feasible_gaussian(-2.0, 0.0) == 1.0
    assert prob_feasible_gaussian(2.0, 0.0) == 0.0
    assert prob_feasible_gaussian(0.0, 0.0) == 1.0  # boundary counts as feasible


def test_pfeas_gaussian_matches_cdf_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m, s = rng.normal(), rng.uniform(0.1, 3.0)
        assert prob_feasible_gaussian(m, s) == pytest.approx(norm.cdf(-m / s), abs=1e-12)


def test_pfeas_gaussian_rejects_negative_std():
    with pytest.raises(ValueError):
        prob_feasible_gaussian(0.0, -0.5)


def test_pfeas_bucketed_all_mass_below():
    edges = np.array([-3.0, -2.0, -1.0])
    probs = np.array([0.25, 0.75])
    assert prob_feasible_bucketed(edges, probs) == pytest.approx(1.0)


def test_pfeas_bucketed_symmetric_half():
    edges = np.linspace(-6.0, 6.0, 1201)  # boundary at exactly 0
    probs = bucketize_gaussian(0.0, 1.0, edges)
    assert prob_feasible_bucketed(edges, probs) == pytest.approx(0.5, abs=1e-6)


def test_pfeas_bucketed_gaussian_matches_cdf():
    edges = np.linspace(-7.0, 5.0, 1001)
    probs = bucketize_gaussian(-1.0, 1.0, edges)
    assert prob_feasible_bucketed(edges, probs) == pytest.approx(float(ndtr(1.0)), abs=1e-3)


def test_pfeas_bucketed_straddling_share_is_proportional():
    edges = np.array([-1.0, 0.0, 1.0])
    probs = np.array([0.4, 0.6])
    # threshold 0.25 takes all of the first bucket plus a quarter of the second
    assert prob_feasible_bucketed(edges, probs, threshold=0.25) == pytest.approx(0.55)


def test_pfeas_bucketed_threshold_outside_grid():
    edges = np.array([0.0, 1.0, 2.0])
    probs = np.array([0.5, 0.5])
    assert prob_feasible_bucketed(edges, probs, threshold=-1.0) == 0.0
    assert prob_feasible_bucketed(edges, probs, threshold=5.0) == 1.0


def test_pfeas_bucketed_batched_matches_scalar():
    edges = np.linspace(-2, 2, 101)
    probs = np.vstack([bucketize_gaussian(m, 0.8, edges) for m in (-1.0, 0.0, 1.0)])
    batched = prob_feasible_bucketed(edges, probs)
    for i in range(3):
        assert batched[i] == pytest.approx(prob_feasible_bucketed(edges, probs[i]))


# ---------------------------------------------------------------------------
# CEI / CEI+ compositions


def test_cei_pinned_product():
    assert cei(1.0833, np.array([0.5])) == pytest.approx(0.54165)
    assert cei(2.0, np.array([0.5, 0.5])) == pytest.approx(0.5)


def test_cei_annihilation_and_empty_product():
    assert cei(3.0, np.array([0.7, 0.0, 0.9])) == 0.0
    assert cei(3.0, np.array([])) == 3.0
    # zero short-circuit also on the log-space path (G >= 5)
    assert cei(3.0, np.array([0.5] * 5 + [0.0])) == 0.0


def test_cei_plus_saturation():
    assert cei_plus(2.0, np.array([0.6])) == pytest.approx(2.0)
    assert cei_plus(2.0, np.array([0.25])) == pytest.approx(1.0)
    assert cei_plus(2.0, np.array([])) == 2.0


def test_log_space_product_matches_direct_product():
    rng = np.random.default_rng(9)
    for _ in range(30):
        p = rng.uniform(1e-12, 1.0, size=7)  # G = 7 takes the log-space path
        direct = float(np.prod(p))
        assert cei(1.0, p) == pytest.approx(direct, rel=1e-12)
        direct_plus = float(np.prod(np.minimum(1.0, 2.0 * p)))
        assert cei_plus(1.0, p) == pytest.approx(direct_plus, rel=1e-12)


@given(
    st.floats(0, 10),
    st.lists(st.floats(0, 1), min_size=1, max_size=8),
)
def test_cei_plus_dominates_cei(ei, pfeas):
    p = np.array(pfeas)
    lo = cei(ei, p)
    hi = cei_plus(ei, p)
    assert 0.0 <= lo <= hi + 1e-12
    assert hi <= ei + 1e-12


def test_cei_batched_rows_match_scalar():
    rng = np.random.default_rng(4)
    ei = rng.uniform(0, 2, size=6)
    pf = rng.uniform(0, 1, size=(6, 3))
    batched = cei(ei, pf)
    batched_plus = cei_plus(ei, pf)
    for i in range(6):
        assert batched[i] == pytest.approx(cei(float(ei[i]), pf[i]))
        assert batched_plus[i] == pytest.approx(cei_plus(float(ei[i]), pf[i]))


def test_common_feasibility_scaling_preserves_cei_argmax():
    rng = np.random.default_rng(12)
    ei = rng.uniform(0.1, 2.0, size=50)
    pf = rng.uniform(0.05, 1.0, size=(50, 3))
    base = np.argmax(cei(ei, pf))
    for c in (1.0, 0.7, 0.2, 0.01):
        assert np.argmax(cei(ei, pf * c)) == base
    # CEI+ shares the property while no factor saturates (2*c*p <= 1)
    pf_small = rng.uniform(0.01, 0.4, size=(50, 3))
    base_plus = np.argmax(cei_plus(ei, pf_small))
    assert np.argmax(cei_plus(ei, pf_small * 0.5)) == base_plus


# ---------------------------------------------------------------------------
# incumbent rule


def _mk_eval(f, feasible):
    g = np.array([-1.0]) if feasible else np.array([1.0])
    return EvalResult(f=float(f), g=g, feasible=feasible)


def test_first_feasible_replaces_infeasible_incumbent_even_if_worse():
    inc = Incumbent()
    inc = incumbent_update(inc, _mk_eval(1.0, False), np.array([0.1]))
    assert inc.f_star == 1.0 and not inc.feasible_found
    inc = incumbent_update(inc, _mk_eval(10.0, True), np.array([0.2]))
    assert inc.f_star == 10.0 and inc.feasible_found


def test_feasible_incumbent_monotone():
    inc = Incumbent()
    inc = incumbent_update(inc, _mk_eval(3.0, True), np.array([0.1]))
    inc = incumbent_update(inc, _mk_eval(5.0, True), np.array([0.2]))
    assert inc.f_star == 3.0
    inc = incumbent_update(inc, _mk_eval(2.0, True), np.array([0.3]))
    assert inc.f_star == 2.0


def test_infeasible_never_displaces_feasible():
    inc = incumbent_update(Incumbent(), _mk_eval(3.0, True), np.array([0.1]))
    inc = incumbent_update(inc, _mk_eval(-100.0, False), np.array([0.2]))
    assert inc.f_star == 3.0 and inc.feasible_found


@given(
    st.lists(
        st.tuples(st.floats(-100, 100), st.booleans()), min_size=1, max_size=40
    )
)
@settings(max_examples=100)
def test_streamed_incumbent_matches_rescan_oracle(stream):
    inc = Incumbent()
    history = []
    for i, (f, feasible) in enumerate(stream):
        history.append((f, feasible))
        inc = incumbent_update(inc, _mk_eval(f, feasible), np.array([float(i)]))
        # oracle: full rescan of the history under the stated rule
        feas_vals = [fv for fv, ok in history if ok]
        if feas_vals:
            assert inc.feasible_found
            assert inc.f_star == pytest.approx(min(feas_vals))
        else:
            assert not inc.feasible_found
            assert inc.f_star == pytest.approx(min(fv for fv, _ in history))
