"""Tests for the optimistic linear learner and the plug-in prior learner."""

import math

import numpy as np
import pytest

from fairalloc.environment import SymmetricTwoSource
from fairalloc.estimators import (
    AlphaLearnerState,
    make_ellipsoid,
    linear_update,
    optimistic_mean_u,
    plugin_mean_a,
)


def _grid_ellipsoid_max(v, psi_hat, beta, c, n=20_000):
    """Independent check: sample the ellipsoid boundary and maximize <psi, c>."""
    rng = np.random.default_rng(0)
    q = psi_hat.shape[0]
    dirs = rng.standard_normal((n, q))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    # map unit sphere onto {x : x' V x = beta}
    root = np.linalg.cholesky(np.linalg.inv(v))
    pts = psi_hat + math.sqrt(beta) * dirs @ root.T
    return float((pts @ c).max())


def test_fresh_state_unit_context_value_one():
    state = make_ellipsoid([2, 2], psi_bar=0.0, c_bar=1.0, delta_conf=math.exp(-0.5))
    # schedule at t=0 collapses to sqrt(2 log(1/delta)) = 1
    assert state.sqrt_beta() == pytest.approx(1.0)
    value = optimistic_mean_u(state, 0, np.array([1.0, 0.0]))
    assert value == pytest.approx(1.0)
    grid = _grid_ellipsoid_max(np.eye(2), np.zeros(2), 1.0, np.array([1.0, 0.0]))
    assert value >= grid - 1e-3


def test_degenerate_radius_returns_point_estimate():
    state = make_ellipsoid([2], psi_bar=0.0, c_bar=1.0, delta_conf=0.999999999999)
    state.psi_hat[0] = np.array([0.4, -0.2])
    c = np.array([0.5, 0.5])
    got = optimistic_mean_u(state, 0, c)
    assert got == pytest.approx(float(state.psi_hat[0] @ c), abs=1e-5)


def test_optimistic_value_matches_boundary_grid():
    rng = np.random.default_rng(5)
    for _ in range(10):
        q = int(rng.integers(1, 4))
        state = make_ellipsoid([q], psi_bar=rng.random(), c_bar=1.0, delta_conf=0.05)
        for _ in range(int(rng.integers(1, 12))):
            linear_update(state, 0, rng.standard_normal(q), float(rng.standard_normal()))
        c = rng.standard_normal(q)
        got = optimistic_mean_u(state, 0, c)
        grid = _grid_ellipsoid_max(state.v[0], state.psi_hat[0], state.sqrt_beta() ** 2, c)
        assert got >= grid - 1e-9  # closed form dominates every sample
        assert got <= grid + 0.05 * abs(grid) + 0.05  # and is nearly attained


def test_optimism_dominates_covered_parameters():
    rng = np.random.default_rng(6)
    state = make_ellipsoid([3], psi_bar=1.0, c_bar=1.0, delta_conf=0.01)
    for _ in range(25):
        linear_update(state, 0, rng.standard_normal(3), float(rng.standard_normal()))
    for _ in range(50):
        psi = state.psi_hat[0] + rng.standard_normal(3) * 0.1
        if not state.covers(0, psi):
            continue
        c = rng.standard_normal(3)
        assert optimistic_mean_u(state, 0, c) >= float(psi @ c) - 1e-9


def test_clipping_caps_the_bonus():
    state = make_ellipsoid([1], psi_bar=5.0, c_bar=1.0, delta_conf=0.01, u_clip=1.0)
    assert optimistic_mean_u(state, 0, np.array([1.0])) == 1.0
    state.psi_hat[0] = np.array([-50.0])
    state.psi_bar = 0.0
    state.delta_conf = 0.999999
    assert optimistic_mean_u(state, 0, np.array([1.0])) == -1.0


def test_update_zero_action_is_identity():
    state = make_ellipsoid([2, 3], psi_bar=1.0, c_bar=1.0, delta_conf=0.1)
    before = [m.copy() for m in state.v], [m.copy() for m in state.moments]
    linear_update(state, 1, np.zeros(3), reward=0.7)
    assert all(np.array_equal(a, b) for a, b in zip(before[0], state.v))
    assert all(np.array_equal(a, b) for a, b in zip(before[1], state.moments))
    assert state.t == 1  # the round still counts toward the radius schedule


def test_update_rank_one_arithmetic():
    state = make_ellipsoid([2], psi_bar=1.0, c_bar=1.0, delta_conf=0.1)
    linear_update(state, 0, np.array([1.0, 0.0]), reward=0.5)
    assert state.v[0] == pytest.approx(np.array([[2.0, 0.0], [0.0, 1.0]]))
    assert state.moments[0] == pytest.approx([0.5, 0.0])
    assert state.psi_hat[0] == pytest.approx([0.25, 0.0])


def test_sherman_morrison_tracks_direct_inverse():
    rng = np.random.default_rng(7)
    state = make_ellipsoid([3], psi_bar=1.0, c_bar=2.0, delta_conf=0.1)
    for _ in range(40):
        linear_update(state, 0, rng.uniform(-2, 2, size=3), float(rng.standard_normal()))
    assert state.v_inv[0] == pytest.approx(np.linalg.inv(state.v[0]), abs=1e-10)
    assert state.psi_hat[0] == pytest.approx(np.linalg.solve(state.v[0], state.moments[0]))


def test_radius_schedule_monotone():
    state = make_ellipsoid([2], psi_bar=1.1, c_bar=1.0, delta_conf=0.01)
    radii = []
    for _ in range(30):
        radii.append(state.sqrt_beta())
        linear_update(state, 0, np.zeros(2), 0.0)
    assert all(b >= a for a, b in zip(radii, radii[1:]))


def test_coverage_on_simulated_linear_streams():
    """The true parameter stays inside the growing ellipsoid in most runs."""
    inst = SymmetricTwoSource()
    psi_true = [np.array([-1 / 3, 1.0]), np.array([-1 / 3, 1.0])]
    failures = 0
    runs, horizon = 60, 400
    for run in range(runs):
        rng = np.random.default_rng(1000 + run)
        ep = inst.sample_stream(horizon, rng)
        state = make_ellipsoid([2, 2], psi_bar=1.1, c_bar=1.0, delta_conf=0.05)
        ok = True
        for t in range(horizon):
            k = int(rng.integers(0, 2))
            feat = np.zeros(2)
            feat[int(ep.ctx[t, k])] = 1.0
            linear_update(state, k, feat, float(ep.u[t]))
            if not (state.covers(0, psi_true[0]) and state.covers(1, psi_true[1])):
                ok = False
                break
        failures += 0 if ok else 1
    # union bound allows K*delta = 0.10; leave Monte-Carlo headroom on top
    assert failures / runs <= 0.10 + 0.08


def test_make_ellipsoid_validation():
    with pytest.raises(ValueError):
        make_ellipsoid([2], psi_bar=1.0, c_bar=1.0, delta_conf=0.0)
    with pytest.raises(ValueError):
        make_ellipsoid([2], psi_bar=-1.0, c_bar=1.0, delta_conf=0.1)
    with pytest.raises(ValueError):
        make_ellipsoid([2], psi_bar=1.0, c_bar=0.0, delta_conf=0.1)


# --- plug-in prior learner -------------------------------------------------------


def test_plugin_balanced_gaussian_is_tanh():
    state = AlphaLearnerState(sigmas=(1.0,))
    state.total, state.count = 0.5, 1  # alpha_hat = 0.5
    assert plugin_mean_a(state, 0, 2.0) == pytest.approx(math.tanh(2.0))


def test_plugin_symmetric_observation_is_zero():
    state = AlphaLearnerState(sigmas=(1.0,))
    state.total, state.count = 1.0, 2
    assert plugin_mean_a(state, 0, 0.0) == pytest.approx(0.0)


def test_plugin_prior_out_of_range_falls_back_to_zero():
    state = AlphaLearnerState(sigmas=(1.0,))
    state.total, state.count = 3.0, 2  # alpha_hat = 1.5
    assert plugin_mean_a(state, 0, 2.0) == 0.0
    state = AlphaLearnerState(sigmas=(1.0,))
    assert plugin_mean_a(state, 0, 2.0) == 0.0  # no observations yet


def test_plugin_running_mean_is_exact():
    state = AlphaLearnerState(sigmas=(1.0, 2.0))
    obs = [0.3, -1.4, 2.2, 0.9]
    for i, a_hat in enumerate(obs):
        plugin_mean_a(state, i % 2, a_hat)
    want = float(np.mean([(v + 1.0) / 2.0 for v in obs]))
    assert state.alpha_hat == pytest.approx(want)


def test_plugin_uses_prior_from_before_the_update():
    state = AlphaLearnerState(sigmas=(1.0,))
    state.total, state.count = 0.5, 1
    s = plugin_mean_a(state, 0, 2.0)
    assert s == pytest.approx(math.tanh(2.0))  # computed at alpha_hat = 0.5
    assert state.alpha_hat == pytest.approx((0.5 + 1.5) / 2)


def test_plugin_underflow_flag():
    state = AlphaLearnerState(sigmas=(0.05,))
    state.total, state.count = 0.5, 1
    assert plugin_mean_a(state, 0, 60.0) == 0.0
    assert state.underflow


def test_plugin_laplace_densities():
    state = AlphaLearnerState(sigmas=(1.0,), noise="laplace")
    state.total, state.count = 0.3 * 5, 5
    a_hat = 0.7
    num_p = 0.3 * 0.5 * math.exp(-abs(a_hat - 1.0))
    num_m = 0.7 * 0.5 * math.exp(-abs(a_hat + 1.0))
    assert plugin_mean_a(state, 0, a_hat) == pytest.approx((num_p - num_m) / (num_p + num_m))


def test_plugin_validation():
    with pytest.raises(ValueError):
        AlphaLearnerState(sigmas=(1.0,), noise="uniform")
    with pytest.raises(ValueError):
        AlphaLearnerState(sigmas=(-1.0,))
