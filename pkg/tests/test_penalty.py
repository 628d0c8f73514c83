"""Penalty layer: frozen oracle values + the convex-analysis property suite.

Derived expected values are recomputed here by independent brute-force
oracles (dense grids) and frozen as literals, so a regression in the library
cannot silently move the goalposts.
"""

from __future__ import annotations

import numpy as np
import pytest

from fairalloc.penalty import (
    BallRegion,
    DeltaPolytope,
    PenaltySpec,
    ScalarPenaltyOps,
    conjugate,
    conjugate_bound,
    custom_penalty,
    eval_extension,
    eval_penalty,
    gamma_residual,
    interval_polytope,
    scaled_abs,
    scaled_quadratic,
    solve_gamma,
    subgradient_at,
    subgradient_at_zero,
    zero_penalty,
)

UNIT = interval_polytope(-1.0, 1.0)


# --- independent oracles -----------------------------------------------------


def grid_envelope(fn, L, lo, hi, x, n=400_001):
    """Brute-force inf over a dense domain grid of R(d) + L|x - d|."""
    g = np.linspace(lo, hi, n)
    return float(np.min(fn(g) + L * np.abs(x - g)))


def grid_conjugate(fn, lo, hi, lam, n=400_001):
    g = np.linspace(lo, hi, n)
    return float(np.max(lam * g - fn(g)))


def grid_gamma(obj, lo, hi, n=400_001):
    g = np.linspace(lo, hi, n)
    v = obj(g)
    i = int(np.argmax(v))
    return float(g[i]), float(v[i])


def custom_kink():
    """R(x) = |x| + x^2/2 on [-1,1]; |R'| <= 2 so L=2."""
    fn = lambda x: float(np.abs(x).sum() + 0.5 * float((x * x).sum()))
    return custom_penalty(fn, 2.0, UNIT)


# --- eval_penalty ------------------------------------------------------------


def test_eval_penalty_values():
    assert eval_penalty(scaled_abs(5.0, UNIT), [0.0]) == 0.0
    assert eval_penalty(scaled_abs(5.0, UNIT), [0.5]) == pytest.approx(2.5, abs=0)
    assert eval_penalty(scaled_quadratic(2.0, UNIT), [-0.3]) == pytest.approx(0.18, abs=1e-15)
    assert eval_penalty(zero_penalty(UNIT), [0.7]) == 0.0


def test_penalty_factories_set_lipschitz():
    assert scaled_abs(5.0, UNIT).lipschitz == 5.0
    assert scaled_quadratic(2.0, UNIT).lipschitz == pytest.approx(4.0)
    assert zero_penalty(UNIT).lipschitz == 0.0


def test_penalty_validation():
    with pytest.raises(ValueError):
        PenaltySpec("nope", UNIT, 1.0)
    with pytest.raises(ValueError):
        PenaltySpec("custom", UNIT, 1.0)  # fn missing
    with pytest.raises(ValueError):
        scaled_abs(-1.0, UNIT)


# --- extension ---------------------------------------------------------------


def test_extension_agrees_with_penalty_on_domain():
    rng = np.random.default_rng(3)
    specs = [zero_penalty(UNIT), scaled_abs(5.0, UNIT), scaled_quadratic(2.0, UNIT), custom_kink()]
    for spec in specs:
        for x in rng.uniform(-1.0, 1.0, size=1000):
            assert abs(eval_extension(spec, [x]) - eval_penalty(spec, [x])) <= 1e-9


def test_extension_outside_domain_frozen_value():
    # oracle: dense grid min of 5|d| + 5|2-d| over [-1,1] -> 10 exactly
    assert grid_envelope(lambda g: 5 * np.abs(g), 5.0, -1, 1, 2.0) == pytest.approx(10.0, abs=1e-8)
    assert eval_extension(scaled_abs(5.0, UNIT), [2.0]) == pytest.approx(10.0, abs=1e-9)


def test_extension_zero_penalty_is_zero_everywhere():
    spec = zero_penalty(UNIT)
    for x in (-3.0, -0.2, 0.0, 1.5, 2.9):
        assert eval_extension(spec, [x]) == 0.0


@pytest.mark.parametrize("x", [-3.0, -1.4, 0.3, 1.0, 1.7, 2.6])
def test_extension_quadratic_matches_grid_oracle(x):
    spec = scaled_quadratic(2.0, UNIT)
    oracle = grid_envelope(lambda g: 2.0 * g * g, spec.lipschitz, -1, 1, x)
    assert eval_extension(spec, [x]) == pytest.approx(oracle, abs=1e-8)


@pytest.mark.parametrize("x", [-2.5, -1.0, 0.0, 0.9, 2.1])
def test_extension_custom_matches_grid_oracle(x):
    spec = custom_kink()
    oracle = grid_envelope(lambda g: np.abs(g) + 0.5 * g * g, 2.0, -1, 1, x)
    assert eval_extension(spec, [x]) == pytest.approx(oracle, abs=1e-6)


def test_extension_lipschitz_certificate():
    rng = np.random.default_rng(11)
    for spec in (scaled_abs(5.0, UNIT), scaled_quadratic(2.0, UNIT), custom_kink()):
        L = spec.lipschitz
        xs = rng.uniform(-3.0, 3.0, size=(1000, 2))
        for x, y in xs:
            lhs = abs(eval_extension(spec, [x]) - eval_extension(spec, [y]))
            assert lhs <= L * abs(x - y) + 1e-9


# --- conjugate ---------------------------------------------------------------


def test_conjugate_frozen_values():
    # oracles: dense grid max over [-1,1]
    assert grid_conjugate(lambda g: 0.0 * g, -1, 1, 3.0) == pytest.approx(3.0, abs=1e-8)
    assert grid_conjugate(lambda g: 5 * np.abs(g), -1, 1, 7.0) == pytest.approx(2.0, abs=1e-8)
    assert conjugate(zero_penalty(UNIT), [3.0]) == pytest.approx(3.0, abs=1e-9)
    assert conjugate(scaled_abs(5.0, UNIT), [0.0]) == 0.0
    assert conjugate(scaled_abs(5.0, UNIT), [7.0]) == pytest.approx(2.0, abs=1e-9)


@pytest.mark.parametrize("lam", [-7.0, -2.4, 0.0, 0.8, 3.3, 6.0])
def test_conjugate_matches_grid_oracle(lam):
    cases = [
        (scaled_quadratic(2.0, UNIT), lambda g: 2.0 * g * g),
        (custom_kink(), lambda g: np.abs(g) + 0.5 * g * g),
    ]
    for spec, fn in cases:
        assert conjugate(spec, [lam]) == pytest.approx(grid_conjugate(fn, -1, 1, lam), abs=1e-6)


def test_fenchel_young_inequality():
    rng = np.random.default_rng(5)
    for spec in (scaled_abs(5.0, UNIT), scaled_quadratic(2.0, UNIT), custom_kink()):
        for _ in range(300):
            g = rng.uniform(-1, 1)
            lam = rng.uniform(-8, 8)
            lhs = eval_penalty(spec, [g]) + conjugate(spec, [lam])
            assert lhs >= lam * g - 1e-9


def test_biconjugation_recovers_penalty_on_domain():
    lam_grid = np.linspace(-6.5, 6.5, 4001)
    for spec, fn in [
        (scaled_abs(5.0, UNIT), lambda g: 5 * abs(g)),
        (scaled_quadratic(2.0, UNIT), lambda g: 2 * g * g),
        (custom_kink(), lambda g: abs(g) + 0.5 * g * g),
    ]:
        conj = np.array([conjugate(spec, [lv]) for lv in lam_grid])
        for g in (-0.9, -0.5, -0.1, 0.0, 0.3, 0.8):
            i = int(np.argmax(lam_grid * g - conj))
            # refine around the coarse argmax so grid error stays below tol
            fine = np.linspace(lam_grid[max(i - 2, 0)], lam_grid[min(i + 2, len(lam_grid) - 1)], 2001)
            bicon = max(float(lv * g - conjugate(spec, [lv])) for lv in fine)
            assert bicon == pytest.approx(fn(g), abs=1e-4)
            assert bicon <= fn(g) + 1e-9


def test_conjugate_monotone_in_penalty():
    lam_grid = np.linspace(-9, 9, 181)
    small, big = scaled_abs(2.0, UNIT), scaled_abs(5.0, UNIT)
    for lv in lam_grid:
        assert conjugate(small, [lv]) >= conjugate(big, [lv]) - 1e-12
    smallq, bigq = scaled_quadratic(1.0, UNIT), scaled_quadratic(3.0, UNIT)
    for lv in lam_grid:
        assert conjugate(smallq, [lv]) >= conjugate(bigq, [lv]) - 1e-12


def test_conjugate_bound_is_interval_endpoint_max():
    spec = scaled_quadratic(2.0, UNIT)
    b = 5.0
    grid = np.linspace(-b, b, 2001)
    oracle = max(conjugate(spec, [lv]) for lv in grid)
    assert conjugate_bound(spec, b) == pytest.approx(oracle, abs=1e-9)


# --- subgradients ------------------------------------------------------------


def test_subgradient_at_zero_minimum_norm():
    assert subgradient_at_zero(scaled_abs(5.0, UNIT)) == pytest.approx([0.0])
    assert subgradient_at_zero(scaled_quadratic(3.0, UNIT)) == pytest.approx([0.0])
    assert subgradient_at_zero(zero_penalty(UNIT)) == pytest.approx([0.0])
    assert subgradient_at_zero(custom_kink()) == pytest.approx([0.0], abs=1e-6)


def test_subgradient_at_vertex():
    assert subgradient_at(scaled_abs(5.0, UNIT), [1.0]) == pytest.approx([5.0])
    assert subgradient_at(scaled_abs(5.0, UNIT), [-1.0]) == pytest.approx([-5.0])
    assert subgradient_at(scaled_quadratic(2.0, UNIT), [1.0]) == pytest.approx([4.0])
    got = subgradient_at(custom_kink(), [0.5])  # R' = sign + x = 1.5
    assert got == pytest.approx([1.5], abs=1e-5)


def test_subgradient_norm_bounded_by_lipschitz():
    rng = np.random.default_rng(9)
    for spec in (scaled_abs(5.0, UNIT), scaled_quadratic(2.0, UNIT), custom_kink()):
        for _ in range(200):
            x = rng.uniform(-1, 1)
            g = subgradient_at(spec, [x])
            assert np.linalg.norm(g) <= spec.lipschitz + 1e-5


# --- solve_gamma -------------------------------------------------------------


def test_solve_gamma_zero_penalty_boundary():
    spec = zero_penalty(UNIT)
    region = BallRegion(np.array([0.3]), 2.0)
    assert solve_gamma(spec, [4.0], region) == pytest.approx([2.3])
    assert solve_gamma(spec, [-4.0], region) == pytest.approx([-1.7])
    assert solve_gamma(spec, [0.0], region) == pytest.approx([0.3])


def test_solve_gamma_frozen_values():
    # oracle: grid max of -5|g| over [-2,2] -> 0
    g0, _ = grid_gamma(lambda g: -5 * np.abs(g), -2, 2)
    assert g0 == pytest.approx(0.0, abs=1e-5)
    got = solve_gamma(scaled_abs(5.0, UNIT), [0.0], BallRegion(np.array([0.0]), 2.0))
    assert got == pytest.approx([0.0], abs=1e-9)

    # oracle: grid max of g - g^2 over [-2,2] -> 0.5 (interior stationary point)
    g1, _ = grid_gamma(lambda g: g - g * g, -2, 2)
    assert g1 == pytest.approx(0.5, abs=1e-5)
    got = solve_gamma(scaled_quadratic(1.0, UNIT), [1.0], BallRegion(np.array([0.0]), 2.0))
    assert got == pytest.approx([0.5], abs=1e-9)


def test_solve_gamma_degenerate_radius():
    spec = scaled_abs(5.0, UNIT)
    region = BallRegion(np.array([0.4]), 0.0)
    assert solve_gamma(spec, [3.0], region) == pytest.approx([0.4])


def test_solve_gamma_matches_grid_oracle_sweep():
    rng = np.random.default_rng(17)
    specs = {
        "abs": (scaled_abs(5.0, UNIT), lambda g: 5 * np.abs(g)),
        "quad": (scaled_quadratic(2.0, UNIT), lambda g: np.where(np.abs(g) <= 1, 2 * g * g, 4 * np.abs(g) - 2)),
        "kink": (custom_kink(), None),
    }
    for name, (spec, ext) in specs.items():
        for _ in range(40):
            lam = rng.uniform(-7, 7)
            c = rng.uniform(-1, 1)
            region = BallRegion(np.array([c]), 2.0)
            got = solve_gamma(spec, [lam], region)
            assert abs(float(got[0]) - c) <= 2.0 + 1e-9  # feasibility
            if ext is not None:
                obj = lambda g: lam * g - ext(g)
                _, v_star = grid_gamma(obj, c - 2, c + 2, n=200_001)
                v_got = lam * float(got[0]) - eval_extension(spec, got)
                assert v_got >= v_star - 1e-7
            assert gamma_residual(spec, [lam], region, got) <= 1e-6


def test_gamma_residual_flags_suboptimal_points():
    spec = scaled_quadratic(1.0, UNIT)
    region = BallRegion(np.array([0.0]), 2.0)
    assert gamma_residual(spec, [1.0], region, np.array([-1.0])) > 0.1


# --- geometry ----------------------------------------------------------------


def test_polytope_interval_and_diameter():
    assert UNIT.interval == (-1.0, 1.0)
    assert UNIT.diameter == 2.0
    assert UNIT.contains([0.2])
    assert not UNIT.contains([1.2])
    point = DeltaPolytope(np.array([[0.5]]))
    assert point.diameter == 0.0


def test_ball_region_validation():
    with pytest.raises(ValueError):
        BallRegion(np.array([0.0]), -1.0)


def test_triangle_polytope_membership_and_ops():
    tri = DeltaPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    assert tri.contains([0.25, 0.25])
    assert not tri.contains([0.8, 0.8])
    assert tri.diameter == pytest.approx(np.sqrt(2.0))

    spec = scaled_quadratic(1.0, tri)
    # extension agrees with the penalty on the domain
    rng = np.random.default_rng(2)
    for _ in range(50):
        w = rng.dirichlet(np.ones(3))
        x = w @ tri.vertices
        assert abs(eval_extension(spec, x) - eval_penalty(spec, x)) <= 1e-6

    # conjugate against a dense barycentric oracle
    lam = np.array([0.7, -0.4])
    ticks = np.linspace(0, 1, 301)
    best = -np.inf
    for w1 in ticks:
        w2 = np.linspace(0, 1 - w1, 120)
        pts = np.outer(1 - w1 - w2, tri.vertices[0]) + w1 * tri.vertices[1] + np.outer(w2, tri.vertices[2])
        vals = pts @ lam - (pts**2).sum(axis=1)
        best = max(best, float(vals.max()))
    assert conjugate(spec, lam) == pytest.approx(best, abs=1e-4)


def _tri_grid_max(tri, lam, region, scale, n=801):
    """Brute-force max of <lam, g> - scale*||g||^2 over the triangle ∩ ball.

    Valid oracle for the whole ball whenever L > ||lam||: outside the domain
    the envelope climbs at rate L along the segment back to its argmin, so
    stepping outside strictly decreases the objective.
    """
    w1 = np.linspace(0.0, 1.0, n)
    w2 = np.linspace(0.0, 1.0, n)
    g1, g2 = np.meshgrid(w1, w2, indexing="ij")
    keep = g1 + g2 <= 1.0 + 1e-12
    v0, v1, v2 = tri.vertices
    pts = (
        np.outer(1 - g1[keep] - g2[keep], v0)
        + np.outer(g1[keep], v1)
        + np.outer(g2[keep], v2)
    )
    inside = np.linalg.norm(pts - region.center, axis=1) <= region.radius
    pts = pts[inside]
    vals = pts @ lam - scale * (pts**2).sum(axis=1)
    return float(vals.max())


def test_solve_gamma_two_dim_interior_optimum():
    tri = DeltaPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    spec = scaled_quadratic(1.0, tri)
    region = BallRegion(np.array([0.2, 0.2]), tri.diameter)
    lam = np.array([0.5, 0.5])  # stationary point (0.25, 0.25) is interior
    got = solve_gamma(spec, lam, region)
    assert np.linalg.norm(got - region.center) <= region.radius + 1e-9
    assert got == pytest.approx([0.25, 0.25], abs=1e-4)
    assert gamma_residual(spec, lam, region, got) <= 1e-5


def test_solve_gamma_two_dim_boundary_optimum_value():
    # Optimum lands on the domain edge y=0; certify by value against a
    # brute-force grid (the single-subgradient residual is loose at kinks).
    tri = DeltaPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    spec = scaled_quadratic(1.0, tri)
    region = BallRegion(np.array([0.2, 0.2]), tri.diameter)
    lam = np.array([0.6, -0.3])
    got = solve_gamma(spec, lam, region)
    assert np.linalg.norm(got - region.center) <= region.radius + 1e-9
    val = float(lam @ got) - eval_extension(spec, got)
    assert val >= _tri_grid_max(tri, lam, region, spec.scale) - 2e-3
    # The certificate never understates the gap: a clearly suboptimal point
    # must carry at least its true deficit.
    bad = np.array([-0.9, 0.9])
    bad_val = float(lam @ bad) - eval_extension(spec, bad)
    assert gamma_residual(spec, lam, region, bad) >= (val - bad_val) - 1e-6


# --- scalar fast paths -------------------------------------------------------


def test_scalar_ops_match_array_api():
    rng = np.random.default_rng(23)
    for spec in (zero_penalty(UNIT), scaled_abs(5.0, UNIT), scaled_quadratic(2.0, UNIT), custom_kink()):
        ops = ScalarPenaltyOps(spec)
        for _ in range(200):
            t = rng.uniform(-3, 3)
            lv = rng.uniform(-7, 7)
            c = rng.uniform(-1, 1)
            assert ops.extension(t) == pytest.approx(eval_extension(spec, [t]), abs=1e-9)
            assert ops.conj(lv) == pytest.approx(conjugate(spec, [lv]), abs=1e-9)
            g_fast = ops.gamma(lv, c, 2.0)
            g_ref = float(solve_gamma(spec, [lv], BallRegion(np.array([c]), 2.0))[0])
            assert g_fast == pytest.approx(g_ref, abs=1e-9)


def test_with_polytope_rebinds_lipschitz():
    wide = interval_polytope(-2.0, 2.0)
    spec = scaled_quadratic(1.5, UNIT).with_polytope(wide)
    assert spec.lipschitz == pytest.approx(6.0)
    assert spec.polytope.interval == (-2.0, 2.0)
