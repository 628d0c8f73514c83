"""Tests for the stochastic user models."""

import math

import numpy as np
import pytest

from fairalloc.environment import (
    GaussianMonotone,
    NoisyAttribute,
    SymmetricTwoSource,
    TableInstance,
    gaussian_density,
    laplace_density,
    load_table,
    restrict_to_source,
)
from fairalloc.errors import SchemaError
from fairalloc.penalty import interval_polytope, scaled_abs, zero_penalty

UNIT = interval_polytope(-1.0, 1.0)


# --- symmetric two-source model -----------------------------------------------


def test_symmetric_marginals_within_binomial_bounds():
    inst = SymmetricTwoSource()
    ep = inst.sample_stream(100_000, np.random.default_rng(0))
    n = ep.horizon
    sigma = math.sqrt(0.25 * 0.75 / n)
    for u0 in (1.0, -1.0):
        for a0 in (1.0, -1.0):
            freq = float(np.mean((ep.u == u0) & (ep.a[:, 0] == a0)))
            assert abs(freq - 0.25) <= 3 * sigma


def test_symmetric_contexts_fire_on_their_corners():
    ep = SymmetricTwoSource().sample_stream(20_000, np.random.default_rng(1))
    assert np.array_equal(ep.ctx[:, 0] == 1.0, (ep.a[:, 0] == 1.0) & (ep.u == 1.0))
    assert np.array_equal(ep.ctx[:, 1] == 1.0, (ep.a[:, 0] == -1.0) & (ep.u == 1.0))


@pytest.mark.parametrize(
    "k,ctx,want_u,want_a",
    [
        (0, 1, 1.0, 1.0),
        (0, 0, -1 / 3, -1 / 3),
        (1, 1, 1.0, -1.0),
        (1, 0, -1 / 3, 1 / 3),
    ],
)
def test_symmetric_conditional_means(k, ctx, want_u, want_a):
    cu, ca = SymmetricTwoSource().conditional_means(k, ctx)
    assert cu == pytest.approx(want_u)
    assert ca == pytest.approx([want_a])


def test_symmetric_stream_means_match_tables():
    inst = SymmetricTwoSource()
    ep = inst.sample_stream(5_000, np.random.default_rng(2))
    for k in range(2):
        for t in (0, 1234, 4999):
            cu, ca = inst.conditional_means(k, ep.ctx[t, k])
            assert ep.cond_u[t, k] == cu
            assert ep.cond_a[t, k] == pytest.approx(ca)


def test_symmetric_atoms_average_to_the_marginal():
    # law of total expectation on the finite table, exactly
    inst = SymmetricTwoSource()
    for k in range(2):
        probs, cond_u, cond_a = inst.atoms(k)
        assert probs.sum() == pytest.approx(1.0)
        assert float(probs @ cond_u) == pytest.approx(0.0)  # E[u] = 0
        assert float(probs @ cond_a[:, 0]) == pytest.approx(0.0)  # E[a] = 0


def test_tower_property_monte_carlo():
    inst = SymmetricTwoSource()
    ep = inst.sample_stream(50_000, np.random.default_rng(3))
    for k in range(2):
        vals = ep.cond_a[:, k, 0]
        assert abs(vals.mean()) <= 3 * vals.std() / math.sqrt(ep.horizon) + 1e-12


def test_determinism_and_seed_sensitivity():
    inst = SymmetricTwoSource()
    a = inst.sample_stream(1000, np.random.default_rng(7))
    b = inst.sample_stream(1000, np.random.default_rng(7))
    c = inst.sample_stream(1000, np.random.default_rng(8))
    assert np.array_equal(a.u, b.u) and np.array_equal(a.ctx, b.ctx)
    assert not np.array_equal(a.u, c.u)


def test_symmetric_constructor_validation():
    with pytest.raises(ValueError):
        SymmetricTwoSource(prices=(0.0,))
    inst = SymmetricTwoSource(penalty=zero_penalty(UNIT), prices=(0.0, 0.3))
    assert inst.prices == (0.0, 0.3)
    assert inst.penalty.lipschitz == 0.0


# --- Gaussian menu --------------------------------------------------------------


def test_gaussian_draws_respect_truncation():
    inst = GaussianMonotone(r=1.0, p=0.2)
    ep = inst.sample_stream(200_000, np.random.default_rng(4))
    assert float(np.abs(ep.u).max()) <= inst.trunc
    assert set(np.unique(ep.a[:, 0])) == {-1.0, 1.0}
    # half/half attribute marginal
    assert abs(float(ep.a.mean())) <= 3 / math.sqrt(ep.horizon)


def test_gaussian_full_source_reveals_the_pair():
    inst = GaussianMonotone(r=2.0, p=0.1)
    ep = inst.sample_stream(1000, np.random.default_rng(5))
    assert np.array_equal(ep.cond_u[:, 0], ep.u)
    assert np.array_equal(ep.cond_a[:, 0, 0], ep.a[:, 0])
    assert np.array_equal(ep.ctx[:, 0], ep.a[:, 0])
    assert np.array_equal(ep.ctx[:, 1], ep.u)


def test_gaussian_marginal_posterior_is_tanh():
    inst = GaussianMonotone(r=1.0, p=0.0)
    ep = inst.sample_stream(1500, np.random.default_rng(6))
    assert np.allclose(ep.cond_a[:, 1, 0], np.tanh(ep.u))
    cu, ca = inst.conditional_means(1, 0.7)
    assert cu == pytest.approx(0.7)
    assert ca == pytest.approx([math.tanh(0.7)])
    cu, ca = inst.conditional_means(0, (-1.0, 0.3))
    assert (cu, ca[0]) == (0.3, -1.0)


def test_gaussian_tanh_posterior_against_binned_draws():
    """E[a | u in a narrow bin] must track tanh at the bin center."""
    inst = GaussianMonotone(r=0.5, p=0.0)
    ep = inst.sample_stream(2_000_000, np.random.default_rng(9))
    for center in (-2.0, -1.0, 0.0, 1.0, 2.0):
        mask = np.abs(ep.u - center) <= 0.05
        n = int(mask.sum())
        assert n > 1000
        got = float(ep.a[mask, 0].mean())
        sem = float(ep.a[mask, 0].std()) / math.sqrt(n)
        assert abs(got - math.tanh(center)) <= 4 * sem + 5e-3


def test_gaussian_validation():
    with pytest.raises(ValueError):
        GaussianMonotone(r=-1.0, p=0.0)
    with pytest.raises(ValueError):
        GaussianMonotone(r=1.0, p=0.0, trunc=0.5)
    assert GaussianMonotone(r=0.0, p=0.1).penalty.lipschitz == 0.0


# --- table instance --------------------------------------------------------------


def _three_atom_table():
    # prob, z, u, a, c1, c2
    return TableInstance(
        probs=[0.5, 0.3, 0.2],
        z=[0, 0, 1],
        u=[1.0, -0.5, 0.25],
        a=np.array([[1.0], [-1.0], [1.0]]),
        contexts=np.array([[0, 1], [0, 0], [1, 0]]),
        prices=(0.1, 0.0),
        penalty=scaled_abs(2.0, UNIT),
    )


def test_table_conditional_means_match_enumeration():
    inst = _three_atom_table()
    # source 0, context 0 pools atoms 0 and 1 with weights 0.5/0.3
    cu, ca = inst.conditional_means(0, 0)
    assert cu == pytest.approx((0.5 * 1.0 + 0.3 * -0.5) / 0.8)
    assert ca[0] == pytest.approx((0.5 * 1.0 + 0.3 * -1.0) / 0.8)
    cu, ca = inst.conditional_means(0, 1)
    assert (cu, ca[0]) == (0.25, 1.0)
    probs, cond_u, cond_a = inst.atoms(1)
    assert probs == pytest.approx([0.5, 0.5])
    assert float(probs @ cond_u) == pytest.approx(0.5 * 1.0 + 0.3 * -0.5 + 0.2 * 0.25)


def test_table_single_row_is_deterministic():
    inst = TableInstance(
        probs=[1.0],
        z=[0],
        u=[0.75],
        a=np.array([[1.0]]),
        contexts=np.array([[0, 0]]),
        prices=(0.0, 0.0),
        penalty=zero_penalty(UNIT),
    )
    ep = inst.sample_stream(50, np.random.default_rng(0))
    assert np.all(ep.u == 0.75) and np.all(ep.a == 1.0)


def test_table_stream_consistency():
    inst = _three_atom_table()
    ep = inst.sample_stream(2000, np.random.default_rng(10))
    for t in (0, 999, 1999):
        for k in range(2):
            cu, ca = inst.conditional_means(k, ep.ctx[t, k])
            assert ep.cond_u[t, k] == pytest.approx(cu)
            assert ep.cond_a[t, k] == pytest.approx(ca)
    assert inst.n_public_contexts() == 2
    assert inst.n_contexts(0) == 2


def test_table_schema_validation():
    with pytest.raises(SchemaError):
        TableInstance(
            probs=[0.6, 0.3],  # does not sum to 1
            z=[0, 0],
            u=[1.0, -1.0],
            a=np.array([[1.0], [-1.0]]),
            contexts=np.array([[0, 0], [1, 1]]),
            prices=(0.0, 0.0),
            penalty=zero_penalty(UNIT),
        )
    with pytest.raises(SchemaError):
        TableInstance(
            probs=[1.0],
            z=[0],
            u=[1.0],
            a=np.array([[1.0]]),
            contexts=np.array([[0]]),
            prices=(0.0, 0.0),  # two prices, one context column
            penalty=zero_penalty(UNIT),
        )


def test_table_text_loader_roundtrip(tmp_path):
    path = tmp_path / "atoms.txt"
    path.write_text(
        "# weighted atoms\n"
        "dims 1 2\n"
        "row 0.5 0 1.0 1.0 0 1\n"
        "row 0.3 0 -0.5 -1.0 0 0\n"
        "row 0.2 1 0.25 1.0 1 0\n",
        encoding="utf-8",
    )
    inst = load_table(path, prices=(0.1, 0.0), penalty=scaled_abs(2.0, UNIT))
    ref = _three_atom_table()
    sa, sb = inst.sample_stream(500, np.random.default_rng(3)), ref.sample_stream(
        500, np.random.default_rng(3)
    )
    assert np.array_equal(sa.u, sb.u)
    assert np.array_equal(sa.ctx, sb.ctx)


@pytest.mark.parametrize(
    "body",
    [
        "row 1.0 0 1.0 1.0 0 0\n",  # row before dims
        "dims 1 2\nrow 1.0 0 1.0 1.0 0\n",  # short row
        "dims 1 2\nblah 1 2 3\n",  # unknown directive
        "dims 1 2\nrow one 0 1.0 1.0 0 0\n",  # non-numeric
        "dims 1 2\n",  # no rows
    ],
)
def test_table_text_loader_rejects_malformed(tmp_path, body):
    path = tmp_path / "bad.txt"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(SchemaError):
        load_table(path, prices=(0.0, 0.0), penalty=zero_penalty(UNIT))


# --- noisy attribute channels ------------------------------------------------


def test_noisy_posterior_matches_density_ratio():
    inst = NoisyAttribute(alpha=0.3, sigmas=(0.8, 2.0))
    for k, a_hat in [(0, 0.4), (1, -1.2), (0, 2.5)]:
        s = inst.sigmas[k]
        num_p = 0.3 * gaussian_density(a_hat - 1.0, s)
        num_m = 0.7 * gaussian_density(a_hat + 1.0, s)
        want = (num_p - num_m) / (num_p + num_m)
        assert inst.posterior_mean_a(k, a_hat) == pytest.approx(want)


def test_noisy_balanced_prior_gives_tanh():
    inst = NoisyAttribute(alpha=0.5, sigmas=(1.0,))
    for a_hat in (-2.0, -0.5, 0.0, 1.3):
        assert inst.posterior_mean_a(0, a_hat) == pytest.approx(math.tanh(a_hat))


def test_noisy_stream_posterior_and_prior_estimate():
    inst = NoisyAttribute(alpha=0.7, sigmas=(1.5,))
    ep = inst.sample_stream(200_000, np.random.default_rng(11))
    # (a_hat + 1)/2 is an unbiased estimate of alpha
    est = float(((ep.ctx[:, 0] + 1.0) / 2.0).mean())
    spread = float(((ep.ctx[:, 0] + 1.0) / 2.0).std()) / math.sqrt(ep.horizon)
    assert abs(est - 0.7) <= 4 * spread
    # vectorized posteriors agree with the scalar formula
    for t in (0, 77, 199_999):
        want = inst.posterior_mean_a(0, float(ep.ctx[t, 0]))
        assert ep.cond_a[t, 0, 0] == pytest.approx(want)
    assert np.all(ep.cond_u == 0.5)


def test_noisy_laplace_variant():
    inst = NoisyAttribute(alpha=0.5, sigmas=(1.0,), noise="laplace")
    ep = inst.sample_stream(5000, np.random.default_rng(12))
    t = 42
    a_hat = float(ep.ctx[t, 0])
    num_p = 0.5 * laplace_density(a_hat - 1.0, 1.0)
    num_m = 0.5 * laplace_density(a_hat + 1.0, 1.0)
    assert ep.cond_a[t, 0, 0] == pytest.approx((num_p - num_m) / (num_p + num_m))


def test_noisy_validation():
    with pytest.raises(ValueError):
        NoisyAttribute(alpha=0.0, sigmas=(1.0,))
    with pytest.raises(ValueError):
        NoisyAttribute(alpha=0.5, sigmas=(0.0,))
    with pytest.raises(ValueError):
        NoisyAttribute(alpha=0.5, sigmas=(1.0,), noise="cauchy")


# --- single-source restriction -------------------------------------------------


def test_restrict_to_source_views_one_column():
    parent = SymmetricTwoSource()
    only2 = restrict_to_source(parent, 1)
    assert only2.k_sources == 1
    assert only2.prices == (0.0,)
    a = parent.sample_stream(400, np.random.default_rng(5))
    b = only2.sample_stream(400, np.random.default_rng(5))
    assert np.array_equal(b.cond_u[:, 0], a.cond_u[:, 1])
    assert np.array_equal(b.ctx[:, 0], a.ctx[:, 1])
    cu, ca = only2.conditional_means(0, 1)
    assert (cu, ca[0]) == (1.0, -1.0)
    with pytest.raises(ValueError):
        restrict_to_source(parent, 5)


def test_draw_user_single_sample():
    draw = SymmetricTwoSource().draw_user(np.random.default_rng(13))
    assert draw.u in (-1.0, 1.0)
    assert draw.a[0] in (-1.0, 1.0)
    assert len(draw.contexts) == 2
