import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_posterior, random_pairwise
from polarbc import PairwiseJoint, PolarTransform, SCContext, generator_matrix, polar_transform, sc_posterior
from polarbc.polar import GIVEN, sc_genie_posteriors, sc_run

BERN = lambda p: PairwiseJoint(np.array([[1 - p], [p]]), label="X|")  # noqa: E731


def test_transform_small_cases():
    assert polar_transform([0, 0, 0, 0]).tolist() == [0, 0, 0, 0]
    assert polar_transform([1, 0]).tolist() == [1, 0]
    assert polar_transform([0, 1]).tolist() == [1, 1]
    assert generator_matrix(2).tolist() == [[1, 0], [1, 1]]
    assert PolarTransform.of_length(16).m == 4 and PolarTransform(3).n == 8


@pytest.mark.parametrize("n", [3, 6, 12, 0])
def test_transform_rejects_non_powers(n):
    with pytest.raises(ValueError):
        polar_transform(np.zeros(n, dtype=np.uint8))


@pytest.mark.parametrize("m", range(1, 11))
def test_transform_involution_and_matrix(m):
    n = 1 << m
    rng = np.random.default_rng(m)
    x = rng.integers(0, 2, (1000, n), dtype=np.uint8)
    assert np.array_equal(polar_transform(polar_transform(x)), x)
    if n <= 64:
        g = generator_matrix(n).astype(np.int64)
        assert np.array_equal(polar_transform(x), (x.astype(np.int64) @ g) % 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_transform_linear(m, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.integers(0, 2, (2, 1 << m), dtype=np.uint8)
    assert np.array_equal(polar_transform(x ^ y), polar_transform(x) ^ polar_transform(y))


def test_posterior_examples():
    assert sc_posterior(SCContext(BERN(0.3), None, []), 0, n=1) == pytest.approx((0.7, 0.3), abs=1e-15)
    assert sc_posterior(SCContext(BERN(0.5), None, []), 0, n=2) == pytest.approx((0.5, 0.5), abs=1e-15)
    # U^1 = X^1 xor X^2 is Bern(2 * 0.11 * 0.89)
    assert sc_posterior(SCContext(BERN(0.11), None, []), 0, n=2) == pytest.approx((0.8042, 0.1958), abs=1e-12)


def test_posterior_errors():
    ctx = SCContext(BERN(0.3), None, [0])
    with pytest.raises(ValueError):
        sc_posterior(ctx, 0, n=4)
    with pytest.raises(IndexError):
        sc_posterior(ctx, 4, n=4)
    with pytest.raises(ValueError):
        sc_posterior(SCContext(BERN(0.3), None, []), 0)
    # side letter impossible under the model
    pw = PairwiseJoint(np.array([[0.5, 0.0], [0.0, 0.5]]), ("Y",), (2,), "X|Y")
    with pytest.raises(ValueError):
        sc_posterior(SCContext(pw, np.array([0, 1]), [0]), 1)
    with pytest.raises(ValueError):
        SCContext(pw, np.array([0, 2]), [])


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_posterior_matches_enumeration(n):
    rng = np.random.default_rng(n)
    for _ in range(50):
        pw = random_pairwise(rng, int(rng.integers(1, 4)))
        side = rng.integers(0, pw.side_size, n) if pw.side_size > 1 else None
        u = rng.integers(0, 2, n, dtype=np.uint8)
        for i in range(n):
            got = sc_posterior(SCContext(pw, side, u[:i]), i, n=n)
            assert sum(got) == pytest.approx(1.0, abs=1e-12)
            assert np.allclose(got, brute_posterior(pw, side, u[:i], n), atol=1e-9, rtol=0)


def test_posterior_concentrates_with_noiseless_side():
    pw = PairwiseJoint(np.array([[0.7, 0.0], [0.0, 0.3]]), ("Y",), (2,), "X|Y")
    rng = np.random.default_rng(3)
    x = rng.integers(0, 2, 64, dtype=np.uint8)
    u = polar_transform(x)
    for i in range(64):
        p = sc_posterior(SCContext(pw, x, u[:i]), i)
        assert p[u[i]] >= 1 - 1e-9


def test_sc_run_ties_and_threshold():
    leaves = np.full((2, 1, 4, 2), 0.5)
    u, x = sc_run(leaves, np.zeros(4, dtype=int))
    assert not u.any() and not x.any()
    # threshold 0 forces every decided bit to 1 when P(1) > 0
    u, _ = sc_run(leaves, np.zeros(4, dtype=int), threshold=np.zeros((2, 4)))
    assert u.all()
    with pytest.raises(ValueError):
        sc_run(leaves, np.full(4, GIVEN))
    with pytest.raises(ValueError):
        sc_run(leaves, np.full(4, 3))
    with pytest.raises(ValueError):
        sc_run(leaves[..., :1], np.zeros(4, dtype=int))


def test_sc_run_given_positions_reencode():
    rng = np.random.default_rng(4)
    u = rng.integers(0, 2, (5, 32), dtype=np.uint8)
    leaves = rng.dirichlet([1, 1], size=(5, 1, 32))
    got_u, x = sc_run(leaves, np.full(32, GIVEN), u)
    assert np.array_equal(got_u, u) and np.array_equal(x, polar_transform(u))


def test_frozen_subtree_skip_does_not_change_decisions():
    rng = np.random.default_rng(5)
    leaves = rng.dirichlet([1, 1], size=(8, 2, 64))
    rule = np.full(64, GIVEN)
    rule[rng.choice(64, 20, replace=False)] = rng.integers(0, 2, 20)
    given = rng.integers(0, 2, (8, 64), dtype=np.uint8)
    u_fast, x_fast = sc_run(leaves, rule, given)
    u_full, x_full, _ = sc_run(leaves, rule, given, capture=True)
    assert np.array_equal(u_fast, u_full) and np.array_equal(x_fast, x_full)


def test_genie_kernel_matches_sc_run():
    rng = np.random.default_rng(6)
    for n in (1, 2, 8, 64):
        leaves = rng.dirichlet([1, 1], size=(16, n))
        u = rng.integers(0, 2, (16, n), dtype=np.uint8)
        _, _, post = sc_run(leaves[:, None], np.full(n, GIVEN), u, capture=True)
        assert np.allclose(sc_genie_posteriors(leaves, u), post[:, 0], atol=1e-12)
