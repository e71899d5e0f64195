import numpy as np
import pytest
from hypothesis import given, strategies as st

from swpolar import source as S
from swpolar.galois import gf

F2 = gf(2)


def pair(w, px=(0.5, 0.5), f=F2):
    return S.pair_from_channel(f, px, w)


def test_error_prob_examples():
    assert S.error_prob(pair(S.noiseless())) == 0
    assert S.error_prob(pair(S.useless())) == pytest.approx(0.5)
    assert S.error_prob(pair(S.bsc(0.11))) == pytest.approx(0.11)


def test_conditional_entropy_examples():
    assert S.conditional_entropy(pair(S.noiseless())) == 0
    f3 = gf(3)
    assert S.conditional_entropy(pair(S.useless(3), np.ones(3) / 3, f3)) == pytest.approx(1.0)
    assert S.conditional_entropy(pair(S.bsc(0.11))) == pytest.approx(0.4999, abs=1e-4)


def test_bhattacharyya_examples():
    assert S.bhattacharyya(pair(S.noiseless())) == 0
    assert S.bhattacharyya(pair(S.useless())) == pytest.approx(1.0)
    assert S.bhattacharyya(pair(S.bsc(0.11))) == pytest.approx(0.6258, abs=1e-4)
    with pytest.raises(ValueError):
        S.bhattacharyya(pair(S.useless(3), np.ones(3) / 3, gf(3)))


def test_sampling_determinism_and_degenerate():
    src = S.JointSource.from_channels(F2, [0.5, 0.5], [S.bsc(0.1), S.bec(0.2)])
    a = src.sample_block(100, 5)
    b = src.sample_block(100, 5)
    assert np.array_equal(a[0], b[0]) and all(np.array_equal(u, v) for u, v in zip(a[1], b[1]))
    point = S.JointSource.from_channels(F2, [0.0, 1.0], [S.noiseless()])
    x, (y,) = point.sample_block(50, 1)
    assert np.all(x == 1) and np.all(y == 1)


def test_bernoulli_mean_regression():
    src = S.JointSource.from_channels(F2, [0.5, 0.5], [S.bsc(0.11)])
    x, _ = src.sample_block(10**5, 0)
    assert 0.49 <= x.mean() <= 0.51


def test_pair_marginals():
    src = S.JointSource.from_channels(F2, [0.3, 0.7], [S.bsc(0.1), S.bsc(0.2)])
    d2 = src.pair(2)
    assert np.allclose(d2.table, pair(S.bsc(0.2), (0.3, 0.7)).table)
    with pytest.raises(ValueError):
        src.pair(3)


def test_broadcast_product_and_transmit():
    W = S.BroadcastChannel.product(S.bec(0.3), S.bec(0.5))
    assert W.K == 2 and W.output_alphabets == [3, 3]
    assert np.allclose(W.marginal(1), S.bec(0.3))
    assert np.allclose(W.marginal(2), S.bec(0.5))
    assert S.mutual_information(W.pair([0.5, 0.5], 1)) == pytest.approx(0.7)
    assert S.mutual_information(W.pair([0.5, 0.5], 2)) == pytest.approx(0.5)
    u = np.random.default_rng(0).integers(0, 2, 20000)
    v1, v2 = W.transmit(u, 3)
    assert np.mean(v1 == 2) == pytest.approx(0.3, abs=0.02)
    assert np.all((v1 == u) | (v1 == 2)) and np.all((v2 == u) | (v2 == 2))
    noiseless = S.BroadcastChannel.product(S.noiseless(), S.noiseless())
    assert all(np.array_equal(v, u) for v in noiseless.transmit(u, 1))


def test_invalid_tables():
    with pytest.raises(ValueError):
        S.PairDistribution(F2, np.array([[0.5, 0.1], [0.1, 0.1]]))
    with pytest.raises(ValueError):
        S.BroadcastChannel(np.array([[0.5, 0.6], [0.5, 0.5]]))


def test_inverse_binary_entropy():
    for h in (0.0, 0.2, 0.3, 0.5, 1.0):
        assert S.binary_entropy(S.inverse_binary_entropy(h)) == pytest.approx(h, abs=1e-12)


tables = st.lists(st.floats(0.0, 1.0), min_size=6, max_size=6).filter(lambda v: sum(v) > 1e-3)


@given(tables)
def test_functional_consistency(vals):
    t = np.array(vals).reshape(2, 3)
    d = S.PairDistribution(F2, t / t.sum())
    pe, h, z = S.error_prob(d), S.conditional_entropy(d), S.bhattacharyya(d)
    assert 0 <= pe <= 0.5 + 1e-12 and -1e-12 <= h <= 1 + 1e-12 and 0 <= z <= 1 + 1e-12
    assert (pe < 1e-15) == (h < 1e-12) == (z < 1e-15)
    perm = S.PairDistribution(F2, d.table[:, ::-1].copy())
    assert S.conditional_entropy(perm) == pytest.approx(h, abs=1e-12)


@given(st.floats(0.01, 0.49))
def test_z_is_one_only_for_independent_uniform(p):
    assert S.bhattacharyya(pair(S.bsc(p))) < 1
    assert S.bhattacharyya(pair(S.useless(), (p, 1 - p))) < 1
