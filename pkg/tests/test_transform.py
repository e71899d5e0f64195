import numpy as np
import pytest
from hypothesis import given, strategies as st

from swpolar.galois import field_for_size, gf
from swpolar.transform import forward, inverse, kron_matrix, matmul, transform_spec

QS = [2, 3, 4, 5, 8]


def test_small_examples():
    f = gf(2)
    spec = transform_spec(f, 4)
    assert list(forward([0, 0, 0, 1], spec)) == [1, 1, 1, 1]
    assert not forward(np.zeros(8, int), transform_spec(f, 8)).any()


def test_gf2_involution():
    f = gf(2)
    for m in range(1, 5):
        g = kron_matrix(f, m)
        assert np.array_equal(matmul(np.eye(1 << m, dtype=int), g @ g % 2, f), np.eye(1 << m, dtype=int))
        x = np.random.default_rng(m).integers(0, 2, 1 << m)
        spec = transform_spec(f, 1 << m)
        assert np.array_equal(forward(x, spec), inverse(x, spec))


def test_gf4_two_point_inverse():
    f = gf(2, 2)
    spec = transform_spec(f, 2)
    a = f.alpha
    for u1 in range(4):
        for u2 in range(4):
            x = inverse([u1, u2], spec)
            assert list(x) == [f.sub_table[u1, f.mul_table[a, u2]], u2]


@pytest.mark.parametrize("q", QS)
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_butterfly_matches_kronecker(q, m):
    f = field_for_size(q)
    rng = np.random.default_rng(q * 10 + m)
    x = rng.integers(0, q, (20, 1 << m))
    assert np.array_equal(forward(x, transform_spec(f, 1 << m)), matmul(x, kron_matrix(f, m), f))


@given(st.sampled_from(QS), st.integers(1, 10), st.sampled_from([1, 3]), st.integers(0, 2**32 - 1))
def test_round_trip_and_linearity(q, m, t, seed):
    f = field_for_size(q)
    spec = transform_spec(f, 1 << m, t)
    rng = np.random.default_rng(seed)
    x, y = rng.integers(0, q, (2, spec.n))
    assert np.array_equal(inverse(forward(x, spec), spec), x)
    assert np.array_equal(forward(f.add_table[x, y], spec), f.add_table[forward(x, spec), forward(y, spec)])


def test_block_diagonal():
    f = gf(3)
    spec = transform_spec(f, 8, 3)
    x = np.random.default_rng(1).integers(0, 3, 24)
    one = transform_spec(f, 8)
    assert np.array_equal(forward(x, spec), np.concatenate([forward(b, one) for b in x.reshape(3, 8)]))


def test_errors():
    f = gf(2)
    with pytest.raises(ValueError):
        transform_spec(f, 6)
    with pytest.raises(ValueError):
        forward(np.zeros(5, int), transform_spec(f, 4))
    with pytest.raises(ValueError):
        forward(np.array([0, 2]), transform_spec(f, 2))
