import numpy as np
import pytest
from hypothesis import given, strategies as st

from swpolar import galois as G
from swpolar.oracles import field_mul_table

SMALL = [(2, 1), (3, 1), (5, 1), (7, 1), (2, 2), (2, 3), (3, 2), (2, 4), (2, 5), (2, 6), (5, 2)]


def test_gf2_add():
    f = G.gf(2)
    assert G.add(1, 1, f) == 0


def test_gf4_known_values():
    f = G.gf(2, 2)
    assert f.modulus == (1, 1, 1)
    assert G.add(2, 3, f) == 1
    assert G.mul(2, 2, f) == 3  # alpha^2 = alpha + 1
    assert f.alpha == 2


@pytest.mark.parametrize("q,alpha", [(2, 1), (5, 2), (4, 2)])
def test_primitive_element(q, alpha):
    assert G.primitive_element(G.field_for_size(q)) == alpha


def test_default_moduli():
    assert G.gf(2, 3).modulus == (1, 1, 0, 1)
    assert G.gf(2, 4).modulus == (1, 1, 0, 0, 1)
    assert G.gf(2, 8).modulus == (1, 1, 0, 1, 1, 0, 0, 0, 1)
    assert G.gf(2, 8).alpha == 3


@pytest.mark.parametrize("p,r", SMALL)
def test_axioms_exhaustive(p, r):
    f = G.gf(p, r)
    q = f.q
    a = np.arange(q)
    A, B = np.meshgrid(a, a, indexing="ij")
    add, mul = f.add_table, f.mul_table
    assert np.array_equal(add, add.T) and np.array_equal(mul, mul.T)
    assert np.all(add[:, 0] == a) and np.all(mul[:, 1] == a)
    for c in range(q):
        assert np.array_equal(add[add[A, B], c], add[A, add[B, c]])
        assert np.array_equal(mul[mul[A, B], c], mul[A, mul[B, c]])
        assert np.array_equal(mul[A, add[B, c]], add[mul[A, B], mul[A, c]])
    assert np.all(mul[a[1:], f.inv_table[a[1:]]] == 1)
    assert np.all(add[a, f.neg_table] == 0)


@pytest.mark.parametrize("p,r", SMALL + [(2, 8)])
def test_tables_match_polynomial_oracle(p, r):
    f = G.gf(p, r)
    assert np.array_equal(f.mul_table, field_mul_table(f))


@pytest.mark.parametrize("p,r", SMALL + [(2, 8), (3, 5)])
def test_alpha_order(p, r):
    f = G.gf(p, r)
    assert G.power(f.alpha, f.q - 1, f) == 1
    assert all(G.power(f.alpha, k, f) != 1 for k in range(1, f.q - 1))
    assert G.is_irreducible(f.modulus, p) or r == 1


def test_irreducibility_check():
    assert G.is_irreducible((1, 1, 1), 2)
    assert not G.is_irreducible((1, 0, 1), 2)  # (x+1)^2
    assert not G.is_irreducible((2, 0, 1), 3)  # x^2 + 2 has the root 1 mod 3
    assert G.is_irreducible((1, 0, 1), 3)  # x^2 + 1 has no root mod 3


@given(st.sampled_from(SMALL), st.data())
def test_sub_undoes_add(pr, data):
    f = G.gf(*pr)
    a = data.draw(st.integers(0, f.q - 1))
    b = data.draw(st.integers(0, f.q - 1))
    assert G.add(G.sub(a, b, f), b, f) == a
    assert G.sub(a, a, f) == 0
    if a:
        assert G.mul(a, G.inv(a, f), f) == 1


def test_errors():
    f = G.gf(3)
    with pytest.raises(ValueError):
        G.add(3, 0, f)
    with pytest.raises(ZeroDivisionError):
        G.inv(0, f)
    with pytest.raises(G.FieldError):
        G.gf(4)
    with pytest.raises(G.FieldError):
        G.gf(2, 9)
    with pytest.raises(G.FieldError):
        G.gf(2, 2, (1, 0, 1))


def test_array_ops_and_config():
    f = G.gf(2, 2)
    out = G.mul(np.array([1, 2, 3]), np.array([3, 3, 3]), f)
    assert list(out) == [3, 1, 2]
    assert G.gf(**{k: v for k, v in f.to_config().items() if k in ("p", "r")}) == f
