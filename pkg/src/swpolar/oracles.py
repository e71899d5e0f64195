"""Brute-force references used to check the fast paths.

Everything here enumerates explicitly and is only meant for tiny blocks.
"""
from __future__ import annotations

import itertools

import numpy as np

from .galois import FieldSpec
from .source import PairDistribution
from .transform import kron_matrix, matmul


def all_words(q: int, N: int) -> np.ndarray:
    """Every length-N word over [q], first coordinate most significant."""
    return np.array(list(itertools.product(range(q), repeat=N)), dtype=np.int64).reshape(-1, N)


def _word_index(words: np.ndarray, q: int) -> np.ndarray:
    N = words.shape[1]
    return words @ (q ** np.arange(N - 1, -1, -1, dtype=np.int64))


def brute_force_pe(d: PairDistribution, m: int, chunk: int = 729) -> np.ndarray:
    """``P_e(U^i | U^{1:i-1}, Y^{1:N})`` for every i by summing over all (x, y).

    MAP error: ``1 - sum_{y, u^{1:i-1}} max_{u_i} P(u^{1:i}, y)``.
    """
    q, ny, N = d.q, d.ny, 1 << m
    xs = all_words(q, N)
    us = matmul(xs, kron_matrix(d.field, m), d.field)
    perm = np.argsort(_word_index(us, q))  # perm[u-index] = x-index
    ys = all_words(ny, N)
    correct = np.zeros(N)
    for start in range(0, len(ys), chunk):
        yb = ys[start:start + chunk]
        # P(x, y) = prod_j table[x_j, y_j]
        p = np.ones((len(yb), len(xs)))
        for j in range(N):
            p *= d.table[xs[None, :, j], yb[:, None, j]]
        pu = p[:, perm]
        for i in range(N):
            marg = pu.reshape(len(yb), q ** i, q, q ** (N - i - 1)).sum(axis=3)
            correct[i] += marg.max(axis=2).sum()
    return 1.0 - correct


def bayes_posterior(prefix, y_block, i: int, d: PairDistribution, m: int) -> np.ndarray:
    """``P(U^i = . | u^{0:i} = prefix, y)`` (0-based ``i``) by enumerating x."""
    q, N = d.q, 1 << m
    xs = all_words(q, N)
    us = matmul(xs, kron_matrix(d.field, m), d.field)
    y_block = np.asarray(y_block)
    w = np.prod(d.table[xs, y_block[None, :]], axis=1)
    ok = np.all(us[:, :i] == np.asarray(prefix)[None, :], axis=1)
    out = np.bincount(us[ok, i], weights=w[ok], minlength=q)
    s = out.sum()
    return out / s if s > 0 else np.full(q, 1.0 / q)


def bec_z(eps: float, m: int) -> np.ndarray:
    """Erasure evolution ``z- = 2z - z^2``, ``z+ = z^2``; index bits MSB first, 0 = minus."""
    z = np.array([eps])
    for _ in range(m):
        z = np.stack([2 * z - z * z, z * z], axis=1).reshape(-1)
    return z


def gf2_rank(rows) -> int:
    """Rank over GF(2) of a 0/1 matrix by dense elimination."""
    a = np.array(rows, dtype=np.uint8) % 2
    if a.size == 0:
        return 0
    a = a.copy()
    rank = 0
    for col in range(a.shape[1]):
        piv = np.flatnonzero(a[rank:, col])
        if not len(piv):
            continue
        p = rank + piv[0]
        a[[rank, p]] = a[[p, rank]]
        hit = np.flatnonzero(a[:, col])
        hit = hit[hit != rank]
        a[hit] ^= a[rank]
        rank += 1
        if rank == a.shape[0]:
            break
    return rank


def sc_decode_by_enumeration(syndrome_mask, u_known, y_block, d: PairDistribution, m: int) -> np.ndarray:
    """Sequential MAP decisions with exact posteriors (ties to the smaller symbol).

    ``syndrome_mask[i]`` marks indices whose value ``u_known[i]`` is given.
    Returns the decided u-vector.
    """
    N = 1 << m
    u = np.zeros(N, dtype=np.int64)
    for i in range(N):
        if syndrome_mask[i]:
            u[i] = u_known[i]
        else:
            u[i] = int(np.argmax(bayes_posterior(u[:i], y_block, i, d, m)))
    return u


def field_mul_table(f: FieldSpec) -> np.ndarray:
    """Multiplication by polynomial arithmetic, independent of the cached tables."""
    q, p, r = f.q, f.p, f.r
    if r == 1:
        a = np.arange(q)
        return (a[:, None] * a[None, :]) % p
    digits = lambda v: [(v // p**k) % p for k in range(r)]  # noqa: E731
    mod = list(f.modulus)  # low to high, monic of degree r
    out = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        for b in range(q):
            prod = [0] * (2 * r - 1)
            for i, ca in enumerate(digits(a)):
                for j, cb in enumerate(digits(b)):
                    prod[i + j] = (prod[i + j] + ca * cb) % p
            for deg in range(2 * r - 2, r - 1, -1):
                c = prod[deg]
                if c:
                    for k in range(r + 1):
                        prod[deg - r + k] = (prod[deg - r + k] - c * mod[k]) % p
            out[a, b] = sum(c * p**k for k, c in enumerate(prod[:r]))
    return out
