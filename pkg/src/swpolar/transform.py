"""The polarizing transform ``u = x G_N`` over GF(q) and its block-diagonal lift.

``G_N`` is the plain ``m``-fold Kronecker power of a 2x2 kernel; there is no
bit-reversal permutation anywhere in this package.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .galois import FieldSpec


@dataclass(frozen=True)
class PolarKernel:
    """Lower-triangular kernel ``[[1, 0], [twist, 1]]``."""

    field: FieldSpec
    twist: int = 1

    def __post_init__(self):
        if not 0 < self.twist < self.field.q:
            raise ValueError("kernel twist must be a nonzero field element")

    @property
    def entries(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return ((1, 0), (self.twist, 1))

    @classmethod
    def default(cls, f: FieldSpec) -> "PolarKernel":
        """``[[1,0],[1,1]]`` for prime fields, ``[[1,0],[alpha,1]]`` otherwise."""
        return cls(f, 1 if f.is_prime_field else f.alpha)


@dataclass(frozen=True)
class TransformSpec:
    kernel: PolarKernel
    m: int
    t: int = 1

    def __post_init__(self):
        if self.m < 0 or self.t < 1:
            raise ValueError("need m >= 0 and t >= 1")

    @property
    def field(self) -> FieldSpec:
        return self.kernel.field

    @property
    def N(self) -> int:
        return 1 << self.m

    @property
    def n(self) -> int:
        return self.t * self.N

    def with_blocks(self, t: int) -> "TransformSpec":
        return TransformSpec(self.kernel, self.m, t)


def transform_spec(f: FieldSpec, N: int, t: int = 1) -> TransformSpec:
    m = N.bit_length() - 1
    if N < 1 or (1 << m) != N:
        raise ValueError(f"block length {N} is not a power of two")
    return TransformSpec(PolarKernel.default(f), m, t)


def _butterfly(x, spec: TransformSpec, inverse: bool) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.shape[-1] != spec.n:
        raise ValueError(f"expected {spec.n} symbols on the last axis, got {x.shape[-1]}")
    f = spec.field
    f.check(x)
    a = spec.kernel.twist
    lead = x.shape[:-1]
    v = x.reshape(-1, spec.n).copy()
    binary = f.q == 2
    h = spec.N // 2
    while h >= 1:
        w = v.reshape(v.shape[0], -1, 2, h)
        top, bot = w[:, :, 0, :], w[:, :, 1, :]
        if binary:
            top ^= bot
        else:
            scaled = f.mul_table[a, bot]
            table = f.sub_table if inverse else f.add_table
            w[:, :, 0, :] = table[top, scaled]
        h //= 2
    return v.reshape(lead + (spec.n,))


def forward(x, spec: TransformSpec) -> np.ndarray:
    """``u = x diag(G_N, ..., G_N)``; leading axes are treated as a batch."""
    return _butterfly(x, spec, inverse=False)


def inverse(u, spec: TransformSpec) -> np.ndarray:
    return _butterfly(u, spec, inverse=True)


def kron_matrix(f: FieldSpec, m: int, twist: int | None = None) -> np.ndarray:
    """Explicit ``G^{(x)m}`` over GF(q) (for tests and small oracles)."""
    a = (1 if f.is_prime_field else f.alpha) if twist is None else twist
    g = np.array([[1, 0], [a, 1]], dtype=np.int64)
    out = np.ones((1, 1), dtype=np.int64)
    for _ in range(m):
        rows, cols = out.shape
        nxt = np.zeros((2 * rows, 2 * cols), dtype=np.int64)
        for i in range(2):
            for j in range(2):
                nxt[i * rows:(i + 1) * rows, j * cols:(j + 1) * cols] = f.mul_table[g[i, j], out]
        out = nxt
    return out


def matmul(x: np.ndarray, g: np.ndarray, f: FieldSpec) -> np.ndarray:
    """Row vector(s) times matrix over GF(q), by explicit accumulation."""
    x = np.atleast_2d(np.asarray(x, dtype=np.int64))
    out = np.zeros((x.shape[0], g.shape[1]), dtype=np.int64)
    for k in range(g.shape[0]):
        out = f.add_table[out, f.mul_table[x[:, k:k + 1], g[k][None, :]]]
    return out
