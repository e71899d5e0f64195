"""Discrete memoryless sources, side-information channels and broadcast channels.

Probability tables are plain float64 arrays.  The first axis of every source
table is the field symbol ``x``; remaining axes are side-information alphabets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .galois import FieldSpec, gf

NORM_TOL = 1e-12


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_table(table: np.ndarray, name: str) -> None:
    if np.any(table < 0) or not np.all(np.isfinite(table)):
        raise ValueError(f"{name}: entries must be finite and nonnegative")
    if abs(table.sum() - 1.0) > NORM_TOL:
        raise ValueError(f"{name}: total mass {table.sum()!r} differs from 1")


@dataclass(frozen=True)
class PairDistribution:
    """Joint pmf of (X, Y) with X over a finite field and Y over ``range(ny)``."""

    field: FieldSpec
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        table = np.ascontiguousarray(self.table, dtype=np.float64)
        if table.ndim != 2 or table.shape[0] != self.field.q:
            raise ValueError(f"pair table must have shape (q={self.field.q}, |Y|)")
        _check_table(table, "PairDistribution")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def ny(self) -> int:
        return self.table.shape[1]

    @property
    def px(self) -> np.ndarray:
        return self.table.sum(axis=1)

    @property
    def py(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def posterior_matrix(self) -> np.ndarray:
        """Rows indexed by y holding P(x | y); zero-mass outputs get a uniform row."""
        py = self.py
        post = np.full((self.ny, self.q), 1.0 / self.q)
        nz = py > 0
        post[nz] = (self.table[:, nz] / py[nz]).T
        return post

    def sample(self, n: int, seed=None) -> tuple[np.ndarray, np.ndarray]:
        rng = _as_rng(seed)
        flat = rng.choice(self.table.size, size=n, p=self.table.ravel())
        x, y = np.unravel_index(flat, self.table.shape)
        return x.astype(np.int64), y.astype(np.int64)


@dataclass(frozen=True)
class JointSource:
    """P(x, y_1, ..., y_K) with X over ``field`` and Y_k over ``range(|Y_k|)``."""

    field: FieldSpec
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        table = np.ascontiguousarray(self.table, dtype=np.float64)
        if table.ndim < 2 or table.shape[0] != self.field.q:
            raise ValueError(f"source table must have shape (q={self.field.q}, |Y_1|, ...)")
        _check_table(table, "JointSource")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def K(self) -> int:
        return self.table.ndim - 1

    @property
    def side_alphabets(self) -> list[int]:
        return list(self.table.shape[1:])

    @property
    def px(self) -> np.ndarray:
        return self.table.reshape(self.field.q, -1).sum(axis=1)

    def pair(self, k: int) -> PairDistribution:
        """Marginal of (X, Y_k), decoders numbered from 1."""
        if not 1 <= k <= self.K:
            raise ValueError(f"decoder index {k} outside 1..{self.K}")
        axes = tuple(a for a in range(1, self.K + 1) if a != k)
        return PairDistribution(self.field, self.table.sum(axis=axes))

    def sample_block(self, n: int, seed=None) -> tuple[np.ndarray, list[np.ndarray]]:
        """``n`` i.i.d. draws: the x-block and one y-block per decoder."""
        if n < 1:
            raise ValueError("block length must be >= 1")
        rng = _as_rng(seed)
        flat = rng.choice(self.table.size, size=n, p=self.table.ravel())
        coords = np.unravel_index(flat, self.table.shape)
        return coords[0].astype(np.int64), [c.astype(np.int64) for c in coords[1:]]

    @classmethod
    def from_channels(cls, f: FieldSpec, px, channels) -> "JointSource":
        """Side informations conditionally independent given X; ``channels[k]`` is
        a row-stochastic matrix W_k(y | x) of shape (q, |Y_k|)."""
        px = np.asarray(px, dtype=np.float64)
        table = px
        for w in channels:
            w = np.asarray(w, dtype=np.float64)
            if w.shape[0] != f.q or np.any(np.abs(w.sum(axis=1) - 1) > NORM_TOL):
                raise ValueError("side channel must be row-stochastic with q rows")
            table = table[..., None] * w.reshape((f.q,) + (1,) * (table.ndim - 1) + (w.shape[1],))
        return cls(f, table)


@dataclass(frozen=True)
class BroadcastChannel:
    """Binary-input broadcast channel W(v_1, ..., v_K | u)."""

    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        table = np.ascontiguousarray(self.table, dtype=np.float64)
        if table.ndim < 2 or table.shape[0] != 2:
            raise ValueError("broadcast table must have shape (2, |V_1|, ..., |V_K|)")
        rows = table.reshape(2, -1)
        if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1) > NORM_TOL):
            raise ValueError("each conditional slice W(.|u) must sum to 1")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def K(self) -> int:
        return self.table.ndim - 1

    @property
    def output_alphabets(self) -> list[int]:
        return list(self.table.shape[1:])

    def marginal(self, k: int) -> np.ndarray:
        axes = tuple(a for a in range(1, self.K + 1) if a != k)
        return self.table.sum(axis=axes)

    def pair(self, pu, k: int) -> PairDistribution:
        """(U, V_k) with U ~ ``pu``."""
        pu = np.asarray(pu, dtype=np.float64)
        return PairDistribution(gf(2), pu[:, None] * self.marginal(k))

    def transmit(self, u: np.ndarray, seed=None) -> list[np.ndarray]:
        rng = _as_rng(seed)
        u = np.asarray(u, dtype=np.int64)
        rows = self.table.reshape(2, -1)
        out = np.empty(u.shape, dtype=np.int64)
        for b in (0, 1):
            sel = u == b
            out[sel] = rng.choice(rows.shape[1], size=int(sel.sum()), p=rows[b])
        coords = np.unravel_index(out, self.table.shape[1:])
        return [c.astype(np.int64) for c in coords]

    @classmethod
    def product(cls, *channels) -> "BroadcastChannel":
        """Independent components W_1 x ... x W_K, each a (2, |V_k|) matrix."""
        table = np.ones((2,))
        for w in channels:
            w = np.asarray(w, dtype=np.float64)
            table = table[..., None] * w.reshape((2,) + (1,) * (table.ndim - 1) + (w.shape[1],))
        return cls(table)


# --- named channel matrices W(y | x) -------------------------------------------------

def bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]])


def bec(e: float) -> np.ndarray:
    """Outputs 0, 1 and erasure symbol 2."""
    return np.array([[1 - e, 0.0, e], [0.0, 1 - e, e]])


def noiseless(q: int = 2) -> np.ndarray:
    return np.eye(q)


def useless(q: int = 2) -> np.ndarray:
    """Output independent of input (single output symbol)."""
    return np.ones((q, 1))


def symmetric(q: int, eps: float) -> np.ndarray:
    """Y = X w.p. 1 - eps, otherwise uniform over the other q - 1 symbols."""
    w = np.full((q, q), eps / (q - 1))
    np.fill_diagonal(w, 1 - eps)
    return w


def pair_from_channel(f: FieldSpec, px, w) -> PairDistribution:
    px = np.asarray(px, dtype=np.float64)
    return PairDistribution(f, px[:, None] * np.asarray(w, dtype=np.float64))


# --- scalar functionals -------------------------------------------------------------

def error_prob(d: PairDistribution) -> float:
    """MAP error probability P_e(X | Y) = 1 - sum_y max_x P(x, y)."""
    t = d.table
    return float(np.sum(t.sum(axis=0) - t.max(axis=0)))


def conditional_entropy(d: PairDistribution, base: float | None = None) -> float:
    """H(X | Y) in log base ``base`` (defaults to q)."""
    base = d.q if base is None else base
    t = d.table
    py = t.sum(axis=0)
    nz = t > 0
    ratio = np.divide(t, py[None, :], out=np.ones_like(t), where=nz)
    return float(-np.sum(t[nz] * np.log(ratio[nz])) / np.log(base))


def entropy(p, base: float = 2) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)) / np.log(base))


def binary_entropy(p: float) -> float:
    return entropy([p, 1 - p], 2)


def inverse_binary_entropy(h: float) -> float:
    """The p in [0, 1/2] with h2(p) = h (bisection)."""
    if not 0 <= h <= 1:
        raise ValueError("binary entropy lies in [0, 1]")
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = (lo + hi) / 2
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def bhattacharyya(d: PairDistribution) -> float:
    """Z(X | Y) = 2 sum_y sqrt(P(0, y) P(1, y)) for binary X."""
    if d.q != 2:
        raise ValueError("Bhattacharyya parameter is defined for binary X only")
    return float(2 * np.sum(np.sqrt(d.table[0] * d.table[1])))


def mutual_information(d: PairDistribution, base: float = 2) -> float:
    return entropy(d.px, base) - conditional_entropy(d, base)
