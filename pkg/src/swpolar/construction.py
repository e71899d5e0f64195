"""Per-index statistics of the synthesized variables and low-entropy set selection.

For index ``i`` the quantity of interest is ``P_e(U^i | U^{1:i-1}, Y^{1:N})``
(and for binary alphabets the Bhattacharyya parameter of the same pair).
Two estimators are provided:

``evolve_exact``
    tracks the joint law of (input symbol, everything observed) through the
    minus/plus recursion, merging outputs whose posteriors coincide;
``evolve_monte_carlo``
    runs genie-aided SC (true prefix) on sampled blocks.
"""
from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .source import PairDistribution, conditional_entropy
from .transform import forward, transform_spec

EXACT_BUDGET = 10**6
MC_CHUNK = 256


class ExactBudgetExceeded(RuntimeError):
    """Exact evolution would track too many states; use Monte Carlo instead."""


# --- selection rules ----------------------------------------------------------------

@dataclass(frozen=True)
class Threshold:
    theta: float

    def __post_init__(self):
        if not 0 <= self.theta < 1:
            raise ValueError("threshold must lie in [0, 1)")


@dataclass(frozen=True)
class TargetSize:
    size: int


Rule = Threshold | TargetSize


@dataclass(frozen=True)
class ChannelRule:
    """Z thresholds for the channel-side sets: low test ``Z <= theta``,
    high test ``Z >= 1 - theta_high``."""

    theta: float = 1e-3
    theta_high: float | None = None

    @property
    def high(self) -> float:
        return self.theta if self.theta_high is None else self.theta_high


# --- statistics containers ----------------------------------------------------------

@dataclass(frozen=True)
class SyntheticStats:
    N: int
    q: int
    pe: np.ndarray = field(repr=False)
    pe_soft: np.ndarray = field(repr=False)
    z: np.ndarray | None = field(default=None, repr=False)
    method: str = "exact"
    samples: int = 0


@dataclass(frozen=True)
class IndexSetProfile:
    N: int
    low_set: np.ndarray = field(repr=False)
    rule: Rule
    stats: SyntheticStats | None = field(default=None, repr=False, compare=False)

    @property
    def low_size(self) -> int:
        return int(self.low_set.sum())

    @property
    def syndrome_size(self) -> int:
        return self.N - self.low_size

    @property
    def m(self) -> int:
        return self.N.bit_length() - 1


# --- exact evolution ----------------------------------------------------------------

def _merge(T: np.ndarray) -> np.ndarray:
    mass = T.sum(axis=1)
    T = T[mass > 0]
    if len(T) <= 1:
        return T
    key = np.round(T / T.sum(axis=1, keepdims=True), 12)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    out = np.zeros((inv.max() + 1, T.shape[1]))
    np.add.at(out, inv.ravel(), T)
    return out


def _minus_exact(T, idx, budget):
    n, q = T.shape
    if n * n * q > budget:
        raise ExactBudgetExceeded(f"minus step needs {n * n * q} states (budget {budget})")
    # new[(o1, o2), c] = sum_b T[o1, c - a b] T[o2, b]
    return _merge(np.einsum("icb,jb->ijc", T[:, idx], T).reshape(-1, q))


def _plus_exact(T, idx, budget):
    n, q = T.shape
    if n * n * q * q > budget:
        raise ExactBudgetExceeded(f"plus step needs {n * n * q * q} states (budget {budget})")
    # new[(o1, o2, c), b] = T[o1, c - a b] T[o2, b]
    new = T[:, idx][:, None, :, :] * T[None, :, None, :]
    return _merge(new.reshape(-1, q))


def synthetic_channels(d: PairDistribution, m: int, budget: int = EXACT_BUDGET) -> list[np.ndarray]:
    """Joint tables (outputs x q) of every synthetic pair, in natural index order."""
    spec = transform_spec(d.field, 1 << m)
    idx = _kernels.twist_table(d.field, spec.kernel.twist)
    level = [_merge(d.table.T.copy())]
    for _ in range(m):
        nxt = []
        for T in level:
            nxt.append(_minus_exact(T, idx, budget))
            nxt.append(_plus_exact(T, idx, budget))
        level = nxt
    return level


def _pe(T):
    return float(np.sum(T.sum(axis=1) - T.max(axis=1)))


def _z(T):
    return float(2 * np.sum(np.sqrt(T[:, 0] * T[:, 1])))


def evolve_exact(d: PairDistribution, m: int, budget: int = EXACT_BUDGET) -> SyntheticStats:
    chans = synthetic_channels(d, m, budget)
    pe = np.array([_pe(T) for T in chans])
    z = np.array([_z(T) for T in chans]) if d.q == 2 else None
    return SyntheticStats(1 << m, d.q, pe, pe.copy(), z, "exact", 0)


# --- Monte-Carlo evolution ----------------------------------------------------------

def _mc_chunk(d: PairDistribution, spec, idx, post_table, n_trials, seed, chunk_id, backend):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_id,)))
    N = spec.N
    x, y = d.sample(n_trials * N, rng)
    x = x.reshape(n_trials, N)
    y = y.reshape(n_trials, N)
    u = forward(x, spec)
    _, _, p = _kernels.sc_batch(post_table[y], _kernels.KIND_KNOWN, u, idx, backend=backend)
    err = (np.argmax(p, axis=2) != u).sum(axis=0)
    soft = np.sort(p, axis=2)[:, :, :-1].sum(axis=2).sum(axis=0)
    z = (2 * np.sqrt(p[:, :, 0] * p[:, :, 1])).sum(axis=0) if d.q == 2 else None
    return err, soft, z


def evolve_monte_carlo(d: PairDistribution, m: int, trials: int, seed: int = 0,
                       workers: int = 1, backend: str | None = None) -> SyntheticStats:
    """Genie-aided estimates from ``trials`` sampled blocks.

    ``pe[i]`` is the fraction of trials where the posterior argmax misses the
    true ``u^i``; ``pe_soft`` averages the posterior mass off the argmax (an
    unbiased, lower-variance estimate of the same quantity, used to order
    indices with equal ``pe``); ``z`` averages ``2 sqrt(p0 p1)``.
    Chunking and per-chunk seeds do not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    spec = transform_spec(d.field, 1 << m)
    idx = _kernels.twist_table(d.field, spec.kernel.twist)
    post_table = d.posterior_matrix()
    sizes = [min(MC_CHUNK, trials - s) for s in range(0, trials, MC_CHUNK)]

    def job(c):
        return _mc_chunk(d, spec, idx, post_table, sizes[c], seed, c, backend)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, range(len(sizes))))
    else:
        parts = [job(c) for c in range(len(sizes))]
    err = np.zeros(spec.N, dtype=np.int64)
    soft = np.zeros(spec.N)
    zsum = np.zeros(spec.N) if d.q == 2 else None
    for e, s, z in parts:
        err += e
        soft += s
        if zsum is not None:
            zsum += z
    z = zsum / trials if zsum is not None else None
    return SyntheticStats(spec.N, d.q, err / trials, soft / trials, z, "monte-carlo", trials)


def evolve(d: PairDistribution, m: int, method: str = "auto", trials: int = 10_000,
           seed: int = 0, workers: int = 1, budget: int = EXACT_BUDGET) -> SyntheticStats:
    if method in ("auto", "exact"):
        try:
            return evolve_exact(d, m, budget)
        except ExactBudgetExceeded:
            if method == "exact":
                raise
    elif method != "monte-carlo":
        raise ValueError(f"unknown construction method {method!r}")
    return evolve_monte_carlo(d, m, trials, seed, workers)


# --- selection ----------------------------------------------------------------------

def select_low_set(stats: SyntheticStats, rule: Rule) -> IndexSetProfile:
    N = stats.N
    if isinstance(rule, Threshold):
        mask = stats.pe <= rule.theta
    elif isinstance(rule, TargetSize):
        if not 0 <= rule.size <= N:
            raise ValueError(f"target size {rule.size} outside [0, {N}]")
        order = np.lexsort((np.arange(N), stats.pe_soft, stats.pe))
        mask = np.zeros(N, dtype=bool)
        mask[order[:rule.size]] = True
    else:
        raise TypeError(f"unknown rule {rule!r}")
    mask.setflags(write=False)
    return IndexSetProfile(N, mask, rule, stats)


def syndrome_length(d: PairDistribution, N: int, delta: float) -> int:
    """``ceil(N (H_q(X|Y) + delta))`` clipped to ``[0, N]``."""
    # small guard so values like 0.5 * 1024 are not pushed up by rounding noise
    s = math.ceil(N * (conditional_entropy(d) + delta) - 1e-9)
    return min(max(s, 0), N)


def rate_rule(d: PairDistribution, N: int, delta: float) -> TargetSize:
    """Low set sized so the syndrome rate is about ``H_q(X|Y) + delta``."""
    return TargetSize(N - syndrome_length(d, N, delta))


def lift_multiblock(profile: IndexSetProfile, t: int) -> np.ndarray:
    if t < 1:
        raise ValueError("t must be >= 1")
    return np.tile(profile.low_set, t)


def polarized_fraction(stats: SyntheticStats, theta: float = 1e-3) -> float:
    return float(np.mean(stats.pe <= theta))


# --- channel-side sets --------------------------------------------------------------

@dataclass(frozen=True)
class ChannelSets:
    low_given_v: list[np.ndarray]  # L_{U|V_k}
    high: np.ndarray  # H_U
    low: np.ndarray  # L_U
    z_given_v: list[np.ndarray] = field(repr=False, default_factory=list)
    z_prior: np.ndarray | None = field(repr=False, default=None)

    @property
    def info(self) -> list[np.ndarray]:
        """I_k = L_{U|V_k} & H_U."""
        return [lk & self.high for lk in self.low_given_v]


def channel_sets(pu, channels, m: int, rule: ChannelRule = ChannelRule(), method: str = "auto",
                 trials: int = 10_000, seed: int = 0, workers: int = 1) -> ChannelSets:
    """``channels[k]`` is the (2, |V_k|) matrix W_k(v | u)."""
    from .galois import gf

    pu = np.asarray(pu, dtype=np.float64)
    if pu.shape != (2,):
        raise ValueError("channel-side sets need a binary input distribution")
    f = gf(2)
    zs = []
    for k, w in enumerate(channels):
        w = np.asarray(w, dtype=np.float64)
        if w.shape[0] != 2:
            raise ValueError("channel-side sets need binary-input channels")
        st = evolve(PairDistribution(f, pu[:, None] * w), m, method, trials, seed + 1 + k, workers)
        zs.append(st.z)
    z0 = evolve(PairDistribution(f, pu[:, None]), m, method, trials, seed, workers).z
    low_v = [z <= rule.theta for z in zs]
    return ChannelSets(low_v, z0 >= 1 - rule.high, z0 <= rule.theta, zs, z0)


# --- binary artifact ----------------------------------------------------------------

PROFILE_MAGIC = b"PSWP"
PROFILE_VERSION = 1
_PROFILE_HEADER = struct.Struct("<4sHHHBd")


def profile_to_bytes(profile: IndexSetProfile, q: int) -> bytes:
    """Header (magic, version, q, m, rule kind, rule value), N float64 pe values,
    then the low-set mask as a little-endian bitset."""
    if isinstance(profile.rule, Threshold):
        kind, value = 0, float(profile.rule.theta)
    else:
        kind, value = 1, float(profile.rule.size)
    pe = profile.stats.pe if profile.stats is not None else np.full(profile.N, np.nan)
    return (_PROFILE_HEADER.pack(PROFILE_MAGIC, PROFILE_VERSION, q, profile.m, kind, value)
            + np.asarray(pe, dtype="<f8").tobytes()
            + np.packbits(profile.low_set.astype(np.uint8), bitorder="little").tobytes())


def profile_from_bytes(data: bytes) -> tuple[IndexSetProfile, int]:
    magic, version, q, m, kind, value = _PROFILE_HEADER.unpack_from(data)
    if magic != PROFILE_MAGIC or version != PROFILE_VERSION:
        raise ValueError("not a version-1 profile artifact")
    N = 1 << m
    off = _PROFILE_HEADER.size
    pe = np.frombuffer(data, dtype="<f8", count=N, offset=off).copy()
    bits = np.frombuffer(data, dtype=np.uint8, offset=off + 8 * N)
    mask = np.unpackbits(bits, bitorder="little")[:N].astype(bool)
    rule = Threshold(value) if kind == 0 else TargetSize(int(value))
    stats = SyntheticStats(N, q, pe, pe.copy(), None, "stored", 0)
    return IndexSetProfile(N, mask, rule, stats), q
