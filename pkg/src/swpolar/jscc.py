"""Slepian-Wolf coding over a binary-input broadcast channel.

The source block ``x`` (length ``n = tN``) is compressed by a subset-indexed
universal code whose payload for subset ``A`` is written into the channel
index set ``I_A``.  The pre-transform channel word ``d`` (length ``l = sN``)
is completed with shared-seed random bits and, on ``L_U``, with the
prior-only SC decision; ``u = d diag(G_N, ..., G_N)`` is transmitted.
Decoder ``k`` runs SC over its own channel output to recover the payloads
it needs, then the universal decoder with its side information.

All random fills come from ``shared_seed`` (and an optional per-message
nonce) so every decoder can reproduce them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .construction import ChannelRule, ChannelSets, channel_sets
from .source import BroadcastChannel, JointSource, conditional_entropy, mutual_information
from .transform import transform_spec
from .universal import (CoveringError, Key, SubsetRateAllocation, UniversalCode, all_subsets,
                        balanced_layout, build_tree, covers, decode_universal, encode_subset,
                        key_str, layout_depth, leaf_codes, subset_code)

PAYLOAD = 0
RANDOM_FILL = 1
DETERMINISTIC = 2
EXTRA_RANDOM = 3
TAG_NAMES = {PAYLOAD: "payload", RANDOM_FILL: "random-fill", DETERMINISTIC: "deterministic",
             EXTRA_RANDOM: "extra-random"}

RECORD_FORMAT = "swpolar-transmission"
RECORD_VERSION = 1


class AchievabilityError(ValueError):
    """H(X|Y_k) < kappa I(U;V_k) fails for some decoder."""


# --- linear independence over GF(2) -------------------------------------------------

@dataclass(frozen=True)
class IndependencePlan:
    """Which payload bits are linear combinations of bits a decoder already has.

    ``replaced[A][j]`` marks bit ``j`` of payload ``A``; ``combos[A][j]`` lists
    the ``(key, index)`` bits whose XOR equals it.  Every referenced key is a
    superset of ``A``, so any decoder reading ``A`` can rebuild the bit.
    """

    order: tuple
    replaced: dict
    combos: dict
    kept: int
    total: int


def enforce_linear_independence(functionals: dict, order=None) -> IndependencePlan:
    """Rank ledger over GF(2).

    ``functionals[A]`` lists each payload bit as an int bitmask over the
    transformed-source positions.  Keys are processed by decreasing size; a
    bit is tested against the kept bits of already processed supersets and
    the earlier bits of its own payload.  Dependent bits are flagged.
    """
    if order is None:
        order = sorted(functionals, key=lambda a: (-len(a), sorted(a)))
    order = tuple(order)
    ids, offset = {}, 0
    for a in order:
        ids[a] = offset
        offset += len(functionals[a])
    id_to_bit = [(a, j) for a in order for j in range(len(functionals[a]))]
    replaced = {a: np.zeros(len(functionals[a]), dtype=bool) for a in order}
    combos = {a: {} for a in order}
    done = []
    for a in order:
        basis = {}

        def reduce(vec, combo):
            while vec:
                p = vec.bit_length() - 1
                if p not in basis:
                    return vec, combo
                bv, bc = basis[p]
                vec ^= bv
                combo ^= bc
            return 0, combo

        for b in done:
            if not a <= b:
                continue
            for j, vec in enumerate(functionals[b]):
                if replaced[b][j]:
                    continue
                v, c = reduce(vec, 1 << (ids[b] + j))
                if v:
                    basis[v.bit_length() - 1] = (v, c)
        for j, vec in enumerate(functionals[a]):
            v, c = reduce(vec, 1 << (ids[a] + j))
            if v:
                basis[v.bit_length() - 1] = (v, c)
            else:
                replaced[a][j] = True
                c ^= 1 << (ids[a] + j)
                combos[a][j] = tuple(id_to_bit[i] for i in range(c.bit_length()) if c >> i & 1)
        done.append(a)
    total = sum(len(v) for v in functionals.values())
    kept = total - sum(int(r.sum()) for r in replaced.values())
    return IndependencePlan(order, replaced, combos, kept, total)


def _apply_plan(plan: IndependencePlan, bits: dict, keys) -> dict:
    """Fill flagged bits from their combinations (processing in plan order)."""
    out = {a: np.array(bits[a], dtype=np.int64) for a in keys}
    for a in plan.order:
        if a not in out:
            continue
        for j, refs in plan.combos[a].items():
            out[a][j] = sum(int(out[b][i]) for b, i in refs) & 1
    return out


# --- specification ------------------------------------------------------------------

@dataclass(frozen=True)
class JsccCodeSpec:
    N: int
    s: int
    t: int
    kappa: float
    pu: np.ndarray = field(repr=False)
    channel: BroadcastChannel = field(repr=False)
    source: JointSource = field(repr=False)
    sets: ChannelSets = field(repr=False)
    partition: dict = field(repr=False)  # A -> mask over [N]
    code: UniversalCode = field(repr=False)
    plan: IndependencePlan = field(repr=False)
    tags: np.ndarray = field(repr=False)  # provenance over [l]
    positions: dict = field(repr=False)  # A -> sorted indices of I_A^(l)
    shared_seed: int = 0
    margins: dict = field(default_factory=dict, repr=False)

    @property
    def K(self) -> int:
        return self.source.K

    @property
    def l(self) -> int:
        return self.s * self.N

    @property
    def n(self) -> int:
        return self.t * self.N

    def capacity(self, a: Key) -> int:
        return len(self.positions.get(frozenset(a), ()))

    def info_mask(self, k: int) -> np.ndarray:
        """I_k over [N]."""
        return self.sets.info[k - 1]

    def allocation(self) -> SubsetRateAllocation:
        return SubsetRateAllocation(self.K, {a: self.capacity(a) / self.n for a in self.partition})

    def payload_lengths(self) -> dict:
        return {a: self.code.payload_len(a) for a in self.code.keys}


def index_partition(info: list[np.ndarray]) -> dict:
    """I_A = (intersection of I_k, k in A) minus every I_k with k outside A."""
    K = len(info)
    stack = np.stack(info)
    out = {}
    for a in all_subsets(K):
        sel = np.array([k + 1 in a for k in range(K)])
        out[a] = np.all(stack[sel], axis=0) & ~np.any(stack[~sel], axis=0)
    return out


def choose_blocks(kappa: float, K: int, tol: float = 0.01, t_max: int = 1 << 16) -> tuple[int, int]:
    """Smallest chain length ``c`` (>= 2 unless K = 1) with ``t = c^D`` and
    ``|ceil(kappa t)/t - kappa| <= tol kappa``; returns ``(c, t)``."""
    D = max(layout_depth(balanced_layout(range(1, K + 1))), 0)
    c = 1 if K == 1 else 2
    while True:
        t = c ** D if D else c
        if t > t_max:
            raise ValueError(f"no block count up to {t_max} approximates kappa={kappa}")
        if abs(math.ceil(kappa * t - 1e-12) / t - kappa) <= tol * kappa:
            return c, t
        c += 1


def construct_jscc(pu, channel: BroadcastChannel, source: JointSource, kappa: float, N: int,
                   rule: ChannelRule = ChannelRule(), delta: float = 0.15, tol: float = 0.01,
                   chain_t: int | None = None, method: str = "auto", trials: int = 10_000,
                   seed: int = 0, workers: int = 1, shared_seed: int = 0,
                   leaves: dict | None = None) -> JsccCodeSpec:
    """Build index sets, the subset-indexed source code and the filling plan.

    Raises :class:`AchievabilityError` when the rate condition fails for
    ``pu`` and :class:`CoveringError` when the channel index sets cannot
    carry the source payloads at this block length.
    """
    pu = np.asarray(pu, dtype=np.float64)
    if source.field.q != 2:
        raise ValueError("broadcast coding is defined for binary sources")
    if channel.K != source.K:
        raise ValueError("channel and source disagree on the number of decoders")
    if rule.theta >= 1 - rule.high:
        raise ValueError("low and high Z thresholds overlap")
    K = source.K
    H = [conditional_entropy(source.pair(k), base=2) for k in range(1, K + 1)]
    I = [mutual_information(channel.pair(pu, k)) for k in range(1, K + 1)]
    margins = {"entropy": H, "mutual_information": I,
               "rate_margin": [kappa * i - h for h, i in zip(H, I)]}
    bad = [k + 1 for k, m in enumerate(margins["rate_margin"]) if m <= 0]
    if bad:
        raise AchievabilityError(
            "H(X|Y_k) < kappa I(U;V_k) fails for decoder(s) "
            + ", ".join(f"{k} (H={H[k - 1]:.4f}, kappa*I={kappa * I[k - 1]:.4f})" for k in bad))

    m = N.bit_length() - 1
    spec = transform_spec(source.field, N)
    if chain_t is None:
        chain_t, t = choose_blocks(kappa, K, tol)
    else:
        D = layout_depth(balanced_layout(range(1, K + 1)))
        t = chain_t ** D if D else chain_t
    s = math.ceil(kappa * t - 1e-12)
    l, n = s * N, t * N

    sets = channel_sets(pu, [channel.marginal(k) for k in range(1, K + 1)], m, rule, method,
                        trials, seed, workers)
    partition = index_partition(sets.info)
    positions = {a: np.flatnonzero(np.tile(mask, s)) for a, mask in partition.items()}
    alloc = SubsetRateAllocation(K, {a: len(p) / n for a, p in positions.items()})
    slack = [alloc.aggregate(k) - h for k, h in enumerate(H, start=1)]
    margins.update({"covering_slack": slack, "s": s, "t": t,
                    "capacity": {key_str(a): len(p) for a, p in positions.items()}})
    if not covers(alloc, H):
        raise CoveringError(
            f"index sets at N={N}, t={t}, s={s} do not cover the entropies: "
            + ", ".join(f"decoder {k}: |I_k|/n - H = {v:+.4f}" for k, v in enumerate(slack, 1))
            + "; a larger N or t is needed")

    if leaves is None:
        leaves = leaf_codes(source, N, delta, method, trials, seed + 100, workers)
    layout = balanced_layout(range(1, K + 1))
    D = layout_depth(layout)
    if K == 1:
        from .universal import leaf as make_leaf
        root = make_leaf(1, leaves[1], t)
    else:
        root = build_tree(layout, leaves, [chain_t] * D)
    budgets = {a: max(len(p) - 1, 0) for a, p in positions.items()}
    code = subset_code(root, K, budgets)
    lengths = {a: code.payload_len(a) for a in code.keys}
    margins["payload"] = {key_str(a): lengths[a] for a in code.keys}

    plan = enforce_linear_independence(code.root.functionals(0))
    tags = np.full(l, RANDOM_FILL, dtype=np.int8)
    tags[np.tile(sets.low, s)] = DETERMINISTIC
    for a, pos in positions.items():
        tags[pos] = EXTRA_RANDOM
        pay = pos[:lengths.get(a, 0)]
        flagged = plan.replaced.get(a, np.zeros(len(pay), dtype=bool))
        tags[pay[~flagged]] = PAYLOAD
    tags.setflags(write=False)
    return JsccCodeSpec(N, s, t, float(kappa), pu, channel, source, sets, partition, code, plan,
                        tags, positions, int(shared_seed), margins)


# --- encoding / decoding ------------------------------------------------------------

@dataclass
class TransmissionRecord:
    d: np.ndarray
    u: np.ndarray
    tags: np.ndarray
    v: list = field(default_factory=list)
    nonce: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "format": RECORD_FORMAT, "version": RECORD_VERSION, "nonce": self.nonce,
            "tag_names": {str(k): v for k, v in TAG_NAMES.items()},
            "d": self.d.tolist(), "u": self.u.tolist(), "tags": self.tags.tolist(),
            "v": [vk.tolist() for vk in self.v],
        })

    @classmethod
    def from_json(cls, text: str) -> "TransmissionRecord":
        obj = json.loads(text)
        if obj.get("format") != RECORD_FORMAT or obj.get("version") != RECORD_VERSION:
            raise ValueError("not a version-1 transmission record")
        return cls(np.array(obj["d"], dtype=np.int64), np.array(obj["u"], dtype=np.int64),
                   np.array(obj["tags"], dtype=np.int8),
                   [np.array(vk, dtype=np.int64) for vk in obj["v"]], obj["nonce"])


def shared_bits(spec: JsccCodeSpec, nonce: int = 0) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(spec.shared_seed, spawn_key=(nonce,)))
    return rng.integers(0, 2, spec.l, dtype=np.int64)


def _prior_rows(spec: JsccCodeSpec) -> np.ndarray:
    return np.broadcast_to(spec.pu / spec.pu.sum(), (spec.s, spec.N, 2))


def jscc_encode(x, spec: JsccCodeSpec, payloads=None, nonce: int = 0,
                backend: str | None = None) -> TransmissionRecord:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (spec.n,):
        raise ValueError(f"expected a length-{spec.n} source block")
    if payloads is None:
        payloads = encode_subset(x, spec.code)
    r = shared_bits(spec, nonce)
    d = r.copy()
    for a, pos in spec.positions.items():
        p = payloads.get(a)
        bits = np.zeros(0, dtype=np.int64) if p is None else (p.flat() if hasattr(p, "flat") else np.asarray(p))
        if len(bits) and len(bits) >= len(pos):
            raise ValueError(f"payload {key_str(a)} of {len(bits)} bits overflows {len(pos)} positions")
        if len(bits):
            keep = ~spec.plan.replaced[a]
            d[pos[:len(bits)][keep]] = bits[keep]
    kinds = np.where(spec.tags == DETERMINISTIC, _kernels.KIND_DECIDE, _kernels.KIND_KNOWN)
    idx = _kernels.twist_table(spec.source.field, 1)
    dd, u, _ = _kernels.sc_batch(_prior_rows(spec), kinds.reshape(spec.s, spec.N),
                                 d.reshape(spec.s, spec.N), idx, backend=backend)
    return TransmissionRecord(dd.reshape(-1), u.reshape(-1), spec.tags.copy(), [], nonce)


def transmit(record: TransmissionRecord, spec: JsccCodeSpec, seed=None) -> TransmissionRecord:
    record.v = spec.channel.transmit(record.u, seed)
    return record


def recover_payloads(v_k, spec: JsccCodeSpec, k: int, nonce: int = 0,
                     backend: str | None = None) -> tuple[dict, np.ndarray]:
    """SC channel decoding for user ``k``: the payloads of every ``A`` containing ``k``."""
    v_k = np.asarray(v_k, dtype=np.int64)
    if v_k.shape != (spec.l,):
        raise ValueError(f"expected {spec.l} channel outputs")
    post = spec.channel.pair(spec.pu, k).posterior_matrix()[v_k].reshape(spec.s, spec.N, 2)
    kinds = np.full(spec.l, _kernels.KIND_KNOWN, dtype=np.int8)
    kinds[spec.tags == PAYLOAD] = _kernels.KIND_DECIDE
    kinds[spec.tags == DETERMINISTIC] = _kernels.KIND_AUX
    r = shared_bits(spec, nonce)
    idx = _kernels.twist_table(spec.source.field, 1)
    d, _, _ = _kernels.sc_batch(post, kinds.reshape(spec.s, spec.N), r.reshape(spec.s, spec.N),
                                idx, aux=np.ascontiguousarray(_prior_rows(spec)), backend=backend)
    d = d.reshape(-1)
    keys = [a for a in spec.code.keys if k in a]
    bits = {a: d[spec.positions[a][:spec.code.payload_len(a)]] for a in keys}
    return _apply_plan(spec.plan, bits, keys), d


def jscc_decode(v_k, y_k, spec: JsccCodeSpec, k: int, nonce: int = 0,
                backend: str | None = None) -> np.ndarray:
    y_k = np.asarray(y_k, dtype=np.int64)
    if y_k.shape != (spec.n,):
        raise ValueError(f"expected {spec.n} side-information symbols")
    payloads, _ = recover_payloads(v_k, spec, k, nonce, backend)
    return decode_universal(payloads, y_k, spec.code, k, backend)


def tag_counts(tags) -> dict:
    tags = np.asarray(tags)
    return {name: int((tags == code).sum()) for code, name in TAG_NAMES.items()}
