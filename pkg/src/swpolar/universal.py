"""Chained universal Slepian-Wolf codes.

A code is a binary tree.  Leaves are single-decoder block codes (``t_leaf``
polar blocks of length N); a chain node links ``t`` sub-blocks coded by its
left and right subtrees::

    f(x) = { fL(x[1]),  fL(x[i+1]) + fR(x[i])  (i = 1..t-1),  fR(x[t]) }

with the shorter operand zero-padded at its tail.  Decoders served by the left
subtree decode blocks 1..t and strip the re-encoded ``fR`` of the block they
just finished; decoders on the right run the same procedure from block t down.

Every node emits one symbol stream per payload key.  The plain scheme uses a
single key (the set of all decoders); the subset-indexed scheme uses one key
per nonempty ``A`` in ``[K1]`` and a leaf for decoder ``k`` splits each
block syndrome across keys containing ``k``.  Decoder ``k`` only ever reads
payloads whose key contains ``k``.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Union

import numpy as np

from . import codec
from ._wire import pack_symbols, packed_size, text_digest, unpack_symbols
from .codec import BlockCodeSpec
from .galois import FieldSpec

Key = frozenset


class CoveringError(ValueError):
    """Rates cannot carry the syndromes (or do not cover the entropies)."""


def key_str(key: Key) -> str:
    return "{" + ",".join(str(k) for k in sorted(key)) + "}"


def all_subsets(k1: int) -> list[Key]:
    """Nonempty subsets of {1..k1}: by size, then lexicographically."""
    out = []
    for size in range(1, k1 + 1):
        out.extend(frozenset(c) for c in combinations(range(1, k1 + 1), size))
    return out


def key_mask(key: Key) -> int:
    return sum(1 << (k - 1) for k in key)


def mask_key(mask: int) -> Key:
    return frozenset(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


# --- tree nodes ---------------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    decoder: int
    code: BlockCodeSpec
    segments: tuple[tuple[Key, int], ...]

    def __post_init__(self):
        total = sum(n for _, n in self.segments)
        if total != self.code.block_syndrome_len:
            raise ValueError(f"leaf {self.decoder}: segments hold {total} symbols, "
                             f"block syndrome has {self.code.block_syndrome_len}")
        for key, n in self.segments:
            if self.decoder not in key or n < 0:
                raise ValueError(f"leaf {self.decoder} cannot write to payload {key_str(key)}")

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def decoders(self) -> frozenset:
        return frozenset({self.decoder})

    def leaves(self):
        yield self

    def payload_len(self, key: Key) -> int:
        return self.code.t * sum(n for k, n in self.segments if k == key)

    def encode(self, x) -> dict[Key, np.ndarray]:
        syn = codec.encode(x, self.code).symbols.reshape(self.code.t, -1)
        out, col = {}, 0
        for key, n in self.segments:
            out[key] = syn[:, col:col + n].reshape(-1)
            col += n
        return out

    def decode(self, payloads, y, k, backend=None) -> np.ndarray:
        t = self.code.t
        parts = [np.asarray(payloads[key]).reshape(t, n) for key, n in self.segments]
        syn = np.concatenate(parts, axis=1) if parts else np.zeros((t, 0), dtype=np.int64)
        return codec.decode(syn.reshape(-1), y, self.code, backend=backend)

    def functionals(self, offset: int) -> dict[Key, list[int]]:
        """Each payload symbol as a bitmask of transformed-source positions."""
        N = self.code.N
        cols = np.flatnonzero(~self.code.profile.low_set)
        out = {key: [] for key, _ in self.segments}
        for b in range(self.code.t):
            pos = offset + b * N + cols
            c = 0
            for key, n in self.segments:
                out[key].extend(1 << int(p) for p in pos[c:c + n])
                c += n
        return out

    def describe(self) -> str:
        segs = ";".join(f"{key_str(k)}:{n}" for k, n in self.segments)
        low = "".join("1" if b else "0" for b in self.code.profile.low_set)
        return f"L({self.decoder},t={self.code.t},N={self.code.N},low={low},seg={segs})"


@dataclass(frozen=True)
class Chain:
    left: "Node"
    right: "Node"
    t: int

    def __post_init__(self):
        if self.t < 2:
            raise ValueError("a chain needs t >= 2 sub-blocks")
        if self.left.n != self.right.n:
            raise ValueError("chained subtrees must share a block length")
        if self.left.decoders & self.right.decoders:
            raise ValueError("sibling subtrees must serve disjoint decoders")

    @property
    def n(self) -> int:
        return self.t * self.left.n

    @property
    def decoders(self) -> frozenset:
        return self.left.decoders | self.right.decoders

    def leaves(self):
        yield from self.left.leaves()
        yield from self.right.leaves()

    def lengths(self, key: Key) -> tuple[int, int, int]:
        ll, lr = self.left.payload_len(key), self.right.payload_len(key)
        return ll, lr, max(ll, lr)

    def payload_len(self, key: Key) -> int:
        ll, lr, lm = self.lengths(key)
        return ll + (self.t - 1) * lm + lr

    def _split(self, x):
        x = np.asarray(x, dtype=np.int64)
        n1 = self.left.n
        return [x[i * n1:(i + 1) * n1] for i in range(self.t)]

    def segments(self, x, f: FieldSpec) -> dict[Key, list[np.ndarray]]:
        blocks = self._split(x)
        fl = [self.left.encode(b) for b in blocks]
        fr = [self.right.encode(b) for b in blocks]
        keys = set().union(*fl, *fr)
        out = {}
        for key in keys:
            _, _, lm = self.lengths(key)
            segs = [fl[0].get(key, _EMPTY)]
            for i in range(self.t - 1):
                a = _pad(fl[i + 1].get(key, _EMPTY), lm)
                b = _pad(fr[i].get(key, _EMPTY), lm)
                segs.append(f.add_table[a, b])
            segs.append(fr[-1].get(key, _EMPTY))
            out[key] = segs
        return out

    def encode(self, x) -> dict[Key, np.ndarray]:
        f = _field_of(self)
        return {key: np.concatenate(s) for key, s in self.segments(x, f).items()}

    def decode(self, payloads, y, k, backend=None) -> np.ndarray:
        if k in self.left.decoders:
            return self._decode_forward(payloads, y, k, backend)
        if k in self.right.decoders:
            return self._decode_backward(payloads, y, k, backend)
        raise ValueError(f"decoder {k} is not served by this subtree")

    def _parse(self, payloads):
        parsed = {}
        for key, p in payloads.items():
            p = np.asarray(p, dtype=np.int64)
            ll, lr, lm = self.lengths(key)
            if len(p) != ll + (self.t - 1) * lm + lr:
                raise ValueError(f"payload {key_str(key)} has {len(p)} symbols, "
                                 f"expected {ll + (self.t - 1) * lm + lr}")
            mids = p[ll:ll + (self.t - 1) * lm].reshape(self.t - 1, lm)
            parsed[key] = (p[:ll], mids, p[len(p) - lr:])
        return parsed

    def _decode_forward(self, payloads, y, k, backend):
        f = _field_of(self)
        parsed = self._parse(payloads)
        ys = self._split(y)
        cur = {key: head for key, (head, _, _) in parsed.items()}
        out = []
        for i in range(self.t):
            xi = self.left.decode(cur, ys[i], k, backend)
            out.append(xi)
            if i < self.t - 1:
                fr = self.right.encode(xi)
                cur = {}
                for key, (_, mids, _) in parsed.items():
                    ll, _, lm = self.lengths(key)
                    cur[key] = f.sub_table[mids[i], _pad(fr.get(key, _EMPTY), lm)][:ll]
        return np.concatenate(out)

    def _decode_backward(self, payloads, y, k, backend):
        f = _field_of(self)
        parsed = self._parse(payloads)
        ys = self._split(y)
        cur = {key: tail for key, (_, _, tail) in parsed.items()}
        out = [None] * self.t
        for i in range(self.t - 1, -1, -1):
            xi = self.right.decode(cur, ys[i], k, backend)
            out[i] = xi
            if i > 0:
                fl = self.left.encode(xi)
                cur = {}
                for key, (_, mids, _) in parsed.items():
                    _, lr, lm = self.lengths(key)
                    cur[key] = f.sub_table[mids[i - 1], _pad(fl.get(key, _EMPTY), lm)][:lr]
        return np.concatenate(out)

    def functionals(self, offset: int) -> dict[Key, list[int]]:
        n1 = self.left.n
        fl = [self.left.functionals(offset + i * n1) for i in range(self.t)]
        fr = [self.right.functionals(offset + i * n1) for i in range(self.t)]
        keys = set().union(*fl, *fr)
        out = {}
        for key in keys:
            _, _, lm = self.lengths(key)
            seq = list(fl[0].get(key, []))
            for i in range(self.t - 1):
                a = fl[i + 1].get(key, [])
                b = fr[i].get(key, [])
                seq.extend((a[j] if j < len(a) else 0) ^ (b[j] if j < len(b) else 0) for j in range(lm))
            seq.extend(fr[-1].get(key, []))
            out[key] = seq
        return out

    def describe(self) -> str:
        return f"C(t={self.t},{self.left.describe()},{self.right.describe()})"


Node = Union[Leaf, Chain]

_EMPTY = np.zeros(0, dtype=np.int64)


def _pad(a, length: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    if len(a) >= length:
        return a
    return np.concatenate([a, np.zeros(length - len(a), dtype=np.int64)])


def _field_of(node: Node) -> FieldSpec:
    while isinstance(node, Chain):
        node = node.left
    return node.code.spec.field


# --- payload container --------------------------------------------------------------

PAYLOAD_MAGIC = b"PSWC"
PAYLOAD_VERSION = 1
_PAY_HEADER = struct.Struct("<4sHHQII")
_SEG_HEADER = struct.Struct("<IH")
_SUBSET_ENTRY = struct.Struct("<QI")


@dataclass(frozen=True)
class ChainedPayload:
    """Root-level segments for one payload key: head, t-1 middles, tail
    (or a single leaf syndrome for a one-decoder code)."""

    segments: tuple[np.ndarray, ...]
    tags: tuple[str, ...]
    q: int
    t: int
    tree_digest: int = 0
    key: Key = field(default=frozenset())

    def flat(self) -> np.ndarray:
        if not self.segments:
            return _EMPTY
        return np.concatenate(self.segments).astype(np.int64)

    def __len__(self) -> int:
        return sum(len(s) for s in self.segments)

    def to_bytes(self) -> bytes:
        out = [_PAY_HEADER.pack(PAYLOAD_MAGIC, PAYLOAD_VERSION, self.q, self.tree_digest,
                                self.t, len(self.segments))]
        for seg, tag in zip(self.segments, self.tags):
            tb = tag.encode()
            out.append(_SEG_HEADER.pack(len(seg), len(tb)) + tb + pack_symbols(seg, self.q))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, key: Key = frozenset()) -> "ChainedPayload":
        magic, version, q, digest, t, nseg = _PAY_HEADER.unpack_from(data)
        if magic != PAYLOAD_MAGIC or version != PAYLOAD_VERSION:
            raise ValueError("not a version-1 chained payload")
        off = _PAY_HEADER.size
        segs, tags = [], []
        for _ in range(nseg):
            count, tlen = _SEG_HEADER.unpack_from(data, off)
            off += _SEG_HEADER.size
            tags.append(data[off:off + tlen].decode())
            off += tlen
            size = packed_size(count, q)
            segs.append(unpack_symbols(data[off:off + size], count, q))
            off += size
        return cls(tuple(segs), tuple(tags), q, t, digest, key)

    @property
    def nbytes(self) -> int:
        return len(self.to_bytes())


def payloads_to_bytes(payloads: dict[Key, ChainedPayload]) -> bytes:
    """Subset container: count, then (subset bitmask, length, payload blob) per key."""
    out = [struct.pack("<I", len(payloads))]
    for key in sorted(payloads, key=lambda k: (len(k), sorted(k))):
        blob = payloads[key].to_bytes()
        out.append(_SUBSET_ENTRY.pack(key_mask(key), len(blob)) + blob)
    return b"".join(out)


def payloads_from_bytes(data: bytes) -> dict[Key, ChainedPayload]:
    (count,) = struct.unpack_from("<I", data)
    off = 4
    out = {}
    for _ in range(count):
        mask, size = _SUBSET_ENTRY.unpack_from(data, off)
        off += _SUBSET_ENTRY.size
        key = mask_key(mask)
        out[key] = ChainedPayload.from_bytes(data[off:off + size], key)
        off += size
    return out


# --- the code object ----------------------------------------------------------------

@dataclass(frozen=True)
class UniversalCode:
    root: Node
    keys: tuple[Key, ...]
    k1: int

    @property
    def n(self) -> int:
        return self.root.n

    @property
    def decoders(self) -> frozenset:
        return self.root.decoders

    @property
    def field(self) -> FieldSpec:
        return _field_of(self.root)

    @property
    def digest(self) -> int:
        return text_digest(self.root.describe())

    @property
    def plain(self) -> bool:
        return len(self.keys) == 1

    def payload_len(self, key: Key) -> int:
        return self.root.payload_len(key)

    def wrap(self, key: Key, flat) -> ChainedPayload:
        """Cut a flat payload stream into its root-level segments."""
        flat = np.asarray(flat, dtype=np.int64)
        root = self.root
        if isinstance(root, Leaf):
            return ChainedPayload((flat,), (f"f{{{root.decoder}}}",), self.field.q, 1, self.digest, key)
        ll, lr, lm = root.lengths(key)
        segs = [flat[:ll]]
        segs += [flat[ll + i * lm: ll + (i + 1) * lm] for i in range(root.t - 1)]
        segs.append(flat[len(flat) - lr:] if lr else _EMPTY)
        L, R = key_str(root.left.decoders), key_str(root.right.decoders)
        tags = [f"f{L}(x[1])"]
        tags += [f"f{L}(x[{i + 2}])+f{R}(x[{i + 1}])" for i in range(root.t - 1)]
        tags.append(f"f{R}(x[{root.t}])")
        return ChainedPayload(tuple(segs), tuple(tags), self.field.q, root.t, self.digest, key)


def plain_code(root: Node) -> UniversalCode:
    key = frozenset(root.decoders)
    for leaf in root.leaves():
        if leaf.segments and any(k != key for k, _ in leaf.segments):
            raise ValueError("plain code leaves must write to the all-decoder payload")
    return UniversalCode(root, (key,), max(key))


def leaf(decoder: int, code: BlockCodeSpec, t: int = 1, key: Key | None = None,
         segments=None) -> Leaf:
    """Leaf with ``t`` polar blocks; by default the whole syndrome goes to ``key``."""
    code = code.with_blocks(t)
    if segments is None:
        key = frozenset({decoder}) if key is None else key
        segments = ((key, code.block_syndrome_len),)
    return Leaf(decoder, code, tuple(segments))


def build_tree(groups, leaf_codes: dict[int, BlockCodeSpec], t_levels, key: Key | None = None) -> Node:
    """Tree from a nested-tuple layout such as ``((1, 2), (3, 4))``.

    ``t_levels[d]`` is the chain length at depth ``d``; a leaf at depth ``d``
    gets as many polar blocks as the product of the deeper levels so every
    root-to-leaf path spans the same length.
    """
    decs = _flatten(groups)
    key = frozenset(decs) if key is None else key

    def depth(g):
        return 0 if isinstance(g, int) else 1 + max(depth(c) for c in g)

    D = depth(groups)
    if len(t_levels) < D:
        raise ValueError(f"need {D} chain lengths, got {len(t_levels)}")

    def build(g, d):
        if isinstance(g, int):
            return leaf(g, leaf_codes[g], math.prod(t_levels[d:D]), key)
        if len(g) != 2:
            raise ValueError("tree layout must be binary")
        return Chain(build(g[0], d + 1), build(g[1], d + 1), t_levels[d])

    return build(groups, 0)


def _flatten(g) -> list[int]:
    return [g] if isinstance(g, int) else [d for c in g for d in _flatten(c)]


def balanced_layout(decoders) -> object:
    decoders = list(decoders)
    if len(decoders) == 1:
        return decoders[0]
    half = (len(decoders) + 1) // 2
    return (balanced_layout(decoders[:half]), balanced_layout(decoders[half:]))


def sequential_layout(decoders) -> object:
    decoders = list(decoders)
    g = decoders[0]
    for d in decoders[1:]:
        g = (g, d)
    return g


def layout_depth(g) -> int:
    return 0 if isinstance(g, int) else 1 + max(layout_depth(c) for c in g)


# --- encoding / decoding entry points -----------------------------------------------

def encode_universal(x, code: UniversalCode) -> ChainedPayload:
    if not code.plain:
        raise ValueError("subset-indexed codes produce one payload per subset; use encode_subset")
    (key,) = code.keys
    return code.wrap(key, code.root.encode(x).get(key, _EMPTY))


def encode_subset(x, code: UniversalCode, alloc: "SubsetRateAllocation | None" = None,
                  entropies=None) -> dict[Key, ChainedPayload]:
    if alloc is not None and entropies is not None and not covers(alloc, entropies):
        raise CoveringError("rate allocation does not cover the conditional entropies")
    streams = code.root.encode(x)
    return {key: code.wrap(key, streams.get(key, _EMPTY)) for key in code.keys}


def _flat_payloads(payload, code: UniversalCode, k: int) -> dict[Key, np.ndarray]:
    if isinstance(payload, ChainedPayload):
        payload = {code.keys[0]: payload} if code.plain else {payload.key: payload}
    flat = {}
    for key in code.keys:
        if k not in key:
            continue
        p = payload[key]
        flat[key] = p.flat() if isinstance(p, ChainedPayload) else np.asarray(p, dtype=np.int64)
    return flat


def decode_universal(payload, y, code: UniversalCode, k: int, backend=None) -> np.ndarray:
    """Decoder ``k``'s reconstruction; payloads whose key excludes ``k`` are never read."""
    if k not in code.decoders:
        raise ValueError(f"decoder {k} is not part of this code")
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (code.n,):
        raise ValueError(f"expected a length-{code.n} side-information block")
    return code.root.decode(_flat_payloads(payload, code, k), y, k, backend)


def decode_forward(payload, y, code: UniversalCode, j: int, backend=None) -> np.ndarray:
    if not isinstance(code.root, Chain) or j not in code.root.left.decoders:
        raise ValueError(f"decoder {j} does not decode forward at the root")
    return decode_universal(payload, y, code, j, backend)


def decode_backward(payload, y, code: UniversalCode, k: int, backend=None) -> np.ndarray:
    if not isinstance(code.root, Chain) or k not in code.root.right.decoders:
        raise ValueError(f"decoder {k} does not decode backward at the root")
    return decode_universal(payload, y, code, k, backend)


# --- rate bookkeeping ---------------------------------------------------------------

def rate_ledger(code: UniversalCode) -> dict:
    """Exact payload sizes and rates (Fractions of symbols per source symbol)."""
    n = code.n
    per_key = {key: code.payload_len(key) for key in code.keys}
    per_decoder = {k: sum(v for key, v in per_key.items() if k in key) for k in sorted(code.decoders)}
    checks = []

    def walk(node):
        if isinstance(node, Chain):
            for key in code.keys:
                ll, lr, lm = node.lengths(key)
                total = node.payload_len(key)
                n1 = node.left.n
                bound = Fraction(node.t + 1, node.t) * max(Fraction(ll, n1), Fraction(lr, n1))
                checks.append({
                    "node": key_str(node.decoders), "key": key_str(key), "t": node.t,
                    "length": total, "length_bound": (node.t + 1) * lm,
                    "rate": Fraction(total, node.n), "rate_bound": bound,
                    "ok": total <= (node.t + 1) * lm and Fraction(total, node.n) <= bound,
                })
            walk(node.left)
            walk(node.right)

    walk(code.root)
    return {
        "n": n,
        "lengths": per_key,
        "rates": {key: Fraction(v, n) for key, v in per_key.items()},
        "decoder_lengths": per_decoder,
        "decoder_rates": {k: Fraction(v, n) for k, v in per_decoder.items()},
        "total_rate": Fraction(sum(per_key.values()), n),
        "chain_checks": checks,
    }


# --- subset-indexed rates -----------------------------------------------------------

@dataclass(frozen=True)
class SubsetRateAllocation:
    k1: int
    rates: dict

    def __post_init__(self):
        rates = {frozenset(a): float(r) for a, r in self.rates.items()}
        for a, r in rates.items():
            if not a or not a <= set(range(1, self.k1 + 1)):
                raise ValueError(f"subset {sorted(a)} is not a nonempty subset of [{self.k1}]")
            if r < 0:
                raise ValueError("rates must be nonnegative")
        object.__setattr__(self, "rates", rates)

    def rate(self, key: Key) -> float:
        return self.rates.get(frozenset(key), 0.0)

    def aggregate(self, k: int) -> float:
        return sum(r for a, r in self.rates.items() if k in a)


def covers(rates: SubsetRateAllocation, entropies) -> bool:
    """Strict per-decoder test sum_{A containing k} R^A > a_k."""
    return all(rates.aggregate(k) > a for k, a in enumerate(entropies, start=1))


def covering_slack(rates: SubsetRateAllocation, entropies) -> list[float]:
    return [rates.aggregate(k) - a for k, a in enumerate(entropies, start=1)]


def shrink_allocation(rates: SubsetRateAllocation, entropies) -> SubsetRateAllocation:
    """Strictly smaller positive rates that still cover."""
    slack = min(covering_slack(rates, entropies))
    full = {a: rates.rate(a) for a in all_subsets(rates.k1)}
    if slack <= 0:
        raise CoveringError("allocation has no positive covering slack")
    if min(full.values()) <= 0:
        raise CoveringError("shrinking needs every subset rate to be positive")
    gamma = min(slack / 2 / 2**rates.k1, min(full.values()) / 2)
    return SubsetRateAllocation(rates.k1, {a: r - gamma for a, r in full.items()})


def assign_segments(root: Node, keys, budgets: dict, need: dict[int, int] | None = None) -> Node:
    """Greedy split of every leaf's block syndrome across the keys containing
    its decoder so that each key's total payload stays within ``budgets[key]``.

    Leaves with longer syndromes go first; each fills keys with more decoders
    first.  Raises :class:`CoveringError` when a syndrome does not fit.
    """
    leaves = list(root.leaves())
    need = need or {lf.decoder: lf.code.block_syndrome_len for lf in leaves}
    alloc = {lf.decoder: {} for lf in leaves}
    order_keys = sorted(keys, key=lambda a: (-len(a), sorted(a)))

    def rebuild(node):
        if isinstance(node, Leaf):
            segs = tuple((a, n) for a, n in alloc[node.decoder].items() if n > 0)
            return _LenLeaf(node.decoder, node.code.t, segs)
        return _LenChain(rebuild(node.left), rebuild(node.right), node.t)

    for lf in sorted(leaves, key=lambda lf: (-need[lf.decoder], lf.decoder)):
        remaining = need[lf.decoder]
        for a in order_keys:
            if remaining == 0:
                break
            if lf.decoder not in a:
                continue
            budget = budgets.get(a, 0)
            lo, hi = 0, remaining
            while lo < hi:
                mid = (lo + hi + 1) // 2
                alloc[lf.decoder][a] = mid
                if rebuild(root).payload_len(a) <= budget:
                    lo = mid
                else:
                    hi = mid - 1
            alloc[lf.decoder][a] = lo
            remaining -= lo
        if remaining:
            raise CoveringError(f"decoder {lf.decoder}: {remaining} of {need[lf.decoder]} "
                                "syndrome symbols per block do not fit the payload budgets")

    def realize(node):
        if isinstance(node, Leaf):
            segs = tuple((a, n) for a, n in alloc[node.decoder].items() if n > 0)
            return Leaf(node.decoder, node.code, segs)
        return Chain(realize(node.left), realize(node.right), node.t)

    return realize(root)


@dataclass(frozen=True)
class _LenLeaf:
    decoder: int
    t: int
    segments: tuple

    def payload_len(self, key):
        return self.t * sum(n for k, n in self.segments if k == key)


@dataclass(frozen=True)
class _LenChain:
    left: object
    right: object
    t: int

    def payload_len(self, key):
        ll, lr = self.left.payload_len(key), self.right.payload_len(key)
        return ll + (self.t - 1) * max(ll, lr) + lr


def subset_code(root: Node, k1: int, budgets: dict) -> UniversalCode:
    keys = tuple(all_subsets(k1))
    return UniversalCode(assign_segments(root, keys, budgets), keys, k1)


def budgets_from_rates(rates: SubsetRateAllocation, n: int) -> dict:
    """Largest integer payload length with ``length < n R^A``."""
    return {a: max(math.ceil(n * r) - 1, 0) for a, r in rates.rates.items()}


# --- schedule optimisation ----------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    K: int
    depth: int
    t: int
    balanced_layout: object
    balanced_length: int
    sequential_t: int
    sequential_length: int
    rate_increase: float
    slack: float
    clamped: bool

    @property
    def t_levels(self) -> list[int]:
        return [self.t] * self.depth


def _exact(v) -> Fraction:
    return Fraction(str(v)) if isinstance(v, float) else Fraction(v)


def optimize_schedule(K: int, H0: float, delta: float, N: int) -> Schedule:
    """Balanced chaining tree of depth ceil(log2 K) with equal chain lengths.

    Chain lengths are the ceiling of the real optimum and never below 2; the
    sequential (one decoder per level) schedule is reported for comparison.
    """
    if K < 2 or delta <= 0:
        raise ValueError("need K >= 2 and a positive rate budget")
    h, dl = _exact(H0), _exact(delta)
    D = math.ceil(math.log2(K))
    t_raw = math.ceil(D * h / dl)
    t = max(2, t_raw)
    seq_t = max(2, math.ceil((K - 1) * h / dl))
    increase = float(D * h / t)
    return Schedule(
        K=K, depth=D, t=t, balanced_layout=balanced_layout(range(1, K + 1)),
        balanced_length=N * t**D, sequential_t=seq_t, sequential_length=N * seq_t ** (K - 1),
        rate_increase=increase, slack=float(dl) - increase, clamped=t != t_raw,
    )


def leaf_codes(source, N: int, delta: float, method: str = "auto", trials: int = 10_000,
               seed: int = 0, workers: int = 1, basis: str = "own") -> dict[int, BlockCodeSpec]:
    """One block code per decoder.

    ``basis="own"`` gives decoder ``k`` a syndrome of ceil(N (H(X|Y_k) + delta))
    symbols; ``basis="max"`` sizes every leaf by the largest conditional entropy.
    """
    from .construction import TargetSize, evolve, select_low_set, syndrome_length
    from .transform import transform_spec

    if basis not in ("own", "max"):
        raise ValueError(f"unknown rate basis {basis!r}")
    spec = transform_spec(source.field, N)
    pairs = {k: source.pair(k) for k in range(1, source.K + 1)}
    lengths = {k: syndrome_length(d, N, delta) for k, d in pairs.items()}
    if basis == "max":
        lengths = {k: max(lengths.values()) for k in lengths}
    out = {}
    for k, d in pairs.items():
        st = evolve(d, spec.m, method, trials, seed + k, workers)
        out[k] = BlockCodeSpec(spec, select_low_set(st, TargetSize(N - lengths[k])), d)
    return out
