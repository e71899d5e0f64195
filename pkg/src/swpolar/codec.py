"""Single- and multi-block Slepian-Wolf polar codec.

The encoder sends ``u = x diag(G_N, ..., G_N)`` on the complement of the
lifted low-entropy set; the decoder fills in the low-entropy positions block
by block with successive cancellation, using only that block's side
information.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._wire import mask_digest, pack_symbols, packed_size, unpack_symbols
from .construction import IndexSetProfile, lift_multiblock
from .source import PairDistribution
from .transform import TransformSpec, forward


@dataclass(frozen=True)
class BlockCodeSpec:
    spec: TransformSpec
    profile: IndexSetProfile
    pair: PairDistribution
    _post: np.ndarray = field(init=False, repr=False, compare=False)
    _idx: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.profile.N != self.spec.N:
            raise ValueError("profile block length differs from the transform's")
        if self.pair.field != self.spec.field:
            raise ValueError("pair distribution lives over a different field")
        object.__setattr__(self, "_post", self.pair.posterior_matrix())
        object.__setattr__(self, "_idx", _kernels.twist_table(self.spec.field, self.spec.kernel.twist))

    @property
    def N(self) -> int:
        return self.spec.N

    @property
    def t(self) -> int:
        return self.spec.t

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def q(self) -> int:
        return self.spec.field.q

    @property
    def block_syndrome_len(self) -> int:
        return self.profile.syndrome_size

    @property
    def syndrome_len(self) -> int:
        return self.t * self.block_syndrome_len

    @property
    def low_mask(self) -> np.ndarray:
        return lift_multiblock(self.profile, self.t)

    def with_blocks(self, t: int) -> "BlockCodeSpec":
        return BlockCodeSpec(self.spec.with_blocks(t), self.profile, self.pair)


@dataclass(frozen=True)
class Syndrome:
    symbols: np.ndarray
    q: int
    N: int
    t: int
    digest: int = 0

    def __len__(self) -> int:
        return len(self.symbols)

    def to_bytes(self) -> bytes:
        return _SYN_HEADER.pack(SYN_MAGIC, SYN_VERSION, self.q, self.N, self.t, self.digest,
                                len(self.symbols)) + pack_symbols(self.symbols, self.q)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Syndrome":
        magic, version, q, N, t, digest, count = _SYN_HEADER.unpack_from(data)
        if magic != SYN_MAGIC or version != SYN_VERSION:
            raise ValueError("not a version-1 syndrome")
        body = data[_SYN_HEADER.size:]
        if len(body) < packed_size(count, q):
            raise ValueError("truncated syndrome")
        return cls(unpack_symbols(body, count, q), q, N, t, digest)


SYN_MAGIC = b"PSWS"
SYN_VERSION = 1
_SYN_HEADER = struct.Struct("<4sHHIIQI")


def encode(x, code: BlockCodeSpec) -> Syndrome:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (code.n,):
        raise ValueError(f"expected a length-{code.n} source block")
    u = forward(x, code.spec)
    return Syndrome(u[~code.low_mask], code.q, code.N, code.t, mask_digest(code.profile.low_set))


def decode(s: Syndrome | np.ndarray, y, code: BlockCodeSpec, backend: str | None = None) -> np.ndarray:
    """SC reconstruction of the x-block; each N-block uses only its own y and syndrome."""
    symbols = s.symbols if isinstance(s, Syndrome) else np.asarray(s, dtype=np.int64)
    if isinstance(s, Syndrome) and s.digest and s.digest != mask_digest(code.profile.low_set):
        raise ValueError("syndrome was produced with a different low-entropy set")
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (code.n,):
        raise ValueError(f"expected a length-{code.n} side-information block")
    if len(symbols) != code.syndrome_len:
        raise ValueError(f"syndrome has {len(symbols)} symbols, code expects {code.syndrome_len}")
    t, N = code.t, code.N
    low = code.profile.low_set
    kinds = np.where(low, _kernels.KIND_DECIDE, _kernels.KIND_KNOWN)[None, :].repeat(t, axis=0)
    vals = np.zeros((t, N), dtype=np.int64)
    vals[:, ~low] = symbols.reshape(t, -1)
    post = code._post[y.reshape(t, N)]
    _, x, _ = _kernels.sc_batch(post, kinds, vals, code._idx, backend=backend)
    return x.reshape(-1)


def sc_posterior(prefix, y_block, i: int, code: BlockCodeSpec, backend: str | None = None) -> np.ndarray:
    """P(U^i = . | u^{0:i} = prefix, y_block) for 0-based index ``i`` within one block."""
    N = code.N
    prefix = np.asarray(prefix, dtype=np.int64)
    if not 0 <= i < N or prefix.shape != (i,):
        raise ValueError("prefix must hold exactly the i symbols before index i")
    y_block = np.asarray(y_block, dtype=np.int64)
    if y_block.shape != (N,):
        raise ValueError(f"expected a length-{N} side-information block")
    kinds = np.full((1, N), _kernels.KIND_DECIDE, dtype=np.int8)
    kinds[0, :i] = _kernels.KIND_KNOWN
    vals = np.zeros((1, N), dtype=np.int64)
    vals[0, :i] = prefix
    _, _, p = _kernels.sc_batch(code._post[y_block][None], kinds, vals, code._idx, backend=backend)
    return p[0, i]


def block_failures(x, x_hat, N: int) -> np.ndarray:
    """Per-N-block mismatch flags (for union-bound style reporting)."""
    x = np.asarray(x).reshape(-1, N)
    return np.any(x != np.asarray(x_hat).reshape(-1, N), axis=1)
