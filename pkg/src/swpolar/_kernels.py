"""Successive-cancellation kernels.

Two interchangeable backends compute the same thing:

* ``numba``: one ``@njit`` pass per block, looped over the batch;
* ``numpy``: the recursion vectorised across the batch axis.

``SWPOLAR_BACKEND=numpy`` (or a missing numba install) selects the fallback.

Conventions shared by both backends.  The transform is the plain Kronecker
power of ``[[1, 0], [a, 1]]`` (no bit reversal), so the first half of
``u = x G_N`` is the transform of ``x' = x[:N/2] + a x[N/2:]`` and the second
half the transform of ``x[N/2:]``.  ``idx[c, b] = c - a*b`` is the only field
table the recursion needs:

* minus node: ``Q[j, c] = sum_b Pa[j, idx[c, b]] Pb[j, b]``
* plus node:  ``R[j, b] ~ Pa[j, idx[x'_j, b]] Pb[j, b]``
* re-encode:  parent = ``(idx[x', x''], x'')``

Every message vector is renormalised to sum 1.
"""
from __future__ import annotations

import os

import numpy as np

KIND_DECIDE = 0  # argmax of the primary posterior
KIND_KNOWN = 1  # value supplied by the caller
KIND_AUX = 2  # argmax of the auxiliary (prior-only) posterior

_requested = os.environ.get("SWPOLAR_BACKEND", "numba").strip().lower()

try:
    if _requested == "numpy":
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def twist_table(f, a: int) -> np.ndarray:
    """``idx[c, b] = c - a*b`` over the field."""
    q = f.q
    c = np.arange(q)[:, None]
    b = np.arange(q)[None, :]
    return np.ascontiguousarray(f.sub_table[c, f.mul_table[a, b]], dtype=np.int64)


# --- numpy backend ------------------------------------------------------------------

def _normalize(p: np.ndarray) -> np.ndarray:
    s = p.sum(axis=-1, keepdims=True)
    q = p.shape[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(s > 0, p / np.where(s > 0, s, 1.0), 1.0 / q)
    return out


def _minus_np(parent: np.ndarray, idx: np.ndarray) -> np.ndarray:
    h = parent.shape[1] // 2
    pa, pb = parent[:, :h], parent[:, h:]
    out = np.zeros_like(pa)
    for b in range(idx.shape[1]):
        out += pa[:, :, idx[:, b]] * pb[:, :, b:b + 1]
    return _normalize(out)


def _plus_np(parent: np.ndarray, left: np.ndarray, idx: np.ndarray) -> np.ndarray:
    h = parent.shape[1] // 2
    pa, pb = parent[:, :h], parent[:, h:]
    return _normalize(np.take_along_axis(pa, idx[left], axis=2) * pb)


def _argmax_first(p: np.ndarray) -> np.ndarray:
    # np.argmax already returns the first maximal entry
    return np.argmax(p, axis=-1)


def sc_numpy(post, kinds, vals, aux, idx):
    bsz, n, q = post.shape
    m = n.bit_length() - 1
    use_aux = aux is not None
    P = [None] * (m + 1)
    A = [None] * (m + 1)
    C = [None] * m
    P[m] = post
    if use_aux:
        A[m] = aux
    u_out = np.empty((bsz, n), dtype=np.int64)
    p_out = np.empty((bsz, n, q))
    x_out = np.empty((bsz, n), dtype=np.int64)
    for i in range(n):
        if i == 0:
            top = m
        else:
            k = (i & -i).bit_length() - 1
            P[k] = _plus_np(P[k + 1], C[k], idx)
            if use_aux:
                A[k] = _plus_np(A[k + 1], C[k], idx)
            top = k
        for lam in range(top - 1, -1, -1):
            P[lam] = _minus_np(P[lam + 1], idx)
            if use_aux:
                A[lam] = _minus_np(A[lam + 1], idx)
        p = P[0][:, 0]
        p_out[:, i] = p
        ui = _argmax_first(p)
        kind = kinds[:, i]
        ui = np.where(kind == KIND_KNOWN, vals[:, i], ui)
        if use_aux:
            ui = np.where(kind == KIND_AUX, _argmax_first(A[0][:, 0]), ui)
        u_out[:, i] = ui
        cur = ui[:, None]
        lam = 0
        while lam < m and (i >> lam) & 1:
            cur = np.concatenate([idx[C[lam], cur], cur], axis=1)
            lam += 1
        if lam < m:
            C[lam] = cur
        else:
            x_out[:] = cur
    return u_out, x_out, p_out


# --- numba backend ------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _normalize_rows(P, lo, hi):
        q = P.shape[1]
        for r in range(lo, hi):
            s = 0.0
            for c in range(q):
                s += P[r, c]
            if s > 0.0:
                for c in range(q):
                    P[r, c] /= s
            else:
                for c in range(q):
                    P[r, c] = 1.0 / q

    @njit(cache=True, nogil=True)
    def _minus_nb(P, lam, idx):
        # level lam rows live in [2^lam, 2^(lam+1)); parent in [2^(lam+1), 2^(lam+2))
        h = 1 << lam
        q = P.shape[1]
        par = 2 * h
        for j in range(h):
            for c in range(q):
                s = 0.0
                for b in range(q):
                    s += P[par + j, idx[c, b]] * P[par + h + j, b]
                P[h + j, c] = s
        _normalize_rows(P, h, 2 * h)

    @njit(cache=True, nogil=True)
    def _plus_nb(P, lam, C, idx):
        h = 1 << lam
        q = P.shape[1]
        par = 2 * h
        for j in range(h):
            xl = C[h + j]
            for b in range(q):
                P[h + j, b] = P[par + j, idx[xl, b]] * P[par + h + j, b]
        _normalize_rows(P, h, 2 * h)

    @njit(cache=True, nogil=True)
    def _argmax_row(P, r):
        best = 0
        for c in range(1, P.shape[1]):
            if P[r, c] > P[r, best]:
                best = c
        return best

    @njit(cache=True, nogil=True)
    def _sc_block_nb(post, kinds, vals, aux, use_aux, idx, u_out, x_out, p_out):
        n, q = post.shape
        m = 0
        while (1 << m) < n:
            m += 1
        P = np.empty((2 * n, q))
        P[n:2 * n] = post
        if use_aux:
            A = np.empty((2 * n, q))
            A[n:2 * n] = aux
        else:
            A = np.empty((1, q))
        C = np.zeros(2 * n, dtype=np.int64)
        cur = np.empty(n, dtype=np.int64)
        nxt = np.empty(n, dtype=np.int64)
        for i in range(n):
            if i == 0:
                top = m
            else:
                k = 0
                while not (i >> k) & 1:
                    k += 1
                _plus_nb(P, k, C, idx)
                if use_aux:
                    _plus_nb(A, k, C, idx)
                top = k
            for lam in range(top - 1, -1, -1):
                _minus_nb(P, lam, idx)
                if use_aux:
                    _minus_nb(A, lam, idx)
            for c in range(q):
                p_out[i, c] = P[1, c]
            kind = kinds[i]
            if kind == 1:
                ui = vals[i]
            elif kind == 2 and use_aux:
                ui = _argmax_row(A, 1)
            else:
                ui = _argmax_row(P, 1)
            u_out[i] = ui
            cur[0] = ui
            size = 1
            lam = 0
            while lam < m and (i >> lam) & 1:
                base = 1 << lam
                for j in range(size):
                    nxt[j] = idx[C[base + j], cur[j]]
                    nxt[size + j] = cur[j]
                cur, nxt = nxt, cur
                size *= 2
                lam += 1
            if lam < m:
                base = 1 << lam
                for j in range(size):
                    C[base + j] = cur[j]
            else:
                for j in range(n):
                    x_out[j] = cur[j]

    @njit(cache=True, nogil=True)
    def _sc_batch_nb(post, kinds, vals, aux, use_aux, idx, u_out, x_out, p_out):
        for b in range(post.shape[0]):
            _sc_block_nb(post[b], kinds[b], vals[b], aux[b] if use_aux else aux[0],
                         use_aux, idx, u_out[b], x_out[b], p_out[b])


def sc_numba(post, kinds, vals, aux, idx):
    bsz, n, q = post.shape
    u_out = np.empty((bsz, n), dtype=np.int64)
    x_out = np.empty((bsz, n), dtype=np.int64)
    p_out = np.empty((bsz, n, q))
    use_aux = aux is not None
    if aux is None:
        aux = np.empty((1, 1, q))
    _sc_batch_nb(post, kinds, vals, np.ascontiguousarray(aux, dtype=np.float64), use_aux,
                 idx, u_out, x_out, p_out)
    return u_out, x_out, p_out


def sc_batch(post, kinds, vals, idx, aux=None, backend: str | None = None):
    """Run SC over a batch of blocks.

    ``post`` (B, N, q): per-coordinate input posteriors P(x_j | y_j).
    ``kinds``/``vals`` (B, N): decision rule and supplied values per u-index.
    ``aux`` (B, N, q) or None: input posteriors of a second recursion sharing
    the decided prefix; used by ``KIND_AUX`` indices.

    Returns ``(u, x, p)``: decided u, the re-encoded x-block and the
    posterior of every u-index given the decided prefix.
    """
    post = np.ascontiguousarray(post, dtype=np.float64)
    if post.ndim != 3:
        raise ValueError("post must have shape (B, N, q)")
    n = post.shape[1]
    if n & (n - 1):
        raise ValueError("block length must be a power of two")
    kinds = np.ascontiguousarray(np.broadcast_to(kinds, post.shape[:2]), dtype=np.int8)
    vals = np.ascontiguousarray(np.broadcast_to(vals, post.shape[:2]), dtype=np.int64)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    backend = backend or BACKEND
    if backend == "numba" and HAVE_NUMBA:
        return sc_numba(post, kinds, vals, aux, idx)
    if aux is not None:
        aux = np.ascontiguousarray(aux, dtype=np.float64)
    return sc_numpy(post, kinds, vals, aux, idx)
