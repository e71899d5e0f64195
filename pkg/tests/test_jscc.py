import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swpolar import jscc as J
from swpolar import source as S
from swpolar.construction import ChannelRule
from swpolar.galois import gf
from swpolar.oracles import gf2_rank
from swpolar.universal import CoveringError, all_subsets

F2 = gf(2)


def bec_source(*erasures):
    return S.JointSource.from_channels(F2, [0.5, 0.5], [S.bec(e) for e in erasures])


@pytest.fixture(scope="module")
def noisy_spec():
    src = bec_source(0.1, 0.2)
    ch = S.BroadcastChannel.product(S.bec(0.05), S.bec(0.1))
    return J.construct_jscc([0.5, 0.5], ch, src, 1.0, 1024, rule=ChannelRule(1e-4), delta=0.1,
                            method="exact", chain_t=2, shared_seed=7)


@pytest.fixture(scope="module")
def clean_spec():
    src = S.JointSource.from_channels(F2, [0.5, 0.5], [S.noiseless(), S.noiseless(), S.noiseless()])
    ch = S.BroadcastChannel.product(S.noiseless(), S.noiseless(), S.noiseless())
    return J.construct_jscc([0.5, 0.5], ch, src, 0.25, 64, delta=0.05, method="exact", chain_t=2)


@settings(max_examples=30)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_partition_invariants(K, seed):
    rng = np.random.default_rng(seed)
    info = [rng.random(32) < 0.5 for _ in range(K)]
    part = J.index_partition(info)
    assert set(part) == set(all_subsets(K))
    total = np.zeros(32, int)
    for mask in part.values():
        total += mask
    assert total.max() <= 1
    for k in range(1, K + 1):
        union = np.any([m for a, m in part.items() if k in a], axis=0)
        assert np.array_equal(union, info[k - 1])


def test_constructed_partition(noisy_spec):
    spec = noisy_spec
    low = spec.sets.low
    for k in (1, 2):
        union = np.any([m for a, m in spec.partition.items() if k in a], axis=0)
        assert np.array_equal(union, spec.info_mask(k))
    assert not any((m & low).any() for m in spec.partition.values())
    for a, mask in spec.partition.items():
        # lifting to s blocks scales every capacity by exactly s
        assert spec.capacity(a) == spec.s * int(mask.sum())
        assert spec.code.payload_len(a) < max(spec.capacity(a), 1)


def test_choose_blocks():
    assert J.choose_blocks(0.8, 2) == (5, 5)
    c, t = J.choose_blocks(0.8, 3)
    assert t == c**2 and abs(np.ceil(0.8 * t) / t - 0.8) <= 0.008
    assert J.choose_blocks(2.0, 2) == (2, 2)


def test_achievability_precondition():
    src = bec_source(0.2)
    ch = S.BroadcastChannel.product(S.bec(0.3))
    with pytest.raises(J.AchievabilityError):
        J.construct_jscc([0.5, 0.5], ch, src, 0.2, 64, method="exact")  # 0.2 * 0.7 < 0.2
    with pytest.raises(J.AchievabilityError):
        J.construct_jscc([1.0, 0.0], ch, src, 5.0, 64, method="exact")  # point-mass input carries nothing
    spec = J.construct_jscc([0.5, 0.5], ch, src, 0.5, 1024, rule=ChannelRule(1e-4), delta=0.1,
                            method="exact", chain_t=1)
    assert spec.margins["rate_margin"][0] == pytest.approx(0.5 * 0.7 - 0.2)


def test_covering_failure_reports_margin():
    src = bec_source(0.2, 0.3)
    ch = S.BroadcastChannel.product(S.bec(0.3), S.bec(0.4))
    with pytest.raises(CoveringError, match="decoder"):
        J.construct_jscc([0.5, 0.5], ch, src, 0.6, 16, method="exact", chain_t=2)


def test_perfect_channels_and_side_information(clean_spec, rng):
    spec = clean_spec
    for nonce in range(3):
        x = rng.integers(0, 2, spec.n)
        rec = J.transmit(J.jscc_encode(x, spec, nonce=nonce), spec, seed=nonce)
        for k in (1, 2, 3):
            pay, d = J.recover_payloads(rec.v[k - 1], spec, k, nonce)
            assert np.array_equal(d, rec.d)
            assert np.array_equal(J.jscc_decode(rec.v[k - 1], x, spec, k, nonce), x)


def test_determinism_and_record(clean_spec, rng):
    x = rng.integers(0, 2, clean_spec.n)
    a = J.transmit(J.jscc_encode(x, clean_spec, nonce=2), clean_spec, seed=5)
    b = J.transmit(J.jscc_encode(x, clean_spec, nonce=2), clean_spec, seed=5)
    assert a.to_json() == b.to_json()
    back = J.TransmissionRecord.from_json(a.to_json())
    assert np.array_equal(back.u, a.u) and np.array_equal(back.tags, a.tags) and back.nonce == 2
    assert all(np.array_equal(p, r) for p, r in zip(back.v, a.v))
    with pytest.raises(ValueError):
        J.TransmissionRecord.from_json('{"format": "other"}')


def test_position_audit(noisy_spec):
    spec = noisy_spec
    c = J.tag_counts(spec.tags)
    assert c["payload"] + c["extra-random"] == sum(spec.capacity(a) for a in spec.partition)
    assert c["deterministic"] == spec.s * int(spec.sets.low.sum())
    assert sum(c.values()) == spec.l


def test_other_outputs_do_not_matter(noisy_spec, rng):
    spec = noisy_spec
    src = spec.source
    x, ys = src.sample_block(spec.n, seed=3)
    rec = J.transmit(J.jscc_encode(x, spec), spec, seed=4)
    ref = J.jscc_decode(rec.v[0], ys[0], spec, 1)
    rec.v[1] = rng.integers(0, 3, spec.l)
    assert np.array_equal(J.jscc_decode(rec.v[0], ys[0], spec, 1), ref)


def test_noisy_end_to_end(noisy_spec):
    spec = noisy_spec
    errors = [0, 0]
    for trial in range(30):
        x, ys = spec.source.sample_block(spec.n, seed=trial)
        rec = J.transmit(J.jscc_encode(x, spec), spec, seed=1000 + trial)
        for k in (1, 2):
            errors[k - 1] += not np.array_equal(J.jscc_decode(rec.v[k - 1], ys[k - 1], spec, k), x)
    assert max(errors) <= 3


def test_kappa_monotone():
    src = bec_source(0.1, 0.2)
    ch = S.BroadcastChannel.product(S.bec(0.05), S.bec(0.1))
    prev = None
    for kappa in (1.0, 1.5, 2.0, 3.0):
        spec = J.construct_jscc([0.5, 0.5], ch, src, kappa, 256, rule=ChannelRule(1e-4),
                                delta=0.1, method="exact", chain_t=2)
        cap = {a: spec.capacity(a) / spec.n for a in spec.partition}
        if prev:
            assert all(cap[a] >= prev[a] for a in cap)
        prev = cap


def test_independence_duplicate_bit():
    plan = J.enforce_linear_independence({frozenset({1}): [0b011, 0b011, 0b100]})
    assert list(plan.replaced[frozenset({1})]) == [False, True, False]
    assert plan.combos[frozenset({1})][1] == ((frozenset({1}), 0),)
    assert plan.kept == 2


def test_independence_full_rank():
    plan = J.enforce_linear_independence({frozenset({1, 2}): [1, 2], frozenset({1}): [4, 8]})
    assert plan.kept == plan.total == 4


def test_independence_uses_supersets_only():
    a12, a1, a2 = frozenset({1, 2}), frozenset({1}), frozenset({2})
    plan = J.enforce_linear_independence({a12: [0b01], a1: [0b10], a2: [0b11, 0b01]})
    # 0b11 is not spanned by {0b01} alone (decoder 2 never sees payload {1})
    assert list(plan.replaced[a2]) == [False, True]
    assert plan.combos[a2][1] == ((a12, 0),)


@settings(max_examples=40)
@given(st.integers(1, 12), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_rank_matches_elimination(nbits, width, seed):
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, 2, (nbits, width))
    vecs = [int("".join(map(str, r[::-1])), 2) for r in rows]
    plan = J.enforce_linear_independence({frozenset({1}): vecs})
    assert plan.kept == gf2_rank(rows)
    # flagged bits are rebuilt exactly from their combinations
    x = rng.integers(0, 2, width)
    bits = np.array([int(r @ x) & 1 for r in rows])
    noisy = bits.copy()
    noisy[plan.replaced[frozenset({1})]] ^= 1
    out = J._apply_plan(plan, {frozenset({1}): noisy}, [frozenset({1})])
    assert np.array_equal(out[frozenset({1})], bits)
