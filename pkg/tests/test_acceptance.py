"""Acceptance criteria 1-9 at their stated tolerances.

Each test records a ``criterion N: PASS|FAIL`` line (printed at the end of
the pytest run) and then asserts, so a failing criterion shows up red.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE
from swpolar import codec, jscc, universal
from swpolar import construction as C
from swpolar import source as S
from swpolar.galois import field_for_size
from swpolar.oracles import bayes_posterior, brute_force_pe
from swpolar.runner import trial_rng
from swpolar.transform import forward, inverse, kron_matrix, matmul, transform_spec

pytestmark = pytest.mark.slow


def verdict(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE[n] = line
    print(line, flush=True)
    return ok


def uniform_pair(q, w):
    return S.pair_from_channel(field_for_size(q), np.ones(q) / q, w)


def test_criterion_1_transform_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    bad = []
    for q in (2, 3, 4, 5):
        f = field_for_size(q)
        for m in (1, 2, 3, 4):
            spec = transform_spec(f, 1 << m)
            x = rng.integers(0, q, (50, 1 << m))
            if not np.array_equal(forward(x, spec), matmul(x, kron_matrix(f, m), f)):
                bad.append(f"forward q={q} N={1 << m}")
    for i in range(1000):
        q = (2, 3, 4, 5)[i % 4]
        spec = transform_spec(field_for_size(q), 1 << (1 + i % 10))
        x = rng.integers(0, q, spec.N)
        if not np.array_equal(inverse(forward(x, spec), spec), x):
            bad.append(f"round trip #{i}")
    dt = time.perf_counter() - t0
    ok = not bad and dt < 10
    verdict(1, ok, f"{len(bad)} mismatches, {dt:.1f} s (limit 10 s)")
    assert ok, bad[:5]


def test_criterion_2_construction_oracle():
    t0 = time.perf_counter()
    sources = {2: [S.noiseless(2), S.useless(2), S.bsc(0.11)], 3: [S.noiseless(3), S.useless(3), S.symmetric(3, 0.1)]}
    worst = 0.0
    for q, ws in sources.items():
        for w in ws:
            d = uniform_pair(q, w)
            for m in (1, 2, 3):
                worst = max(worst, float(np.max(np.abs(C.evolve_exact(d, m).pe - brute_force_pe(d, m)))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 60
    verdict(2, ok, f"max |exact - enumeration| = {worst:.2e} (limit 1e-12), {dt:.1f} s (limit 60 s)")
    assert ok


def test_criterion_3_sc_posterior_oracle():
    rng = np.random.default_rng(3)
    worst = 0.0
    for q, w in ((2, S.bsc(0.11)), (2, S.bec(0.3)), (3, S.symmetric(3, 0.1)), (4, S.symmetric(4, 0.2)),
                 (5, S.symmetric(5, 0.3))):
        d = uniform_pair(q, w)
        for m in (1, 2):
            N = 1 << m
            code = codec.BlockCodeSpec(transform_spec(d.field, N),
                                       C.IndexSetProfile(N, np.ones(N, bool), C.Threshold(0.0)), d)
            for _ in range(20):
                x, y = d.sample(N, rng)
                u = forward(x, code.spec)
                for i in range(N):
                    diff = np.abs(codec.sc_posterior(u[:i], y, i, code) - bayes_posterior(u[:i], y, i, d, m))
                    worst = max(worst, float(diff.max()))
    ok = worst <= 1e-12
    verdict(3, ok, f"max |SC - Bayes| = {worst:.2e} (limit 1e-12)")
    assert ok


def test_criterion_4_polarization_trend():
    t0 = time.perf_counter()
    d = uniform_pair(2, S.bsc(0.11))
    fracs, stats = [], {}
    for N in (64, 256, 1024):
        stats[N] = C.evolve_monte_carlo(d, N.bit_length() - 1, 10_000, seed=0)
        fracs.append(C.polarized_fraction(stats[N], 1e-3))
    monotone = fracs[0] <= fracs[1] <= fracs[2]
    prof = C.select_low_set(stats[1024], C.rate_rule(d, 1024, 0.15))
    code = codec.BlockCodeSpec(transform_spec(d.field, 1024), prof, d)
    fails = 0
    for i in range(200):
        x, y = d.sample(1024, trial_rng(0, i))
        fails += not np.array_equal(codec.decode(codec.encode(x, code), y, code), x)
    rate = fails / 200
    dt = time.perf_counter() - t0
    ok = monotone and rate <= 0.05 and dt < 300
    verdict(4, ok, f"fraction(pe <= 1e-3) = {', '.join(f'{v:.4f}' for v in fracs)} "
                   f"({'monotone' if monotone else 'NOT monotone'}); syndrome {prof.syndrome_size}/1024, "
                   f"SC block failure {fails}/200 = {rate:.3f} (limit 0.05); "
                   f"genie union bound {float(stats[1024].pe[prof.low_set].sum()):.3f}; {dt:.0f} s")
    assert monotone, fracs
    assert rate <= 0.05


def test_criterion_5_chaining_lossless():
    rng = np.random.default_rng(5)
    d = uniform_pair(2, S.noiseless())
    errors, runs = 0, 0
    for K in (2, 3, 4):
        for t in (2, 3, 5):
            layout = universal.balanced_layout(range(1, K + 1))
            D = universal.layout_depth(layout)
            leaves = {}
            for k in range(1, K + 1):
                low = rng.random(8) < rng.uniform(0.2, 0.9)
                leaves[k] = codec.BlockCodeSpec(transform_spec(d.field, 8),
                                                C.IndexSetProfile(8, low, C.Threshold(0.0)), d)
            code = universal.plain_code(universal.build_tree(layout, leaves, [t] * D))
            for _ in range(200):
                x = rng.integers(0, 2, code.n)
                p = universal.encode_universal(x, code)
                for k in range(1, K + 1):
                    runs += 1
                    errors += not np.array_equal(universal.decode_universal(p, x, code, k), x)
    ok = errors == 0
    verdict(5, ok, f"{errors} errors in {runs} forward/backward decodes (required 0)")
    assert ok


def test_criterion_6_universal_k2():
    t0 = time.perf_counter()
    src = S.JointSource.from_channels(field_for_size(2), [0.5, 0.5], [S.bsc(0.05), S.bsc(0.11)])
    leaves = universal.leaf_codes(src, 1024, 0.15, method="monte-carlo", trials=10_000, seed=0, basis="max")
    t = 8
    code = universal.plain_code(universal.build_tree((1, 2), leaves, [t]))
    errors = [0, 0]
    for i in range(100):
        x, ys = src.sample_block(code.n, trial_rng(6, i))
        p = universal.encode_universal(x, code)
        for k in (1, 2):
            errors[k - 1] += not np.array_equal(universal.decode_universal(p, ys[k - 1], code, k), x)
    led = universal.rate_ledger(code)
    L = math.ceil(1024 * Fraction(str(S.binary_entropy(0.11) + 0.15)))
    want = Fraction(t + 1, t) * Fraction(L, 1024)
    rate_ok = led["total_rate"] == want and all(c["ok"] for c in led["chain_checks"])
    err_ok = max(errors) <= 10
    dt = time.perf_counter() - t0
    ok = rate_ok and err_ok and dt < 600
    verdict(6, ok, f"chain errors {errors[0]}/100 and {errors[1]}/100 (limit 10); rate {led['total_rate']} "
                   f"{'==' if rate_ok else '!='} (9/8)({L}/1024); {dt:.0f} s")
    assert rate_ok
    assert err_ok, errors


def test_criterion_7_subset_machinery():
    rng = np.random.default_rng(7)
    part_bad = 0
    for _ in range(100):
        K = int(rng.integers(1, 5))
        eps = rng.uniform(0.05, 0.8, K)
        sets = C.channel_sets([0.5, 0.5], [S.bec(e) for e in eps], 5, C.ChannelRule(1e-2))
        part = jscc.index_partition(sets.info)
        stack = np.array(list(part.values()))
        disjoint = stack.sum(axis=0).max() <= 1
        unions = all(np.array_equal(np.any([m for a, m in part.items() if k in a], axis=0), sets.info[k - 1])
                     for k in range(1, K + 1))
        outside_low = not (stack & sets.low).any()
        part_bad += not (disjoint and unions and outside_low)
    table_bad = shrink_bad = 0
    for _ in range(1000):
        K1 = int(rng.integers(1, 4))
        keys = universal.all_subsets(K1)
        rates = {a: float(r) for a, r in zip(keys, rng.uniform(0, 0.6, len(keys)))}
        ent = rng.uniform(0, 1, K1)
        alloc = universal.SubsetRateAllocation(K1, rates)
        direct = all(sum(r for a, r in rates.items() if k in a) > ent[k - 1] for k in range(1, K1 + 1))
        table_bad += universal.covers(alloc, ent) != direct
        if direct and min(rates.values()) > 0:
            shrink_bad += not universal.covers(universal.shrink_allocation(alloc, ent), ent)
    ok = part_bad == table_bad == shrink_bad == 0
    verdict(7, ok, f"partition violations {part_bad}/100, covers mismatches {table_bad}/1000, "
                   f"shrink failures {shrink_bad}")
    assert ok


def test_criterion_8_schedule():
    s = universal.optimize_schedule(4, 0.5, 0.25, 1)
    example = (s.balanced_length, s.sequential_length) == (16, 216)
    grid_bad = 0
    for K in range(2, 9):
        for h in np.linspace(0.05, 1.0, 20):
            for dl in (0.05, 0.1, 0.25, 0.5):
                g = universal.optimize_schedule(K, float(h), dl, 1)
                grid_bad += g.balanced_length > g.sequential_length
    ok = example and grid_bad == 0
    verdict(8, ok, f"K=4 lengths {s.balanced_length}N vs {s.sequential_length}N (want 16N vs 216N); "
                   f"{grid_bad} grid points with balanced > sequential")
    assert ok


def _jscc_trials(spec, src, trials, seed):
    errors = [0] * src.K
    payload_exact = [0] * src.K
    for i in range(trials):
        rng = trial_rng(seed, i)
        x, ys = src.sample_block(spec.n, rng)
        rec = jscc.transmit(jscc.jscc_encode(x, spec, nonce=i), spec, rng)
        for k in range(1, src.K + 1):
            _, d = jscc.recover_payloads(rec.v[k - 1], spec, k, nonce=i)
            payload_exact[k - 1] += bool(np.array_equal(d, rec.d))
            errors[k - 1] += not np.array_equal(jscc.jscc_decode(rec.v[k - 1], ys[k - 1], spec, k, nonce=i), x)
    return errors, payload_exact


def test_criterion_9_jscc():
    t0 = time.perf_counter()
    p1 = S.inverse_binary_entropy(0.2)
    p2 = S.inverse_binary_entropy(0.3)
    src = S.JointSource.from_channels(field_for_size(2), [0.5, 0.5], [S.bsc(p1), S.bsc(p2)])
    leaves = universal.leaf_codes(src, 1024, 0.15, method="monte-carlo", trials=10_000, seed=0)
    noisy = S.BroadcastChannel.product(S.bec(0.3), S.bec(0.5))
    mi = [S.mutual_information(noisy.pair([0.5, 0.5], k)) for k in (1, 2)]
    closed_form = np.allclose(mi, [0.7, 0.5], atol=1e-12)
    margin = all(0.8 * i > h for i, h in zip(mi, (0.2, 0.3)))
    try:
        spec = jscc.construct_jscc([0.5, 0.5], noisy, src, 0.8, 1024, delta=0.15, method="exact",
                                   leaves=leaves)
        err, _ = _jscc_trials(spec, src, 50, 9)
        noisy_ok = max(err) <= 5
        noisy_msg = f"noisy W errors {err[0]}/50, {err[1]}/50 (limit 5)"
    except universal.CoveringError as e:
        noisy_ok, noisy_msg = False, f"noisy W construction infeasible: {e}"
    clean = S.BroadcastChannel.product(S.noiseless(), S.noiseless())
    spec = jscc.construct_jscc([0.5, 0.5], clean, src, 0.8, 1024, delta=0.15, method="exact", leaves=leaves)
    err, exact = _jscc_trials(spec, src, 50, 9)
    clean_ok = max(err) == 0
    dt = time.perf_counter() - t0
    ok = closed_form and margin and noisy_ok and clean_ok and dt < 900
    verdict(9, ok, f"I = {mi[0]:.3f}, {mi[1]:.3f}; {noisy_msg}; noiseless W end-to-end errors "
                   f"{err[0]}/50, {err[1]}/50 (required 0), channel words recovered exactly "
                   f"{exact[0]}/50, {exact[1]}/50; {dt:.0f} s")
    assert closed_form and margin
    assert noisy_ok, noisy_msg
    assert clean_ok, err


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
