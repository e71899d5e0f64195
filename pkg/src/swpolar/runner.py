"""Seeded experiment runner, reports and CSV emission."""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import yaml

from . import codec, jscc, universal
from .config import ConfigError, ExperimentConfig, channel_matrix, field_from_config
from .construction import (ChannelRule, TargetSize, Threshold, evolve, polarized_fraction,
                           profile_to_bytes, rate_rule, select_low_set)
from .source import BroadcastChannel, JointSource, conditional_entropy
from .transform import transform_spec

CSV_HEADER = ["mode", "q", "N", "t", "K", "rule", "delta", "trials", "seed", "decoder",
              "err_rate", "err_lo", "err_hi", "rate_sym", "elapsed_ms"]
CSV_VERSION = 1
Z95 = 1.959963984540054


def binomial_interval(errors: int, trials: int) -> tuple[float, float, float]:
    """Normal-approximation 95% interval clamped to [0, 1]."""
    if trials <= 0:
        return float("nan"), float("nan"), float("nan")
    p = errors / trials
    h = Z95 * math.sqrt(p * (1 - p) / trials)
    return p, max(0.0, p - h), min(1.0, p + h)


@dataclass
class Row:
    decoder: str
    errors: int | None
    trials: int
    rate_sym: float
    err: tuple | None = None  # (rate, lo, hi) when not a plain count

    def interval(self):
        if self.err is not None:
            return self.err
        if self.errors is None:
            return None
        return binomial_interval(self.errors, self.trials)


@dataclass
class Report:
    mode: str
    seed: int
    q: int
    N: int
    t: int
    K: int
    rule: str
    delta: float
    trials: int
    rows: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    elapsed_ms: int = 0

    def summary(self) -> str:
        rows = []
        for r in self.rows:
            iv = r.interval()
            rows.append({"decoder": r.decoder, "errors": r.errors, "trials": r.trials,
                         "err_rate": None if iv is None else _num(iv[0]),
                         "err_95": None if iv is None else [_num(iv[1]), _num(iv[2])],
                         "rate_sym": _num(r.rate_sym)})
        doc = {
            "mode": self.mode, "seed": self.seed, "elapsed_ms": self.elapsed_ms,
            "interval": "normal approximation, 95%, clamped to [0, 1]",
            "results": rows, "rates": _plain(self.rates), "margins": _plain(self.margins),
            "details": _plain(self.extra), "config": self.config,
        }
        return yaml.safe_dump(doc, sort_keys=False)


def _num(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, frozenset) else universal.key_str(k): _plain(v)
                for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def emit_csv(report: Report, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        if report.trials == 0 and report.mode in ("chain-sim", "jscc-sim"):
            return
        for r in report.rows:
            iv = r.interval()
            err = ("", "", "") if iv is None else tuple(_fmt(v) for v in iv)
            w.writerow([report.mode, report.q, report.N, report.t, report.K, report.rule,
                        report.delta, r.trials, report.seed, r.decoder, *err, _fmt(r.rate_sym),
                        report.elapsed_ms])


def _stem(path: str) -> str:
    root, ext = os.path.splitext(path)
    return root if ext == ".csv" else path


def write_outputs(report: Report, path: str) -> None:
    emit_csv(report, path)
    with open(_stem(path) + ".summary.yaml", "w") as fh:
        fh.write(report.summary())


# --- building blocks from a config --------------------------------------------------

def make_source(cfg: ExperimentConfig) -> JointSource:
    f = field_from_config(cfg["field"])
    side = [channel_matrix(w, f.q, f"source.side[{i}]") for i, w in enumerate(cfg["source"]["side"])]
    return JointSource.from_channels(f, cfg["source"]["px"], side)


def _construction_seed(cfg) -> int:
    s = cfg["construction"]["seed"]
    return cfg.seed if s is None else int(s)


def make_leaves(cfg: ExperimentConfig, source: JointSource, N: int | None = None) -> dict:
    c = cfg["construction"]
    N = N or cfg["N"]
    seed = _construction_seed(cfg)
    if c["rule"] == "rate":
        basis = cfg["rate_basis"] or ("max" if cfg["variant"] == "plain" else "own")
        return universal.leaf_codes(source, N, c["delta"], c["method"], c["trials"], seed,
                                    cfg["workers"], basis)
    spec = transform_spec(source.field, N)
    out = {}
    for k in range(1, source.K + 1):
        d = source.pair(k)
        st = evolve(d, spec.m, c["method"], c["trials"], seed + k, cfg["workers"])
        rule = Threshold(c["theta"]) if c["rule"] == "threshold" else TargetSize(c["size"])
        out[k] = codec.BlockCodeSpec(spec, select_low_set(st, rule), d)
    return out


def make_code(cfg: ExperimentConfig, leaves: dict) -> universal.UniversalCode:
    K = len(leaves)
    t = cfg["t"]
    if K == 1:
        if not isinstance(t, int):
            raise ConfigError("t: a single decoder takes an integer block count")
        root = universal.leaf(1, leaves[1], t)
        return universal.plain_code(root) if cfg["variant"] == "plain" else \
            universal.subset_code(root, 1, {frozenset({1}): 2**62})
    decs = list(range(1, K + 1))
    layout = universal.balanced_layout(decs) if cfg["layout"] == "balanced" else universal.sequential_layout(decs)
    D = universal.layout_depth(layout)
    levels = [t] * D if isinstance(t, int) else list(t)
    if len(levels) != D or min(levels) < 2:
        raise ConfigError(f"t: need {D} chain lengths >= 2 for this layout")
    root = universal.build_tree(layout, leaves, levels)
    if cfg["variant"] == "plain":
        return universal.plain_code(root)
    return universal.subset_code(root, K, {a: 2**62 for a in universal.all_subsets(K)})


def trial_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def map_trials(fn, trials: int, workers: int) -> list:
    if workers > 1 and trials > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, range(trials)))
    return [fn(i) for i in range(trials)]


def _decoder_symbols(code: universal.UniversalCode, k: int) -> int:
    return sum(code.payload_len(a) for a in code.keys if k in a)


def _rule_name(cfg) -> str:
    return cfg["construction"]["rule"]


def _base_report(cfg, K, t, N=None) -> Report:
    f = field_from_config(cfg["field"])
    return Report(cfg.mode, cfg.seed, f.q, N or cfg["N"], t, K, _rule_name(cfg),
                  float(cfg["construction"]["delta"]), cfg["trials"], config=cfg.echo())


# --- modes --------------------------------------------------------------------------

def run_construct(cfg: ExperimentConfig, out: str) -> Report:
    source = make_source(cfg)
    leaves = make_leaves(cfg, source)
    rep = _base_report(cfg, source.K, 1)
    rep.trials = cfg["construction"]["trials"]
    for k, code in leaves.items():
        prof = code.profile
        with open(f"{_stem(out)}.dec{k}.pswp", "wb") as fh:
            fh.write(profile_to_bytes(prof, code.q))
        union = float(min(1.0, prof.stats.pe[prof.low_set].sum()))
        rep.rows.append(Row(str(k), None, rep.trials, prof.syndrome_size / prof.N, (union, union, union)))
        rep.rates[f"decoder {k}"] = {"syndrome_symbols": prof.syndrome_size,
                                     "rate_sym": Fraction(prof.syndrome_size, prof.N),
                                     "entropy": conditional_entropy(code.pair),
                                     "method": prof.stats.method,
                                     "polarized_fraction": polarized_fraction(prof.stats)}
    return rep


def _payload_bytes(code, payload) -> bytes:
    if isinstance(payload, dict):
        return universal.payloads_to_bytes(payload)
    return payload.to_bytes()


def run_encode(cfg: ExperimentConfig, out: str) -> Report:
    source = make_source(cfg)
    code = make_code(cfg, make_leaves(cfg, source))
    stem = _stem(out)
    if cfg["input"]:
        x = np.load(cfg["input"])
    else:
        x, ys = source.sample_block(code.n, trial_rng(cfg.seed, 0))
        np.save(f"{stem}.x.npy", x)
        for k, y in enumerate(ys, start=1):
            np.save(f"{stem}.y{k}.npy", y)
    payload = universal.encode_universal(x, code) if code.plain else universal.encode_subset(x, code)
    with open(f"{stem}.payload.bin", "wb") as fh:
        fh.write(_payload_bytes(code, payload))
    rep = _base_report(cfg, source.K, code.n // cfg["N"])
    rep.trials = 1
    for k in sorted(code.decoders):
        rep.rows.append(Row(str(k), None, 1, _decoder_symbols(code, k) / code.n))
    rep.rates = universal.rate_ledger(code)
    return rep


def run_decode(cfg: ExperimentConfig, out: str) -> Report:
    source = make_source(cfg)
    code = make_code(cfg, make_leaves(cfg, source))
    with open(cfg["input"], "rb") as fh:
        data = fh.read()
    payload = universal.ChainedPayload.from_bytes(data) if code.plain else universal.payloads_from_bytes(data)
    ref = np.load(cfg["reference"]) if cfg["reference"] else None
    rep = _base_report(cfg, source.K, code.n // cfg["N"])
    rep.trials = 1
    for k, path in enumerate(cfg["side"], start=1):
        if path is None:
            continue
        xh = universal.decode_universal(payload, np.load(path), code, k)
        np.save(f"{_stem(out)}.xhat{k}.npy", xh)
        errors = None if ref is None else int(not np.array_equal(xh, ref))
        rep.rows.append(Row(str(k), errors, 1, _decoder_symbols(code, k) / code.n))
    return rep


def run_chain_sim(cfg: ExperimentConfig, out: str | None = None) -> Report:
    source = make_source(cfg)
    code = make_code(cfg, make_leaves(cfg, source))
    decs = sorted(code.decoders)
    N = cfg["N"]

    def trial(i):
        x, ys = source.sample_block(code.n, trial_rng(cfg.seed, i))
        payload = universal.encode_universal(x, code) if code.plain else universal.encode_subset(x, code)
        res = {}
        for k in decs:
            xh = universal.decode_universal(payload, ys[k - 1], code, k)
            res[k] = codec.block_failures(x, xh, N)
        return res

    results = map_trials(trial, cfg["trials"], cfg["workers"])
    rep = _base_report(cfg, source.K, code.n // N)
    blocks = code.n // N
    for k in decs:
        fails = [r[k] for r in results]
        errors = sum(bool(f.any()) for f in fails)
        rep.rows.append(Row(str(k), errors, len(results), _decoder_symbols(code, k) / code.n))
        if results:
            p_block = float(np.mean([f.mean() for f in fails]))
            rep.extra[f"decoder {k}"] = {"block_failure": p_block, "blocks": blocks,
                                         "union_bound": min(1.0, blocks * p_block)}
    rep.rates = universal.rate_ledger(code)
    return rep


def _jscc_spec(cfg: ExperimentConfig, source: JointSource) -> jscc.JsccCodeSpec:
    ch = cfg["channel"]
    W = BroadcastChannel.product(*[channel_matrix(w, 2, f"channel.outputs[{i}]")
                                   for i, w in enumerate(ch["outputs"])])
    c = cfg["construction"]
    if c["rule"] == "rate":
        leaves = universal.leaf_codes(source, cfg["N"], c["delta"], c["method"], c["trials"],
                                      _construction_seed(cfg), cfg["workers"], cfg["rate_basis"] or "own")
    else:
        leaves = make_leaves(cfg, source)
    return jscc.construct_jscc(ch["pu"], W, source, float(ch["kappa"]), cfg["N"],
                               ChannelRule(ch["theta"], ch["theta_high"]), c["delta"], ch["tol"],
                               ch["chain_t"], c["method"], c["trials"], _construction_seed(cfg),
                               cfg["workers"], ch["shared_seed"], leaves)


def run_jscc_sim(cfg: ExperimentConfig, out: str | None = None) -> Report:
    source = make_source(cfg)
    spec = _jscc_spec(cfg, source)
    decs = list(range(1, source.K + 1))

    def trial(i):
        rng = trial_rng(cfg.seed, i)
        x, ys = source.sample_block(spec.n, rng)
        rec = jscc.transmit(jscc.jscc_encode(x, spec, nonce=i), spec, rng)
        res = {k: not np.array_equal(jscc.jscc_decode(rec.v[k - 1], ys[k - 1], spec, k, nonce=i), x)
               for k in decs}
        res["ones"] = int(rec.d[payload_pos].sum())
        return res

    payload_pos = spec.tags == jscc.PAYLOAD

    results = map_trials(trial, cfg["trials"], cfg["workers"])
    rep = _base_report(cfg, source.K, spec.t)
    for k in decs:
        rep.rows.append(Row(str(k), sum(r[k] for r in results), len(results),
                            _decoder_symbols(spec.code, k) / spec.n))
    rep.rates = universal.rate_ledger(spec.code)
    rep.rates["channel_uses_per_symbol"] = Fraction(spec.s, spec.t)
    rep.margins = spec.margins
    rep.extra["positions"] = jscc.tag_counts(spec.tags)
    rep.extra["independence"] = {"kept": spec.plan.kept, "total": spec.plan.total}
    bits = int(payload_pos.sum()) * len(results)
    # empirical bias of the transmitted payload bits (no bound is claimed)
    rep.extra["payload_ones_fraction"] = sum(r["ones"] for r in results) / bits if bits else None
    return rep


def run_sweep(cfg: ExperimentConfig, out: str | None = None) -> Report:
    source = make_source(cfg)
    d = source.pair(1)
    c = cfg["construction"]
    sw = cfg["sweep"]
    rep = _base_report(cfg, 1, 1, N=0)
    table = []
    for N in sw["N"]:
        spec = transform_spec(source.field, N)
        st = evolve(d, spec.m, c["method"], c["trials"], _construction_seed(cfg), cfg["workers"])
        if c["rule"] == "rate":
            rule = rate_rule(d, N, c["delta"])
        elif c["rule"] == "threshold":
            rule = Threshold(c["theta"])
        else:
            rule = TargetSize(min(c["size"], N))
        code = codec.BlockCodeSpec(spec, select_low_set(st, rule), d)

        def trial(i, code=code, N=N):
            x, y = d.sample(N, trial_rng(cfg.seed, i))
            return not np.array_equal(codec.decode(codec.encode(x, code), y, code), x)

        errs = map_trials(trial, cfg["trials"], cfg["workers"])
        frac = polarized_fraction(st, sw["theta"])
        rate = code.block_syndrome_len / N
        table.append({"N": N, "polarized_fraction": frac, "threshold": sw["theta"],
                      "rate_sym": rate, "err_rate": (sum(errs) / len(errs)) if errs else None})
        rep.rows.append(Row(str(1), sum(errs), len(errs), rate))
        rep.extra[f"N={N}"] = table[-1]
    rep.extra["sweep"] = table
    return rep


def emit_sweep_table(rep: Report, path: str) -> None:
    with open(_stem(path) + "_sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "polarized_fraction", "threshold", "rate_sym", "err_rate"])
        for r in rep.extra.get("sweep", []):
            w.writerow([r["N"], repr(r["polarized_fraction"]), r["threshold"], repr(r["rate_sym"]),
                        "" if r["err_rate"] is None else repr(r["err_rate"])])


MODE_FUNCS = {"construct": run_construct, "encode": run_encode, "decode": run_decode,
              "chain-sim": run_chain_sim, "jscc-sim": run_jscc_sim, "sweep": run_sweep}


def run(cfg: ExperimentConfig, out: str | None = None) -> Report:
    """Execute the configured mode end to end and write CSV plus summary."""
    out = out or cfg["out"]
    t0 = time.perf_counter()
    rep = MODE_FUNCS[cfg.mode](cfg, out)
    rep.elapsed_ms = int(round((time.perf_counter() - t0) * 1000)) if cfg["timing"] else 0
    if cfg.mode == "sweep":
        _emit_sweep_rows(rep, rep.rows, out)
        emit_sweep_table(rep, out)
        with open(_stem(out) + ".summary.yaml", "w") as fh:
            fh.write(rep.summary())
    else:
        write_outputs(rep, out)
    return rep


def _emit_sweep_rows(rep: Report, rows, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row, entry in zip(rows, rep.extra["sweep"]):
            iv = row.interval()
            err = ("", "", "") if iv is None or row.trials == 0 else tuple(_fmt(v) for v in iv)
            w.writerow([rep.mode, rep.q, entry["N"], 1, 1, rep.rule, rep.delta, row.trials, rep.seed,
                        row.decoder, *err, _fmt(row.rate_sym), rep.elapsed_ms])
