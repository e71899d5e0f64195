"""Experiment configuration (YAML) with field-level validation."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import source as src
from .galois import FieldError, gf

MODES = ("construct", "encode", "decode", "chain-sim", "jscc-sim", "sweep")
RULES = ("rate", "threshold", "target_size")
METHODS = ("auto", "exact", "monte-carlo")

DEFAULTS = {
    "trials": 100,
    "workers": 1,
    "timing": True,
    "field": {"p": 2, "r": 1},
    "N": 1024,
    "t": 2,
    "layout": "balanced",
    "variant": "plain",
    "rate_basis": None,
    "construction": {"method": "auto", "trials": 10_000, "seed": None, "rule": "rate",
                     "delta": 0.15, "theta": 1e-3, "size": None},
    "channel": None,
    "sweep": None,
    "out": "results.csv",
    "input": None,
    "side": None,
    "reference": None,
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def field_from_config(fdef: dict):
    """``{p, r, modulus?}`` as written by ``FieldSpec.to_config``."""
    mod = fdef.get("modulus")
    return gf(int(fdef.get("p", 2)), int(fdef.get("r", 1)), tuple(int(c) for c in mod) if mod else None)


@dataclass
class ExperimentConfig:
    mode: str
    seed: int
    raw: dict = field(repr=False)

    def __getitem__(self, key):
        return self.raw[key]

    def get(self, key, default=None):
        return self.raw.get(key, default)

    @property
    def K(self) -> int:
        return len(self.raw["source"]["side"])

    def echo(self) -> dict:
        return copy.deepcopy(self.raw)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        raw = self.echo()
        for k, v in kw.items():
            if v is not None:
                raw[k] = v
        return validate(raw)


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _need(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _power_of_two(v) -> bool:
    return isinstance(v, int) and v >= 2 and v & (v - 1) == 0


def channel_matrix(spec, q: int, path: str) -> np.ndarray:
    """A named constructor (``{bsc: p}``, ``{bec: e}``, ``{symmetric: eps}``,
    ``noiseless``, ``useless``, ``{h: target}`` for a BSC with that entropy)
    or an explicit ``{table: [[...]]}``."""
    if isinstance(spec, str):
        spec = {spec: None}
    _need(isinstance(spec, dict) and len(spec) == 1, path, "expected a single-key mapping")
    (name, arg), = spec.items()
    try:
        if name == "bsc":
            _need(q == 2 and 0 <= float(arg) <= 1, path, "bsc needs q = 2 and p in [0, 1]")
            return src.bsc(float(arg))
        if name == "h":
            _need(q == 2 and 0 <= float(arg) <= 1, path, "h needs q = 2 and a target in [0, 1]")
            return src.bsc(src.inverse_binary_entropy(float(arg)))
        if name == "bec":
            _need(q == 2 and 0 <= float(arg) <= 1, path, "bec needs q = 2 and e in [0, 1]")
            return src.bec(float(arg))
        if name == "symmetric":
            return src.symmetric(q, float(arg))
        if name == "noiseless":
            return src.noiseless(q)
        if name == "useless":
            return src.useless(q)
        if name == "table":
            w = np.asarray(arg, dtype=np.float64)
            _need(w.ndim == 2 and w.shape[0] == q, path, f"table must have {q} rows")
            _need(bool(np.all(w >= 0)) and np.allclose(w.sum(axis=1), 1), path, "rows must be distributions")
            return w
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{path}: {e}") from None
    raise ConfigError(f"{path}: unknown channel constructor {name!r}")


def validate(raw: dict) -> ExperimentConfig:
    _need(isinstance(raw, dict), "<root>", "config must be a mapping")
    cfg = _merge(DEFAULTS, raw)
    _need(cfg.get("mode") in MODES, "mode", f"must be one of {', '.join(MODES)}")
    seed = cfg.get("seed")
    _need(isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2**64, "seed",
          "a master seed (integer in [0, 2^64)) is mandatory")
    _need(isinstance(cfg["trials"], int) and cfg["trials"] >= 0, "trials", "must be an integer >= 0")
    _need(isinstance(cfg["workers"], int) and cfg["workers"] >= 1, "workers", "must be an integer >= 1")
    fdef = cfg["field"]
    try:
        f = field_from_config(fdef)
    except (FieldError, TypeError, ValueError) as e:
        raise ConfigError(f"field: {e}") from None
    if cfg["mode"] != "sweep" or not isinstance(cfg["sweep"], dict):
        _need(_power_of_two(cfg["N"]), "N", "must be a power of two >= 2")
    t = cfg["t"]
    _need((isinstance(t, int) and t >= 1) or (isinstance(t, list) and t and all(isinstance(v, int) and v >= 2 for v in t)),
          "t", "must be a positive integer or a list of chain lengths >= 2")
    _need(cfg["layout"] in ("balanced", "sequential"), "layout", "must be balanced or sequential")
    _need(cfg["variant"] in ("plain", "subset"), "variant", "must be plain or subset")
    _need(cfg["rate_basis"] in (None, "own", "max"), "rate_basis", "must be own or max")
    c = cfg["construction"]
    _need(c["method"] in METHODS, "construction.method", f"must be one of {', '.join(METHODS)}")
    _need(c["rule"] in RULES, "construction.rule", f"must be one of {', '.join(RULES)}")
    _need(isinstance(c["trials"], int) and c["trials"] >= 1, "construction.trials", "must be >= 1")
    _need(isinstance(c["delta"], (int, float)) and c["delta"] >= 0, "construction.delta", "must be >= 0")
    _need(isinstance(c["theta"], (int, float)) and 0 <= c["theta"] < 1, "construction.theta", "must lie in [0, 1)")
    if c["rule"] == "target_size":
        _need(isinstance(c["size"], int) and c["size"] >= 0, "construction.size", "target_size needs an integer size")

    s = cfg.get("source")
    _need(isinstance(s, dict), "source", "a source section is required")
    side = s.get("side")
    _need(isinstance(side, list) and len(side) >= 1, "source.side", "list one side channel per decoder")
    px = s.get("px")
    if px is None:
        s["px"] = [1.0 / f.q] * f.q
    else:
        _need(isinstance(px, list) and len(px) == f.q and abs(sum(px) - 1) < 1e-9 and min(px) >= 0,
              "source.px", f"must be a distribution over {f.q} symbols")
    for i, w in enumerate(side):
        channel_matrix(w, f.q, f"source.side[{i}]")

    if cfg["mode"] == "jscc-sim":
        ch = cfg.get("channel")
        _need(isinstance(ch, dict), "channel", "jscc-sim needs a channel section")
        _need(f.q == 2, "field", "broadcast coding needs a binary source")
        outs = ch.get("outputs")
        _need(isinstance(outs, list) and len(outs) == len(side), "channel.outputs",
              "one broadcast component per decoder")
        for i, w in enumerate(outs):
            channel_matrix(w, 2, f"channel.outputs[{i}]")
        _need(isinstance(ch.get("kappa"), (int, float)) and ch["kappa"] > 0, "channel.kappa", "must be > 0")
        ch.setdefault("pu", [0.5, 0.5])
        ch.setdefault("theta", 1e-3)
        ch.setdefault("theta_high", None)
        ch.setdefault("tol", 0.01)
        ch.setdefault("chain_t", None)
        ch.setdefault("shared_seed", 0)
    if cfg["mode"] == "sweep":
        sw = cfg.get("sweep")
        _need(isinstance(sw, dict) and isinstance(sw.get("N"), list) and sw["N"]
              and all(_power_of_two(v) for v in sw["N"]), "sweep.N", "list of powers of two")
        sw.setdefault("theta", 1e-3)
    if cfg["mode"] == "decode":
        _need(isinstance(cfg.get("input"), str), "input", "decode needs the payload file")
        _need(isinstance(cfg.get("side"), list), "side", "decode needs one side-information file per decoder")
    return ExperimentConfig(cfg["mode"], seed, cfg)


def load(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML ({e})") from None
    return validate(raw or {})


def loads(text: str) -> ExperimentConfig:
    try:
        return validate(yaml.safe_load(text) or {})
    except yaml.YAMLError as e:
        raise ConfigError(f"<text>: not valid YAML ({e})") from None
