"""JSON experiment configuration: parsing, defaults, validation.

A config is one JSON object.  Validation errors name the offending key and
the line of the file where it appears.  The full grammar is documented in
the README; :func:`parse` fills every default so a resolved config can be
re-run verbatim.
"""

from __future__ import annotations

import copy
import json
import re

import numpy as np

from .probability import (DMC, AuxiliaryModel, bec, bsc, bsc_superposition_model,
                          identity_channel, product_model)

SCHEMES = ("p2p", "superposition", "binning", "marton")

DEFAULTS = {
    "seed": 0,
    "construction": {"n": 256, "beta": 0.45, "mc_samples": 20000,
                     "policy": "rate-targeted", "exact": False},
    "design": {"budget": 1e-2, "backoff": 0.0, "rates": {}},
    "chain": {"k": 4, "corner": "auto", "direction": "backward", "common_rate_fraction": 0.0},
    "simulation": {"trials": 100, "batch": 100, "fd_rounding": False},
    "region": {"kind": "sweep", "grid": {"start": 0.0, "stop": 0.5, "step": 0.01}},
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message)


class Config:
    """A resolved config plus the source text used for line lookups."""

    def __init__(self, data: dict, text: str = "", path: str = "<config>"):
        self.data, self.text, self.path = data, text, path

    def line_of(self, dotted: str) -> int | None:
        key = dotted.split(".")[-1]
        for k, line in enumerate(self.text.splitlines(), start=1):
            if re.search(rf'"{re.escape(key)}"\s*:', line):
                return k
        return None

    def fail(self, dotted: str, message: str):
        raise ConfigError(f"{dotted}: {message}", self.line_of(dotted))

    def __getitem__(self, key):
        return self.data[key]


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "rates":
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load(path: str) -> Config:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    return parse(text, path)


def parse(text: str, path: str = "<config>") -> Config:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", e.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object", 1)
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]       # a report embedding its resolved config
    cfg = Config(_merge(DEFAULTS, data), text, path)
    validate(cfg)
    return cfg


def _number(cfg: Config, dotted: str, lo=None, hi=None, integer=False):
    node = cfg.data
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            cfg.fail(dotted, "missing")
        node = node[part]
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        cfg.fail(dotted, "must be a number")
    if integer and int(node) != node:
        cfg.fail(dotted, "must be an integer")
    if lo is not None and node < lo:
        cfg.fail(dotted, f"must be >= {lo}")
    if hi is not None and node > hi:
        cfg.fail(dotted, f"must be <= {hi}")
    return node


def validate(cfg: Config) -> None:
    d = cfg.data
    if d.get("scheme") not in SCHEMES:
        cfg.fail("scheme", f"must be one of {SCHEMES}")
    _number(cfg, "seed", 0, 2**64 - 1, integer=True)
    n = _number(cfg, "construction.n", 2, integer=True)
    if int(n) & (int(n) - 1):
        cfg.fail("construction.n", "must be a power of two")
    _number(cfg, "construction.beta", 1e-9, 0.5 - 1e-9)
    _number(cfg, "construction.mc_samples", 1, integer=True)
    if d["construction"]["policy"] not in ("rate-targeted", "theoretical-threshold"):
        cfg.fail("construction.policy", "must be rate-targeted or theoretical-threshold")
    _number(cfg, "design.budget", 0)
    _number(cfg, "design.backoff", 0, 1)
    _number(cfg, "chain.k", 2, integer=True)
    _number(cfg, "chain.common_rate_fraction", 0, 1)
    if d["chain"]["corner"] not in ("auto", "full", "min-rate"):
        cfg.fail("chain.corner", "must be auto, full or min-rate")
    if d["chain"]["direction"] not in ("backward", "forward"):
        cfg.fail("chain.direction", "must be backward or forward")
    _number(cfg, "simulation.trials", 1, integer=True)
    _number(cfg, "simulation.batch", 1, integer=True)
    if d["region"]["kind"] not in ("sweep", "model"):
        cfg.fail("region.kind", "must be sweep or model")
    if isinstance(d["region"]["grid"], dict):
        for key in ("start", "stop", "step"):
            _number(cfg, f"region.grid.{key}", 0)
        if d["region"]["grid"]["step"] <= 0:
            cfg.fail("region.grid.step", "must be positive")
    elif not isinstance(d["region"]["grid"], list) or not d["region"]["grid"]:
        cfg.fail("region.grid", "must be a nonempty list or a start/stop/step table")
    if "channels" not in d or not isinstance(d["channels"], dict):
        cfg.fail("channels", "missing")
    users = ("y",) if d["scheme"] == "p2p" else ("y1", "y2")
    for u in users:
        if u not in d["channels"]:
            cfg.fail(f"channels.{u}", "missing")
        channel(cfg, u)
    model(cfg)


def channel(cfg: Config, user: str) -> DMC:
    spec = cfg.data["channels"][user]
    dotted = f"channels.{user}"
    if not isinstance(spec, dict) or "type" not in spec:
        cfg.fail(dotted, "needs a 'type'")
    kind = spec["type"]
    try:
        if kind == "bsc":
            return bsc(float(spec["p"]))
        if kind == "bec":
            return bec(float(spec["eps"]))
        if kind == "identity":
            return identity_channel(int(spec.get("size", 2)))
        if kind == "generic":
            return DMC(np.array(spec["pmf"], dtype=float), spec.get("name", user))
    except (KeyError, TypeError, ValueError) as e:
        cfg.fail(dotted, f"invalid {kind} channel ({e})")
    cfg.fail(f"{dotted}.type", "must be bsc, bec, identity or generic")


def model(cfg: Config) -> AuxiliaryModel | None:
    d = cfg.data
    if d["scheme"] == "p2p":
        p1 = d.get("input", {}).get("p1", 0.5)
        if not 0 <= p1 <= 1:
            cfg.fail("input.p1", "must lie in [0, 1]")
        return None
    spec = d.get("model")
    if not isinstance(spec, dict):
        cfg.fail("model", "missing")
    want = {"superposition": 1, "binning": 2, "marton": 3}[d["scheme"]]
    kind = spec.get("type", "table")
    if kind not in ("bsc-superposition", "product", "table"):
        cfg.fail("model.type", "must be bsc-superposition, product or table")
    try:
        if kind == "bsc-superposition":
            m = bsc_superposition_model(float(spec["alpha"]), float(spec.get("px1", 0.5)))
        elif kind == "product":
            m = product_model(np.array(spec["joint_pmf"], dtype=float))
        else:
            m = AuxiliaryModel.from_dict(spec)
    except (KeyError, TypeError, ValueError) as e:
        cfg.fail("model", f"invalid model ({e})")
    if m.arity != want:
        cfg.fail("model", f"scheme {d['scheme']} needs an arity-{want} model")
    return m


def grid(cfg: Config) -> np.ndarray:
    g = cfg.data["region"]["grid"]
    if isinstance(g, list):
        return np.array(g, dtype=float)
    count = int(round((g["stop"] - g["start"]) / g["step"])) + 1
    return np.round(g["start"] + g["step"] * np.arange(count), 10)
