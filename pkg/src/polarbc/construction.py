"""Bhattacharyya parameters, polarized index sets and chaining layouts.

Indices are 0-based throughout.  A :class:`IndexSetReport` describes one
(source | side) pair: its Z vector and the high/low sets H and L.  Layout
builders combine reports into the per-variable partitions used by the
chained broadcast codes in :mod:`polarbc.schemes`.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .polar import polar_transform, sc_genie_posteriors
from .probability import BroadcastSetup, PairwiseJoint

POLICIES = ("theoretical-threshold", "rate-targeted")
MC_CHUNK = 2048
EXACT_MAX_N = 8


class InfeasibleRatesError(ValueError):
    """The requested layout cannot be realised with the constructed sets."""


@dataclass(frozen=True)
class ConstructionParams:
    n: int
    beta: float = 0.45
    mc_samples: int = 100_000
    seed: int = 0
    selection_policy: str = "rate-targeted"
    workers: int = 1

    def __post_init__(self):
        if self.n < 1 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two")
        if not 0 < self.beta < 0.5:
            raise ValueError("beta must lie in (0, 1/2)")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be positive")
        if self.selection_policy not in POLICIES:
            raise ValueError(f"selection_policy must be one of {POLICIES}")

    @property
    def delta(self) -> float:
        return 2.0 ** -(self.n ** self.beta)

    def to_dict(self) -> dict:
        return {"n": self.n, "beta": self.beta, "mc_samples": self.mc_samples,
                "seed": self.seed, "selection_policy": self.selection_policy}


# --------------------------------------------------------------------------
# Bhattacharyya parameters


def _all_sequences(n: int, base: int) -> np.ndarray:
    return np.array(list(product(range(base), repeat=n)), dtype=np.int64).reshape(-1, n)


def exact_Z(pairwise: PairwiseJoint, n: int, i: int | None = None,
            side_marginalized: bool = False):
    """Z(U^i | U^{0:i}, side^{0:n}) by exhaustive enumeration.

    Independent of the SC recursion: the joint P(u, s) is tabulated directly
    from P(x, s) = prod_j P(x_j, s_j) and the bijection u = x G_n.  Returns
    the whole vector when ``i`` is None.
    """
    if n > EXACT_MAX_N:
        raise ValueError(f"exact_Z refuses n > {EXACT_MAX_N}")
    table = pairwise.source_pmf[:, None] if side_marginalized else pairwise.table
    n_side = table.shape[1]
    xs = _all_sequences(n, 2)
    weights = 1 << np.arange(n - 1, -1, -1)
    u_index = polar_transform(xs).astype(np.int64) @ weights
    z = np.zeros(n)
    sides = _all_sequences(n, n_side)
    for start in range(0, len(sides), 4096):
        s = sides[start:start + 4096]
        px = table[xs[None, :, :], s[:, None, :]].prod(axis=-1)
        pu = np.empty_like(px)
        pu[:, u_index] = px
        for k in range(n):
            part = pu.reshape(len(s), 1 << k, 2, -1).sum(axis=-1)
            z[k] += 2 * np.sqrt(part[..., 0] * part[..., 1]).sum()
    z = np.clip(z, 0.0, 1.0)
    return z if i is None else float(z[i])


def _stream(seed: int, label: str, chunk: int) -> np.random.Generator:
    key = zlib.crc32(label.encode())
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key, chunk)))


def _z_chunk(pairwise: PairwiseJoint, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    table = pairwise.table
    ns = table.shape[1]
    flat = rng.choice(table.size, size=(count, n), p=table.ravel())
    x, s = flat // ns, flat % ns
    u = polar_transform(x)
    post = sc_genie_posteriors(table.T[s], u)
    return (2 * np.sqrt(post[..., 0] * post[..., 1])).sum(axis=0)


def estimate_Z(pairwise: PairwiseJoint, params: ConstructionParams) -> np.ndarray:
    """Monte-Carlo estimate of Z for every index with genie-aided SC.

    Samples are drawn in fixed-size chunks, each from its own substream of
    (seed, pair label, chunk index), so the result does not depend on the
    number of worker threads.
    """
    n, total = params.n, params.mc_samples
    chunks = [(c, min(MC_CHUNK, total - c * MC_CHUNK)) for c in range(math.ceil(total / MC_CHUNK))]

    def work(item):
        c, count = item
        return _z_chunk(pairwise, n, count, _stream(params.seed, pairwise.label, c))

    if params.workers > 1:
        with ThreadPoolExecutor(params.workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(item) for item in chunks]
    return np.clip(np.sum(parts, axis=0) / total, 0.0, 1.0)


# --------------------------------------------------------------------------
# index sets


def _as_index(a) -> np.ndarray:
    out = np.unique(np.asarray(a, dtype=np.int64).ravel())
    out.setflags(write=False)
    return out


def _count(rate: float, n: int) -> int:
    return min(n, max(0, math.ceil(rate * n - 1e-9)))


@dataclass(frozen=True, eq=False)
class IndexSetReport:
    z_values: np.ndarray
    high_set: np.ndarray
    low_set: np.ndarray
    label: str = ""
    policy: str = "rate-targeted"
    high_threshold: float = 1.0
    low_threshold: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "z_values", np.asarray(self.z_values, dtype=np.float64))
        object.__setattr__(self, "high_set", _as_index(self.high_set))
        object.__setattr__(self, "low_set", _as_index(self.low_set))
        if np.intersect1d(self.high_set, self.low_set).size:
            raise ValueError("high and low sets must be disjoint")

    @property
    def n(self) -> int:
        return self.z_values.size

    def to_dict(self) -> dict:
        return {"label": self.label, "policy": self.policy,
                "high_threshold": self.high_threshold, "low_threshold": self.low_threshold,
                "z_values": [float(z) for z in self.z_values],
                "high_set": self.high_set.tolist(), "low_set": self.low_set.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "IndexSetReport":
        return cls(np.array(d["z_values"], dtype=float), d["high_set"], d["low_set"],
                   d.get("label", ""), d.get("policy", "rate-targeted"),
                   d.get("high_threshold", 1.0), d.get("low_threshold", 0.0))


def z_order(z: np.ndarray) -> np.ndarray:
    """Indices by increasing Z, ties broken by increasing index."""
    return np.lexsort((np.arange(z.size), z))


def build_index_sets(z, params: ConstructionParams, target_rate: float | None = None,
                     low_rate: float | None = None, label: str = "") -> IndexSetReport:
    """Split [n] into H (high Z), L (low Z) and an unpolarized residue.

    The threshold policy applies delta_n literally.  The rate-targeted policy
    puts the ceil(target_rate * n) largest Z in H and the ceil(low_rate * n)
    smallest in L (default ``low_rate = 1 - target_rate``).
    """
    z = np.asarray(z, dtype=np.float64)
    if z.size != params.n:
        raise ValueError("Z vector length does not match params.n")
    if params.selection_policy == "theoretical-threshold":
        if target_rate is not None or low_rate is not None:
            raise ValueError("threshold policy takes no target rates")
        d = params.delta
        low = np.flatnonzero(z <= d)
        high = np.flatnonzero((z >= 1 - d) & (z > d))
        return IndexSetReport(z, high, low, label, params.selection_policy, 1 - d, d)
    if target_rate is None or not 0 <= target_rate <= 1:
        raise ValueError("rate-targeted policy needs target_rate in [0, 1]")
    if low_rate is None:
        low_rate = 1 - target_rate
    if not 0 <= low_rate <= 1:
        raise ValueError("low_rate must lie in [0, 1]")
    order = z_order(z)
    nh = _count(target_rate, z.size)
    nl = min(_count(low_rate, z.size), z.size - nh)
    high = order[z.size - nh:]
    low = order[:nl]
    return IndexSetReport(z, high, low, label, params.selection_policy,
                          float(z[high].min()) if nh else 1.0,
                          float(z[low].max()) if nl else 0.0)


def low_rate_for(z: np.ndarray, base: np.ndarray, size: int) -> float:
    """Smallest low-set fraction whose intersection with ``base`` has ``size`` elements."""
    if size <= 0:
        return 0.0
    order = z_order(z)
    hits = np.cumsum(np.isin(order, base))
    if hits[-1] < size:
        raise InfeasibleRatesError(f"base set has only {hits[-1]} indices, {size} requested")
    return (int(np.searchsorted(hits, size)) + 1) / z.size


def budget_count(z: np.ndarray, base: np.ndarray, budget: float) -> int:
    """Largest number of ``base`` indices whose smallest Z values sum to ``budget``."""
    zb = np.sort(z[np.asarray(base, dtype=np.int64)])
    return int(np.searchsorted(np.cumsum(zb), budget, side="right"))


@dataclass(frozen=True)
class Design:
    """How the rate-targeted construction sizes the decodable sets.

    Each decodable set keeps the base indices with the smallest Z whose sum
    stays within ``budget`` (a union bound on that set's error
    probability), then drops a further ``backoff`` fraction.  An explicit
    ``rates`` entry (fraction of n) overrides the budget for that report.
    """

    budget: float = 1e-2
    backoff: float = 0.0
    rates: dict = field(default_factory=dict)

    def size(self, z: np.ndarray, base: np.ndarray, label: str) -> int:
        if label in self.rates:
            count = math.floor(self.rates[label] * z.size + 1e-9)
        else:
            count = budget_count(z, base, self.budget)
        return math.floor(count * (1 - self.backoff) + 1e-9)


def source_report(pairwise: PairwiseJoint, params: ConstructionParams,
                  z: np.ndarray | None = None) -> IndexSetReport:
    """H and L of a pair without channel output: |H| = round(n H(T|S)), L = the rest."""
    if z is None:
        z = estimate_Z(pairwise, params)
    if params.selection_policy == "theoretical-threshold":
        return build_index_sets(z, params, label=pairwise.label)
    h = round(pairwise.conditional_entropy() * params.n) / params.n
    return build_index_sets(z, params, h, 1 - h, pairwise.label)


def decodable_report(pairwise: PairwiseJoint, params: ConstructionParams, base: np.ndarray,
                     design: Design, z: np.ndarray | None = None) -> IndexSetReport:
    """Report whose low set meets ``base`` in the designed number of indices."""
    if z is None:
        z = estimate_Z(pairwise, params)
    if params.selection_policy == "theoretical-threshold":
        return build_index_sets(z, params, label=pairwise.label)
    size = design.size(z, base, pairwise.label)
    low = low_rate_for(z, base, size)
    h = min(round(pairwise.conditional_entropy() * params.n) / params.n, 1 - low)
    return build_index_sets(z, params, h, low, pairwise.label)


# --------------------------------------------------------------------------
# layouts


def _lowest(a: np.ndarray, count: int) -> np.ndarray:
    if count > a.size:
        raise InfeasibleRatesError(f"need {count} indices from a set of {a.size}")
    return a[:count]


I = np.intersect1d
U = np.union1d
D = np.setdiff1d


def _complement(a: np.ndarray, n: int) -> np.ndarray:
    return np.setdiff1d(np.arange(n), a)


@dataclass(frozen=True, eq=False)
class ChainingLayout:
    """Named index sets of a chained broadcast code.

    ``cells`` lists, per polar variable, the set names that must partition
    [n]; ``meta`` records the chaining mode and derived counts.
    """

    scheme: str
    n: int
    k: int
    sets: dict
    cells: dict
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("chain length k must be at least 2")
        sets = {name: _as_index(v) for name, v in self.sets.items()}
        object.__setattr__(self, "sets", sets)
        for var, names in self.cells.items():
            parts = [sets[s] for s in names]
            joined = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
            if joined.size != self.n or not np.array_equal(np.sort(joined), np.arange(self.n)):
                raise ValueError(f"sets {names} do not partition [n] for variable {var}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.sets[name]

    def size(self, name: str) -> int:
        return int(self.sets[name].size)

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "n": self.n, "k": self.k, "meta": self.meta,
                "cells": self.cells, "sets": {k: v.tolist() for k, v in self.sets.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "ChainingLayout":
        return cls(d["scheme"], int(d["n"]), int(d["k"]), d["sets"],
                   {k: list(v) for k, v in d["cells"].items()}, dict(d.get("meta", {})))


def _check_n(*reports: IndexSetReport) -> int:
    ns = {r.n for r in reports}
    if len(ns) != 1:
        raise ValueError("all reports must share n")
    return ns.pop()


def _cloud_sets(report_V: IndexSetReport, L_VY1, L_VY2, n: int, corner: str) -> tuple[dict, list]:
    """Index sets of the chained cloud variable shared by both receivers."""
    H_V, L_V = report_V.high_set, report_V.low_set
    I2, Iv1 = I(H_V, L_VY2), I(H_V, L_VY1)
    D2, D1 = D(I2, Iv1), D(Iv1, I2)
    s = {"I2": I2, "Iv1": Iv1, "Icap": I(I2, Iv1), "D1": D1, "D2": D2}
    if corner == "full":
        s["R2"] = _lowest(D2, D1.size)
        s["B2"] = D(D2, s["R2"])
        s["Fr2"] = D(H_V, U(I2, Iv1))
        cells = ["Fd2", "Fr2", "Icap", "D1", "R2", "B2"]
    elif corner == "min-rate":
        s["R2"] = _lowest(D1, D2.size)
        s["B2"] = np.zeros(0, dtype=np.int64)
        s["Fr2"] = U(D(H_V, U(I2, Iv1)), D(D1, s["R2"]))
        cells = ["Fd2", "Fr2", "Icap", "D2", "R2"]
    else:
        raise ValueError("target_corner must be 'full' or 'min-rate'")
    s["Fd2"] = D(L_V, H_V)
    s["Fr2"] = D(s["Fr2"], s["Fd2"])
    s["Fr2"] = U(s["Fr2"], D(_complement(H_V, n), s["Fd2"]))
    return s, cells


def build_superposition_layout(report_V: IndexSetReport, report_V_Y1: IndexSetReport,
                               report_V_Y2: IndexSetReport, report_X_V: IndexSetReport,
                               report_X_VY1: IndexSetReport, k: int,
                               target_corner: str = "full") -> ChainingLayout:
    """Chained superposition layout.

    ``full``: D1 bits are repeated into R2 of the next block and the rest of
    D2 (B2) is carried by B1 of the satellite in the previous block; user 1
    decodes forward and user 2 backward.  ``min-rate``: the roles of the two
    cloud sets swap, D2 is repeated into R2 ⊆ D1, B2 is empty, user 2 decodes
    forward and user 1 backward.
    """
    n = _check_n(report_V, report_V_Y1, report_V_Y2, report_X_V, report_X_VY1)
    s, cloud = _cloud_sets(report_V, report_V_Y1.low_set, report_V_Y2.low_set,
                           n, target_corner)
    H_XV = D(report_X_V.high_set, report_X_V.low_set)
    s["I1"] = I(H_XV, report_X_VY1.low_set)
    if s["I1"].size < s["B2"].size:
        raise InfeasibleRatesError(f"|I1| = {s['I1'].size} < |B2| = {s['B2'].size}")
    s["B1"] = _lowest(s["I1"], s["B2"].size)
    s["I1free"] = D(s["I1"], s["B1"])
    s["Fd1"] = D(report_X_V.low_set, H_XV)
    s["Fr1"] = D(_complement(s["Fd1"], n), s["I1"])
    return ChainingLayout("superposition", n, k, s,
                          {"cloud": cloud, "satellite": ["Fd1", "Fr1", "B1", "I1free"]},
                          {"corner": target_corner})


def build_binning_layout(report_V1: IndexSetReport, report_V1_Y1: IndexSetReport,
                         report_V2: IndexSetReport, report_V2_V1: IndexSetReport,
                         report_V2_Y2: IndexSetReport, k: int,
                         decode_direction: str = "backward") -> ChainingLayout:
    """Chained binning layout; R carries the critical bits of the adjacent block.

    ``backward``: R of block j holds F_cr of block j-1, user 2 decodes from
    the last block.  ``forward``: R of block j holds F_cr of block j+1.
    """
    if decode_direction not in ("backward", "forward"):
        raise ValueError("decode_direction must be 'backward' or 'forward'")
    n = _check_n(report_V1, report_V1_Y1, report_V2, report_V2_V1, report_V2_Y2)
    s = {}
    H1 = D(report_V1.high_set, report_V1.low_set)
    s["I1"] = I(H1, report_V1_Y1.low_set)
    s["Fd1"] = report_V1.low_set
    s["Fr1"] = D(_complement(s["Fd1"], n), s["I1"])
    H21, L2, L2Y = report_V2_V1.high_set, report_V2.low_set, report_V2_Y2.low_set
    s["I2"] = I(H21, L2Y)
    s["Fr2"] = D(H21, L2Y)
    s["Fd2"] = D(L2, H21)
    rest = D(_complement(H21, n), L2)
    s["Fout2"] = I(rest, L2Y)
    s["Fcr2"] = D(rest, L2Y)
    if s["Fcr2"].size > s["I2"].size:
        raise InfeasibleRatesError(f"|Fcr2| = {s['Fcr2'].size} > |I2| = {s['I2'].size}")
    s["R"] = _lowest(s["I2"], s["Fcr2"].size)
    s["I2free"] = D(s["I2"], s["R"])
    return ChainingLayout("binning", n, k, s,
                          {"plain": ["Fd1", "Fr1", "I1"],
                           "binned": ["Fd2", "Fr2", "Fout2", "Fcr2", "R", "I2free"]},
                          {"direction": decode_direction})


def build_marton_layout(reports: dict, k: int, common_rate_fraction: float = 0.0) -> ChainingLayout:
    """Chained Marton layout from reports keyed by pair label.

    Needed labels: ``V|``, ``V|Y1``, ``V|Y2``, ``V2|V``, ``V2|V,Y2``, ``V1|V``,
    ``V1|V,Y1``, ``V1|V,V2``.  U0 = V G_n chains forward as the superposition
    cloud, U2 = V2 G_n is coded given V, and U1 = V1 G_n carries the critical
    bits of the next block in R_bin.
    """
    need = ["V|", "V|Y1", "V|Y2", "V2|V", "V2|V,Y2", "V1|V", "V1|V,Y1", "V1|V,V2"]
    missing = [x for x in need if x not in reports]
    if missing:
        raise ValueError(f"missing reports: {missing}")
    if not 0 <= common_rate_fraction <= 1:
        raise ValueError("common_rate_fraction must lie in [0, 1]")
    r = reports
    n = _check_n(*(r[x] for x in need))
    s, cloud = _cloud_sets(r["V|"], r["V|Y1"].low_set, r["V|Y2"].low_set, n, "full")
    H2 = D(r["V2|V"].high_set, r["V2|V"].low_set)
    s["Ibin2"] = I(H2, r["V2|V,Y2"].low_set)
    s["Fd2b"] = r["V2|V"].low_set
    s["Fr2b"] = D(_complement(s["Fd2b"], n), s["Ibin2"])
    H1, L1, L1Y = r["V1|V,V2"].high_set, r["V1|V"].low_set, r["V1|V,Y1"].low_set
    s["I1"] = I(H1, L1Y)
    s["Fr1"] = D(H1, L1Y)
    s["Fd1"] = D(L1, H1)
    rest = D(_complement(H1, n), L1)
    s["Fout1"] = I(rest, L1Y)
    s["Fcr1"] = D(rest, L1Y)
    if s["I1"].size < s["B2"].size + s["Fcr1"].size:
        raise InfeasibleRatesError(
            f"|I1| = {s['I1'].size} < |B2| + |Fcr1| = {s['B2'].size + s['Fcr1'].size}")
    s["B1"] = _lowest(s["I1"], s["B2"].size)
    s["Rbin"] = _lowest(D(s["I1"], s["B1"]), s["Fcr1"].size)
    s["I1free"] = D(s["I1"], U(s["B1"], s["Rbin"]))
    s["Rsup"] = s["R2"]
    common_slots = (k - 1) * s["Iv1"].size + s["Icap"].size
    meta = {"corner": "full", "common_rate_fraction": common_rate_fraction,
            "common_bits": math.floor(common_rate_fraction * common_slots + 1e-9)}
    return ChainingLayout("marton", n, k, s,
                          {"cloud": cloud, "plain": ["Fd2b", "Fr2b", "Ibin2"],
                           "binned": ["Fd1", "Fr1", "Fout1", "Fcr1", "B1", "Rbin", "I1free"]},
                          meta)


# --------------------------------------------------------------------------
# end-to-end construction from a broadcast setup


PAIRS = {
    "superposition": {"V|": ("V", ()), "V|Y1": ("V", ("Y1",)), "V|Y2": ("V", ("Y2",)),
                      "X|V": ("X", ("V",)), "X|V,Y1": ("X", ("V", "Y1"))},
    "binning": {"V1|": ("V1", ()), "V1|Y1": ("V1", ("Y1",)), "V2|": ("V2", ()),
                "V2|V1": ("V2", ("V1",)), "V2|Y2": ("V2", ("Y2",))},
    "marton": {"V|": ("V", ()), "V|Y1": ("V", ("Y1",)), "V|Y2": ("V", ("Y2",)),
               "V2|V": ("V2", ("V",)), "V2|V,Y2": ("V2", ("V", "Y2")),
               "V1|V": ("V1", ("V",)), "V1|V,Y1": ("V1", ("V", "Y1")),
               "V1|V,V2": ("V1", ("V", "V2"))},
}

# decodable pair -> (source pair whose high set is the base, how the base is formed)
DECODABLE = {
    "superposition": {"V|Y1": "V|", "V|Y2": "V|", "X|V,Y1": "X|V"},
    "binning": {"V1|Y1": "V1|", "V2|Y2": "V2|V1"},
    "marton": {"V|Y1": "V|", "V|Y2": "V|", "V2|V,Y2": "V2|V", "V1|V,Y1": "V1|V,V2"},
}


def inclusion_violations(scheme: str, reports: dict, pairs: dict | None = None) -> dict:
    """Indices breaking H_side <= H_src and L_src <= L_side for each decodable pair.

    Monte-Carlo noise can break these inclusions; they are reported, not repaired.
    """
    out = {}
    for label, src in (pairs or DECODABLE[scheme]).items():
        if label not in reports or src not in reports:
            continue
        weak, strong = reports[src], reports[label]
        out[label] = {"high": np.setdiff1d(strong.high_set, weak.high_set).tolist(),
                      "low": np.setdiff1d(weak.low_set, strong.low_set).tolist()}
    return out


def z_vectors(setup: BroadcastSetup, scheme: str, params: ConstructionParams,
              exact: bool = False) -> dict:
    """Z vector of every pair a scheme needs, from one seed."""
    out = {}
    for label, (src, side) in PAIRS[scheme].items():
        pw = setup.pairwise(src, side)
        out[label] = exact_Z(pw, params.n) if exact else estimate_Z(pw, params)
    return out


def design_reports(setup: BroadcastSetup, scheme: str, params: ConstructionParams,
                   design: Design | None = None, z: dict | None = None) -> dict:
    """Reports for every pair of ``scheme`` under the rate-targeted design."""
    design = design or Design()
    z = z if z is not None else z_vectors(setup, scheme, params)
    reports = {}
    decodable = DECODABLE[scheme]
    for label, (src, side) in PAIRS[scheme].items():
        if label not in decodable:
            reports[label] = source_report(setup.pairwise(src, side), params, z[label])
    for label, base_label in decodable.items():
        src, side = PAIRS[scheme][label]
        base = reports[base_label]
        base_set = np.setdiff1d(base.high_set, base.low_set)
        reports[label] = decodable_report(setup.pairwise(src, side), params, base_set,
                                          design, z[label])
    return reports


def layout_from_reports(scheme: str, reports: dict, k: int, **options) -> ChainingLayout:
    r = reports
    if scheme == "superposition":
        return build_superposition_layout(r["V|"], r["V|Y1"], r["V|Y2"], r["X|V"], r["X|V,Y1"],
                                          k, options.get("target_corner", "full"))
    if scheme == "binning":
        return build_binning_layout(r["V1|"], r["V1|Y1"], r["V2|"], r["V2|V1"], r["V2|Y2"], k,
                                    options.get("decode_direction", "backward"))
    if scheme == "marton":
        return build_marton_layout(r, k, options.get("common_rate_fraction", 0.0))
    raise ValueError(f"unknown scheme {scheme!r}")


def choose_corner(reports: dict) -> str:
    """``full`` when the cloud sets allow D1 -> R2 repetition and user 1 has room for B2, else ``min-rate``."""
    H = reports["V|"].high_set
    I2 = np.intersect1d(H, reports["V|Y2"].low_set)
    Iv1 = np.intersect1d(H, reports["V|Y1"].low_set)
    d1, d2 = np.setdiff1d(Iv1, I2).size, np.setdiff1d(I2, Iv1).size
    if d1 > d2:
        return "min-rate"
    if "X|V" in reports and "X|V,Y1" in reports:
        r = reports["X|V"]
        I1 = np.intersect1d(np.setdiff1d(r.high_set, r.low_set), reports["X|V,Y1"].low_set)
        if I1.size < d2 - d1:
            return "min-rate"
    return "full"


def p2p_reports(pw_xy: PairwiseJoint, params: ConstructionParams, design: Design | None = None,
                z: dict | None = None) -> dict:
    """Reports ``X|`` and ``X|Y`` of a point-to-point code for the pair ``pw_xy``."""
    design = design or Design()
    pw_x = pw_xy.marginalized()
    label_xy = pw_xy.label
    z = z or {}
    rx = source_report(pw_x, params, z.get("X|"))
    base = np.setdiff1d(rx.high_set, rx.low_set)
    rxy = decodable_report(pw_xy, params, base, design, z.get(label_xy))
    return {"X|": rx, label_xy: rxy}
