"""Oracles and small builders shared by the test modules."""

from __future__ import annotations

from itertools import product

import numpy as np

from polarbc import (AuxiliaryModel, BroadcastSetup, ConstructionParams, Design, PairwiseJoint,
                     build_index_sets, design_reports, exact_Z, layout_from_reports)
from polarbc.construction import PAIRS
from polarbc.polar import generator_matrix
from polarbc.probability import identity_channel


def random_pairwise(rng: np.random.Generator, side: int) -> PairwiseJoint:
    t = rng.dirichlet(np.ones(2 * side)).reshape(2, side)
    if side == 1:
        return PairwiseJoint(t, label="T|")
    return PairwiseJoint(t, ("S",), (side,), "T|S")


def brute_posterior(pw: PairwiseJoint, side: np.ndarray | None, prefix, n: int) -> np.ndarray:
    """P(U^i | u^{0:i}, side) by summing P(x, side) over every x with matching prefix."""
    i = len(prefix)
    xs = np.array(list(product((0, 1), repeat=n)), dtype=np.int64)
    us = (xs @ generator_matrix(n).astype(np.int64)) % 2
    s = np.zeros(n, dtype=np.int64) if side is None else np.asarray(side)
    table = pw.table if side is not None else pw.source_pmf[:, None]
    px = table[xs, s[None, :]].prod(axis=1)
    match = np.all(us[:, :i] == np.asarray(prefix, dtype=np.int64)[None, :], axis=1)
    out = np.array([px[match & (us[:, i] == b)].sum() for b in (0, 1)])
    return out / out.sum()


def brute_Z(pw: PairwiseJoint, n: int) -> np.ndarray:
    """Z of every index from brute_posterior, summed over prefixes and side sequences."""
    xs = np.array(list(product((0, 1), repeat=n)), dtype=np.int64)
    us = (xs @ generator_matrix(n).astype(np.int64)) % 2
    z = np.zeros(n)
    for s in product(range(pw.side_size), repeat=n):
        s = np.array(s)
        px = pw.table[xs, s[None, :]].prod(axis=1)
        for i in range(n):
            for prefix in product((0, 1), repeat=i):
                m = np.all(us[:, :i] == np.array(prefix, dtype=np.int64), axis=1)
                a, b = px[m & (us[:, i] == 0)].sum(), px[m & (us[:, i] == 1)].sum()
                z[i] += 2 * np.sqrt(a * b)
    return z


def random_z_reports(setup: BroadcastSetup, scheme: str, n: int, rng: np.random.Generator,
                     rates: dict | None = None) -> dict:
    """Reports from random Z vectors, so index sets are scattered and not nested."""
    params = ConstructionParams(n, mc_samples=1)
    z = {label: rng.random(n) for label in PAIRS[scheme]}
    return design_reports(setup, scheme, params, Design(rates=rates or {}), z)


def constructed(setup: BroadcastSetup, scheme: str, n: int, k: int, exact: bool = False,
                mc_samples: int = 2000, design: Design | None = None, seed: int = 0, **options):
    params = ConstructionParams(n, mc_samples=mc_samples, seed=seed)
    z = None
    if exact:
        z = {label: exact_Z(setup.pairwise(src, side), n)
             for label, (src, side) in PAIRS[scheme].items()}
    reports = design_reports(setup, scheme, params, design, z)
    return reports, layout_from_reports(scheme, reports, k, **options)


def noiseless_setup(scheme: str, rng: np.random.Generator) -> BroadcastSetup:
    """Models whose component channels reveal every polar variable a receiver decodes."""
    if scheme == "binning":
        p = rng.dirichlet(np.ones(4)).reshape(2, 2)
        model = AuxiliaryModel(2, p, 4, np.arange(4).reshape(2, 2))
        return BroadcastSetup(model, identity_channel(4), identity_channel(4))
    if scheme == "marton":
        p = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
        model = AuxiliaryModel(3, p, 8, np.arange(8).reshape(2, 2, 2))
        return BroadcastSetup(model, identity_channel(8), identity_channel(8))
    raise ValueError(scheme)


def reports_threshold(z, n: int, beta: float = 0.45):
    return build_index_sets(z, ConstructionParams(n, beta=beta, selection_policy="theoretical-threshold"))
