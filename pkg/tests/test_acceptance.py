"""The ten acceptance criteria; each prints one PASS/FAIL line in the terminal summary."""

import hashlib
import json
import time
from fractions import Fraction

import numpy as np
import pytest

from helpers import brute_posterior, constructed, noiseless_setup, random_pairwise, random_z_reports
from polarbc import (AuxiliaryModel, BinningCode, BroadcastSetup, ConstructionParams, DMC, Design,
                     InfeasibleRatesError, IndexSetReport, MartonCode, P2PCode, PairwiseJoint,
                     SCContext, SharedRandomness, SuperpositionCode, bec, binary_entropy,
                     binning_region, bsc, bsc_superposition_model, build_index_sets,
                     compress, decompress, estimate_Z, exact_Z, layout_from_reports,
                     marton_mgp_region, p2p_decode, p2p_encode, p2p_reports,
                     region_sweep, sc_posterior)
from polarbc.cli import main
from polarbc.construction import choose_corner, design_reports, z_vectors
from polarbc.probability import JointPMF, identity_channel, pairwise_from_joint
from polarbc.regions import excess_over, hausdorff, ray_excess
from polarbc.simulation import bler_interval, run_broadcast_batch, run_p2p_batch, simulate

SHARED = SharedRandomness(99)


def feasible(build, attempts=50):
    """First successful draw of a random construction."""
    for _ in range(attempts):
        try:
            return build()
        except InfeasibleRatesError:
            continue
    raise RuntimeError("no feasible construction drawn")


# --------------------------------------------------------------------------
# 1, 2: the BSC/BEC superposition figure


@pytest.mark.criterion(1, "coinciding superposition regions on BSC(0.11)/BEC(0.2)")
def test_criterion_1_coinciding_regions(record_property):
    t = time.perf_counter()
    sweep = region_sweep(bsc(0.11), bec(0.2))
    it, agg = sweep.frontiers["information-theoretic"], sweep.frontiers["agg"]
    gap = hausdorff(it, agg)
    mid = sweep.time_sharing_line().mean(axis=0)
    margins = ray_excess(it, mid), ray_excess(agg, mid)
    elapsed = time.perf_counter() - t
    record_property("detail", f"Hausdorff {gap:.2e}, midpoint margins {margins[0]:.4f}/{margins[1]:.4f}, "
                              f"{elapsed:.1f}s")
    assert gap <= 1e-3
    assert min(margins) > 0.01
    assert elapsed < 10


@pytest.mark.criterion(2, "AGG region collapses to time sharing on BSC(0.11)/BEC(0.4)")
def test_criterion_2_collapsed_agg(record_property):
    sweep = region_sweep(bsc(0.11), bec(0.4))
    (c1, _), (_, c2) = sweep.time_sharing
    assert c1 == pytest.approx(1 - binary_entropy(0.11), abs=1e-12) and c2 == pytest.approx(0.6, abs=1e-12)
    ts = sweep.time_sharing_line()
    gap = hausdorff(sweep.frontiers["agg"], ts)
    interior = [k for k, a in enumerate(sweep.grid) if 0 < a < 0.5]
    above = sum(excess_over(sweep.vertices("information-theoretic", k), ts) > 1e-9 for k in interior)
    record_property("detail", f"AGG to time sharing {gap:.2e}, IT above at {above} interior points")
    assert gap <= 1e-3
    assert above >= 10


# --------------------------------------------------------------------------
# 3, 4: oracles and inclusions


@pytest.mark.criterion(3, "Monte-Carlo Z and SC posteriors agree with exact oracles")
def test_criterion_3_oracles(record_property):
    t = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_z, worst_post = 0.0, 0.0
    for n in (2, 4, 8):
        for _ in range(20):
            pw = random_pairwise(rng, int(rng.integers(1, 4)))
            mc = estimate_Z(pw, ConstructionParams(n, mc_samples=100_000, seed=int(rng.integers(2**31))))
            worst_z = max(worst_z, float(np.abs(mc - exact_Z(pw, n)).max()))
            side = rng.integers(0, pw.side_size, n) if pw.side_size > 1 else None
            u = rng.integers(0, 2, n, dtype=np.uint8)
            for i in range(n):
                got = sc_posterior(SCContext(pw, side, u[:i]), i, n=n)
                worst_post = max(worst_post, float(np.abs(np.array(got) - brute_posterior(pw, side, u[:i], n)).max()))
    elapsed = time.perf_counter() - t
    record_property("detail", f"max Z gap {worst_z:.4f}, max posterior gap {worst_post:.1e}, {elapsed:.1f}s")
    assert worst_z <= 0.02
    assert worst_post <= 1e-9
    assert elapsed < 120


@pytest.mark.criterion(4, "set inclusions hold with exact Z at n = 8")
def test_criterion_4_inclusions(record_property):
    rng = np.random.default_rng(4)
    params = ConstructionParams(8, selection_policy="theoretical-threshold")
    violations, checks = 0, 0
    for _ in range(50):
        px = np.array([1 - (p := rng.uniform(0.05, 0.5)), p])
        ch1 = DMC(rng.dirichlet(np.ones(3), size=2))
        ch2 = DMC(ch1.pmf @ rng.dirichlet(np.ones(3), size=3))       # degraded version of ch1
        joint = JointPMF(("X", "Y1", "Y2"), px[:, None, None] * ch1.pmf[:, :, None] * ch2.pmf[:, None, :])
        sets = {}
        for label, side in (("X", ()), ("X|Y1", ("Y1",)), ("X|Y2", ("Y2",))):
            pw = pairwise_from_joint(joint, "X", side)
            sets[label] = build_index_sets(exact_Z(pw, 8), params)
        for weak, strong in (("X", "X|Y1"), ("X", "X|Y2"), ("X|Y2", "X|Y1")):
            violations += np.setdiff1d(sets[strong].high_set, sets[weak].high_set).size
            violations += np.setdiff1d(sets[weak].low_set, sets[strong].low_set).size
            checks += 2
    record_property("detail", f"{violations} violations over {checks} inclusion checks")
    assert violations == 0


# --------------------------------------------------------------------------
# 5: noiseless roundtrips


def _bern_pair(p, side_channel=None):
    if side_channel is None:
        return PairwiseJoint(np.array([[1 - p], [p]]), label="X|")
    return pairwise_from_joint(JointPMF(("X", "Y"), np.array([1 - p, p])[:, None] * side_channel.pmf),
                               "X", ("Y",))


def _check(failures, name, ok):
    if not ok:
        failures.append(name)


def _broadcast_roundtrip(code, rng, b=100):
    sizes = code.payload_sizes()
    msgs = {u: rng.integers(0, 2, (b, s), dtype=np.uint8) for u, s in sizes.items()}
    if isinstance(code, MartonCode):
        x = code.encode(msgs[0], msgs[1], msgs[2], SHARED)
        return all(np.array_equal(code.decode(u, x, SHARED)[0], msgs[0])
                   and np.array_equal(code.decode(u, x, SHARED)[1], msgs[u]) for u in (1, 2))
    x = code.encode(msgs[1], msgs[2], SHARED)
    return all(np.array_equal(code.decode(u, x, SHARED), msgs[u]) for u in (1, 2))


@pytest.mark.criterion(5, "noiseless roundtrips for every scheme")
def test_criterion_5_noiseless(record_property):
    rng = np.random.default_rng(5)
    failures, runs = [], 0
    for n in (8, 64, 256):
        mc = 20_000 if n == 256 else 4000
        params = ConstructionParams(n, mc_samples=mc, seed=n)
        # compression with and without side information
        source = _bern_pair(0.11)
        z = exact_Z(source, n) if n <= 8 else estimate_Z(source, params)
        report = p2p_reports(_bern_pair(0.11, identity_channel(2)), params, Design(budget=1e-6),
                             {"X|": z, "X|Y": np.zeros(n)})["X|"]
        low = np.flatnonzero(np.cumsum(np.sort(z)) <= 1e-6)
        plain = IndexSetReport(z, [], np.argsort(z, kind="stable")[low])
        x = (rng.random((100, n)) < 0.11).astype(np.uint8)
        _check(failures, f"compression n={n}", np.array_equal(decompress(compress(x, plain), plain, source), x))
        side_pw = _bern_pair(0.11, identity_channel(2))
        _check(failures, f"side compression n={n}",
               np.array_equal(decompress(compress(x, report), report, side_pw, side=x), x))
        # point-to-point
        pw = _bern_pair(0.3, identity_channel(2))
        r = p2p_reports(pw, params)
        code = P2PCode.from_reports(r["X|"], r["X|Y"], pw)
        msg = rng.integers(0, 2, (100, code.payload), dtype=np.uint8)
        _check(failures, f"p2p n={n}", np.array_equal(p2p_decode(p2p_encode(msg, code, SHARED), code, SHARED), msg))
        runs += 3
        for k in (2, 3, 4):
            setup = BroadcastSetup(bsc_superposition_model(0.05), identity_channel(2), identity_channel(2))
            _, lay = constructed(setup, "superposition", n, k, exact=n <= 8, mc_samples=mc,
                                 design=Design(budget=1e-6), seed=n, target_corner="full")
            _check(failures, f"superposition n={n} k={k}",
                   _broadcast_roundtrip(SuperpositionCode(lay, setup), rng))

            def binning():
                setup = noiseless_setup("binning", rng)
                reports = random_z_reports(setup, "binning", n, rng, {"V1|Y1": 0.3, "V2|Y2": 0.3})
                return setup, layout_from_reports("binning", reports, k)
            setup, lay = feasible(binning)
            _check(failures, f"binning n={n} k={k}", _broadcast_roundtrip(BinningCode(lay, setup), rng))
            for fraction, name in ((0.0, "Marton"), (0.5, "MGP")):
                def marton():
                    setup = noiseless_setup("marton", rng)
                    reports = random_z_reports(setup, "marton", n, rng,
                                               {"V|Y1": 0.25, "V|Y2": 0.35, "V1|V,Y1": 0.3, "V2|V,Y2": 0.2})
                    return setup, layout_from_reports("marton", reports, k, common_rate_fraction=fraction)
                setup, lay = feasible(marton)
                _check(failures, f"{name} n={n} k={k}", _broadcast_roundtrip(MartonCode(lay, setup), rng))
            runs += 4
    record_property("detail", f"{runs - len(failures)}/{runs} configurations exact"
                    + (f"; failed: {', '.join(failures)}" if failures else ""))
    assert not failures


# --------------------------------------------------------------------------
# 6: rate accounting


def _decoded_lengths(code, rng):
    sizes = code.payload_sizes()
    msgs = {u: rng.integers(0, 2, (1, s), dtype=np.uint8) for u, s in sizes.items()}
    if isinstance(code, MartonCode):
        x = code.encode(msgs[0], msgs[1], msgs[2], SHARED)
        c1, p1 = code.decode(1, x, SHARED)
        _, p2 = code.decode(2, x, SHARED)
        return {0: c1.shape[1], 1: p1.shape[1], 2: p2.shape[1]}
    x = code.encode(msgs[1], msgs[2], SHARED)
    return {u: code.decode(u, x, SHARED).shape[1] for u in (1, 2)}


def _closed_forms(lay) -> dict:
    s, k, n = lay.sets, lay.k, lay.n
    size = lambda *names: np.unique(np.concatenate([s[a] for a in names])).size  # noqa: E731
    kn = k * n
    if lay.scheme == "superposition":
        return {2: Fraction(s["Iv1"].size + (k - 2) * size("Iv1", "B2") + size("Icap", "B2"), kn),
                1: Fraction((k - 1) * np.setdiff1d(s["I1"], s["B1"]).size + s["I1"].size, kn)}
    if lay.scheme == "binning":
        return {1: Fraction((k - 1) * s["I1"].size, kn),
                2: Fraction(s["R"].size, kn) + Fraction(s["I2"].size - s["R"].size, n)}
    cloud = s["Iv1"].size + (k - 2) * size("Iv1", "B2") + size("Icap", "B2")
    return {"0+2": Fraction(cloud + (k - 1) * s["Ibin2"].size, kn),
            1: Fraction((k - 1) * np.setdiff1d(s["I1"], np.union1d(s["Rbin"], s["B1"])).size
                        + s["I1"].size, kn)}


@pytest.mark.criterion(6, "payload rates equal the closed-form set arithmetic")
def test_criterion_6_rates(record_property):
    rng = np.random.default_rng(6)
    mismatches, checked = [], 0
    for scheme in ("superposition", "binning", "marton"):
        for trial in range(20):
            n, k = int(2 ** rng.integers(4, 9)), int(rng.integers(2, 6))

            def build():
                if scheme == "superposition":
                    setup = BroadcastSetup(bsc_superposition_model(rng.uniform(0.2, 0.45)),
                                           identity_channel(2), identity_channel(2))
                    r1 = rng.uniform(0.05, 0.15)    # the full corner needs |D2| >= |D1|
                    rates = {"V|Y1": r1, "V|Y2": r1 + rng.uniform(0.05, 0.15),
                             "X|V,Y1": rng.uniform(0.3, 0.6)}
                    reports = random_z_reports(setup, scheme, n, rng, rates)
                    return setup, layout_from_reports(scheme, reports, k, target_corner="full")
                setup = noiseless_setup(scheme, rng)
                if scheme == "binning":
                    rates = {"V1|Y1": rng.uniform(0.1, 0.4), "V2|Y2": rng.uniform(0.1, 0.4)}
                    options = {"decode_direction": str(rng.choice(["backward", "forward"]))}
                else:
                    rates = {"V|Y1": 0.25, "V|Y2": 0.35, "V1|V,Y1": 0.3, "V2|V,Y2": 0.2}
                    options = {"common_rate_fraction": float(rng.uniform())}
                reports = random_z_reports(setup, scheme, n, rng, rates)
                return setup, layout_from_reports(scheme, reports, k, **options)
            setup, lay = feasible(build)
            code = {"superposition": SuperpositionCode, "binning": BinningCode, "marton": MartonCode}[scheme](lay, setup)
            got = _decoded_lengths(code, rng)
            if scheme == "marton":
                got = {"0+2": got[0] + got[2], 1: got[1]}
            measured = {u: Fraction(b, k * n) for u, b in got.items()}
            expected = _closed_forms(lay)
            checked += 1
            if measured != expected:
                mismatches.append(f"{scheme}#{trial}")
    record_property("detail", f"{checked - len(mismatches)}/{checked} constructions exact")
    assert not mismatches


# --------------------------------------------------------------------------
# 7, 8: error probability


def _p2p_bler(n, trials=1000):
    pw = pairwise_from_joint(JointPMF(("X", "Y"), 0.5 * bsc(0.11).pmf), "X", ("Y",))
    r = p2p_reports(pw, ConstructionParams(n, mc_samples=20_000, seed=7), Design(rates={"X|Y": 0.25}))
    code = P2PCode.from_reports(r["X|"], r["X|Y"], pw)
    assert code.payload == n // 4
    shared = SharedRandomness(7)
    errors = simulate(lambda idx: run_p2p_batch(code, bsc(0.11), 7, shared, idx), trials, batch=250)[1]
    return int(errors.sum())


@pytest.mark.criterion(7, "p2p BLER over BSC(0.11) at rate 0.25 decreases with n")
def test_criterion_7_scaling(record_property):
    t = time.perf_counter()
    trials = 1000
    counts = {n: _p2p_bler(n, trials) for n in (256, 512, 1024)}
    elapsed = time.perf_counter() - t
    intervals = {n: bler_interval(e, trials) for n, e in counts.items()}
    record_property("detail", ", ".join(f"n={n}: {e}/{trials}" for n, e in counts.items())
                    + f", {elapsed:.0f}s")
    ns = sorted(counts)
    for a, b in zip(ns, ns[1:]):
        # nonincreasing, allowing statistical ties inside the 95% intervals
        assert counts[b] <= counts[a] or intervals[b][0] <= intervals[a][1]
    assert counts[1024] / trials <= 0.05
    assert elapsed < 300


@pytest.mark.criterion(8, "superposition over BSC(0.05)/BSC(0.2) at n = 512, k = 4")
def test_criterion_8_broadcast(record_property):
    setup = BroadcastSetup(bsc_superposition_model(0.1), bsc(0.05), bsc(0.2))
    params = ConstructionParams(512, mc_samples=20_000, seed=8)
    z = z_vectors(setup, "superposition", params)
    corner = choose_corner(design_reports(setup, "superposition", params, Design(budget=1e-2), z))
    inner = design_reports(setup, "superposition", params, Design(budget=1e-2, backoff=0.1), z)
    lay = layout_from_reports("superposition", inner, 4, target_corner=corner)
    code = SuperpositionCode(lay, setup)
    shared = SharedRandomness(8)
    errors = simulate(lambda idx: run_broadcast_batch(code, setup, 8, shared, idx), 200, batch=50)
    rates = {u: s / (4 * 512) for u, s in code.payload_sizes().items()}
    bler = {u: float(e.mean()) for u, e in errors.items()}
    record_property("detail", f"corner {corner}, rates R1={rates[1]:.3f} R2={rates[2]:.3f}, "
                              f"BLER user1={bler[1]:.3f} user2={bler[2]:.3f}")
    assert rates[1] > 0 and rates[2] > 0
    assert bler[1] <= 0.10 and bler[2] <= 0.10


# --------------------------------------------------------------------------
# 9, 10


@pytest.mark.criterion(9, "Marton specializes to binning and MGP to Marton")
def test_criterion_9_specializations(record_property):
    rng = np.random.default_rng(9)
    bad = 0
    for _ in range(50):
        ch1, ch2 = DMC(rng.dirichlet(np.ones(3), size=4)), DMC(rng.dirichlet(np.ones(3), size=4))
        q = rng.dirichlet(np.ones(4)).reshape(2, 2)
        phi = rng.permutation(4).reshape(2, 2)
        p3 = np.zeros((2, 2, 2))
        p3[0] = q
        marton_const = AuxiliaryModel(3, p3, 4, np.stack([phi, phi]))
        binning = AuxiliaryModel(2, q, 4, phi)
        bad += not marton_mgp_region(marton_const, ch1, ch2).same_as(binning_region(binning, ch1, ch2))
        p = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
        m = AuxiliaryModel(3, p, 4, rng.integers(0, 4, (2, 2, 2)))
        full = marton_mgp_region(m, ch1, ch2, with_common=True)
        bad += not full.slice("R0").same_as(marton_mgp_region(m, ch1, ch2))
    record_property("detail", f"{100 - bad}/100 identities hold")
    assert bad == 0


CLI_CONFIGS = {
    "construct": {"scheme": "binning", "seed": 5,
                  "channels": {"y1": {"type": "identity", "size": 4}, "y2": {"type": "identity", "size": 4}},
                  "model": {"type": "product", "joint_pmf": [[0.4, 0.1], [0.2, 0.3]]},
                  "construction": {"n": 64, "mc_samples": 2000}, "chain": {"k": 3}},
    "simulate": {"scheme": "superposition", "seed": 11,
                 "channels": {"y1": {"type": "bsc", "p": 0.05}, "y2": {"type": "bsc", "p": 0.2}},
                 "model": {"type": "bsc-superposition", "alpha": 0.1},
                 "construction": {"n": 64, "mc_samples": 2000}, "chain": {"k": 3},
                 "simulation": {"trials": 100, "batch": 25}},
    "region": {"scheme": "superposition",
               "channels": {"y1": {"type": "bsc", "p": 0.11}, "y2": {"type": "bec", "eps": 0.4}},
               "model": {"type": "bsc-superposition", "alpha": 0.1}},
    "compare": {"scheme": "superposition",
                "channels": {"y1": {"type": "bsc", "p": 0.11}, "y2": {"type": "bec", "eps": 0.2}},
                "model": {"type": "bsc-superposition", "alpha": 0.1}},
}


@pytest.mark.criterion(10, "CLI outputs are byte-identical across runs")
def test_criterion_10_determinism(tmp_path, record_property):
    identical = []
    for command, cfg in CLI_CONFIGS.items():
        path = tmp_path / f"{command}.json"
        path.write_text(json.dumps(cfg, indent=1))
        digests = []
        for run in (1, 2):
            out = tmp_path / f"{command}{run}"
            assert main([command, "--config", str(path), "--out", str(out), "--threads", str(run)]) == 0
            digests.append({p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(out.iterdir())})
        identical.append(digests[0] == digests[1])
    record_property("detail", f"{sum(identical)}/{len(identical)} commands reproducible")
    assert all(identical)
