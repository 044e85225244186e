"""Command-line front end: construct, simulate, region, compare.

Outputs are written to ``--out`` (default ``.``):

* ``report.json``: sorted-key JSON embedding the resolved config.
* ``trials.csv``: ``trial,user1_error,user2_error`` (simulate).
* ``frontier.csv``: ``#`` metadata lines, then ``variant,alpha,R1,R2`` (region, compare).
* ``compare.csv``: ``alpha,it_over_agg,agg_over_it,gap`` (compare).

Exit codes: 0 ok, 2 config error, 3 infeasible rates, 4 runtime failure.
Wall-clock timings go to stderr only, so output files are reproducible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time

import numpy as np

from . import config as cfgmod
from .construction import (ChainingLayout, ConstructionParams, Design, IndexSetReport,
                           InfeasibleRatesError, choose_corner, design_reports, exact_Z,
                           inclusion_violations,
                           layout_from_reports, p2p_reports, z_vectors)
from .probability import BroadcastSetup, JointPMF, pairwise_from_joint
from .regions import (binning_region, compare_rows, hausdorff, marton_mgp_region, ray_excess,
                      region_sweep, superposition_region)
from .schemes import P2PCode, SharedRandomness, make_code
from .simulation import bler_interval, derived_seed, run_broadcast_batch, run_p2p_batch, simulate

log = logging.getLogger("polarbc")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_RUNTIME = 0, 2, 3, 4


# --------------------------------------------------------------------------
# output helpers


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return None if not np.isfinite(obj) else float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_clean(obj), f, indent=1, sort_keys=True)
        f.write("\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "" if not np.isfinite(v) else repr(float(v))
    return str(v)


def _write_csv(path: str, header: list[str], rows, comments: list[str] = ()) -> None:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(buf.getvalue())


# --------------------------------------------------------------------------
# construction


def _params(cfg: cfgmod.Config, workers: int) -> ConstructionParams:
    c = cfg["construction"]
    return ConstructionParams(int(c["n"]), float(c["beta"]), int(c["mc_samples"]),
                              int(cfg["seed"]), c["policy"], workers)


def _design(cfg: cfgmod.Config) -> Design:
    d = cfg["design"]
    return Design(float(d["budget"]), float(d["backoff"]), dict(d["rates"]))


def _p2p_pair(cfg: cfgmod.Config):
    ch = cfgmod.channel(cfg, "y")
    if ch.input_alphabet_size != 2:
        cfg.fail("channels.y", "point-to-point coding needs a binary-input channel")
    p1 = float(cfg.data.get("input", {}).get("p1", 0.5))
    joint = JointPMF(("X", "Y"), np.array([1 - p1, p1])[:, None] * ch.pmf)
    return ch, pairwise_from_joint(joint, "X", ("Y",))


def _setup(cfg: cfgmod.Config) -> BroadcastSetup:
    return BroadcastSetup(cfgmod.model(cfg), cfgmod.channel(cfg, "y1"), cfgmod.channel(cfg, "y2"))


def construct(cfg: cfgmod.Config, workers: int = 1) -> dict:
    """Reports (and the chaining layout) for the configured scheme."""
    params = _params(cfg, workers)
    scheme = cfg["scheme"]
    exact = bool(cfg["construction"]["exact"])
    if scheme == "p2p":
        _, pw = _p2p_pair(cfg)
        z = None
        if exact:
            z = {"X|": exact_Z(pw.marginalized(), params.n), pw.label: exact_Z(pw, params.n)}
        reports = p2p_reports(pw, params, _design(cfg), z)
        return {"reports": reports, "layout": None}
    setup = _setup(cfg)
    z = z_vectors(setup, scheme, params, exact)
    reports = design_reports(setup, scheme, params, _design(cfg), z)
    chain = cfg["chain"]
    options = {}
    if scheme == "superposition":
        corner = chain["corner"]
        options["target_corner"] = choose_corner(reports) if corner == "auto" else corner
    elif scheme == "binning":
        options["decode_direction"] = chain["direction"]
    else:
        options["common_rate_fraction"] = float(chain["common_rate_fraction"])
    layout = layout_from_reports(scheme, reports, int(chain["k"]), **options)
    return {"reports": reports, "layout": layout}


def _z_summary(reports: dict) -> dict:
    return {label: {"min": float(r.z_values.min()), "max": float(r.z_values.max()),
                    "mean": float(r.z_values.mean()), "high": int(r.high_set.size),
                    "low": int(r.low_set.size)}
            for label, r in sorted(reports.items())}


def _violations(cfg, reports: dict) -> dict:
    if cfg["scheme"] == "p2p":
        label = next(k for k in reports if k != "X|")
        return inclusion_violations("p2p", reports, pairs={label: "X|"})
    return inclusion_violations(cfg["scheme"], reports)


def _load_cached(cfg: cfgmod.Config) -> dict | None:
    path = cfg["construction"].get("cache")
    if not path:
        return None
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    mine = {k: cfg.data.get(k) for k in ("scheme", "seed", "construction", "design", "chain",
                                           "model", "channels", "input")}
    theirs = {k: doc["config"].get(k) for k in mine}
    for d in (mine, theirs):
        d["construction"] = {k: v for k, v in (d["construction"] or {}).items() if k != "cache"}
    if _clean(mine) != _clean(theirs):
        cfg.fail("construction.cache", "cached construction was built from a different config")
    reports = {k: IndexSetReport.from_dict(v) for k, v in doc["construction"]["reports"].items()}
    layout = doc["construction"].get("layout")
    return {"reports": reports, "layout": ChainingLayout.from_dict(layout) if layout else None}


def _rates(cfg, built) -> dict:
    if cfg["scheme"] == "p2p":
        code = _p2p_code(cfg, built)
        return {"1": code.payload / code.n}
    layout = built["layout"]
    code = make_code(layout, _setup(cfg))
    return {str(u): s / (layout.n * layout.k) for u, s in sorted(code.payload_sizes().items())}


def _p2p_code(cfg, built) -> P2PCode:
    _, pw = _p2p_pair(cfg)
    r = built["reports"]
    return P2PCode.from_reports(r["X|"], r[pw.label], pw,
                                bool(cfg["simulation"]["fd_rounding"]))


def _construction_doc(cfg, built) -> dict:
    layout = built["layout"]
    doc = {"params": _params(cfg, 1).to_dict(),
           "reports": {k: v.to_dict() for k, v in sorted(built["reports"].items())},
           "z_summary": _z_summary(built["reports"]),
           "inclusion_violations": _violations(cfg, built["reports"]),
           "layout": layout.to_dict() if layout else None,
           "rates": _rates(cfg, built)}
    if layout:
        doc["set_sizes"] = {k: int(v.size) for k, v in sorted(layout.sets.items())}
    return doc


# --------------------------------------------------------------------------
# commands


def cmd_construct(cfg, out: str, workers: int) -> None:
    t = time.perf_counter()
    built = construct(cfg, workers)
    log.info("construction: %.2fs", time.perf_counter() - t)
    _write_json(os.path.join(out, "report.json"),
                {"command": "construct", "config": cfg.data,
                 "construction": _construction_doc(cfg, built)})


def cmd_simulate(cfg, out: str, workers: int) -> None:
    t = time.perf_counter()
    built = _load_cached(cfg) or construct(cfg, workers)
    log.info("construction: %.2fs", time.perf_counter() - t)
    seed = int(cfg["seed"])
    sim = cfg["simulation"]
    shared = SharedRandomness(derived_seed(seed, "shared"))
    if cfg["scheme"] == "p2p":
        ch, _ = _p2p_pair(cfg)
        code = _p2p_code(cfg, built)
        fn = lambda idx: run_p2p_batch(code, ch, seed, shared, idx)  # noqa: E731
    else:
        setup = _setup(cfg)
        code = make_code(built["layout"], setup, bool(sim["fd_rounding"]))
        fn = lambda idx: run_broadcast_batch(code, setup, seed, shared, idx)  # noqa: E731
    t = time.perf_counter()
    errors = simulate(fn, int(sim["trials"]), int(sim["batch"]), workers)
    log.info("simulation: %.2fs", time.perf_counter() - t)
    trials = int(sim["trials"])
    results = {}
    for u, e in errors.items():
        lo, hi = bler_interval(int(e.sum()), trials)
        results[str(u)] = {"errors": int(e.sum()), "trials": trials,
                           "bler": float(e.mean()), "ci95": [lo, hi]}
    _write_json(os.path.join(out, "report.json"),
                {"command": "simulate", "config": cfg.data,
                 "construction": _construction_doc(cfg, built), "results": results})
    users = sorted(errors)
    _write_csv(os.path.join(out, "trials.csv"), ["trial"] + [f"user{u}_error" for u in users],
               ([t] + [int(errors[u][t]) for u in users] for t in range(trials)))


def _channel_comments(cfg) -> list[str]:
    ch = cfg["channels"]
    return [f"{k}: {json.dumps(ch[k], sort_keys=True)}" for k in sorted(ch)]


def _sweep(cfg, workers):
    if cfg["scheme"] != "superposition":
        cfg.fail("scheme", "the sweep uses the superposition family")
    ch1, ch2 = cfgmod.channel(cfg, "y1"), cfgmod.channel(cfg, "y2")
    grid = cfgmod.grid(cfg)
    return region_sweep(ch1, ch2, grid, workers), grid


def _model_regions(cfg) -> dict:
    m, ch1, ch2 = cfgmod.model(cfg), cfgmod.channel(cfg, "y1"), cfgmod.channel(cfg, "y2")
    scheme = cfg["scheme"]
    if scheme == "superposition":
        return {v: superposition_region(m, ch1, ch2, v) for v in ("information-theoretic", "agg")}
    if scheme == "binning":
        return {v: binning_region(m, ch1, ch2, v) for v in ("information-theoretic", "agg")}
    if scheme == "marton":
        return {"marton": marton_mgp_region(m, ch1, ch2),
                "mgp": marton_mgp_region(m, ch1, ch2, with_common=True)}
    cfg.fail("scheme", "regions are defined for the broadcast schemes")


def cmd_region(cfg, out: str, workers: int) -> None:
    if cfg["region"]["kind"] == "model":
        regions = _model_regions(cfg)
        rows = [(name, float("nan"), *v) for name, poly in regions.items() if poly.dim == 2
                for v in poly.vertices]
        _write_csv(os.path.join(out, "frontier.csv"), ["variant", "alpha", "R1", "R2"], rows,
                   _channel_comments(cfg) + ["vertices of the configured model's regions"])
        _write_json(os.path.join(out, "report.json"),
                    {"command": "region", "config": cfg.data,
                     "regions": {k: v.to_dict() for k, v in regions.items()}})
        return
    sweep, grid = _sweep(cfg, workers)
    _write_csv(os.path.join(out, "frontier.csv"), ["variant", "alpha", "R1", "R2"], sweep.rows(),
               _channel_comments(cfg) + [_grid_comment(grid)])
    _write_json(os.path.join(out, "report.json"), {"command": "region", "config": cfg.data,
                                                    **_sweep_summary(sweep)})


def _grid_comment(grid) -> str:
    return f"grid: {len(grid)} points in [{float(grid[0])!r}, {float(grid[-1])!r}]"


def _sweep_summary(sweep) -> dict:
    ts = sweep.time_sharing_line()
    mid = ts.mean(axis=0)
    return {"time_sharing": [list(p) for p in sweep.time_sharing],
            "frontiers": {k: v.tolist() for k, v in sorted(sweep.frontiers.items())},
            "distance_to_time_sharing": {k: hausdorff(v, ts) for k, v in sweep.frontiers.items()},
            "excess_at_midpoint": {k: ray_excess(v, mid) for k, v in sweep.frontiers.items()}}


def cmd_compare(cfg, out: str, workers: int) -> None:
    sweep, grid = _sweep(cfg, workers)
    rows = compare_rows(sweep)
    _write_csv(os.path.join(out, "frontier.csv"), ["variant", "alpha", "R1", "R2"],
               [r for r in sweep.rows() if r[0] in ("information-theoretic", "agg")],
               _channel_comments(cfg) + [_grid_comment(grid)])
    _write_csv(os.path.join(out, "compare.csv"), ["alpha", "it_over_agg", "agg_over_it", "gap"], rows)
    fr = sweep.frontiers
    _write_json(os.path.join(out, "report.json"),
                {"command": "compare", "config": cfg.data, **_sweep_summary(sweep),
                 "hausdorff_it_agg": hausdorff(fr["information-theoretic"], fr["agg"]),
                 "max_gap": max(r[3] for r in rows)})


COMMANDS = {"construct": cmd_construct, "simulate": cmd_simulate,
            "region": cmd_region, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polarbc", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON config (or a report embedding one)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        with open(args.config, encoding="utf-8") as f:
            text = f.read()
        cfg = cfgmod.parse(text, args.config)
        if args.seed is not None:
            cfg.data["seed"] = args.seed
            cfgmod.validate(cfg)
        if args.threads < 1:
            raise cfgmod.ConfigError("--threads must be at least 1")
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](cfg, args.out, args.threads)
    except cfgmod.ConfigError as e:
        where = f"{args.config}:{e.line}" if e.line else args.config
        print(f"{where}: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleRatesError as e:
        print(f"infeasible rates: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG if not os.path.exists(args.config) else EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
