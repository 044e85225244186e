"""Achievable rate regions, corner points and the BSC-family superposition sweep.

Regions are closed polytopes in the nonnegative orthant over (R1, R2) or
(R0, R1, R2); strict inequalities are replaced by their closure.  Vertices
are found by intersecting every pair (or triple) of constraint hyperplanes,
nonnegativity included, and keeping the feasible intersections.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .probability import (DMC, AuxiliaryModel, BroadcastSetup, JointPMF, RatePoint,
                          bsc_superposition_model, check_stochastic_degradation)

FEAS_TOL = 1e-9
VARIANTS = ("information-theoretic", "agg")


# --------------------------------------------------------------------------
# polytopes


def _dedupe(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    out: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= tol for q in out):
            out.append(p)
    if not out:
        return np.zeros((0, points.shape[1]))
    return np.array(sorted(out, key=tuple))


@dataclass(frozen=True, eq=False)
class RegionPolytope:
    """{r >= 0 : A r <= b}; ``axes`` names the coordinates."""

    A: np.ndarray
    b: np.ndarray
    axes: tuple[str, ...] = ("R1", "R2")
    labels: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape != (b.size, len(self.axes)):
            raise ValueError("inequality matrix does not match the axes")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def inequalities(self) -> list[tuple[np.ndarray, float]]:
        return [(a, float(c)) for a, c in zip(self.A, self.b)]

    def _system(self) -> tuple[np.ndarray, np.ndarray]:
        d = self.dim
        return np.vstack([self.A, -np.eye(d)]), np.concatenate([self.b, np.zeros(d)])

    def contains(self, r, tol: float = FEAS_TOL) -> bool:
        G, h = self._system()
        return bool(np.all(G @ np.asarray(r, dtype=float) <= h + tol))

    @property
    def vertices(self) -> np.ndarray:
        if "_vertices" not in self.meta:
            self.meta["_vertices"] = self._enumerate()
        return self.meta["_vertices"]

    def _enumerate(self) -> np.ndarray:
        G, h = self._system()
        d = self.dim
        pts = []
        for rows in combinations(range(len(h)), d):
            M = G[list(rows)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            p = np.linalg.solve(M, h[list(rows)])
            if np.all(G @ p <= h + FEAS_TOL):
                pts.append(np.where(np.abs(p) < 1e-13, 0.0, p))
        if not pts:
            return np.zeros((0, d))
        return _dedupe(np.array(pts))

    def rate_points(self) -> list[RatePoint]:
        out = []
        for v in self.vertices:
            named = dict(zip(self.axes, v))
            out.append(RatePoint(named.get("R0", 0.0), named.get("R1", 0.0), named.get("R2", 0.0)))
        return out

    def slice(self, axis: str, value: float = 0.0) -> "RegionPolytope":
        """Fix one coordinate and drop it."""
        k = self.axes.index(axis)
        keep = [j for j in range(self.dim) if j != k]
        return RegionPolytope(self.A[:, keep], self.b - self.A[:, k] * value,
                              tuple(self.axes[j] for j in keep), self.labels, {})

    def swapped(self) -> "RegionPolytope":
        """Exchange the R1 and R2 coordinates."""
        i, j = self.axes.index("R1"), self.axes.index("R2")
        perm = list(range(self.dim))
        perm[i], perm[j] = j, i
        return RegionPolytope(self.A[:, perm], self.b, self.axes, self.labels,
                              {k: v for k, v in self.meta.items() if not k.startswith("_")})

    @property
    def shape(self) -> str:
        if self.dim != 2:
            return "polytope"
        v = self.vertices
        if len(v) < 3 or _area(v) <= 1e-12:
            return "degenerate"
        if len(v) == 3:
            return "triangle"
        if len(v) == 5:
            return "pentagon"
        top = v.max(axis=0)
        on_box = np.all((np.abs(v) <= 1e-9) | (np.abs(v - top) <= 1e-9), axis=1)
        return "rectangle" if on_box.all() else "right-trapezoid"

    def same_as(self, other: "RegionPolytope", tol: float = 1e-9) -> bool:
        a, b = self.vertices, other.vertices
        return a.shape == b.shape and bool(np.all(np.abs(a - b) <= tol))

    def to_dict(self) -> dict:
        return {"axes": list(self.axes), "labels": list(self.labels),
                "A": self.A.tolist(), "b": self.b.tolist(),
                "vertices": self.vertices.tolist(), "shape": self.shape,
                "meta": {k: v for k, v in self.meta.items() if not k.startswith("_")}}


def _area(v: np.ndarray) -> float:
    c = v.mean(axis=0)
    order = np.argsort(np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0]))
    x, y = v[order, 0], v[order, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


# --------------------------------------------------------------------------
# regions of the schemes


def _conditional(joint: JointPMF, out: str, given: str) -> DMC:
    """Channel p(out | given) restricted to the support of ``given``."""
    t = joint.marginal([given, out])
    rows = t.sum(axis=1)
    keep = rows > 0
    return DMC(t[keep] / rows[keep, None], f"{out}|{given}")


def _degraded(joint: JointPMF, better: str, worse: str, given: str) -> bool:
    p, q = _conditional(joint, better, given), _conditional(joint, worse, given)
    return check_stochastic_degradation(p, q)


def superposition_info(setup: BroadcastSetup) -> dict:
    return {q: setup.info(q) for q in ("I(X;Y1|V)", "I(V;Y1)", "I(V;Y2)", "I(X;Y1)")}


def superposition_region(model: AuxiliaryModel, ch1: DMC, ch2: DMC,
                         variant: str = "information-theoretic",
                         check_degradation: bool = True) -> RegionPolytope:
    """Bergmans superposition region (user 1 decodes the cloud) or its AGG subset."""
    if model.arity != 1:
        raise ValueError("superposition needs an arity-1 model")
    setup = BroadcastSetup(model, ch1, ch2)
    info = superposition_info(setup)
    A = [[1, 0], [0, 1]]
    b = [info["I(X;Y1|V)"], info["I(V;Y2)"]]
    labels = ["I(X;Y1|V)", "I(V;Y2)"]
    meta = {"variant": variant, "info": info}
    if variant == "information-theoretic":
        A.append([1, 1])
        b.append(info["I(X;Y1)"])
        labels.append("I(X;Y1)")
    elif variant == "agg":
        meta["degraded"] = _degraded(setup.joint, "Y1", "Y2", "V") if check_degradation else None
    else:
        raise ValueError(f"variant must be one of {VARIANTS}")
    return RegionPolytope(A, b, ("R1", "R2"), tuple(labels), meta)


def binning_info(setup: BroadcastSetup) -> dict:
    return {q: setup.info(q) for q in ("I(V1;Y1)", "I(V2;Y2)", "I(V1;V2)")}


def binning_region(model: AuxiliaryModel, ch1: DMC, ch2: DMC,
                   variant: str = "information-theoretic",
                   check_degradation: bool = True) -> RegionPolytope:
    if model.arity != 2:
        raise ValueError("binning needs an arity-2 model")
    setup = BroadcastSetup(model, ch1, ch2)
    info = binning_info(setup)
    a, c, m = info["I(V1;Y1)"], info["I(V2;Y2)"], info["I(V1;V2)"]
    meta = {"variant": variant, "info": info}
    if variant == "information-theoretic":
        return RegionPolytope([[1, 0], [0, 1], [1, 1]], [a, c, a + c - m], ("R1", "R2"),
                              ("I(V1;Y1)", "I(V2;Y2)", "I(V1;Y1)+I(V2;Y2)-I(V1;V2)"), meta)
    if variant != "agg":
        raise ValueError(f"variant must be one of {VARIANTS}")
    meta["degraded"] = _degraded(setup.joint, "Y2", "V1", "V2") if check_degradation else None
    return RegionPolytope([[1, 0], [0, 1]], [a, max(c - m, 0.0)], ("R1", "R2"),
                          ("I(V1;Y1)", "I(V2;Y2)-I(V1;V2)"), meta)


MARTON_QUERIES = ("I(V,V1;Y1)", "I(V,V2;Y2)", "I(V1;Y1|V)", "I(V2;Y2|V)", "I(V1;V2|V)",
                  "I(V;Y1)", "I(V;Y2)")


def marton_info(setup: BroadcastSetup) -> dict:
    return {q: setup.info(q) for q in MARTON_QUERIES}


def marton_mgp_region(model: AuxiliaryModel, ch1: DMC, ch2: DMC,
                      with_common: bool = False) -> RegionPolytope:
    """Marton region over (R1, R2), or the MGP region over (R0, R1, R2)."""
    if model.arity != 3:
        raise ValueError("Marton needs an arity-3 model")
    i = marton_info(BroadcastSetup(model, ch1, ch2))
    s1 = i["I(V,V1;Y1)"] + i["I(V2;Y2|V)"] - i["I(V1;V2|V)"]
    s2 = i["I(V,V2;Y2)"] + i["I(V1;Y1|V)"] - i["I(V1;V2|V)"]
    labels = ("I(V,V1;Y1)", "I(V,V2;Y2)", "sum via Y1", "sum via Y2")
    bounds = [i["I(V,V1;Y1)"], i["I(V,V2;Y2)"], s1, s2]
    meta = {"info": i, "with_common": with_common}
    if not with_common:
        return RegionPolytope([[1, 0], [0, 1], [1, 1], [1, 1]], bounds, ("R1", "R2"), labels, meta)
    A = [[1, 0, 0], [1, 1, 0], [1, 0, 1], [1, 1, 1], [1, 1, 1]]
    return RegionPolytope(A, [min(i["I(V;Y1)"], i["I(V;Y2)"]), *bounds], ("R0", "R1", "R2"),
                          ("min I(V;Y)",) + labels, meta)


# --------------------------------------------------------------------------
# corner points


def _need(info: dict, keys) -> list[float]:
    missing = [k for k in keys if k not in info]
    if missing:
        raise KeyError(f"missing quantities: {missing}")
    return [float(info[k]) for k in keys]


def corner_points(kind: str, info: dict) -> tuple[str, list[RatePoint]]:
    """Shape of a region and the corner points that have to be achieved."""
    if kind == "superposition":
        xv, v1, v2, x1 = _need(info, ("I(X;Y1|V)", "I(V;Y1)", "I(V;Y2)", "I(X;Y1)"))
        if v2 <= v1:
            return "rectangle", [RatePoint(0, xv, v2)]
        if v2 < x1:
            return "pentagon", [RatePoint(0, x1 - v2, v2), RatePoint(0, xv, v1)]
        return "right-trapezoid", [RatePoint(0, xv, v1), RatePoint(0, 0, x1)]
    if kind == "binning":
        a, c, m = _need(info, ("I(V1;Y1)", "I(V2;Y2)", "I(V1;V2)"))
        if m <= 0:
            return "rectangle", [RatePoint(0, a, c)]
        if m <= min(a, c):
            return "pentagon", [RatePoint(0, a, c - m), RatePoint(0, a - m, c)]
        if c <= m < a:
            return "right-trapezoid", [RatePoint(0, a - m, c), RatePoint(0, a + c - m, 0)]
        if a <= m < c:
            return "right-trapezoid", [RatePoint(0, a, c - m), RatePoint(0, 0, a + c - m)]
        s = a + c - m
        if s <= 0:
            return "degenerate", [RatePoint()]
        return "triangle", [RatePoint(0, s, 0), RatePoint(0, 0, s)]
    if kind == "marton":
        vals = dict(zip(MARTON_QUERIES, _need(info, MARTON_QUERIES)))
        swap = vals["I(V;Y1)"] > vals["I(V;Y2)"]
        if swap:
            vals = {k.replace("1", "#").replace("2", "1").replace("#", "2"): v
                    for k, v in vals.items()}
            vals["I(V1;V2|V)"] = vals.pop("I(V2;V1|V)")
        g1 = vals["I(V2;Y2|V)"] - vals["I(V1;V2|V)"]
        g2 = vals["I(V,V1;Y1)"] - vals["I(V1;V2|V)"] - vals["I(V;Y2)"]
        c1 = (vals["I(V,V1;Y1)"], g1)
        c2 = (g2, vals["I(V,V2;Y2)"])
        s = vals["I(V,V1;Y1)"] + g1
        if g1 > 0 and g2 > 0:
            shape, pts = "pentagon", [c1, c2]
        elif g1 > 0:
            shape, pts = "right-trapezoid", [c1, (0.0, min(s, vals["I(V,V2;Y2)"]))]
        elif g2 > 0:
            shape, pts = "right-trapezoid", [c2, (min(s, vals["I(V,V1;Y1)"]), 0.0)]
        else:
            shape = "triangle" if s > 0 else "degenerate"
            pts = [(min(s, vals["I(V,V1;Y1)"]), 0.0), (0.0, min(s, vals["I(V,V2;Y2)"]))]
        if swap:
            pts = [(b, a) for a, b in pts]
        return shape, [RatePoint(0, max(a, 0.0), max(b, 0.0)) for a, b in pts]
    raise ValueError(f"unknown kind {kind!r}")


# --------------------------------------------------------------------------
# frontiers


def upper_frontier(points) -> np.ndarray:
    """Upper-right boundary of the convex hull of a down-closed point set.

    Returns a polyline from the R2 axis to the R1 axis, nonincreasing in R2.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    p = np.clip(p, 0.0, None)
    if p.size == 0:
        return np.zeros((1, 2))
    xmax, ymax = p[:, 0].max(), p[:, 1].max()
    p = np.vstack([p, [[0.0, ymax], [xmax, 0.0]]])
    p = p[np.lexsort((-p[:, 1], p[:, 0]))]
    hull: list[np.ndarray] = []
    for q in p:
        if hull and q[0] <= hull[-1][0] + 1e-15:
            continue
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (a[0] - o[0]) * (q[1] - o[1]) - (a[1] - o[1]) * (q[0] - o[0])
            if cross >= -1e-15:
                hull.pop()
            else:
                break
        hull.append(q)
    out = np.array(hull)
    if out[-1, 1] > 0:
        out = np.vstack([out, [xmax, 0.0]])
    return out


def _segment_distance(p: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from each row of ``p`` to the polyline ``poly``."""
    a, b = poly[:-1], poly[1:]
    if len(a) == 0:
        return np.linalg.norm(p - poly[0], axis=1)
    ab = b - a
    L = np.maximum((ab ** 2).sum(axis=1), 1e-30)
    t = np.clip(((p[:, None, :] - a[None]) * ab[None]).sum(axis=2) / L, 0, 1)
    proj = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(p[:, None, :] - proj, axis=2).min(axis=1)


def _densify(poly: np.ndarray, step: float = 1e-4) -> np.ndarray:
    pts = [poly[:1]]
    for a, b in zip(poly[:-1], poly[1:]):
        m = max(int(np.ceil(np.linalg.norm(b - a) / step)), 1)
        t = np.arange(1, m + 1)[:, None] / m
        pts.append(a + t * (b - a))
    return np.vstack(pts)


def hausdorff(poly_a: np.ndarray, poly_b: np.ndarray, step: float = 1e-4) -> float:
    """Hausdorff distance between two polylines (one side sampled at ``step``)."""
    da = _segment_distance(_densify(poly_a, step), poly_b).max()
    db = _segment_distance(_densify(poly_b, step), poly_a).max()
    return float(max(da, db))


def excess_over(points, frontier: np.ndarray) -> float:
    """Largest distance by which any point lies outside the region under ``frontier``."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    if p.size == 0:
        return 0.0
    x, y = frontier[:, 0], frontier[:, 1]
    order = np.argsort(x)
    below = (p[:, 0] <= x.max() + 1e-12) & (p[:, 1] <= np.interp(p[:, 0], x[order], y[order]) + 1e-12)
    d = _segment_distance(p, frontier)
    return float(np.max(np.where(below, 0.0, d)))


def ray_excess(frontier: np.ndarray, target) -> float:
    """Distance beyond ``target`` at which the frontier crosses the ray through it."""
    target = np.asarray(target, dtype=float)
    norm = np.linalg.norm(target)
    u = target / norm
    best = 0.0
    for a, b in zip(frontier[:-1], frontier[1:]):
        # solve s u = a + t (b - a)
        M = np.column_stack([u, a - b])
        if abs(np.linalg.det(M)) < 1e-15:
            continue
        s, t = np.linalg.solve(M, a)
        if -1e-12 <= t <= 1 + 1e-12 and s > 0:
            best = max(best, s)
    return float(best - norm)


# --------------------------------------------------------------------------
# the BSC-family sweep


def default_grid() -> np.ndarray:
    return np.round(np.arange(51) * 0.01, 10)


@dataclass
class SweepResult:
    ch1: DMC
    ch2: DMC
    grid: np.ndarray
    regions: list          # per alpha: {"alpha", variant -> [(orientation, polytope)]}
    frontiers: dict        # name -> polyline (m, 2)
    time_sharing: tuple    # ((C1, 0), (0, C2))

    def vertices(self, variant: str, alpha_index: int, swap: bool = True) -> np.ndarray:
        out = []
        for orient, poly in self.regions[alpha_index][variant]:
            if not swap and orient != 1:
                continue
            if variant == "agg" and not poly.meta.get("degraded"):
                continue
            out.append(poly.vertices)
        return np.vstack(out) if out else np.zeros((0, 2))

    def time_sharing_line(self) -> np.ndarray:
        return np.array([self.time_sharing[1], self.time_sharing[0]], dtype=float)

    def rows(self) -> list[tuple[str, float, float, float]]:
        """Frontier points as (variant, alpha, R1, R2); alpha is the grid point of origin."""
        out = []
        for name, poly in self.frontiers.items():
            src = self.frontier_alpha[name]
            for (r1, r2), a in zip(poly, src):
                out.append((name, a, float(r1), float(r2)))
        return out

    frontier_alpha: dict = field(default_factory=dict)


def _orientation_regions(alpha: float, ch1: DMC, ch2: DMC) -> dict:
    model = bsc_superposition_model(alpha)
    out = {}
    for variant in VARIANTS:
        first = superposition_region(model, ch1, ch2, variant)
        second = superposition_region(model, ch2, ch1, variant).swapped()
        out[variant] = [(1, first), (2, second)]
    return out


def _tag(frontier: np.ndarray, pts: np.ndarray, alphas: np.ndarray) -> list[float]:
    tags = []
    for q in frontier:
        d = np.abs(pts - q).max(axis=1) if len(pts) else np.array([])
        k = int(np.argmin(d)) if d.size else -1
        tags.append(float(alphas[k]) if d.size and d[k] <= 1e-12 else float("nan"))
    return tags


def region_sweep(ch1: DMC, ch2: DMC, grid=None, workers: int = 1) -> SweepResult:
    """Superposition regions of the BSC(alpha) family with uniform X, both variants.

    Frontiers: ``information-theoretic`` (hull over alpha and both user
    orientations), ``information-theoretic-noswap`` (first orientation only)
    and ``agg`` (hull over the orientations that pass the degradation check).
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if ch1.input_alphabet_size != 2 or ch2.input_alphabet_size != 2:
        raise ValueError("the sweep needs binary-input channels")
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            per = list(pool.map(lambda a: _orientation_regions(a, ch1, ch2), grid))
    else:
        per = [_orientation_regions(a, ch1, ch2) for a in grid]
    regions = [{"alpha": float(a), **r} for a, r in zip(grid, per)]
    uniform = bsc_superposition_model(0.5)
    c1 = BroadcastSetup(uniform, ch1, ch2).info("I(X;Y1)")
    c2 = BroadcastSetup(uniform, ch1, ch2).info("I(X;Y2)")
    result = SweepResult(ch1, ch2, grid, regions, {}, ((c1, 0.0), (0.0, c2)))
    specs = {"information-theoretic": ("information-theoretic", True),
             "information-theoretic-noswap": ("information-theoretic", False),
             "agg": ("agg", True)}
    for name, (variant, swap) in specs.items():
        pts, alphas = [], []
        for k, a in enumerate(grid):
            v = result.vertices(variant, k, swap)
            pts.append(v)
            alphas.extend([a] * len(v))
        pts = np.vstack(pts) if pts else np.zeros((0, 2))
        front = upper_frontier(pts)
        result.frontiers[name] = front
        result.frontier_alpha[name] = _tag(front, pts, np.array(alphas))
    return result


def compare_rows(sweep: SweepResult) -> list[tuple[float, float, float, float]]:
    """Per alpha: (alpha, excess of IT over the AGG hull, excess of AGG over the IT hull, gap)."""
    it, agg = sweep.frontiers["information-theoretic"], sweep.frontiers["agg"]
    out = []
    for k, a in enumerate(sweep.grid):
        e1 = excess_over(sweep.vertices("information-theoretic", k), agg)
        e2 = excess_over(sweep.vertices("agg", k), it)
        out.append((float(a), e1, e2, max(e1, e2)))
    return out
