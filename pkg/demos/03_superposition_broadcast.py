"""Chained superposition code over BSC(0.05)/BSC(0.2) and its simulated block error rate."""
import numpy as np

from polarbc import (BroadcastSetup, ConstructionParams, Design, SharedRandomness, SuperpositionCode,
                     bsc, bsc_superposition_model, design_reports, layout_from_reports)
from polarbc.construction import choose_corner, z_vectors
from polarbc.simulation import bler_interval, run_broadcast_batch, simulate

n, k, seed = 512, 4, 8
setup = BroadcastSetup(bsc_superposition_model(0.1), bsc(0.05), bsc(0.2))
params = ConstructionParams(n, mc_samples=20_000, seed=seed)

z = z_vectors(setup, "superposition", params)
corner = choose_corner(design_reports(setup, "superposition", params, Design(budget=1e-2), z))
reports = design_reports(setup, "superposition", params, Design(budget=1e-2, backoff=0.1), z)
layout = layout_from_reports("superposition", reports, k, target_corner=corner)
print("corner:", corner)
print("set sizes:", {name: int(s.size) for name, s in layout.sets.items() if s.size})

code = SuperpositionCode(layout, setup)
rates = {u: size / (k * n) for u, size in code.payload_sizes().items()}
print("rates:", {u: round(r, 4) for u, r in rates.items()})

# One noiseless round trip, then a Monte-Carlo BLER estimate.
shared = SharedRandomness(seed)
rng = np.random.default_rng(0)
m1, m2 = (rng.integers(0, 2, code.payload_sizes()[u], dtype=np.uint8) for u in (1, 2))
x = code.encode(m1, m2, shared)
print("noiseless decode:", np.array_equal(code.decode(1, x, shared), m1),
      np.array_equal(code.decode(2, x, shared), m2))

trials = 200
errors = simulate(lambda idx: run_broadcast_batch(code, setup, seed, shared, idx), trials, batch=50)
for user, e in sorted(errors.items()):
    lo, hi = bler_interval(int(e.sum()), trials)
    print(f"user {user}: BLER {e.mean():.3f}  (95% CI {lo:.3f} to {hi:.3f})")
