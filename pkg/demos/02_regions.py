"""Superposition regions on a BSC/BEC pair: the information-theoretic region against the AGG region."""
import numpy as np

from polarbc import bec, bsc, bsc_superposition_model, corner_points, superposition_region
from polarbc.regions import hausdorff, ray_excess, region_sweep, superposition_info
from polarbc.probability import BroadcastSetup

# One auxiliary choice, the region it yields and its corners.
model = bsc_superposition_model(0.1)
region = superposition_region(model, bsc(0.11), bec(0.2))
print("shape:", region.shape)
print("vertices (R1, R2):\n", np.round(region.vertices, 4))
shape, corners = corner_points("superposition", superposition_info(BroadcastSetup(model, bsc(0.11), bec(0.2))))
print("corner points:", shape, [tuple(round(v, 4) for v in c.as_tuple()) for c in corners])

# Sweep alpha and compare the two frontiers for two erasure probabilities.
for eps in (0.2, 0.4):
    sweep = region_sweep(bsc(0.11), bec(eps))
    it, agg = sweep.frontiers["information-theoretic"], sweep.frontiers["agg"]
    mid = sweep.time_sharing_line().mean(axis=0)
    print(f"\nBEC({eps}): Hausdorff(IT, AGG) = {hausdorff(it, agg):.2e}")
    print(f"  gain over time sharing at the midpoint ray: IT {ray_excess(it, mid):.4f}, "
          f"AGG {ray_excess(agg, mid):.4f}")
