"""Marton code with a common message on a product channel with three input bits.

The input is x = (v, v1, v2).  Receiver l sees v and its own private bit through
independent BSCs.  v1 and v2 are correlated, so user 2's bits act as interference
that the encoder must bin against.
"""
import numpy as np

from polarbc import (AuxiliaryModel, BroadcastSetup, ConstructionParams, Design, SharedRandomness,
                     design_reports, layout_from_reports, make_code, marton_mgp_region)
from polarbc.construction import z_vectors
from polarbc.probability import DMC
from polarbc.simulation import bler_interval, run_broadcast_batch, simulate


def receiver(private_bit: int, p_cloud: float, p_private: float) -> DMC:
    pmf = np.zeros((8, 4))
    for x in range(8):
        a, b = x >> 2 & 1, x >> (2 - private_bit) & 1
        for ya in (0, 1):
            for yb in (0, 1):
                pmf[x, 2 * ya + yb] = ((p_cloud if ya != a else 1 - p_cloud)
                                       * (p_private if yb != b else 1 - p_private))
    return DMC(pmf)


c = 0.13
p3 = np.zeros((2, 2, 2))
for v1 in (0, 1):
    for v2 in (0, 1):
        p3[:, v1, v2] = 0.25 * ((1 - c) if v1 == v2 else c)
model = AuxiliaryModel(3, p3, 8, np.arange(8).reshape(2, 2, 2))
ch1, ch2 = receiver(1, 0.035, 0.01), receiver(2, 0.03, 0.05)
setup = BroadcastSetup(model, ch1, ch2)

region = marton_mgp_region(model, ch1, ch2, with_common=True)
print("Marton-MGP region, bounds on (R0, R1, R2):")
for coeffs, bound in region.inequalities:
    print("  ", np.asarray(coeffs).tolist(), "<=", round(float(bound), 4))

n, k, seed = 256, 3, 4
params = ConstructionParams(n, mc_samples=5000, seed=seed)
reports = design_reports(setup, "marton", params, Design(budget=1e-2), z_vectors(setup, "marton", params))
layout = layout_from_reports("marton", reports, k, common_rate_fraction=0.5)
code = make_code(layout, setup)
sizes = code.payload_sizes()
print("critical set size:", layout.size("Fcr1"))
print("rates (R0, R1, R2):", tuple(round(sizes[u] / (k * n), 4) for u in (0, 1, 2)))

shared = SharedRandomness(seed)
trials = 100
errors = simulate(lambda idx: run_broadcast_batch(code, setup, seed, shared, idx), trials, batch=25)
for user, e in sorted(errors.items()):
    lo, hi = bler_interval(int(e.sum()), trials)
    print(f"user {user}: BLER {e.mean():.3f}  (95% CI {lo:.3f} to {hi:.3f})")
