"""Random fields: the low-field construction with entropy log M and its rejection
rate, then Monte-Carlo moments of the number of K-cluster subsets of a random set."""
import math

import numpy as np

from xxzlab.entanglement import entanglement_entropy
from xxzlab.ising import DisorderModel, build_disordered_state, q_moments_mc, rejection_rates

model, K, delta0 = DisorderModel("uniform"), 2, 1.8
a = 0.9 * model.cdf(delta0 / K)
rng = np.random.default_rng(6)
ell, L = 40, 80
res = build_disordered_state(model.sample(rng, L), K, delta0, ell, L, a)
if res.accepted:
    print(f"ell={ell}: M={res.M}, S={entanglement_entropy(res.state, ell, L):.6f}, log M={math.log(res.M):.6f}")
rates = rejection_rates(model, K, delta0, [20, 40, 80], 100, 5, seed=6)
print("median rejection:", {k: float(np.median(v)) for k, v in rates.items()})

print("\n K  ell   mean       exact      z      Var/ell^(2K-1)")
for K, ell in ((1, 50), (2, 25), (2, 50), (2, 100)):
    m = q_moments_mc(K, ell, 0.5, 50_000, seed=7)
    print(f"{K:2d} {ell:4d}  {m.mean:9.3f}  {m.exact_mean:9.3f}  {m.z_score:+.2f}  {m.var_over(ell, K):.4f}")
