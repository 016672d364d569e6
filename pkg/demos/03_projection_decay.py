"""Spectral projection below the (K+1)-cluster threshold is small on configurations
with more than K clusters, decaying in their distance to K-cluster configurations."""
import numpy as np

from xxzlab.hamiltonian import ModelParams, chain_sector, threshold_energy
from xxzlab.spectral import chain_decay_constants, eigendecompose, verify_projection_decay

L, N, K, delta, aniso = 12, 4, 1, 0.1, 2.0
rng = np.random.default_rng(3)
for label, V in (("V = 0", np.zeros(L)), ("V random", 0.05 * rng.random(L))):
    sector = chain_sector(L, N, ModelParams.chain_field(aniso, V))
    spec = eigendecompose(sector)
    rank = spec.window(0.0, threshold_energy(K + 1, aniso) - delta).shape[1]
    chk = verify_projection_decay(sector, K, delta, spec=spec)
    lhs, rhs, d = (np.ravel(x) for x in (chk.lhs, chk.rhs, chk.dist))
    print(f"{label}: window rank {rank}, {len(lhs)} configurations with cl > {K}, violations {chk.violations}")
    for dist in np.unique(d)[:6]:
        sel = d == dist
        print(f"    d={int(dist)}  max ||chi_X Q|| = {lhs[sel].max():.2e}  bound {rhs[sel].min():.2e}")
C3, mu3 = chain_decay_constants(K, delta, aniso)
print(f"C3={C3:.1f}  mu3={mu3:.4f}")
