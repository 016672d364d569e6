"""Entanglement of states in the window [0, E_(K+1) - delta]: random samples and the
uniform extremal candidate, against the Renyi bound and the log-ell reference."""
import math

from xxzlab.entanglement import (chain_window, reduced_density_matrix, renyi_entropy,
                                 sample_subspace_states, theorem6_rhs, von_neumann_entropy)
from xxzlab.hamiltonian import ModelParams, chain_full

L, delta, aniso, alpha = 12, 0.5, 2.0, 0.5
sectors = chain_full(L, ModelParams(aniso))
for K in (1, 2):
    window = chain_window(sectors, K, delta)
    states = sample_subspace_states(window, 200, seed=5)
    print(f"K={K}: window rank {window.rank}")
    for ell in (3, 4, 5, 6):
        ents = []
        for psi in states:
            rho = reduced_density_matrix(psi, ell, L)
            ents.append((von_neumann_entropy(rho), renyi_entropy(rho, alpha)))
        vn = max(e[0] for e in ents)
        ren = max(e[1] for e in ents)
        print(f"    ell={ell}  max S={vn:.3f}  S/log(ell)={vn / math.log(ell):.3f}  "
              f"max S_alpha={ren:.3f} <= {theorem6_rhs(alpha, K, ell, delta, aniso):.1f}")
