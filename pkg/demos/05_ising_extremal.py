"""Ising limit: counts of K-cluster subsets and the maximally entangled state whose
entropy log(N_(K,ell) + 1) grows like (2K - 1) log(ell)."""
import math

from xxzlab.entanglement import entanglement_entropy
from xxzlab.ising import build_extremal_state, count_closed_form_oracle, count_exact, n_kell

for K in (1, 2, 3):
    row = [count_exact(K, ell) for ell in range(1, 11)]
    assert row == [count_closed_form_oracle(K, ell) for ell in range(1, 11)]
    print(f"P_(K={K}, ell=1..10): {row}")

print("\n K  ell   N     S          S / ((2K-1) log ell)")
for K, ells in ((1, (4, 8, 16, 64)), (2, (6, 10, 16)), (3, (8, 10))):
    for ell in ells:
        N = n_kell(K, ell)
        S = entanglement_entropy(build_extremal_state(K, ell, ell + N), ell, ell + N)
        assert abs(S - math.log(N + 1)) < 1e-10
        print(f"{K:2d} {ell:4d} {N:5d}  {S:.6f}  {S / ((2 * K - 1) * math.log(ell)):.3f}")
