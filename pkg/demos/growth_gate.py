"""Sphere-growth gate on trees, then the full pipeline on the passing one.

A binary tree has exponentially growing spheres and fails the moderate-growth
check no matter how localized the states are. A tree whose generation sizes
grow polynomially passes, and every diagnostic downstream of the gate runs
through on it.
"""

import numpy as np

import loclab as ll

DEPTH = 10

n_bin, bin_edges = ll.binary_tree_edges(DEPTH)
bin_space = ll.graph_space(n_bin, bin_edges)
bin_profile = ll.sphere_census(bin_space, 0, DEPTH)

n_poly, poly_edges = ll.polynomial_tree_edges(DEPTH)
poly_space = ll.graph_space(n_poly, poly_edges)
poly_profile = ll.sphere_census(poly_space, 0, DEPTH)

print(f"{'graph':>16} {'sites':>7} {'beta fit':>10} {'beta envelope':>14} {'gate':>6}")
for name, prof, n in (("binary tree", bin_profile, n_bin),
                      ("quadratic tree", poly_profile, n_poly)):
    verdict = "pass" if prof.passes_moderate_growth else "FAIL"
    print(f"{name:>16} {n:>7} {prof.beta_fit:>10.4f} "
          f"{prof.beta_envelope:>14.4f} {verdict:>6}")
print()
print("sphere counts by radius:")
print(f"  binary    {[int(c) for c in bin_profile.sphere_counts[:8]]} ...")
print(f"  quadratic {[int(c) for c in poly_profile.sphere_counts[:8]]} ...")
print()

# the failing graph stops here; the passing one supports the whole chain
print(f"running diagnostics on the quadratic tree ({n_poly} sites)")
sd = ll.group_projectors(ll.diagonalize(ll.build_anderson(poly_space, W=4.0, seed=2)))
window = ll.full_window(sd)
params = ll.DecayParams(sigma=0.1, zeta=1.0, gamma=0.5)
weight = ll.build_weight(poly_space, kind="polynomial", kappa=1.0)

sule = ll.sule_fit(sd, window, params, zeta_grid=(1.0,))
print(f"  eigenvector envelope : rate {sule.fit.sigma_hat:.4f}, "
      f"violations {sule.fit.violations}")

sudec = ll.sudec_check(sd, window, params, weight, zeta_grid=(1.0,))
print(f"  pair decay           : rate {sudec.fit.sigma_hat:.4f}, "
      f"violations {sudec.fit.violations}")

ledger = ll.ak_ledger(sd, window, 0, params)
print(f"  mass ledger          : max |row sum - 1| = "
      f"{np.abs(ledger.row_sums - 1.0).max():.2e}")

kern = ll.kernel_interpolation_check(sd, window, 0, params,
                                     times=np.linspace(0.0, 100.0, 401),
                                     ledger=ledger)
print(f"  kernel interpolation : violations {kern.violations}, "
      f"holder max {kern.holder_max:.4f}")

census = ll.center_census(sd, window, weight)
print(f"  center census        : ordering constant {census.ordering_constant:.4f}, "
      f"verdict {census.verdict_ordering}")
