"""Show the constant-magnetic-field obstruction numerically.

Lowest-band states on the plane concentrate on rings of radius sqrt(2n/B).
The product of two opposite-center amplitudes decays only polynomially once
the Gaussian tails cancel, so the required pair constant blows up with the
level index.  The script tabulates the products two ways (direct amplitudes
and a log-domain evaluation), then sweeps the decay rate to show where the
required-to-allowed ratio crosses a large threshold.
"""

import math

import loclab as ll

B = 1.0
THRESHOLD = 1e6

print(f"{'n':>6} {'product':>14} {'via logs':>14} {'scaled':>10} {'peak radius':>12}")
for n in (1, 2, 5, 10, 20, 50, 100, 200):
    direct, via_logs = ll.landau_opposite_product(n, b_field=B)
    # product * 2*pi*sqrt(2*pi*n) -> 1 as n grows (Stirling)
    scaled = direct * 2.0 * math.pi * math.sqrt(2.0 * math.pi * n)
    print(f"{n:>6} {direct:>14.6e} {via_logs:>14.6e} {scaled:>10.6f} "
          f"{ll.landau_peak_radius(n, b_field=B):>12.4f}")
print()

for sigma in (0.1, 0.5, 1.0):
    params = ll.DecayParams(sigma=sigma, zeta=1.0)
    v = ll.landau_sudec_violation(params, b_field=B, n_max=10000, threshold=THRESHOLD)
    if v.n_star is None:
        print(f"sigma = {sigma:4.1f}: ratio stays below {THRESHOLD:.0e} up to n = 10000")
        continue
    print(f"sigma = {sigma:4.1f}: required/allowed ratio first exceeds "
          f"{THRESHOLD:.0e} at n = {v.n_star} "
          f"(ratio there = {v.ratio_at_n_star:.3e}, "
          f"separation = {v.separations[list(v.levels).index(v.n_star)]:.2f})")
print()
print("any fixed exponential budget loses to the polynomial product decay;")
print("larger sigma only moves the crossing earlier.")
