"""Compare plus-form constants across eigenbasis choices on cluster pairs.

Two far-apart copies of a small cluster give doubly degenerate levels. Within
each degenerate pair the eigenbasis is free: the blockwise basis keeps one
vector per copy, a rotation mixes the copies. The grouped plus-form constants
ignore that choice, while a basis that mixes copies drags per-vector centers
around. The sweep shows the grouped numbers frozen as the separation grows
and the naive single-vector constant growing linearly.
"""

import argparse

import loclab as ll


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--copies", type=int, default=2)
    ap.add_argument("--base-length", type=int, default=4)
    ap.add_argument("--separations", type=int, nargs="+", default=[10, 20, 40, 80])
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--kappa", type=float, default=1.0)
    args = ap.parse_args()

    base = ll.lattice_box(1, args.base_length)
    params = ll.DecayParams(sigma=0.1, zeta=1.0)
    comp = ll.cluster_suleplus_violation(
        base, args.copies, args.separations, params,
        kappa=args.kappa, delta=args.delta)

    print(f"{args.copies} copies of a {args.base_length}-site chain, "
          f"delta = {args.delta}")
    print()
    head = (f"{'D':>6} {'block c_log':>12} {'rotated req':>12} "
            f"{'projector req':>14} {'C_delta':>10}")
    print(head)
    for i, d in enumerate(comp.d_values):
        print(f"{d:>6} {comp.blockwise_c_log[i]:>12.5f} "
              f"{comp.rotated_required_log[i]:>12.5f} "
              f"{comp.projector_required_log[i]:>14.5f} "
              f"{comp.c_delta[i]:>10.2f}")
    print()

    spread = max(comp.blockwise_c_log) - min(comp.blockwise_c_log)
    print(f"blockwise log-constant spread over the sweep: {spread:.2e} "
          f"({'flat' if comp.blockwise_invariant else 'NOT flat'})")
    print(f"rotated-basis requirement monotone in D: {comp.rotated_monotone}")
    print(f"projector requirement tracks it:          {comp.projector_monotone}")
    print(f"C_delta grows with separation:            {comp.c_delta_monotone}")
    print()
    print("grouped constants never see the rotation; per-vector constants pay")
    print("for the separation as soon as the basis mixes the two copies.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
