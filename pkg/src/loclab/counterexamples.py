"""Boundary cases where pointwise eigenfunction bounds fail but summed ones hold.

Two families.  The Landau lowest level has radial states whose peak products
decay too slowly for any uniform pairwise pointwise bound once the
subexponential factor is added in.  Cluster direct sums show that pointwise
constants depend on the eigenbasis chosen inside degenerate subspaces while
projector-level quantities do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .diagnostics import (
    DecayFit,
    center_cluster_check,
    rotate_group,
    sudec_check,
    sudec_plus_check,
    sule_fit,
)
from .dynamics import DecayParams, full_window
from .geometry import SiteSpace
from .operators import Hamiltonian, OperatorError, build_weight
from .spectral import SpectralData, group_projectors

__all__ = [
    "landau_amplitude",
    "landau_peak_radius",
    "landau_opposite_product",
    "landau_norm_quadrature",
    "LandauViolation",
    "landau_sudec_violation",
    "blockwise_spectral",
    "mixing_matrix",
    "rotate_cluster_basis",
    "ClusterComparison",
    "cluster_suleplus_violation",
]

TWO_PI = 2.0 * math.pi


# -- Landau lowest level ------------------------------------------------------
#
# Radial gauge states of the lowest level at field strength B:
#
#     |phi_n(z)| = (B^n / (2 pi 2^n n!))^(1/2) |z|^n exp(-B |z|^2 / 4)
#
# All computations run through logarithms; n in the tens of thousands is fine.


def landau_amplitude(n: int, radius: float, b_field: float = 1.0) -> float:
    """Modulus of the n-th radial lowest-level state at distance ``radius``."""
    if n < 0 or b_field <= 0 or radius < 0:
        raise ValueError("need n >= 0, radius >= 0 and a positive field")
    log_c = 0.5 * (n * math.log(b_field) - n * math.log(2.0) - math.log(TWO_PI)
                   - gammaln(n + 1))
    if radius == 0.0:
        return math.exp(log_c) if n == 0 else 0.0
    return math.exp(log_c + n * math.log(radius) - b_field * radius ** 2 / 4.0)


def landau_peak_radius(n: int, b_field: float = 1.0) -> float:
    """Radius maximizing the n-th radial amplitude: sqrt(2 n / B)."""
    return math.sqrt(2.0 * n / b_field)


def landau_opposite_product(n: int, b_field: float = 1.0) -> tuple[float, float]:
    """Amplitude product at two opposite peak points, direct and closed form.

    The closed form ``n^n e^{-n} / (2 pi n!)`` is independent of the field
    strength; the direct evaluation goes through ``landau_amplitude`` and the
    two must agree to rounding.
    """
    r = landau_peak_radius(n, b_field)
    direct = landau_amplitude(n, r, b_field) * landau_amplitude(n, r, b_field)
    if n == 0:
        closed = 1.0 / TWO_PI
    else:
        closed = math.exp(n * math.log(n) - n - math.log(TWO_PI) - gammaln(n + 1))
    return direct, closed


def landau_norm_quadrature(n: int, b_field: float = 1.0) -> float:
    """Planar L2 norm squared of the n-th radial state, by quadrature.

    Equals ``1 / B`` for the normalization used here, so exactly 1 at B = 1.
    """
    upper = landau_peak_radius(max(n, 1), b_field) + 40.0 / math.sqrt(b_field)
    val, _ = quad(lambda r: TWO_PI * r * landau_amplitude(n, r, b_field) ** 2,
                  0.0, upper, limit=200)
    return val


@dataclass(frozen=True)
class LandauViolation:
    """Growth record of the pairwise bound violation across the lowest level.

    ``ratios[i]`` is the product of opposite-peak amplitudes of state
    ``levels[i]`` multiplied by the subexponential factor at their separation;
    a uniform pairwise pointwise bound would keep it bounded.  ``n_star`` is
    the first level pushing it beyond ``threshold``.
    """

    b_field: float
    params: DecayParams
    threshold: float
    levels: np.ndarray
    separations: np.ndarray
    log_products: np.ndarray
    log_ratios: np.ndarray
    n_star: int | None
    ratio_at_n_star: float | None
    scaled_products: np.ndarray


def landau_sudec_violation(params: DecayParams, b_field: float = 1.0,
                           n_max: int = 10 ** 4, threshold: float = 1e6) -> LandauViolation:
    ns = np.arange(1, n_max + 1, dtype=float)
    log_prod = ns * np.log(ns) - ns - math.log(TWO_PI) - gammaln(ns + 1)
    sep = 2.0 * np.sqrt(2.0 * ns / b_field)
    log_ratio = log_prod + params.sigma * sep ** params.zeta
    hits = np.flatnonzero(log_ratio > math.log(threshold))
    n_star = int(ns[hits[0]]) if len(hits) else None
    ratio = float(np.exp(min(log_ratio[hits[0]], 700.0))) if len(hits) else None
    scaled = np.exp(log_prod) * TWO_PI * np.sqrt(TWO_PI * ns)
    return LandauViolation(
        b_field=b_field,
        params=params,
        threshold=threshold,
        levels=ns.astype(int),
        separations=sep,
        log_products=log_prod,
        log_ratios=log_ratio,
        n_star=n_star,
        ratio_at_n_star=ratio,
        scaled_products=scaled,
    )


# -- cluster direct sums ------------------------------------------------------


def blockwise_spectral(ham: Hamiltonian, energy_tol: float | None = None) -> SpectralData:
    """Diagonalize a cluster Hamiltonian one copy at a time.

    All copies share the same block matrix, so a single dense solve is
    embedded ``J`` times.  Every eigenvector is supported inside one copy;
    equal copy energies land in one degenerate group.
    """
    blocks = ham.params.get("blocks")
    if not blocks:
        raise OperatorError("not a cluster operator: no block table in params")
    lo0, hi0 = blocks[0]
    m = hi0 - lo0
    dense = ham.dense()
    block = dense[lo0:hi0, lo0:hi0]
    for lo, hi in blocks[1:]:
        if hi - lo != m or not np.array_equal(dense[lo:hi, lo:hi], block):
            raise OperatorError("cluster copies are not identical blocks")
    evals, evecs = np.linalg.eigh(block)
    for k in range(m):
        j = int(np.argmax(np.abs(evecs[:, k])))
        if evecs[j, k] < 0:
            evecs[:, k] = -evecs[:, k]

    n = ham.n
    all_vals = np.concatenate([evals for _ in blocks])
    all_vecs = np.zeros((n, n))
    for c, (lo, hi) in enumerate(blocks):
        all_vecs[lo:hi, c * m:(c + 1) * m] = evecs
    order = np.argsort(all_vals, kind="stable")
    all_vals = all_vals[order]
    all_vecs = all_vecs[:, order]

    resid = float(np.max(np.abs(dense @ all_vecs - all_vecs * all_vals)))
    hnorm = float(np.max(np.sum(np.abs(dense), axis=1)))
    sd = SpectralData(
        space=ham.space,
        eigenvalues=all_vals,
        eigenvectors=all_vecs,
        residual=resid,
        hnorm=hnorm,
        groups=None,
        provenance={"label": ham.label, "dimension": ham.n, "method": "blockwise"},
    )
    return group_projectors(sd, tol=energy_tol)


def mixing_matrix(copies: int) -> np.ndarray:
    """Orthogonal matrix whose first column is the uniform superposition.

    Householder reflection sending the first coordinate vector to
    ``ones / sqrt(J)``; for two copies this is the Hadamard rotation.
    """
    if copies < 2:
        raise ValueError("mixing needs at least two copies")
    e1 = np.zeros(copies)
    e1[0] = 1.0
    target = np.full(copies, 1.0 / math.sqrt(copies))
    v = e1 - target
    return np.eye(copies) - 2.0 * np.outer(v, v) / float(v @ v)


def rotate_cluster_basis(sd: SpectralData, copies: int) -> SpectralData:
    """Mix every exactly degenerate cross-copy group by the uniform rotation."""
    data = sd if sd.groups is not None else group_projectors(sd)
    q = mixing_matrix(copies)
    out = data
    for gi, g in enumerate(data.groups):
        if g.multiplicity == copies:
            out = rotate_group(out, gi, q)
    return out


@dataclass(frozen=True)
class ClusterComparison:
    """Constants of the same checks across growing copy separations.

    Blockwise rows must not move with the separation; rotated-basis and
    projector-level required constants must grow, as must the center spread.
    """

    d_values: tuple[int, ...]
    copies: int
    params: DecayParams
    delta: float
    blockwise_sigma: tuple[float, ...]
    blockwise_c_log: tuple[float, ...]
    rotated_required_log: tuple[float, ...]
    projector_required_log: tuple[float, ...]
    c_delta: tuple[float, ...]
    blockwise_invariant: bool
    rotated_monotone: bool
    projector_monotone: bool
    c_delta_monotone: bool
    blockwise_fits: tuple[DecayFit, ...]


def cluster_suleplus_violation(base: SiteSpace, copies: int, d_values,
                               params: DecayParams, kappa: float,
                               delta: float) -> ClusterComparison:
    from .operators import build_cluster_laplacian

    b_sigma, b_clog, rot_req, proj_req, cds, fits = [], [], [], [], [], []
    for d_sep in d_values:
        ham = build_cluster_laplacian(base, copies, int(d_sep))
        sd = blockwise_spectral(ham)
        window = full_window(sd)
        weight = build_weight(ham.space, "polynomial", kappa=kappa)

        sule = sule_fit(sd, window, params, zeta_grid=(params.zeta,))
        b_sigma.append(sule.fit.sigma_hat)
        b_clog.append(sule.fit.c_hat_log)
        fits.append(sule.fit)

        rotated = rotate_cluster_basis(sd, copies)
        rot = sudec_check(rotated, window, params, weight, zeta_grid=(params.zeta,))
        rot_req.append(rot.required_c_log)

        worst_plus = -np.inf
        worst_cd = 0.0
        for gi, g in enumerate(sd.groups):
            if g.multiplicity == copies:
                plus = sudec_plus_check(sd, window, gi, params, weight,
                                        zeta_grid=(params.zeta,))
                worst_plus = max(worst_plus, plus.pair_required_c_log)
                cd = center_cluster_check(sd, gi, delta)
                worst_cd = max(worst_cd, cd.c_delta)
        proj_req.append(worst_plus)
        cds.append(worst_cd)

    def nondecreasing(xs, slack=1e-9):
        return all(b >= a - slack for a, b in zip(xs, xs[1:]))

    spread_c = max(b_clog) - min(b_clog)
    spread_s = max(b_sigma) - min(b_sigma)
    return ClusterComparison(
        d_values=tuple(int(d) for d in d_values),
        copies=copies,
        params=params,
        delta=delta,
        blockwise_sigma=tuple(b_sigma),
        blockwise_c_log=tuple(b_clog),
        rotated_required_log=tuple(rot_req),
        projector_required_log=tuple(proj_req),
        c_delta=tuple(cds),
        blockwise_invariant=bool(spread_c <= 1e-9 and spread_s <= 1e-9),
        rotated_monotone=nondecreasing(rot_req),
        projector_monotone=nondecreasing(proj_req),
        c_delta_monotone=nondecreasing(cds),
        blockwise_fits=tuple(fits),
    )
