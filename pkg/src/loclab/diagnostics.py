"""Localization diagnostics: certified decay envelopes and projector ledgers.

Every envelope here is a majorant, not a regression: the constant is anchored
at the allowance-adjusted peak of the data and the rate is the largest one
that leaves zero violations.  Checks therefore certify inequalities on the
sampled data rather than fitting through its middle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .dynamics import DecayParams, EnergyWindow, default_time_grid, evolved_state, liminf_cesaro
from .operators import WeightOperator
from .spectral import (
    ProjectorGroup,
    SpectralData,
    group_column,
    group_projectors,
    group_row_norms,
)

__all__ = [
    "DiagnosticsError",
    "DecayFit",
    "fit_certified_envelope",
    "array_batches",
    "required_constant",
    "SulpProfile",
    "sulp_profile",
    "ProjectorMassLedger",
    "ak_ledger",
    "KernelInterpolation",
    "kernel_interpolation_check",
    "LocalizationCenter",
    "localization_centers",
    "SuleFit",
    "sule_fit",
    "SudecResult",
    "sudec_check",
    "SudecPlusResult",
    "sudec_plus_check",
    "AlphaCenterResult",
    "alpha_center_bound",
    "CenterClusterResult",
    "center_cluster_check",
    "CenterCensus",
    "center_census",
    "MixedExponentResult",
    "mixed_exponent_check",
    "random_orthogonal",
    "random_rotations",
    "rotate_group",
]

ZETA_GRID = (0.25, 0.5, 0.75, 1.0)
EPS_GRID = (0.0, 0.1, 0.5, 1.0)
SIGMA_CAP = 50.0
PAIR_LIMIT = 10 ** 6


class DiagnosticsError(ValueError):
    """Invalid diagnostic request."""


# -- certified envelope fitting ----------------------------------------------
#
# Data rows are (value, distance, log allowance, center size).  The bound is
#
#     value <= C * allowance * exp(eps * center**zeta_eps) * exp(-sigma * distance**zeta)
#
# log C is anchored at the maximum of log(value/allowance) - eps*center**zeta_eps,
# which is the smallest constant the data admits at sigma = 0; sigma is then
# the largest rate with zero violations at that constant.


@dataclass(frozen=True)
class DecayFit:
    """Certified decay envelope over a point cloud."""

    zeta_hat: float
    sigma_hat: float
    epsilon_hat: float
    c_hat: float
    c_hat_log: float
    r2: float
    verdict: bool
    sigma_min: float
    n_points: int
    violations: int
    per_zeta: tuple[dict, ...]
    worst: dict | None


def array_batches(values, distances, log_allowances=None, center_sizes=None, ids=None):
    """Wrap in-memory arrays as a reiterable batch source for the fitter."""
    values = np.asarray(values, dtype=float)
    distances = np.asarray(distances, dtype=float)
    la = np.zeros_like(values) if log_allowances is None else np.broadcast_to(
        np.asarray(log_allowances, dtype=float), values.shape)
    cs = np.zeros_like(values) if center_sizes is None else np.broadcast_to(
        np.asarray(center_sizes, dtype=float), values.shape)

    def batches():
        yield values, distances, la, cs, ids

    return batches


def _pick_ids(ids, flat_index: int) -> tuple:
    out = []
    for col in ids:
        if col is None:
            out.append(None)
        elif np.ndim(col):
            out.append(int(np.asarray(col).ravel()[flat_index]))
        else:
            out.append(int(col))
    return tuple(out)


def _combo_logv(values, log_allow, centers, eps, zeta_eps):
    with np.errstate(divide="ignore"):
        logv = np.log(values)
    out = logv - log_allow
    if eps != 0.0:
        out = out - eps * centers ** zeta_eps
    return out


def fit_certified_envelope(batches_fn, *, zeta_grid=ZETA_GRID, eps_grid=(0.0,),
                           eps_exponent=None, sigma_min=0.01,
                           sigma_cap=SIGMA_CAP) -> DecayFit:
    """Fit the certified envelope over all rows produced by ``batches_fn``.

    ``batches_fn()`` must be callable repeatedly and yield tuples
    ``(values, distances, log_allowances, center_sizes, ids)``.  The rate is
    maximized per ``zeta``; among rates the report keeps the lexicographic
    best ``(sigma, zeta, -epsilon, -C)``.  Zero-valued rows satisfy any bound
    and are skipped.
    """
    combos = [(z, e) for z in zeta_grid for e in eps_grid]

    c0 = {ce: -np.inf for ce in combos}
    n_points = 0
    for values, dist, la, cs, _ in batches_fn():
        pos = values > 0.0
        n_points += int(pos.sum())
        if not pos.any():
            continue
        v, a, c = values[pos], la[pos], cs[pos]
        for z, e in combos:
            ze = eps_exponent if eps_exponent is not None else z
            logv = _combo_logv(v, a, c, e, ze)
            m = float(logv.max())
            if m > c0[(z, e)]:
                c0[(z, e)] = m

    sigma = {ce: np.inf for ce in combos}
    worst = {ce: None for ce in combos}
    sum_logv = 0.0
    sum_logv2 = 0.0
    for values, dist, la, cs, ids in batches_fn():
        pos = values > 0.0
        if not pos.any():
            continue
        v, r, a, c = values[pos], dist[pos], la[pos], cs[pos]
        with np.errstate(divide="ignore"):
            lv = np.log(v)
        sum_logv += float(lv.sum())
        sum_logv2 += float((lv * lv).sum())
        away = r > 0.0
        if not away.any():
            continue
        for z, e in combos:
            ze = eps_exponent if eps_exponent is not None else z
            logv = _combo_logv(v[away], a[away], c[away], e, ze)
            ratios = (c0[(z, e)] - logv) / r[away] ** z
            k = int(np.argmin(ratios))
            val = float(ratios[k])
            if val < sigma[(z, e)]:
                sigma[(z, e)] = val
                row = {"value": float(v[away][k]), "distance": float(r[away][k])}
                if ids is not None:
                    sel = np.flatnonzero(pos)[np.flatnonzero(away)[k]]
                    row["ids"] = _pick_ids(ids, sel)
                worst[(z, e)] = row

    per_zeta = []
    for z in zeta_grid:
        entries = []
        for e in eps_grid:
            s = sigma[(z, e)]
            s = sigma_cap if not np.isfinite(s) else max(min(s, sigma_cap), 0.0)
            entries.append({"zeta": z, "sigma": s, "epsilon": e,
                            "c_log": c0[(z, e)], "c": float(np.exp(min(c0[(z, e)], 700.0)))})
        entries.sort(key=lambda d: (-d["sigma"], d["epsilon"], d["c_log"]))
        per_zeta.append(entries[0])

    best = sorted(per_zeta, key=lambda d: (-d["sigma"], -d["zeta"], d["epsilon"], d["c_log"]))[0]
    z_hat, s_hat, e_hat, c_log = best["zeta"], best["sigma"], best["epsilon"], best["c_log"]
    ze_hat = eps_exponent if eps_exponent is not None else z_hat

    violations = 0
    ssr = 0.0
    for values, dist, la, cs, _ in batches_fn():
        pos = values > 0.0
        if not pos.any():
            continue
        v, r, a, c = values[pos], dist[pos], la[pos], cs[pos]
        with np.errstate(divide="ignore"):
            lv = np.log(v)
        pred = c_log + a + e_hat * c ** ze_hat - s_hat * r ** z_hat
        violations += int((lv > pred + 1e-9).sum())
        ssr += float(((lv - pred) ** 2).sum())

    if n_points > 1:
        sst = sum_logv2 - sum_logv ** 2 / n_points
        r2 = 1.0 - ssr / sst if sst > 0 else 0.0
    else:
        r2 = 0.0

    return DecayFit(
        zeta_hat=z_hat,
        sigma_hat=s_hat,
        epsilon_hat=e_hat,
        c_hat=float(np.exp(min(c_log, 700.0))),
        c_hat_log=float(c_log),
        r2=float(r2),
        verdict=bool(s_hat >= sigma_min),
        sigma_min=sigma_min,
        n_points=n_points,
        violations=violations,
        per_zeta=tuple(per_zeta),
        worst=worst[(z_hat, e_hat)],
    )


def required_constant(batches_fn, sigma: float, zeta: float, epsilon: float = 0.0,
                      eps_exponent: float | None = None) -> tuple[float, float, dict | None]:
    """Smallest constant making the envelope hold at the given parameters.

    Returns ``(C, log C, worst_row)``; the log value stays meaningful when the
    constant overflows the float range.
    """
    ze = eps_exponent if eps_exponent is not None else zeta
    best = -np.inf
    worst = None
    for values, dist, la, cs, ids in batches_fn():
        pos = values > 0.0
        if not pos.any():
            continue
        v, r, a, c = values[pos], dist[pos], la[pos], cs[pos]
        need = _combo_logv(v, a, c, epsilon, ze) + sigma * r ** zeta
        k = int(np.argmax(need))
        if float(need[k]) > best:
            best = float(need[k])
            worst = {"value": float(v[k]), "distance": float(r[k])}
            if ids is not None:
                worst["ids"] = _pick_ids(ids, int(np.flatnonzero(pos)[k]))
    if not np.isfinite(best):
        return 0.0, -np.inf, None
    return float(np.exp(min(best, 700.0))), best, worst


# -- shared helpers -----------------------------------------------------------


def _grouped(sd: SpectralData) -> SpectralData:
    return sd if sd.groups is not None else group_projectors(sd)


def _selection(sd: SpectralData, window: EnergyWindow, selection) -> list[int]:
    if selection is not None:
        return [int(i) for i in selection]
    return [int(i) for i in window.support]


def _origin_index(sd: SpectralData, origin, weight: WeightOperator | None) -> int:
    if origin is not None:
        return sd.space.index_of(origin)
    if weight is not None:
        return weight.base_index
    return sd.space.origin_index


def _distance_matrix(space) -> np.ndarray:
    rows = [space.distances_from(i) for i in range(space.n_sites)]
    return np.stack(rows).astype(float)


def _window_group_ids(data: SpectralData, window: EnergyWindow) -> list[int]:
    out = []
    for gi, g in enumerate(data.groups):
        if float(max(window.chi_values[list(g.indices)])) > 0.0:
            out.append(gi)
    return out


def _group_chi(window: EnergyWindow, g: ProjectorGroup) -> float:
    return float(max(window.chi_values[list(g.indices)]))


# -- SULP profile -------------------------------------------------------------


@dataclass(frozen=True)
class SulpProfile:
    """Uniform projector kernel profile and its square-summed weight.

    ``profile[x] = sup_k chi(E_k) |chi_x P_k chi_u|_2`` over window groups,
    ``l_value = sum_x exp(sigma d^zeta) profile^2``.  The envelope relates the
    profile to the exact time-averaged moment limit with decay rate
    ``sigma_hat / 2``.
    """

    u_index: int
    profile: np.ndarray
    l_value: float
    liminf: float
    fit: DecayFit
    sigma_hat: float
    theorem_c: float
    theorem_c_log: float


def _sulp_arrays(data: SpectralData, window: EnergyWindow, ui: int,
                 params: DecayParams) -> tuple[np.ndarray, float]:
    profile = np.zeros(data.space.n_sites)
    for gi in _window_group_ids(data, window):
        g = data.groups[gi]
        chi_g = _group_chi(window, g)
        np.maximum(profile, chi_g * np.abs(group_column(data, g, ui)), out=profile)
    r = data.space.distances_from(ui).astype(float)
    with np.errstate(divide="ignore"):
        terms = params.sigma * r ** params.zeta + 2.0 * np.log(profile)
    finite = terms[np.isfinite(terms)]
    l_value = float(np.exp(logsumexp(finite))) if len(finite) else 0.0
    return profile, l_value


def sulp_profile(sd: SpectralData, window: EnergyWindow, u, params: DecayParams) -> SulpProfile:
    data = _grouped(sd)
    ui = data.space.index_of(u)
    profile, l_value = _sulp_arrays(data, window, ui, params)
    liminf = liminf_cesaro(data, window, u, params)
    r = data.space.distances_from(ui).astype(float)
    allowance = 0.5 * math.log(liminf) if liminf > 0 else 0.0
    batches = array_batches(profile, r, log_allowances=np.full_like(r, allowance))
    fit = fit_certified_envelope(batches, zeta_grid=(params.zeta,), eps_grid=(0.0,),
                                 sigma_min=0.0)
    theorem_c, theorem_c_log, _ = required_constant(batches, params.sigma / 2.0, params.zeta)
    return SulpProfile(
        u_index=ui,
        profile=profile,
        l_value=l_value,
        liminf=liminf,
        fit=fit,
        sigma_hat=2.0 * fit.sigma_hat,
        theorem_c=theorem_c,
        theorem_c_log=theorem_c_log,
    )


# -- projector mass ledger ------------------------------------------------------


@dataclass(frozen=True)
class ProjectorMassLedger:
    """Normalized projector masses ``a_k(x) = |chi_x P_k chi_u|^2 / |chi_u P_k|^2``.

    Rows sum to one exactly; columns sum to at most one.  ``weighted_mass[k]``
    is the subexponentially weighted row sum whose sorted sequence drives the
    counting bound.
    """

    u_index: int
    group_ids: tuple[int, ...]
    energies: np.ndarray
    mass_at_u: np.ndarray
    a: np.ndarray
    weighted_mass: np.ndarray
    sorted_mass: np.ndarray
    order: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray
    ctilde: float
    growth_exponent: float
    dropped: tuple[int, ...]

    def counting(self, level: float) -> int:
        """Number of kept groups with weighted mass at most ``level``."""
        return int(np.searchsorted(self.sorted_mass, level, side="right"))


def ak_ledger(sd: SpectralData, window: EnergyWindow, u, params: DecayParams) -> ProjectorMassLedger:
    data = _grouped(sd)
    ui = data.space.index_of(u)
    r = data.space.distances_from(ui).astype(float)
    lw = params.sigma * r ** params.zeta

    kept, dropped, rows, masses, energies = [], [], [], [], []
    for gi in _window_group_ids(data, window):
        g = data.groups[gi]
        col = group_column(data, g, ui)
        mass = float(np.sum(data.eigenvectors[ui, list(g.indices)] ** 2))
        if mass <= 0.0:
            dropped.append(gi)
            continue
        kept.append(gi)
        masses.append(mass)
        energies.append(g.energy)
        rows.append(col ** 2 / mass)
    if not kept:
        raise DiagnosticsError("no window group carries mass at the base site")

    a = np.stack(rows)
    with np.errstate(divide="ignore"):
        log_terms = lw[None, :] + np.log(a)
    weighted = np.exp(np.array([
        logsumexp(row[np.isfinite(row)]) if np.isfinite(row).any() else -np.inf
        for row in log_terms
    ]))
    order = np.argsort(weighted, kind="stable")
    sorted_mass = weighted[order]

    d_eff = data.space.coords.shape[1] if data.space.coords is not None else 1
    expo = params.zeta / d_eff
    ks = np.arange(1, len(sorted_mass) + 1, dtype=float)
    with np.errstate(divide="ignore"):
        lp = np.log(sorted_mass)
    ctilde = float(np.min(lp / ks ** expo)) if len(ks) else 0.0

    return ProjectorMassLedger(
        u_index=ui,
        group_ids=tuple(kept),
        energies=np.array(energies),
        mass_at_u=np.array(masses),
        a=a,
        weighted_mass=weighted,
        sorted_mass=sorted_mass,
        order=order,
        row_sums=a.sum(axis=1),
        col_sums=a.sum(axis=0),
        ctilde=max(ctilde, 0.0),
        growth_exponent=expo,
        dropped=tuple(dropped),
    )


# -- kernel interpolation -------------------------------------------------------


@dataclass(frozen=True)
class KernelInterpolation:
    """Interpolation bound between the projector profile and the moment sum.

    Checks ``sup_t |chi_x U(t) X(H) chi_u|_2 <= C profile^(1-gamma) l_value^(gamma/2)``
    and reports the smallest such C together with the per-site Hoelder sums
    ``sum_k |chi_x P_k|^gamma A_k^(-gamma/2)``.
    """

    u_index: int
    gamma: float
    sup_kernels: np.ndarray
    profile: np.ndarray
    l_value: float
    c_fit: float
    c_fit_log: float
    violations: int
    worst_site: int | None
    holder_sums: np.ndarray
    holder_max: float


def kernel_interpolation_check(sd: SpectralData, window: EnergyWindow, u,
                               params: DecayParams, times=None,
                               ledger: ProjectorMassLedger | None = None) -> KernelInterpolation:
    if params.gamma is None:
        raise DiagnosticsError("kernel interpolation needs params.gamma in (0, 1)")
    gamma = params.gamma
    data = _grouped(sd)
    ui = data.space.index_of(u)
    if times is None:
        times = default_time_grid()

    sup_k = np.zeros(data.space.n_sites)
    for t in times:
        np.maximum(sup_k, np.abs(evolved_state(data, window, ui, t)), out=sup_k)

    profile, l_value = _sulp_arrays(data, window, ui, params)

    with np.errstate(divide="ignore"):
        lk = np.log(sup_k)
        lp = np.log(profile)
    mask = sup_k > 0.0
    if l_value <= 0.0:
        c_log = -np.inf if not mask.any() else np.inf
    else:
        ratios = lk[mask] - (1.0 - gamma) * lp[mask] - (gamma / 2.0) * math.log(l_value)
        c_log = float(ratios.max()) if len(ratios) else -np.inf
    c_fit = float(np.exp(min(c_log, 700.0))) if np.isfinite(c_log) else 0.0

    violations = 0
    worst_site = None
    if np.isfinite(c_log) and mask.any():
        bound = c_log + (1.0 - gamma) * lp + (gamma / 2.0) * math.log(l_value)
        bad = lk > bound + 1e-9
        violations = int(bad.sum())
        ratios_all = np.where(mask, lk - bound, -np.inf)
        worst_site = int(np.argmax(ratios_all))

    if ledger is None:
        ledger = ak_ledger(data, window, ui, params)
    norms = np.stack([group_row_norms(data, data.groups[gi]) for gi in ledger.group_ids])
    with np.errstate(divide="ignore"):
        log_n = np.log(norms)
        log_a = np.log(ledger.weighted_mass)
    log_terms = gamma * log_n - (gamma / 2.0) * log_a[:, None]
    holder = np.zeros(data.space.n_sites)
    for x in range(data.space.n_sites):
        col = log_terms[:, x]
        finite = col[np.isfinite(col)]
        holder[x] = float(np.exp(logsumexp(finite))) if len(finite) else 0.0

    return KernelInterpolation(
        u_index=ui,
        gamma=gamma,
        sup_kernels=sup_k,
        profile=profile,
        l_value=l_value,
        c_fit=c_fit,
        c_fit_log=c_log if np.isfinite(c_log) else 0.0,
        violations=violations,
        worst_site=worst_site,
        holder_sums=holder,
        holder_max=float(holder.max()) if len(holder) else 0.0,
    )


# -- localization centers -------------------------------------------------------


def _stable_argmax(values: np.ndarray, rel_tol: float = 1e-9) -> int:
    """Smallest index within ``rel_tol`` of the maximum.

    Projector row norms are identical at mirror-related sites up to rounding;
    a plain argmax would let ulp noise pick either one, and downstream
    constants depend strongly on which.
    """
    top = float(values.max())
    return int(np.flatnonzero(values >= top * (1.0 - rel_tol))[0])


@dataclass(frozen=True)
class LocalizationCenter:
    """Peak site of an eigenvector and derived quantities."""

    vector_index: int
    site_index: int
    peak: float
    alpha: float | None = None
    normalized_peak: float | None = None
    radius_estimate: float | None = None


def localization_centers(sd: SpectralData, window: EnergyWindow, selection=None,
                         weight: WeightOperator | None = None) -> list[LocalizationCenter]:
    """Peak sites ``argmax_x |chi_x phi|``; ties break to the smallest index."""
    sel = _selection(sd, window, selection)
    out = []
    for n in sel:
        w = np.abs(sd.eigenvectors[:, n])
        ci = int(np.argmax(w))
        alpha = None
        npk = None
        if weight is not None:
            alpha = float(np.sum((w / weight.values) ** 2))
            npk = float(w[ci] / math.sqrt(alpha)) if alpha > 0 else None
        out.append(LocalizationCenter(vector_index=n, site_index=ci, peak=float(w[ci]),
                                      alpha=alpha, normalized_peak=npk))
    return out


# -- SULE ------------------------------------------------------------------------


@dataclass(frozen=True)
class SuleFit:
    """Joint certified envelope of eigenvector amplitudes around their centers."""

    fit: DecayFit
    centers: tuple[LocalizationCenter, ...]
    per_vector_sigma: dict
    selection: tuple[int, ...]
    origin_index: int


def sule_fit(sd: SpectralData, window: EnergyWindow, params: DecayParams,
             selection=None, origin=None, weight: WeightOperator | None = None,
             zeta_grid=ZETA_GRID, eps_grid=EPS_GRID, sigma_min: float = 0.01) -> SuleFit:
    sel = _selection(sd, window, selection)
    if not sel:
        raise DiagnosticsError("empty selection for the amplitude envelope")
    oi = _origin_index(sd, origin, weight)
    borig = sd.space.distances_from(oi).astype(float)
    centers = localization_centers(sd, window, sel, weight=weight)

    def batches():
        for c in centers:
            w = np.abs(sd.eigenvectors[:, c.vector_index])
            r = sd.space.distances_from(c.site_index).astype(float)
            yield (w, r, np.zeros_like(w), np.full_like(w, borig[c.site_index]),
                   (np.full(len(w), c.vector_index), np.arange(len(w)), np.full(len(w), c.site_index)))

    fit = fit_certified_envelope(batches, zeta_grid=zeta_grid, eps_grid=eps_grid,
                                 sigma_min=sigma_min)

    per_vec = {z: np.empty(len(sel)) for z in zeta_grid}
    for j, c in enumerate(centers):
        w = np.abs(sd.eigenvectors[:, c.vector_index])
        r = sd.space.distances_from(c.site_index).astype(float)
        good = (w > 0.0) & (r > 0.0)
        for z in zeta_grid:
            if good.any():
                per_vec[z][j] = max(min(float(np.min(
                    (math.log(c.peak) - np.log(w[good])) / r[good] ** z)), SIGMA_CAP), 0.0)
            else:
                per_vec[z][j] = SIGMA_CAP

    centers_out = []
    for c in centers:
        radius = None
        if fit.sigma_hat > 0:
            drift = (fit.epsilon_hat / fit.sigma_hat) ** (1.0 / fit.zeta_hat) * borig[c.site_index]
            core = max(math.log(3.0 * max(fit.c_hat, np.finfo(float).tiny)), 0.0) / fit.sigma_hat
            radius = float(drift + core ** (1.0 / fit.zeta_hat))
        centers_out.append(replace(c, radius_estimate=radius))

    return SuleFit(
        fit=fit,
        centers=tuple(centers_out),
        per_vector_sigma=per_vec,
        selection=tuple(sel),
        origin_index=oi,
    )


# -- SUDEC -----------------------------------------------------------------------


@dataclass(frozen=True)
class SudecResult:
    """Certified envelope of amplitude products ``|chi_x phi| |chi_u phi|``."""

    fit: DecayFit
    required_c: float
    required_c_log: float
    per_vector_required_log: dict
    n_pairs: int
    subsampled: bool
    selection: tuple[int, ...]


def _stratified_pairs(space, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n = space.n_sites
    xs = rng.integers(0, n, size=m)
    if space.coords is not None:
        diam = max(space.diameter(), 1)
        deltas = rng.integers(0, diam + 1, size=m)
        us = np.empty(m, dtype=np.int64)
        for i, (x, dd) in enumerate(zip(xs, deltas)):
            if dd == 0:
                us[i] = x
                continue
            probe = space.coords[x].copy()
            axis = rng.integers(0, space.coords.shape[1])
            probe[axis] += int(dd) * (1 if rng.integers(0, 2) else -1)
            for k in range(space.coords.shape[1]):
                if k != axis:
                    probe[k] += rng.integers(-int(dd), int(dd) + 1)
            j = space._coord_index.get(tuple(int(c) for c in probe))
            us[i] = j if j is not None else rng.integers(0, n)
        return xs, us
    us = np.empty(m, dtype=np.int64)
    for i, x in enumerate(xs):
        dist = space.distances_from(int(x))
        dd = rng.integers(0, dist.max() + 1)
        shell = np.flatnonzero(dist == dd)
        us[i] = shell[rng.integers(0, len(shell))] if len(shell) else x
    return xs, us


def sudec_check(sd: SpectralData, window: EnergyWindow, params: DecayParams,
                weight: WeightOperator, selection=None, rate_fn=None, origin=None,
                pair_limit: int = PAIR_LIMIT, seed: int = 7,
                zeta_grid=ZETA_GRID, eps_grid=EPS_GRID, sigma_min: float = 0.01) -> SudecResult:
    """Pairwise eigenvector correlation envelope with allowance ``f(alpha)``.

    The rate function defaults to the identity; pass ``lambda a: 1.0`` for the
    variant without the weighted-trace allowance.  For spaces with more than
    ``sqrt(pair_limit)`` sites the pair cloud is subsampled deterministically,
    stratified by distance.
    """
    sel = _selection(sd, window, selection)
    if not sel:
        raise DiagnosticsError("empty selection for the correlation envelope")
    rate = rate_fn if rate_fn is not None else (lambda a: a)
    oi = _origin_index(sd, origin, weight)
    borig = sd.space.distances_from(oi).astype(float)
    inv = 1.0 / weight.values
    n = sd.space.n_sites
    full = n * n <= pair_limit
    if full:
        dmat = _distance_matrix(sd.space)
        b_flat = np.tile(borig, n)

    def batches():
        for vec in sel:
            w = np.abs(sd.eigenvectors[:, vec])
            alpha = float(np.sum((w * inv) ** 2))
            la = math.log(max(rate(alpha), np.finfo(float).tiny))
            if full:
                values = np.outer(w, w).ravel()
                yield (values, dmat.ravel(), np.full_like(values, la), b_flat,
                       (np.full(values.shape, vec), None, None))
            else:
                m = max(pair_limit // len(sel), n)
                rng = np.random.default_rng([seed, vec])
                xs, us = _stratified_pairs(sd.space, m - n, rng)
                xs = np.concatenate([xs, np.arange(n)])
                us = np.concatenate([us, np.full(n, int(np.argmax(w)))])
                r = np.array([sd.space.metric_by_index(int(a), int(b)) for a, b in zip(xs, us)], dtype=float)
                values = w[xs] * w[us]
                yield (values, r, np.full_like(values, la), borig[us],
                       (np.full(values.shape, vec), xs, us))

    fit = fit_certified_envelope(batches, zeta_grid=zeta_grid, eps_grid=eps_grid,
                                 sigma_min=sigma_min)

    per_vec = {}
    best = -np.inf
    worst = None
    for values, dist, la, cs, ids in batches():
        pos = values > 0.0
        if not pos.any():
            continue
        need = _combo_logv(values[pos], la[pos], cs[pos], params.epsilon, params.zeta) \
            + params.sigma * dist[pos] ** params.zeta
        vec = int(np.asarray(ids[0]).ravel()[0])
        top = float(need.max())
        per_vec[vec] = top
        if top > best:
            best = top
    required_log = best if np.isfinite(best) else -np.inf

    n_pairs = len(sel) * n * n if full else len(sel) * max(pair_limit // len(sel), n)

    return SudecResult(
        fit=fit,
        required_c=float(np.exp(min(required_log, 700.0))) if np.isfinite(required_log) else 0.0,
        required_c_log=float(required_log),
        per_vector_required_log=per_vec,
        n_pairs=n_pairs,
        subsampled=not full,
        selection=tuple(sel),
    )


# -- SUDEC+ / SULE+ ---------------------------------------------------------------


@dataclass(frozen=True)
class SudecPlusResult:
    """Projector-level envelopes through per-site norms ``|chi_x P|_2``.

    Basis independent by construction: row norms of a projector do not change
    under orthogonal rotation of its column span.
    """

    group_index: int
    multiplicity: int
    alpha_e: float
    x_e_index: int
    pair_fit: DecayFit
    sule_plus_fit: DecayFit
    pair_required_c: float
    pair_required_c_log: float
    trace_c: float


def sudec_plus_check(sd: SpectralData, window: EnergyWindow, group_index: int,
                     params: DecayParams, weight: WeightOperator, origin=None,
                     zeta_grid=ZETA_GRID, eps_grid=EPS_GRID, sigma_min: float = 0.01) -> SudecPlusResult:
    data = _grouped(sd)
    g = data.groups[group_index]
    norms = group_row_norms(data, g)
    alpha_e = float(np.sum((norms / weight.values) ** 2))
    x_e = _stable_argmax(norms)
    oi = _origin_index(data, origin, weight)
    borig = data.space.distances_from(oi).astype(float)
    n = data.space.n_sites
    dmat = _distance_matrix(data.space)
    la_pair = math.log(max(alpha_e, np.finfo(float).tiny))

    pair_batches = array_batches(
        np.outer(norms, norms).ravel(), dmat.ravel(),
        log_allowances=np.full(n * n, la_pair), center_sizes=np.tile(borig, n))
    pair_fit = fit_certified_envelope(pair_batches, zeta_grid=zeta_grid,
                                      eps_grid=eps_grid, sigma_min=sigma_min)
    req_c, req_c_log, _ = required_constant(pair_batches, params.sigma, params.zeta,
                                            params.epsilon)

    sule_batches = array_batches(
        norms, data.space.distances_from(x_e).astype(float),
        log_allowances=np.full(n, 0.5 * la_pair), center_sizes=np.full(n, borig[x_e]))
    sule_plus_fit = fit_certified_envelope(sule_batches, zeta_grid=zeta_grid,
                                           eps_grid=eps_grid, sigma_min=sigma_min)

    trace_c = g.multiplicity / (alpha_e * float(weight.values[x_e]) ** 2)
    return SudecPlusResult(
        group_index=group_index,
        multiplicity=g.multiplicity,
        alpha_e=alpha_e,
        x_e_index=x_e,
        pair_fit=pair_fit,
        sule_plus_fit=sule_plus_fit,
        pair_required_c=req_c,
        pair_required_c_log=req_c_log,
        trace_c=trace_c,
    )


# -- centers ----------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaCenterResult:
    """Lower bound ``alpha >= c / T(center)^2`` checked per eigenvector."""

    products: np.ndarray
    min_product: float
    argmin_vector: int
    verdict: bool


def alpha_center_bound(sd: SpectralData, window: EnergyWindow, weight: WeightOperator,
                       selection=None) -> AlphaCenterResult:
    centers = localization_centers(sd, window, selection, weight=weight)
    if not centers:
        raise DiagnosticsError("empty selection for the alpha-center bound")
    prods = np.array([c.alpha * float(weight.values[c.site_index]) ** 2 for c in centers])
    k = int(np.argmin(prods))
    return AlphaCenterResult(
        products=prods,
        min_product=float(prods[k]),
        argmin_vector=centers[k].vector_index,
        verdict=bool(prods[k] > 0.0),
    )


@dataclass(frozen=True)
class CenterClusterResult:
    """Worst-case center spread ``max(|x_phi - x_psi| - delta |x_phi|)`` in a group."""

    group_index: int
    delta: float
    c_delta: float
    pool_centers: tuple[int, ...]
    pool_size: int


def center_cluster_check(sd: SpectralData, group_index: int, delta: float,
                         origin=None, include_rotations: bool = True) -> CenterClusterResult:
    if not 0.0 < delta < 1.0:
        raise DiagnosticsError(f"delta must lie in (0, 1), got {delta}")
    data = _grouped(sd)
    g = data.groups[group_index]
    vecs = [data.eigenvectors[:, i] for i in g.indices]
    if include_rotations:
        base = list(vecs)
        for i in range(len(base)):
            for j in range(i + 1, len(base)):
                vecs.append((base[i] + base[j]) / math.sqrt(2.0))
                vecs.append((base[i] - base[j]) / math.sqrt(2.0))
    centers = [int(np.argmax(np.abs(v))) for v in vecs]
    oi = _origin_index(data, origin, None)
    borig = data.space.distances_from(oi).astype(float)
    c_delta = 0.0
    for p in range(len(centers)):
        for q in range(len(centers)):
            if p == q:
                continue
            val = data.space.metric_by_index(centers[p], centers[q]) - delta * borig[centers[p]]
            c_delta = max(c_delta, val)
    return CenterClusterResult(
        group_index=group_index,
        delta=delta,
        c_delta=float(c_delta),
        pool_centers=tuple(centers),
        pool_size=len(centers),
    )


@dataclass(frozen=True)
class CenterCensus:
    """Counting of localization centers inside metric balls.

    The ordering constant certifies ``<x_(n)> >= c n^(1/(2 kappa))`` on the
    increasing rearrangement, using the regularized size ``<x> = sqrt(1+|x|^2)``
    so a center at the origin stays informative.  The ball-count constants
    certify ``N_L <= C L^(2 kappa) alpha`` at vector and group level.
    """

    radii_vectors: np.ndarray
    radii_groups: np.ndarray
    l_values: np.ndarray
    n_l: np.ndarray
    n_l_groups: np.ndarray
    ordering_constant: float
    ordering_exponent: float
    bound_constant: float
    bound_constant_groups: float
    alpha_total: float
    verdict_ordering: bool


def center_census(sd: SpectralData, window: EnergyWindow, weight: WeightOperator,
                  selection=None, l_values=None) -> CenterCensus:
    if weight.kind != "polynomial":
        raise DiagnosticsError("the center census needs a polynomial weight")
    data = _grouped(sd)
    centers = localization_centers(data, window, selection, weight=weight)
    if not centers:
        raise DiagnosticsError("empty selection for the center census")
    borig = data.space.distances_from(weight.base_index).astype(float)
    rv = np.sort(borig[[c.site_index for c in centers]])

    gids = _window_group_ids(data, window)
    gx = [_stable_argmax(group_row_norms(data, data.groups[gi])) for gi in gids]
    rg = np.sort(borig[gx])

    if l_values is None:
        top = int(max(rv.max(initial=0), rg.max(initial=0), 1))
        l_values = np.arange(1, top + 1, dtype=float)
    l_values = np.asarray(l_values, dtype=float)
    n_l = np.array([np.sum(rv <= L) for L in l_values], dtype=float)
    n_l_g = np.array([np.sum(rg <= L) for L in l_values], dtype=float)

    kappa = weight.kappa
    brackets = np.sqrt(1.0 + rv ** 2)
    ns = np.arange(1, len(brackets) + 1, dtype=float)
    expo = 1.0 / (2.0 * kappa)
    c_fit = float(np.min(brackets / ns ** expo))

    from .spectral import alpha_weights  # local import to avoid cycle at module load

    alpha_total = float(sum(alpha_weights(data, weight).per_group[g] for g in gids))
    denom = l_values ** (2.0 * kappa) * alpha_total
    bound_c = float(np.max(n_l / denom)) if len(l_values) else 0.0
    bound_c_g = float(np.max(n_l_g / denom)) if len(l_values) else 0.0

    return CenterCensus(
        radii_vectors=rv,
        radii_groups=rg,
        l_values=l_values,
        n_l=n_l,
        n_l_groups=n_l_g,
        ordering_constant=c_fit,
        ordering_exponent=expo,
        bound_constant=bound_c,
        bound_constant_groups=bound_c_g,
        alpha_total=alpha_total,
        verdict_ordering=bool(c_fit > 0.0),
    )


# -- mixed exponents ---------------------------------------------------------------


@dataclass(frozen=True)
class MixedExponentResult:
    """Envelopes with growth exponent ``zeta_prime`` and decay exponent ``zeta``."""

    sudec_fit: DecayFit
    sudec_required_log: float
    sule_fit: DecayFit
    sule_required_log: float


MIXED_EPS_GRID = (0.0, 0.25, 0.5, 1.0, 2.0)


def mixed_exponent_check(sd: SpectralData, window: EnergyWindow, params: DecayParams,
                         weight: WeightOperator, selection=None, origin=None,
                         eps_grid=MIXED_EPS_GRID, sigma_min: float = 0.01) -> MixedExponentResult:
    if params.zeta_prime is None:
        raise DiagnosticsError("mixed-exponent check needs params.zeta_prime > zeta")
    sel = _selection(sd, window, selection)
    oi = _origin_index(sd, origin, weight)
    borig = sd.space.distances_from(oi).astype(float)
    inv = 1.0 / weight.values
    n = sd.space.n_sites
    dmat = _distance_matrix(sd.space)
    b_flat = np.tile(borig, n)

    def pair_batches():
        for vec in sel:
            w = np.abs(sd.eigenvectors[:, vec])
            alpha = float(np.sum((w * inv) ** 2))
            la = math.log(max(alpha, np.finfo(float).tiny))
            values = np.outer(w, w).ravel()
            yield (values, dmat.ravel(), np.full_like(values, la), b_flat,
                   (np.full(values.shape, vec), None, None))

    sudec_fit = fit_certified_envelope(pair_batches, zeta_grid=(params.zeta,),
                                       eps_grid=eps_grid, eps_exponent=params.zeta_prime,
                                       sigma_min=sigma_min)
    _, sudec_req, _ = required_constant(pair_batches, params.sigma, params.zeta,
                                        params.epsilon, eps_exponent=params.zeta_prime)

    def sule_batches():
        for vec in sel:
            w = np.abs(sd.eigenvectors[:, vec])
            ci = int(np.argmax(w))
            r = sd.space.distances_from(ci).astype(float)
            yield (w, r, np.zeros_like(w), np.full_like(w, borig[ci]),
                   (np.full(len(w), vec), np.arange(len(w)), None))

    sule_mixed = fit_certified_envelope(sule_batches, zeta_grid=(params.zeta,),
                                        eps_grid=eps_grid, eps_exponent=params.zeta_prime,
                                        sigma_min=sigma_min)
    _, sule_req, _ = required_constant(sule_batches, params.sigma, params.zeta,
                                       params.epsilon, eps_exponent=params.zeta_prime)

    return MixedExponentResult(
        sudec_fit=sudec_fit,
        sudec_required_log=float(sudec_req),
        sule_fit=sule_mixed,
        sule_required_log=float(sule_req),
    )


# -- basis rotations ----------------------------------------------------------------


def random_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with sign-fixed diagonal."""
    a = rng.standard_normal((m, m))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))


def random_rotations(m: int, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [random_orthogonal(m, rng) for _ in range(count)]


def rotate_group(sd: SpectralData, group_index: int, q: np.ndarray) -> SpectralData:
    """Replace the eigenbasis of one degenerate group by a rotated one."""
    data = _grouped(sd)
    g = data.groups[group_index]
    if q.shape != (g.multiplicity, g.multiplicity):
        raise DiagnosticsError(
            f"rotation shape {q.shape} does not match multiplicity {g.multiplicity}")
    spread = float(np.ptp(data.eigenvalues[list(g.indices)]))
    width = float(data.eigenvalues[-1] - data.eigenvalues[0]) if data.n > 1 else 0.0
    if width > 0 and spread > 1e-6 * width:
        raise DiagnosticsError("refusing to rotate a group that is not numerically degenerate")
    vecs = data.eigenvectors.copy()
    cols = list(g.indices)
    vecs[:, cols] = vecs[:, cols] @ q
    return replace(data, eigenvectors=vecs)
