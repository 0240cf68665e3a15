"""Time evolution, smooth energy windows, and subexponential transport moments.

The central quantity is the weighted transport moment

    M_u(sigma, zeta, t) = sum_x exp(sigma * d(x, u)**zeta) * |chi_x U(t) X(H) chi_u|_2^2

with ``U(t) = exp(-i t H)`` computed exactly from the eigendecomposition and
``X`` a smooth window profile.  Sums are accumulated in log space so large
weights never overflow silently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad, trapezoid
from scipy.special import logsumexp

from .spectral import ProjectorGroup, SpectralData, group_column, group_projectors

__all__ = [
    "DynamicsError",
    "DecayParams",
    "EnergyWindow",
    "MomentSeries",
    "make_window",
    "full_window",
    "smooth_ramp",
    "evolved_state",
    "evolved_kernel",
    "moment",
    "moment_values",
    "default_time_grid",
    "moment_series",
    "cesaro_average",
    "abel_average",
    "liminf_cesaro",
    "save_moment_series",
]

ABEL_CUTOFF = 40.0  # truncation of the Abel integral at t = 40 T; remainder <= exp(-40)


class DynamicsError(ValueError):
    """Invalid dynamical parameters or window construction."""


@dataclass(frozen=True)
class DecayParams:
    """Exponents and rates for moments and decay envelopes.

    ``sigma >= 0`` is the rate, ``zeta`` in (0, 1] the stretching exponent.
    ``epsilon`` allows envelope growth in the base point, ``zeta_prime`` an
    optional larger exponent for that growth factor, and ``gamma`` in (0, 1)
    the interpolation weight between profile and moment bounds.
    """

    sigma: float
    zeta: float
    epsilon: float = 0.0
    zeta_prime: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        if not self.sigma >= 0.0:
            raise DynamicsError(f"sigma must be >= 0, got {self.sigma}")
        if not 0.0 < self.zeta <= 1.0:
            raise DynamicsError(f"zeta must lie in (0, 1], got {self.zeta}")
        if not self.epsilon >= 0.0:
            raise DynamicsError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.zeta_prime is not None:
            if not self.zeta < self.zeta_prime <= 1.0:
                raise DynamicsError(
                    f"zeta_prime must lie in (zeta, 1], got {self.zeta_prime} with zeta={self.zeta}"
                )
        if self.gamma is not None and not 0.0 < self.gamma < 1.0:
            raise DynamicsError(f"gamma must lie in (0, 1), got {self.gamma}")


def _bump(s: float) -> float:
    if abs(s) >= 1.0:
        return 0.0
    return math.exp(-1.0 / (1.0 - s * s))


@lru_cache(maxsize=1)
def _bump_norm() -> float:
    val, _ = quad(_bump, -1.0, 1.0)
    return val


def smooth_ramp(s: float) -> float:
    """C-infinity ramp from 0 to 1 on [0, 1].

    Built as the normalized integral of the bump ``exp(-1/(1-s^2))``; exactly
    0 for ``s <= 0``, exactly 1 for ``s >= 1``, and 1/2 at the midpoint.
    """
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    val, _ = quad(_bump, -1.0, 2.0 * s - 1.0)
    return val / _bump_norm()


@dataclass(frozen=True)
class EnergyWindow:
    """Smooth spectral window: 1 on the plateau, 0 outside the interval."""

    interval: tuple[float, float]
    margin: float
    chi_values: np.ndarray
    degenerate: bool

    def chi(self, energy):
        a, b = self.interval
        w = self.margin * (b - a) / 2.0
        e = np.atleast_1d(np.asarray(energy, dtype=float))
        out = np.zeros_like(e)
        plateau = (e >= a + w) & (e <= b - w)
        out[plateau] = 1.0
        left = (e > a) & (e < a + w)
        out[left] = [smooth_ramp((x - a) / w) for x in e[left]]
        right = (e > b - w) & (e < b)
        out[right] = [smooth_ramp((b - x) / w) for x in e[right]]
        return float(out[0]) if np.isscalar(energy) or np.asarray(energy).ndim == 0 else out

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.chi_values > 0.0)


def make_window(sd: SpectralData, interval, margin: float) -> EnergyWindow:
    """Sample a smooth window on the spectrum of ``sd``.

    ``margin`` in (0, 1) is the fraction of the interval taken by the two
    ramps; the plateau is the middle ``1 - margin`` fraction.  A window whose
    support catches no eigenvalue is flagged degenerate rather than rejected.
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise DynamicsError(f"window interval must have a < b, got ({a}, {b})")
    if not 0.0 < margin < 1.0:
        raise DynamicsError(f"margin must lie in (0, 1), got {margin}")
    win = EnergyWindow(interval=(a, b), margin=margin, chi_values=np.empty(0), degenerate=False)
    chi_values = np.asarray(win.chi(sd.eigenvalues), dtype=float)
    return EnergyWindow(
        interval=(a, b),
        margin=margin,
        chi_values=chi_values,
        degenerate=not bool((chi_values > 0.0).any()),
    )


def full_window(sd: SpectralData) -> EnergyWindow:
    """Window whose plateau covers the whole spectrum, so ``chi == 1`` exactly."""
    lo = float(sd.eigenvalues.min())
    hi = float(sd.eigenvalues.max())
    delta = max(hi - lo, 1.0)
    a, b = lo - delta, hi + delta
    margin = delta / (b - a)
    return make_window(sd, (a, b), margin)


def evolved_state(sd: SpectralData, window: EnergyWindow, u_index: int, t: float) -> np.ndarray:
    """Column ``exp(-i t H) X(H) delta_u`` as a complex vector."""
    sup = window.support
    if len(sup) == 0:
        return np.zeros(sd.n, dtype=complex)
    v = sd.eigenvectors[:, sup]
    coef = window.chi_values[sup] * np.exp(-1j * t * sd.eigenvalues[sup])
    return v @ (coef * v[u_index])


def evolved_kernel(sd: SpectralData, window: EnergyWindow, x_indices, u_indices, t: float) -> float:
    """HS norm ``|chi_x exp(-itH) X(H) chi_u|_2`` for site subsets."""
    sup = window.support
    if len(sup) == 0:
        return 0.0
    a = sd.eigenvectors[np.atleast_1d(x_indices)][:, sup]
    b = sd.eigenvectors[np.atleast_1d(u_indices)][:, sup]
    coef = window.chi_values[sup] * np.exp(-1j * t * sd.eigenvalues[sup])
    k = (a * coef) @ b.T
    return float(np.linalg.norm(k))


def _log_weights(sd: SpectralData, u_index: int, params: DecayParams) -> np.ndarray:
    r = sd.space.distances_from(u_index).astype(float)
    return params.sigma * r ** params.zeta


def moment(sd: SpectralData, window: EnergyWindow, u, params: DecayParams, t: float) -> float:
    """Transport moment at a single time, accumulated in log space."""
    ui = sd.space.index_of(u)
    psi = evolved_state(sd, window, ui, t)
    amp2 = np.abs(psi) ** 2
    lw = _log_weights(sd, ui, params)
    with np.errstate(divide="ignore"):
        terms = lw + np.log(amp2)
    finite = terms[np.isfinite(terms)]
    if len(finite) == 0:
        return 0.0
    return float(np.exp(logsumexp(finite)))


def moment_values(sd: SpectralData, window: EnergyWindow, u, params: DecayParams,
                  times: np.ndarray) -> np.ndarray:
    """Transport moment on a whole time grid at once.

    Equivalent to calling :func:`moment` per point but batched: the evolved
    columns for a block of times come from one matrix product.  Blocks are
    sized so the complex work array stays around 32 MB.
    """
    ui = sd.space.index_of(u)
    times = np.asarray(times, dtype=float)
    sup = window.support
    if len(sup) == 0:
        return np.zeros(len(times))
    v = sd.eigenvectors[:, sup]
    a = v * (window.chi_values[sup] * v[ui])
    energies = sd.eigenvalues[sup]
    lw = _log_weights(sd, ui, params)[:, None]
    out = np.empty(len(times))
    block = max(1, int(2_000_000 / max(sd.n, 1)))
    for start in range(0, len(times), block):
        ts = times[start:start + block]
        psi = a @ np.exp(-1j * np.outer(energies, ts))
        with np.errstate(divide="ignore"):
            terms = lw + np.log(np.abs(psi) ** 2)
        with np.errstate(invalid="ignore"):
            out[start:start + block] = np.exp(logsumexp(terms, axis=0))
    return np.nan_to_num(out, nan=0.0)


def default_time_grid(t_min: float = 0.1, t_max: float = 1e4, count: int = 200) -> np.ndarray:
    """``t = 0`` followed by ``count`` logarithmically spaced points."""
    return np.concatenate([[0.0], np.geomspace(t_min, t_max, count)])


@dataclass(frozen=True)
class MomentSeries:
    """Sampled moment trajectory with running time averages.

    ``cesaro[j]`` is the trapezoidal average ``(1/T) int_0^T M dt`` at
    ``T = times[j]``; ``abel[j]`` the exponential average truncated at
    ``min(40 T, t_max)`` with the truncation remainder recorded separately.
    """

    u_index: int
    params: DecayParams
    window_interval: tuple[float, float]
    window_margin: float
    times: np.ndarray
    values: np.ndarray
    cesaro: np.ndarray
    abel: np.ndarray
    abel_remainder: np.ndarray
    sup_over_grid: float
    min_gap: float
    max_step: float
    grid_adequate: bool


def cesaro_average(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    if times[0] != 0.0:
        raise DynamicsError("cesaro average needs the grid to start at t=0")
    integral = cumulative_trapezoid(values, times, initial=0.0)
    out = np.empty_like(values)
    out[0] = values[0]
    out[1:] = integral[1:] / times[1:]
    return out


def abel_average(times: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if times[0] != 0.0:
        raise DynamicsError("abel average needs the grid to start at t=0")
    t_max = times[-1]
    out = np.empty_like(values)
    rem = np.empty_like(values)
    out[0] = values[0]
    rem[0] = 0.0
    for j in range(1, len(times)):
        T = times[j]
        cut = min(ABEL_CUTOFF * T, t_max)
        mask = times <= cut
        tt = times[mask]
        out[j] = trapezoid(np.exp(-tt / T) * values[mask], tt) / T
        rem[j] = math.exp(-cut / T)
    return out, rem


def moment_series(sd: SpectralData, window: EnergyWindow, u, params: DecayParams,
                  times: np.ndarray | None = None) -> MomentSeries:
    ui = sd.space.index_of(u)
    if times is None:
        times = default_time_grid()
    times = np.asarray(times, dtype=float)
    values = moment_values(sd, window, u, params, times)
    cesaro = cesaro_average(times, values)
    abel, rem = abel_average(times, values)

    width = float(sd.eigenvalues[-1] - sd.eigenvalues[0]) if sd.n > 1 else 0.0
    gaps = np.diff(sd.eigenvalues)
    gaps = gaps[gaps > 0]
    min_gap = float(gaps.min()) if len(gaps) else 0.0
    max_step = float(np.diff(times).max()) if len(times) > 1 else 0.0
    grid_adequate = (width == 0.0) or (max_step <= math.pi / width)

    return MomentSeries(
        u_index=ui,
        params=params,
        window_interval=window.interval,
        window_margin=window.margin,
        times=times,
        values=values,
        cesaro=cesaro,
        abel=abel,
        abel_remainder=rem,
        sup_over_grid=float(values.max()),
        min_gap=min_gap,
        max_step=max_step,
        grid_adequate=grid_adequate,
    )


def liminf_cesaro(sd: SpectralData, window: EnergyWindow, u, params: DecayParams) -> float:
    """Exact infinite-time limit of the Cesaro-averaged moment.

    Off-diagonal phases average to zero, leaving the diagonal sum
    ``sum_k sum_x chi(E_k)^2 w(x) |chi_x P_k chi_u|_2^2``; numerically
    degenerate eigenvalues enter through their merged group projector.
    """
    data = sd if sd.groups is not None else group_projectors(sd)
    ui = data.space.index_of(u)
    lw = _log_weights(data, ui, params)
    parts = []
    for g in data.groups:
        chi_g = float(max(window.chi_values[list(g.indices)]))
        if chi_g <= 0.0:
            continue
        col = group_column(data, g, ui)
        with np.errstate(divide="ignore"):
            terms = lw + 2.0 * np.log(np.abs(col)) + 2.0 * math.log(chi_g)
        parts.append(terms[np.isfinite(terms)])
    if not parts:
        return 0.0
    stacked = np.concatenate(parts)
    if len(stacked) == 0:
        return 0.0
    return float(np.exp(logsumexp(stacked)))


def save_moment_series(series: MomentSeries, csv_path) -> None:
    """CSV with columns ``t, M, cesaro_T, abel_T`` plus a JSON parameter sidecar."""
    csv_path = str(csv_path)
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("t,M,cesaro_T,abel_T\n")
        for t, m, c, a in zip(series.times, series.values, series.cesaro, series.abel):
            fh.write(f"{float(t)!r},{float(m)!r},{float(c)!r},{float(a)!r}\n")
    sidecar = csv_path[:-4] + ".json" if csv_path.endswith(".csv") else csv_path + ".json"
    payload = {
        "u_index": series.u_index,
        "params": {
            "sigma": series.params.sigma,
            "zeta": series.params.zeta,
            "epsilon": series.params.epsilon,
            "zeta_prime": series.params.zeta_prime,
            "gamma": series.params.gamma,
        },
        "window": {"interval": list(series.window_interval), "margin": series.window_margin},
        "sup_over_grid": series.sup_over_grid,
        "abel_cutoff": ABEL_CUTOFF,
        "min_gap": series.min_gap,
        "max_step": series.max_step,
        "grid_adequate": series.grid_adequate,
    }
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
