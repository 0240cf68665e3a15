"""Exact diagonalization, eigenvalue grouping, and projector kernels."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .geometry import SiteSpace, space_from_dict, space_to_dict
from .operators import Hamiltonian, WeightOperator, gershgorin_norm

__all__ = [
    "SpectralError",
    "ProjectorGroup",
    "SpectralData",
    "AlphaWeights",
    "diagonalize",
    "group_projectors",
    "default_group_tol",
    "alpha_weights",
    "projector_kernel",
    "group_column",
    "group_row_norms",
    "window_groups",
    "save_spectral",
    "load_spectral",
]

ORTHONORMALITY_TOL = 1e-10
RESIDUAL_REL_TOL = 1e-8


class SpectralError(RuntimeError):
    """Diagonalization failure or inconsistent spectral data."""


@dataclass(frozen=True)
class ProjectorGroup:
    """Eigenvalue cluster treated as one spectral projector."""

    energy: float
    indices: tuple[int, ...]

    @property
    def multiplicity(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class SpectralData:
    """Eigendecomposition of a Hamiltonian, eigenvectors in columns."""

    space: SiteSpace
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual: float
    hnorm: float
    groups: tuple[ProjectorGroup, ...] | None = None
    provenance: dict | None = None

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def group_vectors(self, g: ProjectorGroup) -> np.ndarray:
        return self.eigenvectors[:, list(g.indices)]


def diagonalize(ham: Hamiltonian) -> SpectralData:
    """Full symmetric eigendecomposition with certification of the output.

    Raises SpectralError when the residual ``max |H v - E v|`` exceeds
    ``1e-8`` times the Gershgorin bound on the spectral norm, or when the
    returned basis is not orthonormal to ``1e-10``.
    """
    h = ham.dense()
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver failed to converge: {exc}") from exc

    # deterministic sign: largest-magnitude component positive
    picks = np.argmax(np.abs(evecs), axis=0)
    signs = np.sign(evecs[picks, np.arange(evecs.shape[1])])
    signs[signs == 0] = 1.0
    evecs = evecs * signs

    hnorm = max(gershgorin_norm(ham), np.finfo(float).tiny)
    residual = float(np.abs(h @ evecs - evecs * evals).max())
    if residual > RESIDUAL_REL_TOL * hnorm:
        raise SpectralError(f"worst eigenpair residual {residual:.3e} exceeds {RESIDUAL_REL_TOL:.0e} * |H|")
    gram = evecs.T @ evecs
    ortho = float(np.abs(gram - np.eye(len(evals))).max())
    if ortho > ORTHONORMALITY_TOL:
        raise SpectralError(f"eigenbasis orthonormality defect {ortho:.3e}")

    return SpectralData(
        space=ham.space,
        eigenvalues=evals,
        eigenvectors=evecs,
        residual=residual,
        hnorm=hnorm,
        provenance={"label": ham.label, "dimension": ham.n,
                    "params": {k: v for k, v in ham.params.items() if k != "space"}},
    )


def default_group_tol(sd: SpectralData) -> float:
    width = float(sd.eigenvalues[-1] - sd.eigenvalues[0]) if sd.n > 1 else 0.0
    return 1e-9 * width


def group_projectors(sd: SpectralData, tol: float | None = None) -> SpectralData:
    """Merge consecutive eigenvalues closer than ``tol`` into one group.

    ``tol=0`` keeps numerically distinct eigenvalues in singleton groups while
    still merging exact ties.
    """
    if tol is None:
        tol = default_group_tol(sd)
    if tol < 0:
        raise SpectralError(f"grouping tolerance must be >= 0, got {tol}")
    groups = []
    start = 0
    for k in range(1, sd.n + 1):
        if k == sd.n or sd.eigenvalues[k] - sd.eigenvalues[k - 1] > tol:
            idx = tuple(range(start, k))
            energy = float(np.mean(sd.eigenvalues[start:k]))
            groups.append(ProjectorGroup(energy=energy, indices=idx))
            start = k
    return replace(sd, groups=tuple(groups))


def window_groups(sd: SpectralData, chi_values: np.ndarray) -> list[int]:
    """Indices of groups whose representative weight is nonzero."""
    if sd.groups is None:
        raise SpectralError("group_projectors must run before window selection")
    out = []
    for gi, g in enumerate(sd.groups):
        if max(chi_values[list(g.indices)]) > 0.0:
            out.append(gi)
    return out


@dataclass(frozen=True)
class AlphaWeights:
    """Weighted traces ``alpha`` at vector, group, and family level."""

    per_vector: np.ndarray
    per_group: np.ndarray
    total: float


def alpha_weights(sd: SpectralData, weight: WeightOperator,
                  group_selection=None) -> AlphaWeights:
    """``alpha_phi = |T^-1 phi|^2`` per eigenvector, summed over groups.

    ``total`` sums the selected groups (all groups by default); with every
    group selected it equals ``sum_x T(x)^-2`` exactly.
    """
    if sd.groups is None:
        raise SpectralError("group_projectors must run before alpha_weights")
    inv = 1.0 / weight.values
    per_vector = np.einsum("xn,xn->n", sd.eigenvectors * inv[:, None], sd.eigenvectors * inv[:, None])
    per_group = np.array([float(sum(per_vector[i] for i in g.indices)) for g in sd.groups])
    sel = range(len(sd.groups)) if group_selection is None else group_selection
    total = float(sum(per_group[g] for g in sel))
    return AlphaWeights(per_vector=per_vector, per_group=per_group, total=total)


def projector_kernel(sd: SpectralData, group: ProjectorGroup, x_indices, u_indices) -> float:
    """Hilbert-Schmidt norm ``|chi_x P chi_u|_2`` for site subsets x, u."""
    a = sd.eigenvectors[np.atleast_1d(x_indices)][:, list(group.indices)]
    b = sd.eigenvectors[np.atleast_1d(u_indices)][:, list(group.indices)]
    ga = a.T @ a
    gb = b.T @ b
    return float(np.sqrt(max(np.sum(ga * gb), 0.0)))


def group_column(sd: SpectralData, group: ProjectorGroup, u_index: int) -> np.ndarray:
    """Column ``P[:, u]`` of the group projector."""
    v = sd.eigenvectors[:, list(group.indices)]
    return v @ v[u_index]


def group_row_norms(sd: SpectralData, group: ProjectorGroup) -> np.ndarray:
    """Per-site norms ``|chi_x P|_2 = sqrt(P[x, x])``; basis independent."""
    v = sd.eigenvectors[:, list(group.indices)]
    return np.sqrt(np.einsum("xn,xn->x", v, v))


def save_spectral(sd: SpectralData, path) -> None:
    """Binary spectral cache (npz) with provenance and grouping."""
    meta = {
        "format": "loclab-spectral",
        "version": 1,
        "provenance": sd.provenance or {},
        "space": space_to_dict(sd.space),
        "groups": None if sd.groups is None else [
            {"energy": g.energy, "indices": list(g.indices)} for g in sd.groups
        ],
    }
    np.savez_compressed(
        path,
        eigenvalues=sd.eigenvalues,
        eigenvectors=sd.eigenvectors,
        residual=np.array([sd.residual]),
        hnorm=np.array([sd.hnorm]),
        meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8),
    )


def load_spectral(path) -> SpectralData:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("format") != "loclab-spectral":
            raise SpectralError(f"{path}: not a spectral cache")
        groups = meta.get("groups")
        return SpectralData(
            space=space_from_dict(meta["space"]),
            eigenvalues=data["eigenvalues"],
            eigenvectors=data["eigenvectors"],
            residual=float(data["residual"][0]),
            hnorm=float(data["hnorm"][0]),
            groups=None if groups is None else tuple(
                ProjectorGroup(energy=g["energy"], indices=tuple(g["indices"])) for g in groups
            ),
            provenance=meta.get("provenance"),
        )
