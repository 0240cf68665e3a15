"""Hamiltonians and weight operators on a site space.

Matrix storage is dense below ``DENSE_LIMIT`` sites and ``scipy.sparse``
above.  Disorder is drawn from a counter-based PRNG keyed per site
coordinate, so a draw depends only on ``(seed, site)`` and matched-seed
systems of different size agree on their shared sites.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .geometry import (
    GeometryError,
    SiteSpace,
    lattice_subset,
    space_from_dict,
    space_to_dict,
)

__all__ = [
    "OperatorError",
    "DENSE_LIMIT",
    "Hamiltonian",
    "WeightOperator",
    "build_laplacian",
    "build_anderson",
    "build_cluster_laplacian",
    "build_weight",
    "site_keys",
    "gershgorin_norm",
    "save_hamiltonian",
    "load_hamiltonian",
]

DENSE_LIMIT = 4000

_PRNG_NAME = "philox4x64-per-site"


class OperatorError(ValueError):
    """Invalid operator construction or file content."""


@dataclass
class Hamiltonian:
    """Symmetric operator tied to a site space."""

    space: SiteSpace
    matrix: object  # np.ndarray or scipy.sparse matrix
    label: str
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.space.n_sites

    def dense(self) -> np.ndarray:
        if sp.issparse(self.matrix):
            return self.matrix.toarray()
        return self.matrix

    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)


def _finish(space, rows, cols, vals, label, params) -> Hamiltonian:
    n = space.n_sites
    if n <= DENSE_LIMIT:
        m = np.zeros((n, n))
        m[rows, cols] = vals
        return Hamiltonian(space, m, label, params)
    m = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return Hamiltonian(space, m, label, params)


def build_laplacian(space: SiteSpace) -> Hamiltonian:
    """Graph Laplacian ``-Delta``: degree on the diagonal, -1 per edge."""
    rows, cols, vals = [], [], []
    for i in range(space.n_sites):
        nbrs = space.neighbors(i)
        rows.append(i)
        cols.append(i)
        vals.append(float(len(nbrs)))
        for j in nbrs:
            rows.append(i)
            cols.append(int(j))
            vals.append(-1.0)
    return _finish(space, rows, cols, vals, "laplacian", {"space": space_to_dict(space)})


def site_keys(space: SiteSpace) -> np.ndarray:
    """Per-site uint64 keys; coordinate-based for lattice kinds.

    Keying on coordinates rather than dense indices makes the potential of a
    smaller box a restriction of the potential of a larger one at the same
    seed.
    """
    if space.coords is None:
        return np.arange(space.n_sites, dtype=np.uint64)
    span = 1 << 21
    half = 1 << 20
    keys = np.zeros(space.n_sites, dtype=np.uint64)
    for k in range(space.coords.shape[1]):
        keys = keys * np.uint64(span) + (space.coords[:, k] + half).astype(np.uint64)
    return keys


def _potential(space: SiteSpace, W: float, seed: int) -> np.ndarray:
    seed64 = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    v = np.empty(space.n_sites)
    for i, key in enumerate(site_keys(space)):
        gen = np.random.Generator(np.random.Philox(key=np.array([seed64, key], dtype=np.uint64)))
        v[i] = gen.uniform(-W / 2.0, W / 2.0)
    return v


def build_anderson(space: SiteSpace, W: float, seed: int) -> Hamiltonian:
    """``-Delta + V`` with ``V`` i.i.d. uniform on ``[-W/2, W/2]``."""
    if W < 0:
        raise OperatorError(f"disorder width must be >= 0, got W={W}")
    ham = build_laplacian(space)
    v = _potential(space, float(W), seed)
    if ham.is_sparse():
        ham.matrix = (ham.matrix + sp.diags(v)).tocsr()
    else:
        ham.matrix[np.arange(space.n_sites), np.arange(space.n_sites)] += v
    ham.label = "anderson"
    ham.params = {
        "space": space_to_dict(space),
        "W": float(W),
        "seed": int(seed),
        "prng": _PRNG_NAME,
    }
    return ham


def build_cluster_laplacian(base: SiteSpace, J: int, D: int) -> Hamiltonian:
    """Direct sum of ``J`` copies of the base Laplacian, embedded at spacing ``D``.

    Copies are translated along the first axis so that consecutive copies sit
    at ambient sup-norm distance exactly ``D``; the operator is block diagonal
    by construction and its spectrum does not depend on ``D``.
    """
    if J < 2:
        raise OperatorError(f"need at least two copies, got J={J}")
    if D < 1:
        raise OperatorError(f"copy separation must be >= 1, got D={D} (copies would overlap)")
    if base.coords is None:
        raise OperatorError("base cluster must have integer coordinates (lattice or linear kind)")
    base_ham = build_laplacian(base)
    nb = base.n_sites
    extent = int(base.coords[:, 0].max() - base.coords[:, 0].min())
    step = extent + D

    blocks = []
    all_coords = []
    pairs = []
    for j in range(J):
        shift = np.zeros(base.coords.shape[1], dtype=np.int64)
        shift[0] = j * step
        all_coords.append(base.coords + shift)
        blocks.append((j * nb, (j + 1) * nb))
        for a, b in base.edge_list():
            pairs.append((j * nb + a, j * nb + b))
    coords = np.concatenate(all_coords, axis=0)
    try:
        space = lattice_subset(coords, adjacency_pairs=pairs, params={"J": J, "D": D})
    except GeometryError as exc:
        raise OperatorError(f"cluster copies overlap for D={D}: {exc}") from exc

    m = np.zeros((J * nb, J * nb))
    bm = base_ham.dense()
    for lo, hi in blocks:
        m[lo:hi, lo:hi] = bm
    return Hamiltonian(
        space,
        m,
        "cluster-laplacian",
        {
            "space": space_to_dict(space),
            "J": int(J),
            "D": int(D),
            "base": space_to_dict(base),
            "blocks": [[lo, hi] for lo, hi in blocks],
        },
    )


@dataclass(frozen=True)
class WeightOperator:
    """Diagonal weight ``T`` with values >= 1 and value 1 at the base site.

    ``kind == "polynomial"``: ``T(x) = (1 + d(x, base)^2) ** (kappa / 2)``
    with ``kappa > d/2`` so that ``sum T^{-2}`` stays bounded per unit volume.
    ``kind == "exponential"``: ``T(x) = exp(d(x, base) ** alpha)`` with
    ``alpha`` in (0, 1).
    """

    space: SiteSpace
    kind: str
    values: np.ndarray
    base_index: int
    kappa: float | None = None
    alpha: float | None = None

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.values * vec

    def apply_inv(self, vec: np.ndarray) -> np.ndarray:
        return vec / self.values

    @property
    def inv_sq_sum(self) -> float:
        return float(np.sum(self.values ** -2.0))


def build_weight(space: SiteSpace, kind: str = "polynomial", *, kappa: float | None = None,
                 alpha: float | None = None, base=None) -> WeightOperator:
    base_index = space.origin_index if base is None else space.index_of(base)
    r = space.distances_from(base_index).astype(float)
    if kind == "polynomial":
        if kappa is None:
            raise OperatorError("polynomial weight needs kappa")
        d = space.coords.shape[1] if space.coords is not None else 1
        if kappa <= d / 2.0:
            raise OperatorError(
                f"kappa={kappa} too small for d={d}: need kappa > d/2 so that "
                "sum over sites of T(x)^-2 converges per unit volume"
            )
        values = (1.0 + r ** 2) ** (kappa / 2.0)
        return WeightOperator(space, kind, values, base_index, kappa=float(kappa))
    if kind == "exponential":
        if alpha is None:
            raise OperatorError("exponential weight needs alpha")
        if not 0.0 < alpha < 1.0:
            raise OperatorError(f"alpha must lie in (0, 1), got {alpha}")
        values = np.exp(r ** alpha)
        return WeightOperator(space, kind, values, base_index, alpha=float(alpha))
    raise OperatorError(f"unknown weight kind {kind!r}")


def gershgorin_norm(ham: Hamiltonian) -> float:
    """Upper bound on the spectral norm: max row sum of absolute values."""
    if ham.is_sparse():
        return float(np.abs(ham.matrix).sum(axis=1).max())
    return float(np.abs(ham.matrix).sum(axis=1).max())


# -- operator files -----------------------------------------------------------
#
# Single text file: a JSON header line, then one "row,col,value" triplet per
# nonzero with row <= col (floats in round-trip repr).


def save_hamiltonian(ham: Hamiltonian, path) -> None:
    header = {
        "format": "loclab-operator",
        "version": 1,
        "label": ham.label,
        "dimension": ham.n,
        "params": {k: v for k, v in ham.params.items() if k != "space"},
        "space": space_to_dict(ham.space),
    }
    if ham.is_sparse():
        coo = ham.matrix.tocoo()
        entries = [(int(r), int(c), float(v)) for r, c, v in zip(coo.row, coo.col, coo.data) if r <= c]
    else:
        rows, cols = np.nonzero(ham.matrix)
        entries = [(int(r), int(c), float(ham.matrix[r, c])) for r, c in zip(rows, cols) if r <= c]
    entries.sort()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for r, c, v in entries:
            fh.write(f"{r},{c},{v!r}\n")


def load_hamiltonian(path) -> Hamiltonian:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise OperatorError(f"{path}: malformed JSON header") from exc
        if header.get("format") != "loclab-operator":
            raise OperatorError(f"{path}: not an operator file")
        n = int(header["dimension"])
        space = space_from_dict(header["space"])
        if space.n_sites != n:
            raise OperatorError(f"{path}: header dimension {n} does not match space")
        rows, cols, vals = [], [], []
        for lineno, line in enumerate(fh, start=2):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split(",")
            if len(parts) != 3:
                raise OperatorError(f"{path}:{lineno}: expected 'row,col,value'")
            r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
            if not (0 <= r < n and 0 <= c < n):
                raise OperatorError(f"{path}:{lineno}: index out of range")
            rows.append(r)
            cols.append(c)
            vals.append(v)
            if r != c:
                rows.append(c)
                cols.append(r)
                vals.append(v)
    ham = _finish(space, rows, cols, vals, header.get("label", "loaded"), header.get("params", {}))
    ham.params["space"] = header["space"]
    return ham
