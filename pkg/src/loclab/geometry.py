"""Site spaces: finite lattice boxes, embedded subsets, graphs, and index chains.

Every space carries a dense ``0..n-1`` site indexing, an integer metric, and
the nearest-neighbour adjacency that the discrete operators are assembled
from.  Lattice-like kinds measure distance in the sup norm of integer
coordinates; graph kinds use hop counts.  Spaces are immutable after
construction and cache metric rows per base site.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeometryError",
    "SiteSpace",
    "GrowthProfile",
    "lattice_box",
    "lattice_subset",
    "graph_space",
    "linear_chain",
    "build_site_space",
    "indicator",
    "sphere_census",
    "read_edge_file",
    "binary_tree_edges",
    "polynomial_tree_edges",
    "space_to_dict",
    "space_from_dict",
]

_COORD_LIMIT = 1 << 20  # per-axis bound so coordinates pack into 63 bits


class GeometryError(ValueError):
    """Invalid site-space construction or query."""


def _as_coord(site, d: int) -> tuple[int, ...]:
    if isinstance(site, (int, np.integer)):
        if d != 1:
            raise GeometryError(f"scalar site label needs a 1-d space, got d={d}")
        return (int(site),)
    tup = tuple(int(c) for c in site)
    if len(tup) != d:
        raise GeometryError(f"site {site!r} has {len(tup)} coordinates, expected {d}")
    return tup


class SiteSpace:
    """Finite set of sites with an integer metric and an adjacency.

    Kinds:

    - ``"lattice"``: a box of side ``L`` in ``Z^d``, sup-norm metric.
    - ``"lattice-subset"``: an arbitrary set of integer coordinates with the
      ambient sup-norm metric (used for separated-cluster embeddings).
    - ``"graph"``: a connected undirected graph, hop-count metric.
    - ``"linear"``: indices ``0..n-1`` with metric ``|i-j|``.

    Sites are addressed either by their dense index (``metric_by_index``,
    ``distances_from``) or by their label: a coordinate tuple for lattice
    kinds (a plain int is accepted when ``d == 1``) and a vertex index for
    graph/linear kinds.
    """

    def __init__(self, kind, coords, adjacency, params):
        self.kind = kind
        self.coords = coords
        self.params = dict(params)
        self._adj = adjacency
        self._dist_cache: dict[int, np.ndarray] = {}
        if coords is not None:
            self.d = coords.shape[1]
            if np.abs(coords).max(initial=0) >= _COORD_LIMIT:
                raise GeometryError("coordinates exceed the supported range")
            self._coord_index = {tuple(int(c) for c in row): i for i, row in enumerate(coords)}
            if len(self._coord_index) != len(coords):
                raise GeometryError("duplicate coordinates in site set")
            self._n = len(coords)
        else:
            self.d = 1
            self._coord_index = None
            self._n = len(adjacency)

    # -- indexing ---------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return self._n

    def index_of(self, site) -> int:
        """Dense index of a site label."""
        if self.coords is None or self.kind == "linear":
            i = int(site) if not isinstance(site, tuple) else int(site[0])
            if self.kind == "linear":
                hit = self._coord_index.get((i,))
                if hit is None:
                    raise GeometryError(f"site {site!r} not in space")
                return hit
            if not 0 <= i < self._n:
                raise GeometryError(f"vertex {i} out of range 0..{self._n - 1}")
            return i
        tup = _as_coord(site, self.d)
        hit = self._coord_index.get(tup)
        if hit is None:
            raise GeometryError(f"site {site!r} not in space")
        return hit

    def site_of(self, i: int):
        if not 0 <= i < self._n:
            raise GeometryError(f"index {i} out of range 0..{self._n - 1}")
        if self.coords is None:
            return i
        row = self.coords[i]
        return int(row[0]) if self.d == 1 else tuple(int(c) for c in row)

    @property
    def origin_index(self) -> int:
        """Base site used for weights and censuses.

        Lattice kinds: the site with the smallest sup norm (ties broken by
        index order).  Graph and linear kinds: vertex 0.
        """
        if self.coords is None:
            return 0
        norms = np.abs(self.coords).max(axis=1)
        return int(np.argmin(norms))

    # -- metric -----------------------------------------------------------

    def distances_from(self, i: int) -> np.ndarray:
        """Metric row ``d(i, .)`` as an int array of length n_sites."""
        row = self._dist_cache.get(i)
        if row is not None:
            return row
        if self.coords is not None:
            row = np.abs(self.coords - self.coords[i]).max(axis=1).astype(np.int64)
        else:
            row = self._bfs(i)
        row.setflags(write=False)
        self._dist_cache[i] = row
        return row

    def _bfs(self, start: int) -> np.ndarray:
        dist = np.full(self._n, -1, dtype=np.int64)
        dist[start] = 0
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in self._adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        if (dist < 0).any():
            stranded = np.flatnonzero(dist < 0)[:8].tolist()
            raise GeometryError(f"graph is disconnected; vertices {stranded} unreachable from {start}")
        return dist

    def metric_by_index(self, i: int, j: int) -> int:
        if self.coords is not None:
            return int(np.abs(self.coords[i] - self.coords[j]).max())
        return int(self.distances_from(i)[j])

    def metric(self, a, b) -> int:
        return self.metric_by_index(self.index_of(a), self.index_of(b))

    def diameter(self) -> int:
        if self.coords is not None:
            return int((self.coords.max(axis=0) - self.coords.min(axis=0)).max(initial=0))
        return max(int(self.distances_from(i).max()) for i in range(self._n))

    # -- adjacency ---------------------------------------------------------

    def neighbors(self, i: int) -> np.ndarray:
        return self._adj[i]

    def edge_list(self) -> list[tuple[int, int]]:
        out = []
        for i in range(self._n):
            for j in self._adj[i]:
                if i < j:
                    out.append((i, int(j)))
        return out

    # -- boxes -------------------------------------------------------------

    def ball(self, i: int, L: int) -> np.ndarray:
        """Indices of the indicator box of side ``L`` around site ``i``.

        Lattice kinds take the box ``[x_k - (L-1)//2, x_k + L//2]`` per axis,
        clipped to the space (side L, exactly ``{i}`` when ``L == 1``); graph
        kinds take the metric ball of radius ``L // 2``.
        """
        if L < 1:
            raise GeometryError(f"box side must be >= 1, got {L}")
        if self.coords is not None:
            lo = self.coords[i] - (L - 1) // 2
            hi = lo + L - 1
            mask = ((self.coords >= lo) & (self.coords <= hi)).all(axis=1)
            return np.flatnonzero(mask)
        return np.flatnonzero(self.distances_from(i) <= L // 2)

    def __repr__(self):
        return f"SiteSpace(kind={self.kind!r}, n={self._n})"


# -- constructors -----------------------------------------------------------


def _lattice_adjacency(coords: np.ndarray, coord_index) -> tuple[np.ndarray, ...]:
    n, d = coords.shape
    adj: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        base = coords[i]
        for k in range(d):
            for step in (-1, 1):
                probe = base.copy()
                probe[k] += step
                j = coord_index.get(tuple(int(c) for c in probe))
                if j is not None:
                    adj[i].append(j)
    return tuple(np.array(sorted(a), dtype=np.int64) for a in adj)


def lattice_box(d: int, L: int, center=None) -> SiteSpace:
    """Box of side ``L`` in ``Z^d`` centred at ``center`` (default origin).

    The box spans ``center - (L-1)//2 .. center + L//2`` per axis, so it has
    exactly ``L**d`` sites and contains the centre coordinate.
    """
    if d not in (1, 2, 3):
        raise GeometryError(f"lattice dimension must be 1, 2 or 3, got {d}")
    if L < 1:
        raise GeometryError(f"box side must be >= 1, got {L}")
    if center is None:
        center = (0,) * d
    c = _as_coord(center, d)
    axes = [np.arange(c[k] - (L - 1) // 2, c[k] + L // 2 + 1, dtype=np.int64) for k in range(d)]
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    space = SiteSpace("lattice", coords, None, {"d": d, "L": L, "center": list(c)})
    space._adj = _lattice_adjacency(coords, space._coord_index)
    return space


def lattice_subset(coords, adjacency_pairs=None, params=None) -> SiteSpace:
    """Arbitrary integer coordinates with the ambient sup-norm metric.

    ``adjacency_pairs`` overrides the nearest-neighbour adjacency (used by
    cluster embeddings to keep copies decoupled).
    """
    coords = np.asarray(coords, dtype=np.int64)
    if coords.ndim != 2 or len(coords) == 0:
        raise GeometryError("coordinate array must be (n, d) with n >= 1")
    space = SiteSpace("lattice-subset", coords, None, params or {"n": len(coords)})
    if adjacency_pairs is None:
        space._adj = _lattice_adjacency(coords, space._coord_index)
    else:
        adj: list[list[int]] = [[] for _ in range(len(coords))]
        for i, j in adjacency_pairs:
            adj[i].append(j)
            adj[j].append(i)
        space._adj = tuple(np.array(sorted(a), dtype=np.int64) for a in adj)
    return space


def graph_space(n: int, edges) -> SiteSpace:
    """Connected undirected graph on vertices ``0..n-1`` with hop metric."""
    if n < 1:
        raise GeometryError(f"need at least one vertex, got n={n}")
    adj: list[set[int]] = [set() for _ in range(n)]
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if not (0 <= u < n and 0 <= v < n):
            raise GeometryError(f"edge ({u}, {v}) out of range for n={n}")
        if u == v:
            raise GeometryError(f"self-loop at vertex {u}")
        adj[u].add(v)
        adj[v].add(u)
    space = SiteSpace(
        "graph", None,
        tuple(np.array(sorted(a), dtype=np.int64) for a in adj),
        {"n": n, "edges": sorted((min(int(a), int(b)), max(int(a), int(b))) for a, b in edges)},
    )
    space.distances_from(0)  # connectivity check
    return space


def linear_chain(n: int) -> SiteSpace:
    """Indices ``0..n-1`` with metric ``|i - j|`` and chain adjacency."""
    if n < 1:
        raise GeometryError(f"need at least one site, got n={n}")
    coords = np.arange(n, dtype=np.int64)[:, None]
    adj = tuple(
        np.array([j for j in (i - 1, i + 1) if 0 <= j < n], dtype=np.int64)
        for i in range(n)
    )
    return SiteSpace("linear", coords, adj, {"n": n})


def build_site_space(spec: dict) -> SiteSpace:
    """Dispatch on ``spec["kind"]``; used by config-driven entry points."""
    kind = spec.get("kind")
    if kind == "lattice":
        return lattice_box(spec["d"], spec["L"], spec.get("center"))
    if kind == "graph":
        if "edge_file" in spec:
            n, edges = read_edge_file(spec["edge_file"])
            return graph_space(n, edges)
        return graph_space(spec["n"], spec["edges"])
    if kind == "linear":
        return linear_chain(spec["n"])
    if kind == "lattice-subset":
        return lattice_subset(spec["coords"], spec.get("adjacency_pairs"))
    raise GeometryError(f"unknown space kind {kind!r}")


def space_to_dict(space: SiteSpace) -> dict:
    if space.kind == "lattice":
        return {"kind": "lattice", **space.params}
    if space.kind == "graph":
        return {"kind": "graph", "n": space.n_sites, "edges": space.params["edges"]}
    if space.kind == "linear":
        return {"kind": "linear", "n": space.n_sites}
    return {
        "kind": "lattice-subset",
        "coords": space.coords.tolist(),
        "adjacency_pairs": space.edge_list(),
    }


def space_from_dict(d: dict) -> SiteSpace:
    return build_site_space(d)


def indicator(space: SiteSpace, site, L: int = 1) -> np.ndarray:
    """Site indices of the box of side ``L`` around ``site``."""
    return space.ball(space.index_of(site), L)


# -- growth census -----------------------------------------------------------


@dataclass(frozen=True)
class GrowthProfile:
    """Sphere counts around a base site and the fitted growth exponent.

    ``beta_fit`` is the least-squares slope of ``log log N_L`` against
    ``log L`` over radii with at least two sites.  ``beta_envelope`` is the
    smallest exponent that certifies ``N_L <= exp(L**beta)`` at every sampled
    radius; the moderate-growth verdict requires both to stay below one.
    """

    base_index: int
    radii: np.ndarray
    sphere_counts: np.ndarray
    beta_fit: float
    beta_envelope: float
    passes_moderate_growth: bool
    truncated: bool


def sphere_census(space: SiteSpace, u, L_max: int) -> GrowthProfile:
    """Count metric spheres ``N_L = #{x : d(x, u) = L}`` for ``L = 1..L_max``."""
    if L_max < 1:
        raise GeometryError(f"L_max must be >= 1, got {L_max}")
    ui = space.index_of(u)
    dist = space.distances_from(ui)
    radii = np.arange(1, L_max + 1)
    counts = np.bincount(dist, minlength=L_max + 1)[1:L_max + 1].astype(np.int64)
    truncated = L_max > int(dist.max(initial=0))

    fit_mask = counts >= 2
    if fit_mask.sum() >= 2:
        lx = np.log(radii[fit_mask].astype(float))
        ly = np.log(np.log(counts[fit_mask].astype(float)))
        beta_fit = float(np.polyfit(lx, ly, 1)[0])
    else:
        beta_fit = 0.0

    # pointwise requirement for N_L <= exp(L**beta): beta >= loglog N / log L
    beta_env = 0.0
    for L, c in zip(radii, counts):
        if c < 2:
            continue
        if L == 1:
            if c > np.e:
                beta_env = np.inf
            continue
        beta_env = max(beta_env, float(np.log(np.log(c)) / np.log(L)))

    # an exactly exponential profile fits slope 1 up to rounding; the strict
    # gate must not pass on that noise
    gate = max(beta_fit, beta_env)
    return GrowthProfile(
        base_index=ui,
        radii=radii,
        sphere_counts=counts,
        beta_fit=beta_fit,
        beta_envelope=beta_env,
        passes_moderate_growth=bool(np.isfinite(gate) and gate < 1.0 - 1e-9),
        truncated=truncated,
    )


# -- file format and tree builders -------------------------------------------


def read_edge_file(path) -> tuple[int, list[tuple[int, int]]]:
    """Read an edge list: one ``u v`` pair of 0-based vertex ids per line."""
    edges = []
    top = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise GeometryError(f"{path}:{lineno}: expected 'u v', got {stripped!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise GeometryError(f"{path}:{lineno}: non-integer vertex id") from exc
            if u < 0 or v < 0:
                raise GeometryError(f"{path}:{lineno}: vertex ids must be >= 0")
            edges.append((u, v))
            top = max(top, u, v)
    if not edges:
        raise GeometryError(f"{path}: no edges")
    return top + 1, edges


def binary_tree_edges(depth: int) -> tuple[int, list[tuple[int, int]]]:
    """Rooted binary tree with levels ``0..depth``; root is vertex 0."""
    if depth < 1:
        raise GeometryError("depth must be >= 1")
    n = 2 ** (depth + 1) - 1
    edges = [(v, (v - 1) // 2) for v in range(1, n)]
    return n, edges


def polynomial_tree_edges(depth: int, power: int = 2) -> tuple[int, list[tuple[int, int]]]:
    """Rooted tree whose level ``L`` holds ``L**power`` vertices.

    Children are assigned round-robin to the previous level, so the sphere
    count around the root is exactly ``L**power``.
    """
    if depth < 1:
        raise GeometryError("depth must be >= 1")
    edges = []
    prev = [0]
    nxt = 1
    for level in range(1, depth + 1):
        size = max(1, level ** power)
        cur = list(range(nxt, nxt + size))
        for j, v in enumerate(cur):
            edges.append((v, prev[j % len(prev)]))
        prev = cur
        nxt += size
    return nxt, edges
