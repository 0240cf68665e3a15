import numpy as np
import pytest

import loclab as ll


@pytest.fixture(scope="session")
def anderson64():
    """Disordered 64-site chain used across modules; grouped projectors included."""
    space = ll.lattice_box(1, 64)
    sd = ll.group_projectors(ll.diagonalize(ll.build_anderson(space, 4.0, 1)))
    return sd


@pytest.fixture(scope="session")
def anderson64_window(anderson64):
    return ll.full_window(anderson64)


@pytest.fixture(scope="session")
def params_std():
    return ll.DecayParams(sigma=0.1, zeta=1.0, gamma=0.5)


@pytest.fixture(scope="session")
def free_chain_16():
    space = ll.lattice_box(1, 16)
    return ll.group_projectors(ll.diagonalize(ll.build_laplacian(space)))


@pytest.fixture(scope="session")
def cluster_j2_d12():
    base = ll.lattice_box(1, 4)
    ham = ll.build_cluster_laplacian(base, 2, 12)
    return ll.group_projectors(ll.diagonalize(ham))


def brute_bfs_distances(n, edges, start):
    """Reference hop distances by plain breadth-first search."""
    adj = {v: [] for v in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    dist = np.full(n, -1, dtype=int)
    dist[start] = 0
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    return dist
