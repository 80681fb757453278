"""Undirected contact networks, the family-network generator, and extraction
of conditionally independent alter-ego pairs.

Nodes are dense integer indices ``0 .. node_count - 1``. A :class:`Network`
is immutable once built; its adjacency is kept in CSR form for the epidemic
engine and as per-node neighbor arrays for the graph routines.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy import sparse


class EdgeListError(ValueError):
    """Raised for malformed edge-list files."""


class Network:
    """Undirected simple graph.

    Parameters
    ----------
    node_count : int
        Number of nodes.
    edges : array-like of shape (m, 2)
        Ties as index pairs. Order within a pair and duplicate entries are
        normalised away; self-ties are rejected.
    """

    def __init__(self, node_count: int, edges: Iterable = ()):
        node_count = int(node_count)
        if node_count < 0:
            raise ValueError("node_count must be non-negative")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                         dtype=np.int64)
        if arr.size == 0:
            arr = np.empty((0, 2), dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("edges must have shape (m, 2)")
        if arr.size and (arr.min() < 0 or arr.max() >= node_count):
            raise IndexError("edge endpoint outside [0, node_count)")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise ValueError("self-ties are not allowed")
        arr = np.sort(arr, axis=1)
        arr = np.unique(arr, axis=0)
        arr.setflags(write=False)
        self._node_count = node_count
        self._edges = arr

    @property
    def node_count(self) -> int:
        return self._node_count

    @property
    def edges(self) -> np.ndarray:
        """Read-only ``(m, 2)`` array of ties with ``i < j``, lexicographically sorted."""
        return self._edges

    @property
    def tie_count(self) -> int:
        return len(self._edges)

    @property
    def ties(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self._edges}

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        n = self._node_count
        i, j = self._edges[:, 0], self._edges[:, 1]
        data = np.ones(2 * len(i), dtype=np.int8)
        adj = sparse.csr_matrix(
            (data, (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n)
        )
        adj.sort_indices()
        return adj

    @cached_property
    def neighbors(self) -> list[np.ndarray]:
        adj = self.adjacency
        return [adj.indices[adj.indptr[k]:adj.indptr[k + 1]] for k in range(self._node_count)]

    def degree(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def has_tie(self, i: int, j: int) -> bool:
        return int(j) in set(self.neighbors[int(i)].tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self._node_count == other._node_count and np.array_equal(self._edges, other._edges)

    def __repr__(self) -> str:
        return f"Network(node_count={self._node_count}, ties={self.tie_count})"


@dataclass(frozen=True)
class AlterEgoPair:
    alter: int
    ego: int
    pair_id: int


@dataclass(frozen=True)
class Zone:
    pair_id: int
    members: frozenset[int]


def contacts(net: Network, i: int) -> frozenset[int]:
    """Return the set of nodes sharing a tie with ``i``."""
    if not 0 <= int(i) < net.node_count:
        raise IndexError(f"node {i} not in network of {net.node_count} nodes")
    return frozenset(int(k) for k in net.neighbors[int(i)])


def complete_graph(n: int) -> Network:
    iu, ju = np.triu_indices(n, k=1)
    return Network(n, np.column_stack([iu, ju]))


def disjoint_complete_graphs(sizes: Iterable[int]) -> tuple[Network, np.ndarray]:
    """Disjoint union of complete graphs.

    Returns the network and the starting node index of each block.
    """
    sizes = np.asarray(list(sizes), dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    blocks = []
    for start, size in zip(starts, sizes):
        iu, ju = np.triu_indices(int(size), k=1)
        blocks.append(np.column_stack([iu + start, ju + start]))
    edges = np.concatenate(blocks) if blocks else np.empty((0, 2), dtype=np.int64)
    return Network(int(sizes.sum()), edges), starts


def _pair_from_linear_index(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # Row-major enumeration of {(i, j): 0 <= i < j < n}.
    rows = np.arange(n, dtype=np.int64)
    row_start = rows * (2 * n - rows - 1) // 2
    idx = np.asarray(idx, dtype=np.int64)
    i = np.searchsorted(row_start, idx, side="right") - 1
    j = idx - row_start[i] + i + 1
    return i, j


def generate_family_network(
    num_groups: int,
    group_size: int,
    out_tie_prob: float,
    rng: np.random.Generator,
) -> Network:
    """Fully connected families joined by sparse random out-of-group ties.

    Each unordered pair of nodes in different groups is tied independently
    with probability ``out_tie_prob``, so a node has on average
    ``out_tie_prob * (n - group_size)`` out-of-group ties.
    """
    if num_groups < 1 or group_size < 1:
        raise ValueError("num_groups and group_size must be positive")
    if not 0.0 <= out_tie_prob <= 1.0:
        raise ValueError("out_tie_prob must lie in [0, 1]")
    n = num_groups * group_size
    family, _ = disjoint_complete_graphs([group_size] * num_groups)
    total_pairs = n * (n - 1) // 2
    # Bernoulli trial on every unordered pair, realised as a binomial count
    # plus a uniform subset; within-group hits are already ties.
    count = int(rng.binomial(total_pairs, out_tie_prob)) if total_pairs else 0
    if count == 0:
        return family
    chosen = rng.choice(total_pairs, size=count, replace=False)
    i, j = _pair_from_linear_index(chosen, n)
    out = (i // group_size) != (j // group_size)
    extra = np.column_stack([i[out], j[out]])
    return Network(n, np.concatenate([family.edges, extra]))


def scaled_out_tie_prob(node_count: int, reference_nodes: int = 10_000,
                        reference_prob: float = 1e-4, group_size: int = 5) -> float:
    """Out-of-group tie probability keeping the expected out-degree of the
    reference configuration."""
    return reference_prob * (reference_nodes - group_size) / (node_count - group_size)


def pair_zone(net: Network, a: int, e: int) -> frozenset[int]:
    nb = net.neighbors
    return frozenset({int(a), int(e)}) | frozenset(nb[a].tolist()) | frozenset(nb[e].tolist())


def extract_independent_pairs(
    net: Network, rng: np.random.Generator
) -> list[tuple[AlterEgoPair, Zone]]:
    """Randomized greedy maximal set of tied pairs with disjoint, non-adjacent zones.

    Ties are visited in a random order; a tie is kept when its zone (the two
    endpoints plus all of their contacts) shares no node with, and has no tie
    into, any zone already kept. The alter of each kept pair is chosen by a
    fair coin. Draws: one permutation of the tie list, then one uniform per
    kept pair in acceptance order.
    """
    edges = net.edges
    if len(edges) == 0:
        return []
    nb = net.neighbors
    order = rng.permutation(len(edges))
    # blocked[v]: v is in, or adjacent to, an accepted zone.
    blocked = np.zeros(net.node_count, dtype=bool)
    accepted: list[tuple[int, int, frozenset[int]]] = []
    for idx in order:
        u, v = int(edges[idx, 0]), int(edges[idx, 1])
        if blocked[u] or blocked[v]:
            continue
        zone_nodes = np.unique(np.concatenate([[u, v], nb[u], nb[v]]))
        if blocked[zone_nodes].any():
            continue
        blocked[zone_nodes] = True
        for w in zone_nodes:
            blocked[nb[w]] = True
        accepted.append((u, v, frozenset(zone_nodes.tolist())))
    coins = rng.random(len(accepted))
    result = []
    for pair_id, ((u, v, members), coin) in enumerate(zip(accepted, coins)):
        alter, ego = (u, v) if coin < 0.5 else (v, u)
        result.append((AlterEgoPair(alter, ego, pair_id), Zone(pair_id, members)))
    return result


def _bfs_distances(net: Network, sources: Iterable[int], limit: int) -> dict[int, int]:
    dist = {int(s): 0 for s in sources}
    queue = deque(dist)
    nb = net.neighbors
    while queue:
        x = queue.popleft()
        if dist[x] >= limit:
            continue
        for y in nb[x]:
            y = int(y)
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def pairs_are_independent(net: Network, pairs: list[tuple[AlterEgoPair, Zone]]) -> bool:
    """Exhaustive check via zones: disjoint and no tie between any two zones."""
    owner = {}
    for pair, zone in pairs:
        if zone.members != pair_zone(net, pair.alter, pair.ego):
            return False
        if not net.has_tie(pair.alter, pair.ego):
            return False
        for v in zone.members:
            if v in owner:
                return False
            owner[v] = pair.pair_id
    for pair, zone in pairs:
        for v in zone.members:
            for w in net.neighbors[v]:
                o = owner.get(int(w))
                if o is not None and o != pair.pair_id:
                    return False
    return True


def pairs_are_distance_separated(net: Network, pairs: list[tuple[AlterEgoPair, Zone]],
                                 min_distance: int = 4) -> bool:
    """Check via BFS that every two pairs are at graph distance >= ``min_distance``."""
    node_pair = {}
    for pair, _ in pairs:
        node_pair[pair.alter] = pair.pair_id
        node_pair[pair.ego] = pair.pair_id
    for pair, _ in pairs:
        dist = _bfs_distances(net, (pair.alter, pair.ego), min_distance - 1)
        for v in dist:
            o = node_pair.get(v)
            if o is not None and o != pair.pair_id:
                return False
    return True


def is_maximal(net: Network, pairs: list[tuple[AlterEgoPair, Zone]]) -> bool:
    """True when no remaining tie could be added without breaking independence."""
    blocked = np.zeros(net.node_count, dtype=bool)
    for _, zone in pairs:
        for v in zone.members:
            blocked[v] = True
            blocked[net.neighbors[v]] = True
    taken = {frozenset((p.alter, p.ego)) for p, _ in pairs}
    for u, v in net.edges:
        if frozenset((int(u), int(v))) in taken:
            continue
        if not blocked[list(pair_zone(net, int(u), int(v)))].any():
            return False
    return True


def nearby_pairs(net: Network, pairs: Iterable[AlterEgoPair], max_gap: int = 2) -> np.ndarray:
    """Index pairs ``(k, h)``, ``k < h``, of pairs whose zones lie within ``max_gap`` hops.

    Indices refer to positions in ``pairs``. Extracted zones are never
    adjacent, so ``max_gap`` must be at least 2 to find anything.
    """
    pairs = list(pairs)
    K, n = len(pairs), net.node_count
    if K < 2:
        return np.empty((0, 2), dtype=np.int64)
    rows, cols = [], []
    for k, p in enumerate(pairs):
        members = pair_zone(net, p.alter, p.ego)
        rows.extend([k] * len(members))
        cols.extend(members)
    Z = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(K, n))
    step = (net.adjacency.astype(float) + sparse.identity(n, format="csr")).tocsr()
    reach = Z
    for _ in range(max_gap):
        reach = (reach @ step).astype(bool).astype(float)
    close = sparse.triu(reach @ Z.T, k=1).tocoo()
    out = np.column_stack([close.row, close.col]).astype(np.int64)
    return out[np.lexsort((out[:, 1], out[:, 0]))]


def save_edge_list(net: Network, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{net.node_count}\n")
        for i, j in net.edges:
            fh.write(f"{i} {j}\n")


def load_edge_list(path: str | os.PathLike) -> Network:
    """Read the edge-list format: node count, then one ``i j`` (``i < j``) per line.

    Lines starting with ``#`` and blank lines are skipped.
    """
    node_count = None
    edges = []
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if node_count is None:
                if len(parts) != 1 or not parts[0].isdigit():
                    raise EdgeListError(f"line {lineno}: expected node count, got {line!r}")
                node_count = int(parts[0])
                continue
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise EdgeListError(f"line {lineno}: expected 'i j', got {line!r}")
            i, j = int(parts[0]), int(parts[1])
            if i == j:
                raise EdgeListError(f"line {lineno}: self-tie {i} {j}")
            if i > j:
                raise EdgeListError(f"line {lineno}: expected i < j, got {i} {j}")
            if j >= node_count:
                raise EdgeListError(f"line {lineno}: index {j} out of range for {node_count} nodes")
            edges.append((i, j))
    if node_count is None:
        raise EdgeListError("missing node-count header")
    return Network(node_count, np.array(edges, dtype=np.int64).reshape(-1, 2))
