"""Graph storage, text-format ingestion, imbalanced splits, BFS and partitioning."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (CapacityError, DimensionError, DomainError,
                     NodeIndexError, ParseError)

UNKNOWN = -1
UNREACHABLE = -1


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Graph:
    """Undirected, unweighted attributed graph.

    ``labels`` holds ``UNKNOWN`` (-1) for unlabeled nodes. All arrays are
    read-only once the graph is built.
    """

    features: np.ndarray
    adjacency: np.ndarray
    edges: np.ndarray
    labels: np.ndarray
    neighbors: tuple = field(repr=False)

    @classmethod
    def from_edges(cls, n_nodes, edges, features, labels=None):
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != n_nodes:
            raise DimensionError(
                f"features must have {n_nodes} rows, got shape {features.shape}")
        adj = np.zeros((n_nodes, n_nodes), dtype=np.float64)
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise NodeIndexError(f"edge ({u}, {v}) outside 0..{n_nodes - 1}")
            if u != v:
                adj[u, v] = adj[v, u] = 1.0
        iu, iv = np.nonzero(np.triu(adj, 1))
        edge_arr = np.stack([iu, iv], axis=1) if len(iu) else np.zeros((0, 2), dtype=np.int64)
        if labels is None:
            labels = np.full(n_nodes, UNKNOWN, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (n_nodes,):
            raise DimensionError(f"labels must have length {n_nodes}")
        nbrs = tuple(_frozen(np.nonzero(adj[i])[0]) for i in range(n_nodes))
        return cls(_frozen(features), _frozen(adj), _frozen(edge_arr.astype(np.int64)),
                   _frozen(labels), nbrs)

    @property
    def n_nodes(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        known = self.labels[self.labels != UNKNOWN]
        return int(known.max()) + 1 if len(known) else 0

    @property
    def degree(self):
        return self.adjacency.sum(axis=1).astype(np.int64)


def _data_lines(path):
    with open(path) as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield no, line


def load_graph(edges_path, features_path, labels_path):
    """Read a graph from the three plain-text files.

    Node ids are the row ids of the features file and must cover 0..N-1.
    Self-loops are dropped and duplicate edges collapse to one.
    """
    rows = {}
    width = None
    for no, line in _data_lines(features_path):
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ParseError(features_path, no, "expected 'id<TAB>f1,f2,...'")
        try:
            nid = int(parts[0])
            vec = [float(x) for x in parts[1].replace(" ", "").split(",")]
        except ValueError as exc:
            raise ParseError(features_path, no, str(exc)) from None
        if width is None:
            width = len(vec)
        elif len(vec) != width:
            raise DimensionError(
                f"{features_path}:{no}: feature width {len(vec)}, expected {width}")
        if nid in rows:
            raise ParseError(features_path, no, f"duplicate node id {nid}")
        rows[nid] = vec
    n = len(rows)
    if n == 0:
        raise ParseError(features_path, 0, "no feature rows")
    if sorted(rows) != list(range(n)):
        bad = next(i for i in sorted(rows) if i < 0 or i >= n)
        raise NodeIndexError(f"{features_path}: node id {bad} outside 0..{n - 1}")
    features = np.array([rows[i] for i in range(n)], dtype=np.float64)

    edges = []
    for no, line in _data_lines(edges_path):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(edges_path, no, "expected 'u<TAB>v'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(edges_path, no, str(exc)) from None
        for x in (u, v):
            if not 0 <= x < n:
                raise NodeIndexError(f"{edges_path}:{no}: node id {x} outside 0..{n - 1}")
        edges.append((u, v))

    labels = np.full(n, UNKNOWN, dtype=np.int64)
    for no, line in _data_lines(labels_path):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(labels_path, no, "expected 'id<TAB>class'")
        try:
            nid, cls = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(labels_path, no, str(exc)) from None
        if not 0 <= nid < n:
            raise NodeIndexError(f"{labels_path}:{no}: node id {nid} outside 0..{n - 1}")
        if cls < 0:
            raise ParseError(labels_path, no, f"negative class {cls}")
        labels[nid] = cls
    return Graph.from_edges(n, edges, features, labels)


def save_graph(graph, directory):
    """Write ``edges.tsv``, ``features.tsv`` and ``labels.tsv`` into *directory*."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "edges.tsv", "w") as fh:
        for u, v in graph.edges:
            fh.write(f"{u}\t{v}\n")
    with open(d / "features.tsv", "w") as fh:
        for i, row in enumerate(graph.features):
            fh.write(f"{i}\t" + ",".join(repr(float(x)) for x in row) + "\n")
    with open(d / "labels.tsv", "w") as fh:
        for i, y in enumerate(graph.labels):
            if y != UNKNOWN:
                fh.write(f"{i}\t{y}\n")
    return d / "edges.tsv", d / "features.tsv", d / "labels.tsv"


def imbalance_ratio(per_class_counts):
    """Smallest class count divided by the largest one."""
    if not per_class_counts:
        raise DomainError("imbalance ratio of an empty class map")
    counts = list(per_class_counts.values())
    if min(counts) < 1:
        raise DomainError("class counts must be >= 1")
    return min(counts) / max(counts)


def round_half_up(x):
    # tolerance absorbs products like 0.15 * 10 landing just under a half
    return int(math.floor(x + 0.5 + 1e-9))


@dataclass(frozen=True)
class ImbalancedSplit:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    minority_classes: frozenset
    per_class_train_count: dict
    im_ratio: float
    majority_count: int

    def train_of_class(self, labels, cls):
        return self.train[labels[self.train] == cls]


def make_imbalanced_split(graph, minority_classes, im_ratio, majority_count=20,
                          val_frac=0.5, seed=0):
    """Sample a class-imbalanced training set.

    Majority classes get ``majority_count`` training nodes, minority classes
    ``round(majority_count * im_ratio)``. The remaining labeled nodes are
    shuffled and divided into validation and test by ``val_frac``.
    """
    if not 0 < im_ratio <= 1:
        raise DomainError(f"im_ratio must lie in (0, 1], got {im_ratio}")
    labels = graph.labels
    m = graph.n_classes
    minority = frozenset(int(c) for c in minority_classes)
    for c in minority:
        if not 0 <= c < m:
            raise DomainError(f"minority class {c} not among classes 0..{m - 1}")
    minority_count = round_half_up(majority_count * im_ratio)
    if minority and minority_count < 1:
        raise DomainError(
            f"majority_count * im_ratio = {majority_count * im_ratio} rounds to 0")
    rng = np.random.default_rng(seed)
    train, rest, counts = [], [], {}
    for c in range(m):
        nodes = np.nonzero(labels == c)[0]
        need = minority_count if c in minority else majority_count
        if len(nodes) < need:
            raise CapacityError(c, need, len(nodes))
        nodes = rng.permutation(nodes)
        train.append(nodes[:need])
        rest.append(nodes[need:])
        counts[c] = need
    rest = rng.permutation(np.concatenate(rest))
    n_val = round_half_up(val_frac * len(rest))
    majority = [counts[c] for c in range(m) if c not in minority] or [majority_count]
    ratio = min(counts[c] for c in minority) / max(majority) if minority else 1.0
    return ImbalancedSplit(
        train=_frozen(np.sort(np.concatenate(train))),
        val=_frozen(np.sort(rest[:n_val])),
        test=_frozen(np.sort(rest[n_val:])),
        minority_classes=minority,
        per_class_train_count=counts,
        im_ratio=ratio,
        majority_count=majority_count,
    )


def bfs_shortest_paths(graph, source):
    """Hop distances from *source*; ``UNREACHABLE`` (-1) marks other components."""
    n = graph.n_nodes
    if not 0 <= source < n:
        raise NodeIndexError(f"source {source} outside 0..{n - 1}")
    dist = np.full(n, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    nbrs = graph.neighbors
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for v in nbrs[u]:
            if dist[v] == UNREACHABLE:
                dist[v] = du
                queue.append(v)
    return dist


def all_pairs_shortest_paths(graph):
    return np.stack([bfs_shortest_paths(graph, s) for s in range(graph.n_nodes)]) \
        if graph.n_nodes else np.zeros((0, 0), dtype=np.int64)


def components(graph):
    """Component id per node, numbered in order of smallest member."""
    comp = np.full(graph.n_nodes, -1, dtype=np.int64)
    cid = 0
    for s in range(graph.n_nodes):
        if comp[s] < 0:
            comp[bfs_shortest_paths(graph, s) != UNREACHABLE] = cid
            cid += 1
    return comp


def component_diameters(graph, dist=None):
    """Per-node diameter of the component containing that node."""
    if dist is None:
        dist = all_pairs_shortest_paths(graph)
    ecc = dist.max(axis=1)
    comp = components(graph)
    diam = np.zeros(graph.n_nodes, dtype=np.int64)
    for c in np.unique(comp):
        members = comp == c
        diam[members] = ecc[members].max()
    return diam


@dataclass(frozen=True)
class Partition:
    assignment: np.ndarray
    centers: tuple

    @property
    def T(self):
        return len(self.centers)

    def sizes(self):
        return np.bincount(self.assignment, minlength=self.T)


def partition_graph(graph, T, seed=0):
    """Split nodes into ``T`` balanced clusters by round-robin BFS growth.

    Seeds are chosen highest-degree first, skipping nodes adjacent to an
    already chosen seed while enough candidates remain. Each region grows
    one node per turn up to ``ceil(N / T)`` nodes; when every region is
    blocked the highest-degree unassigned node jumps into the smallest
    region. The center of each cluster is its highest-degree member.
    """
    n = graph.n_nodes
    if not 1 <= T <= n:
        raise DomainError(f"cluster count T={T} must lie in 1..{n}")
    deg = graph.degree
    rng = np.random.default_rng(seed)
    tiebreak = rng.permutation(n)
    order = sorted(range(n), key=lambda i: (-deg[i], tiebreak[i]))

    seeds = []
    for v in order:
        if len(seeds) == T:
            break
        if not any(graph.adjacency[v, s] for s in seeds):
            seeds.append(v)
    for v in order:
        if len(seeds) == T:
            break
        if v not in seeds:
            seeds.append(v)

    cap = math.ceil(n / T)
    assign = np.full(n, -1, dtype=np.int64)
    sizes = [0] * T
    queues = [deque() for _ in range(T)]

    def take(r, v):
        assign[v] = r
        sizes[r] += 1
        queues[r].extend(graph.neighbors[v])

    for r, s in enumerate(seeds):
        take(r, s)
    left = n - T
    while left:
        grew = False
        for r in range(T):
            if sizes[r] >= cap:
                continue
            q = queues[r]
            while q and assign[q[0]] >= 0:
                q.popleft()
            if q:
                take(r, q.popleft())
                left -= 1
                grew = True
                if not left:
                    break
        if not grew and left:
            v = min(np.nonzero(assign < 0)[0], key=lambda i: (-deg[i], i))
            r = min((r for r in range(T) if sizes[r] < cap), key=lambda r: (sizes[r], r))
            take(r, v)
            left -= 1

    centers = []
    for r in range(T):
        members = np.nonzero(assign == r)[0]
        centers.append(int(min(members, key=lambda i: (-deg[i], i))))
    return Partition(_frozen(assign), tuple(centers))


def generate_sbm(n_nodes=300, n_classes=3, p_in=0.05, p_out=0.005, n_features=16,
                 class_sep=1.0, noise=1.0, seed=0):
    """Stochastic block model with Gaussian class-conditional node features.

    Node ``i`` belongs to block ``i * n_classes // n_nodes``. Features are the
    block mean (drawn once from N(0, class_sep^2)) plus N(0, noise^2) noise.
    """
    if n_classes < 1 or n_nodes < n_classes:
        raise DomainError("need at least one node per class")
    rng = np.random.default_rng(seed)
    labels = np.arange(n_nodes) * n_classes // n_nodes
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, p_in, p_out)
    draw = rng.random((n_nodes, n_nodes))
    iu, iv = np.nonzero(np.triu(draw < prob, 1))
    means = rng.normal(0.0, class_sep, size=(n_classes, n_features))
    feats = means[labels] + rng.normal(0.0, noise, size=(n_nodes, n_features))
    return Graph.from_edges(n_nodes, zip(iu, iv), feats, labels)


_FIXTURE_EDGES = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6),
                  (6, 7), (5, 7), (7, 8), (8, 9), (1, 9), (3, 6)]


def fixture_graph():
    """Small fixed 10-node, 3-class graph used for gradient checks."""
    rng = np.random.default_rng(7)
    labels = np.array([0, 0, 0, 1, 1, 1, 2, 2, 0, 1])
    feats = rng.normal(size=(10, 6)) + np.eye(3, 6)[labels]
    return Graph.from_edges(10, _FIXTURE_EDGES, feats, labels)
