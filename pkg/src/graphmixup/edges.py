"""Edge predictor, its two path-based pretext tasks, and synthetic edge generation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tape
from .errors import DimensionError, DomainError
from .graph import (UNREACHABLE, Graph, all_pairs_shortest_paths,
                    component_diameters)
from .ndmath import init_uniform, sigmoid
from .tape import Tensor, affine

N_PATH_CATEGORIES = 4


def default_cluster_count(n_classes):
    return max(2, round(math.sqrt(n_classes) * 2))


def init_edge_predictor(rng, in_dim, z_dim, T):
    return {
        "W_bar": init_uniform(rng, (z_dim, in_dim)),
        "local_W": init_uniform(rng, (N_PATH_CATEGORIES, z_dim)),
        "local_b": init_uniform(rng, (N_PATH_CATEGORIES,), fan_in=z_dim),
        "global_W": init_uniform(rng, (T, z_dim)),
        "global_b": init_uniform(rng, (T,), fan_in=z_dim),
    }


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def edge_scores(H, tp):
    """Return ``(Z, A_hat)`` with ``Z = H W_bar^T`` and ``A_hat = sigmoid(Z Z^T)``."""
    Z = affine(_lift(H), tp["W_bar"])
    return Z, (Z @ Z.T).sigmoid()


def reconstruction_loss(A_hat, A, reduction="sum"):
    """Squared Frobenius distance.

    ``reduction="node"`` divides by the node count (the scale of the other
    per-node pretext losses) and ``"mean"`` by the entry count.
    """
    A = np.asarray(A, dtype=np.float64)
    plain = not isinstance(A_hat, Tensor)
    A_hat = _lift(A_hat)
    if A_hat.shape != A.shape:
        raise DimensionError(f"A_hat {A_hat.shape} vs A {A.shape}")
    loss = (A_hat - A).square().sum()
    if reduction == "mean":
        loss = loss * (1.0 / A.size)
    elif reduction == "node":
        loss = loss * (1.0 / A.shape[0])
    elif reduction != "sum":
        raise DomainError(f"unknown reduction '{reduction}'")
    return float(loss.value) if plain else loss


def truncate_distance(d):
    """Shortest-path length to category: 1->0, 2->1, 3->2, >=4 or unreachable->3."""
    if d is None or d == UNREACHABLE:
        return 3
    if d < 1:
        raise DomainError("self-pair has no path category")
    return min(int(d), 4) - 1


def truncate_distances(d):
    d = np.asarray(d, dtype=np.int64)
    if np.any(d == 0):
        raise DomainError("self-pair has no path category")
    return np.where(d == UNREACHABLE, 3, np.minimum(d, 4) - 1)


@dataclass(frozen=True)
class PairSample:
    pairs: np.ndarray
    categories: np.ndarray

    def __len__(self):
        return len(self.categories)


def sample_pairs(dist, n_pairs, rng):
    """Stratified node-pair sample for the local path task.

    Pairs are drawn uniformly (no self-pairs) until every category holds at
    least ``n_pairs / 8`` members or ``20 * n_pairs`` pairs were drawn. The
    result takes up to that quota from each category first, then fills to
    ``n_pairs`` in draw order.
    """
    n = dist.shape[0]
    if n < 2 or n_pairs < 1:
        raise DomainError("pair sampling needs >= 2 nodes and >= 1 pair")
    quota = math.ceil(n_pairs / 8)
    us, vs, cats = [], [], []
    counts = np.zeros(N_PATH_CATEGORIES, dtype=np.int64)
    drawn = 0
    while drawn < 20 * n_pairs:
        u = rng.integers(0, n, size=n_pairs)
        v = rng.integers(0, n - 1, size=n_pairs)
        v = v + (v >= u)
        c = truncate_distances(dist[u, v])
        us.append(u)
        vs.append(v)
        cats.append(c)
        counts += np.bincount(c, minlength=N_PATH_CATEGORIES)
        drawn += n_pairs
        if counts.min() >= quota:
            break
    u, v, c = np.concatenate(us), np.concatenate(vs), np.concatenate(cats)
    chosen = np.zeros(len(c), dtype=bool)
    for k in range(N_PATH_CATEGORIES):
        chosen[np.nonzero(c == k)[0][:quota]] = True
    missing = n_pairs - int(chosen.sum())
    if missing > 0:
        chosen[np.nonzero(~chosen)[0][:missing]] = True
    idx = np.nonzero(chosen)[0][:n_pairs]
    return PairSample(np.stack([u[idx], v[idx]], axis=1), c[idx])


def local_path_loss(Z, sample, tp):
    """Mean 4-way cross-entropy on ``|z_v - z_u|`` against path categories."""
    if len(sample) == 0:
        raise DomainError("empty pair sample")
    Z = _lift(Z)
    diff = (Z[sample.pairs[:, 0]] - Z[sample.pairs[:, 1]]).abs()
    logits = affine(diff, tp["local_W"], tp["local_b"])
    return tape.cross_entropy(logits, sample.categories)


def anchor_targets(graph, partition, dist=None):
    """Distance from every node to every cluster center (N x T).

    Unreachable centers get the diameter of the node's component plus one.
    """
    if dist is None:
        dist = all_pairs_shortest_paths(graph)
    centers = np.asarray(partition.centers)
    l = dist[:, centers].astype(np.float64)
    fill = (component_diameters(graph, dist) + 1).astype(np.float64)
    unreachable = l == UNREACHABLE
    l[unreachable] = np.broadcast_to(fill[:, None], l.shape)[unreachable]
    return l


def global_path_loss(Z, targets, tp):
    """Mean over nodes of the squared error of the predicted anchor-distance vector."""
    pred = affine(_lift(Z), tp["global_W"], tp["global_b"])
    return (pred - targets).square().sum() * (1.0 / targets.shape[0])


def edge_total_loss(rec, local, glob, use_local=True, use_global=True):
    total = rec
    if use_local:
        total = total + local
    if use_global:
        total = total + glob
    return total


def synthesize_edges(A, scores, mode="continuous", eta=0.5):
    """Extend ``A`` with rows/columns for synthetic nodes.

    ``scores`` is S x N (synthetic vs real). Continuous mode copies scores;
    binary mode keeps 1 where ``score > eta``. The real block is ``A``
    unchanged, synthetic-synthetic entries are 0, and the result is symmetric.
    """
    A = np.asarray(A, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1, A.shape[0])
    if mode == "binary":
        if not 0.0 < eta < 1.0:
            raise DomainError(f"threshold eta must lie in (0, 1), got {eta}")
        block = (scores > eta).astype(np.float64)
    elif mode == "continuous":
        block = scores
    else:
        raise DomainError(f"unknown edge mode '{mode}'")
    n, s = A.shape[0], scores.shape[0]
    A_N = np.zeros((n + s, n + s))
    A_N[:n, :n] = A
    A_N[n:, :n] = block
    A_N[:n, n:] = block.T
    return A_N


def synthetic_edge_scores(H_syn, H_real, W_bar):
    """Sigmoid inner products between synthetic and real nodes in z-space."""
    Zs = np.asarray(H_syn) @ W_bar.T
    Zr = np.asarray(H_real) @ W_bar.T
    return sigmoid(Zs @ Zr.T)


def holdout_edges(graph, frac=0.1, seed=0):
    """Hide a fraction of edges for link-prediction evaluation.

    Returns ``(train_graph, positives, negatives)`` where negatives are an
    equal number of node pairs that are not edges of the original graph.
    """
    rng = np.random.default_rng(seed)
    m = len(graph.edges)
    n_hold = max(1, int(round(frac * m)))
    perm = rng.permutation(m)
    pos = graph.edges[perm[:n_hold]]
    keep = graph.edges[perm[n_hold:]]
    n = graph.n_nodes
    neg = set()
    while len(neg) < n_hold:
        u, v = sorted(rng.integers(0, n, size=2).tolist())
        if u != v and not graph.adjacency[u, v]:
            neg.add((u, v))
    neg = np.array(sorted(neg), dtype=np.int64)
    train = Graph.from_edges(n, keep, graph.features, graph.labels)
    return train, pos, neg
