"""Synthetic minority nodes by same-class interpolation of embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingletonClassError
from .graph import round_half_up


@dataclass(frozen=True)
class SyntheticSet:
    """Generated nodes; row ``i`` comes from ``sources[i]``, ``partners[i]`` and ``deltas[i]``."""

    features: np.ndarray
    labels: np.ndarray
    sources: np.ndarray
    partners: np.ndarray
    deltas: np.ndarray

    def __len__(self):
        return len(self.labels)

    @property
    def source_pairs(self):
        return list(zip(self.sources.tolist(), self.partners.tolist(), self.deltas.tolist()))

    def mixing_matrix(self, n_nodes):
        """``M`` with ``M @ H`` equal to the synthetic rows for any real-node matrix ``H``."""
        M = np.zeros((len(self), n_nodes))
        rows = np.arange(len(self))
        np.add.at(M, (rows, self.sources), 1.0 - self.deltas)
        np.add.at(M, (rows, self.partners), self.deltas)
        return M


def nearest_neighbor(v, embeddings, labels, candidate_set):
    """Closest same-class candidate to ``v`` (Euclidean); ties go to the smallest id."""
    cands = np.array(sorted(int(u) for u in candidate_set
                            if u != v and labels[u] == labels[v]), dtype=np.int64)
    if len(cands) == 0:
        raise SingletonClassError(f"node {v} has no same-class candidate")
    diff = embeddings[cands] - embeddings[v]
    dist = np.einsum("ij,ij->i", diff, diff)
    return int(cands[np.argmin(dist)])


def mixup_node(h_v, h_nn, delta):
    if not 0.0 <= delta <= 1.0:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    h_v = np.asarray(h_v, dtype=np.float64)
    h_nn = np.asarray(h_nn, dtype=np.float64)
    if h_v.shape != h_nn.shape:
        raise DomainError("mixup operands differ in shape")
    return (1.0 - delta) * h_v + delta * h_nn


def synthetic_counts(split, scales):
    out = {}
    for c in sorted(split.minority_classes):
        if scales[c] < 0:
            raise DomainError(f"negative upsampling scale for class {c}")
        out[c] = round_half_up(split.per_class_train_count[c] * scales[c])
    return out


def generate_synthetic_set(embeddings, labels, split, scales, seed=0):
    """Emit ``round(|C_i| * alpha_i)`` interpolated nodes per minority class.

    Sources cycle over the class's training nodes in a seeded shuffled
    order; each draws a fresh ``delta ~ U[0, 1]``. A class with a single
    training node duplicates it (``delta = 0``).
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    rng = np.random.default_rng(seed)
    train = np.asarray(split.train)
    srcs, parts, deltas, ys = [], [], [], []
    for c, count in synthetic_counts(split, scales).items():
        if count == 0:
            continue
        members = train[labels[train] == c]
        order = rng.permutation(members)
        nn_cache = {}
        for i in range(count):
            v = int(order[i % len(order)])
            if v not in nn_cache:
                try:
                    nn_cache[v] = nearest_neighbor(v, embeddings, labels, members)
                except SingletonClassError:
                    nn_cache[v] = None
            partner = nn_cache[v]
            d = rng.random()
            if partner is None:
                partner, d = v, 0.0
            srcs.append(v)
            parts.append(partner)
            deltas.append(d)
            ys.append(c)
    srcs = np.array(srcs, dtype=np.int64)
    parts = np.array(parts, dtype=np.int64)
    deltas = np.array(deltas, dtype=np.float64)
    if len(srcs):
        feats = (1.0 - deltas)[:, None] * embeddings[srcs] + deltas[:, None] * embeddings[parts]
    else:
        feats = np.zeros((0, embeddings.shape[1]))
    return SyntheticSet(feats, np.array(ys, dtype=np.int64), srcs, parts, deltas)
