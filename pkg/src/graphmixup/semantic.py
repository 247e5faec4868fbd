"""Semantic feature extractor.

Learns ``K`` weighted relation graphs over the input topology, keeps them
apart with a descriptor-based disentanglement loss, and aggregates node
features separately inside each relation before concatenating them.

Model functions take a dict of :class:`~graphmixup.tape.Tensor` parameters
(see :func:`as_tensors`) and return tensors; read ``.value`` for arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tape
from .ndmath import init_uniform
from .tape import Tensor, affine


def init_extractor(rng, n_features, hidden=32, K=4, L=1, desc_dim=None):
    desc_dim = hidden if desc_dim is None else desc_dim
    p = {
        "W_h": init_uniform(rng, (hidden, n_features)),
        "omega_W": init_uniform(rng, (K, 2 * hidden)),
        "omega_b": init_uniform(rng, (K,), fan_in=2 * hidden),
        "desc_W1": init_uniform(rng, (hidden, hidden)),
        "desc_W2": init_uniform(rng, (hidden, hidden)),
        "desc_f_W": init_uniform(rng, (desc_dim, hidden)),
        "desc_f_b": init_uniform(rng, (desc_dim,), fan_in=hidden),
    }
    for l in range(1, L + 1):
        for k in range(K):
            p[f"W_agg{l}_{k}"] = init_uniform(rng, (hidden, hidden))
    return p


def extractor_dims(params):
    """(K, hidden, L) recovered from parameter shapes."""
    K = params["omega_W"].shape[0]
    hidden = params["W_h"].shape[0]
    L = sum(1 for name in params if name.startswith("W_agg") and name.endswith("_0"))
    return K, hidden, L


def as_tensors(params, trainable=True):
    make = tape.param if trainable else Tensor
    return {name: make(v) for name, v in params.items()}


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def support_mask(adjacency):
    """Positions where relation graphs may be nonzero: edges plus self-loops."""
    a = np.asarray(adjacency, dtype=np.float64)
    return ((a + np.eye(a.shape[0])) > 0).astype(np.float64)


def project_features(X, tp):
    return affine(_lift(X), tp["W_h"])


def build_relation_graphs(H_prime, adjacency, tp):
    """One N x N tanh-scored relation graph per relation, masked to A + I."""
    H_prime = _lift(H_prime)
    hidden = H_prime.shape[1]
    mask = support_mask(adjacency)
    W = tp["omega_W"]
    src = affine(H_prime, W[:, :hidden], tp["omega_b"])
    dst = H_prime @ W[:, hidden:].T
    graphs = []
    for k in range(W.shape[0]):
        score = src[:, [k]] + dst.T[[k], :]
        graphs.append(score.tanh() * mask)
    return graphs


def graph_descriptor(G_k, H_prime, tp):
    """Two tanh aggregation rounds over ``G_k``, mean readout, one affine layer."""
    G_k, H_prime = _lift(G_k), _lift(H_prime)
    z1 = (G_k @ affine(H_prime, tp["desc_W1"])).tanh()
    z2 = (G_k @ affine(z1, tp["desc_W2"])).tanh()
    pooled = z2.mean(axis=0, keepdims=True)
    return affine(pooled, tp["desc_f_W"], tp["desc_f_b"])


def disentanglement_loss(descriptors):
    """Sum of pairwise cosine similarities between descriptors.

    Accepts tensors (differentiable) or plain vectors (returns a float).
    Norms are floored at 1e-12.
    """
    plain = not any(isinstance(d, Tensor) for d in descriptors)
    ds = [_lift(np.reshape(d, (1, -1)) if not isinstance(d, Tensor) else d)
          for d in descriptors]
    norms = [((d.square().sum()) + 1e-24).sqrt() for d in ds]
    total = Tensor(0.0)
    for i in range(len(ds)):
        for j in range(i + 1, len(ds)):
            total = total + (ds[i] * ds[j]).sum() / (norms[i] * norms[j])
    return float(total.value) if plain else total


@dataclass
class SemanticOutput:
    H: Tensor
    H_prime: Tensor
    relations: list
    layers: list


def semantic_forward(X, adjacency, tp, L=None):
    """Disentangled node features, width ``K * hidden``.

    Layer 0 is the projected input; each later layer aggregates the previous
    layer's relation-``k`` channel over relation graph ``k`` (self-loops
    included) and applies tanh. ``layers[l][k]`` holds the per-relation output.
    """
    K, _, L_params = extractor_dims(tp)
    L = L_params if L is None else L
    H_prime = project_features(X, tp)
    relations = build_relation_graphs(H_prime, adjacency, tp)
    channels = [H_prime] * K
    layers = []
    for l in range(1, L + 1):
        channels = [(relations[k] @ affine(channels[k], tp[f"W_agg{l}_{k}"])).tanh()
                    for k in range(K)]
        layers.append(channels)
    H = tape.concat(channels, axis=1)
    return SemanticOutput(H, H_prime, relations, layers)


def dis_loss_from_output(out, tp):
    descriptors = [graph_descriptor(G, out.H_prime, tp) for G in out.relations]
    return disentanglement_loss(descriptors), descriptors
