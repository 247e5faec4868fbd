"""Node classifier, two-stage GraphMixup training, and baseline strategies."""

from __future__ import annotations

import dataclasses
import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from . import edges as E
from . import semantic as S
from . import tape
from .config import BASELINES, GRAPHMIXUP_METHODS, ExperimentConfig
from .errors import DomainError, NumericError
from .graph import (UNKNOWN, Graph, all_pairs_shortest_paths,
                    make_imbalanced_split, partition_graph, round_half_up)
from .metrics import evaluate, macro_f1
from .mixup import generate_synthetic_set
from .ndmath import AdamState, adam_step, init_uniform, softmax
from .rl import ScaleAgent
from .tape import Tensor, affine

log = logging.getLogger(__name__)

EXTRACTOR_PREFIXES = ("W_h", "omega_", "desc_", "W_agg")
EDGE_KEYS = ("W_bar", "local_W", "local_b", "global_W", "global_b")
CLASSIFIER_KEYS = ("cls_W1", "cls_W2")


def init_classifier(rng, in_dim, hidden, n_classes):
    return {
        "cls_W1": init_uniform(rng, (hidden, 2 * in_dim)),
        "cls_W2": init_uniform(rng, (n_classes, hidden)),
    }


def normalize_columns(A_N):
    """Divide each column by its sum so aggregation becomes a weighted mean."""
    deg = A_N.sum(axis=0)
    return A_N / np.where(deg > 0, deg, 1.0)


def classifier_logits(P, A_N, tp, aggregation="mean"):
    """Logits of ``W2 tanh(W1 [h_v || P^T A_N[:, v]])`` for every row of ``P``."""
    P = P if isinstance(P, Tensor) else Tensor(P)
    A = normalize_columns(A_N) if aggregation == "mean" else np.asarray(A_N, dtype=np.float64)
    agg = Tensor(A.T) @ P
    h = affine(tape.concat([P, agg], axis=1), tp["cls_W1"]).tanh()
    return affine(h, tp["cls_W2"])


def classify_nodes(H_all, A_N, tp, aggregation="mean"):
    """Class probabilities per node (rows sum to 1)."""
    return softmax(classifier_logits(H_all, A_N, tp, aggregation).value)


def node_loss(probs, labels, nodes, class_weights=None):
    """Mean negative log-likelihood over ``nodes``; every node must be labeled."""
    nodes = np.asarray(nodes)
    y = np.asarray(labels)[nodes]
    if np.any(y == UNKNOWN):
        raise DomainError("node_loss over a node without a label")
    w = np.ones(len(nodes)) if class_weights is None else np.asarray(class_weights)[y]
    p = np.asarray(probs)[nodes, y]
    return float(-(w * np.log(np.maximum(p, 1e-300))).mean())


# ---------------------------------------------------------------------------
# pretraining

@dataclass
class GraphContext:
    """Graph-derived constants shared by the pretext tasks."""

    graph: Graph
    dist: np.ndarray
    partition: object
    targets: np.ndarray
    n_pairs: int

    @classmethod
    def build(cls, graph, cfg, seed=0):
        dist = all_pairs_shortest_paths(graph)
        T = cfg.T or E.default_cluster_count(max(graph.n_classes, 1))
        T = min(T, graph.n_nodes)
        part = partition_graph(graph, T, seed)
        targets = E.anchor_targets(graph, part, dist)
        n_pairs = cfg.pair_samples or 4 * graph.n_nodes
        return cls(graph, dist, part, targets, n_pairs)


def init_model(graph, cfg, seed, T):
    rng = np.random.default_rng([seed, 0])
    theta = S.init_extractor(rng, graph.n_features, cfg.hidden, cfg.K, cfg.layers)
    gamma = E.init_edge_predictor(rng, cfg.K * cfg.hidden, cfg.hidden, T)
    return theta, gamma


def pretrain_losses(tp, ctx, cfg, sample):
    """Forward pass for the pretraining objective; returns a dict of loss tensors."""
    g = ctx.graph
    out = S.semantic_forward(g.features, g.adjacency, tp)
    l_dis, _ = S.dis_loss_from_output(out, tp)
    Z, A_hat = E.edge_scores(out.H, tp)
    l_rec = E.reconstruction_loss(A_hat, g.adjacency, cfg.rec_reduction)
    l_local = E.local_path_loss(Z, sample, tp)
    l_global = E.global_path_loss(Z, ctx.targets, tp)
    l_edge = E.edge_total_loss(l_rec, l_local, l_global,
                               use_local=not cfg.disable_local,
                               use_global=not cfg.disable_global)
    return {"L_dis": l_dis, "L_rec": l_rec, "L_local": l_local,
            "L_global": l_global, "L_edge": l_edge, "H": out.H}


def pretrain(graph, cfg, seed=0, ctx=None):
    """Minimise ``L_dis + beta * L_edge`` over extractor and edge predictor.

    Returns ``(theta, gamma, history)``.
    """
    ctx = ctx or GraphContext.build(graph, cfg, seed)
    theta, gamma = init_model(graph, cfg, seed, ctx.partition.T)
    params = {**theta, **gamma}
    state = AdamState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    pair_rng = np.random.default_rng([seed, 1])
    history = []
    for epoch in range(cfg.pretrain_epochs):
        sample = E.sample_pairs(ctx.dist, ctx.n_pairs, pair_rng)
        tp = S.as_tensors(params)
        losses = pretrain_losses(tp, ctx, cfg, sample)
        total = losses["L_dis"]
        if cfg.beta:
            total = total + cfg.beta * losses["L_edge"]
        value = float(total.value)
        row = {"epoch": epoch, **{k: float(v.value) for k, v in losses.items() if k != "H"}}
        if not np.isfinite(value):
            raise NumericError(f"non-finite pretraining loss at epoch {epoch}: {row}")
        total.backward()
        grads = {k: t.grad for k, t in tp.items() if t.grad is not None}
        adam_step(params, grads, state)
        history.append(row)
    theta = {k: params[k] for k in theta}
    gamma = {k: params[k] for k in gamma}
    return theta, gamma, history


_PRETRAIN_CACHE = {}
_PRETRAIN_KEYS = ("K", "hidden", "layers", "beta", "T", "pair_samples", "lr", "weight_decay",
                  "pretrain_epochs", "disable_local", "disable_global", "rec_reduction")


def _fingerprint(graph):
    h = hashlib.sha1()
    for a in (graph.features, graph.adjacency, graph.labels):
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def cached_pretrain(graph, cfg, seed):
    """``pretrain`` memoised on the graph contents, the relevant settings and the seed."""
    key = (_fingerprint(graph), tuple(getattr(cfg, k) for k in _PRETRAIN_KEYS), seed)
    if key not in _PRETRAIN_CACHE:
        _PRETRAIN_CACHE[key] = pretrain(graph, cfg, seed)
    theta, gamma, hist = _PRETRAIN_CACHE[key]
    copy = lambda d: {k: v.copy() for k, v in d.items()}
    return copy(theta), copy(gamma), list(hist)


def clear_pretrain_cache():
    _PRETRAIN_CACHE.clear()


# ---------------------------------------------------------------------------
# finetuning

@dataclass
class TrainRun:
    method: str
    seed: int
    config: ExperimentConfig
    history: list
    pretrain_history: list
    rl_trace: list
    params: dict
    edge_params: dict
    best_epoch: int
    val: object
    test: object
    minority_classes: tuple = field(default=())


def initial_scales(graph, split, cfg):
    """Starting upsampling scale per minority class, on the kappa grid.

    ``fixed_scale`` or ``scale_init`` override; otherwise
    ``n_train / (m * |C_i|)`` with ``n_train`` the labeled training count.
    """
    minority = sorted(split.minority_classes)
    if cfg.fixed_scale is not None:
        return {c: cfg.fixed_scale for c in minority}
    if cfg.scale_init is not None:
        return {c: cfg.scale_init for c in minority}
    n_train = len(split.train)
    m = graph.n_classes
    dk = cfg.delta_kappa
    return {c: round_half_up(n_train / (m * split.per_class_train_count[c]) / dk) * dk
            for c in minority}


def augment_graph(graph, sources, feats, new_labels):
    """Append nodes whose edges copy those of their source nodes."""
    n, s = graph.n_nodes, len(sources)
    pairs = [tuple(e) for e in graph.edges]
    for i, src in enumerate(sources):
        pairs.extend((n + i, int(u)) for u in graph.neighbors[src])
    X = np.vstack([graph.features, feats]) if s else graph.features
    y = np.concatenate([graph.labels, new_labels]) if s else graph.labels
    return Graph.from_edges(n + s, pairs, X, y)


def _input_space_augmentation(graph, split, cfg, seed, method, scales):
    if method == "oversample":
        rng = np.random.default_rng([seed, 3])
        srcs, ys = [], []
        for c in sorted(split.minority_classes):
            members = split.train[graph.labels[split.train] == c]
            count = round_half_up(len(members) * scales[c])
            order = rng.permutation(members)
            srcs.extend(int(order[i % len(order)]) for i in range(count))
            ys.extend([c] * count)
        srcs = np.array(srcs, dtype=np.int64)
        feats = graph.features[srcs] if len(srcs) else np.zeros((0, graph.n_features))
        ys = np.array(ys, dtype=np.int64)
    else:
        syn = generate_synthetic_set(graph.features, graph.labels, split, scales, seed=[seed, 3])
        srcs, feats, ys = syn.sources, syn.features, syn.labels
    if len(srcs) == 0:
        return graph, split
    aug = augment_graph(graph, srcs, feats, ys)
    new_ids = np.arange(graph.n_nodes, aug.n_nodes)
    split = dataclasses.replace(split, train=np.concatenate([split.train, new_ids]))
    return aug, split


def _embed_smote_adjacency(A, sources):
    n, s = A.shape[0], len(sources)
    A_N = np.zeros((n + s, n + s))
    A_N[:n, :n] = A
    if s:
        A_N[:n, n:] = A[:, sources]
    return A_N


def _finetune(graph, split, cfg, seed, method, theta, gamma, n_real, eval_graph):
    labels = graph.labels
    m = eval_graph.n_classes
    rng = np.random.default_rng([seed, 2])
    phi = init_classifier(rng, cfg.K * cfg.hidden, cfg.hidden, m)
    params = {**theta, **phi}
    state = AdamState(lr=cfg.lr, weight_decay=cfg.weight_decay)

    embed_level = method in GRAPHMIXUP_METHODS or method == "embed_smote"
    scales = initial_scales(eval_graph, split, cfg) if embed_level else {}
    agent = None
    if method in GRAPHMIXUP_METHODS and cfg.uses_rl:
        agent = ScaleAgent(scales, delta_kappa=cfg.delta_kappa, gamma=cfg.gamma_discount,
                           epsilon=cfg.epsilon, epsilon_final=cfg.epsilon_final,
                           epsilon_anneal=cfg.epsilon_anneal, warmup=cfg.warmup,
                           q_lr=cfg.q_lr, seed=seed)
    class_weights = None
    if method == "reweight":
        counts = split.per_class_train_count
        class_weights = np.array([split.majority_count / counts[c] for c in range(m)])

    train = np.asarray(split.train)
    val, test = np.asarray(split.val), np.asarray(split.test)
    W_bar = gamma["W_bar"]
    history = []
    best = (-1.0, -1, None, None, None)
    for epoch in range(cfg.max_epochs):
        tp = S.as_tensors(params)
        H = S.semantic_forward(graph.features, graph.adjacency, tp).H
        cur_scales = agent.scales() if agent else scales
        if embed_level and cur_scales:
            syn = generate_synthetic_set(H.value, labels, split, cur_scales, seed=[seed, epoch, 5])
        else:
            syn = None
        if syn is not None and len(syn):
            H_S = Tensor(syn.mixing_matrix(graph.n_nodes)) @ H
            if method == "embed_smote":
                A_N = _embed_smote_adjacency(graph.adjacency, syn.sources)
            else:
                scores = E.synthetic_edge_scores(H_S.value, H.value, W_bar)
                A_N = E.synthesize_edges(graph.adjacency, scores, cfg.edge_mode, cfg.eta)
            P = tape.concat([H, H_S], axis=0)
            fit_nodes = np.concatenate([train, graph.n_nodes + np.arange(len(syn))])
            fit_labels = np.concatenate([labels[train], syn.labels])
        else:
            A_N = graph.adjacency
            P = H
            fit_nodes, fit_labels = train, labels[train]
        logits = classifier_logits(P, A_N, tp, cfg.aggregation)
        loss = tape.cross_entropy(logits[fit_nodes], fit_labels, class_weights)
        if not np.isfinite(loss.value):
            raise NumericError(f"non-finite node loss at epoch {epoch}")

        probs = softmax(logits.value[:n_real])
        val_f1 = macro_f1(probs[val].argmax(axis=1), eval_graph.labels[val], m) if len(val) else 0.0
        if val_f1 > best[0]:
            best = (val_f1, epoch, {k: v.copy() for k, v in params.items()},
                    evaluate(probs[val], eval_graph.labels[val], m) if len(val) else None,
                    evaluate(probs[test], eval_graph.labels[test], m) if len(test) else None)

        loss.backward()
        grads = {k: t.grad for k, t in tp.items() if t.grad is not None}
        adam_step(params, grads, state)

        row = {"epoch": epoch, "L_node": float(loss.value), "val_macro_f1": val_f1,
               "kappa": agent.kappa if agent else 0.0}
        row.update({f"alpha_{c}": a for c, a in sorted(cur_scales.items())})
        history.append(row)
        if agent:
            agent.rl_step(val_f1, epoch)
        if epoch - best[1] >= cfg.patience:
            break
    val_f1, best_epoch, best_params, val_rep, test_rep = best
    return history, (agent.trace if agent else []), best_params, best_epoch, val_rep, test_rep


def run_method(method, graph, split, cfg, seed=0):
    """Pretrain (memoised), then finetune with the chosen method."""
    if method not in GRAPHMIXUP_METHODS + BASELINES:
        raise DomainError(f"unknown method '{method}'")
    cfg = dataclasses.replace(cfg, method=method)
    theta, gamma, pre_hist = cached_pretrain(graph, cfg, seed)
    train_graph, train_split = graph, split
    if method in ("oversample", "smote"):
        scales = initial_scales(graph, split, cfg)
        train_graph, train_split = _input_space_augmentation(graph, split, cfg, seed, method, scales)
    hist, trace, params, best_epoch, val_rep, test_rep = _finetune(
        train_graph, train_split, cfg, seed, method, theta, gamma, graph.n_nodes, graph)
    return TrainRun(method, seed, cfg, hist, pre_hist, trace, params, gamma, best_epoch,
                    val_rep, test_rep, tuple(sorted(split.minority_classes)))


def train_graphmixup(graph, split, cfg, seed=0):
    method = cfg.method if cfg.method in GRAPHMIXUP_METHODS else "graphmixup_c"
    return run_method(method, graph, split, cfg, seed)


def run_baseline(name, graph, split, cfg, seed=0):
    if name not in BASELINES:
        raise DomainError(f"unknown baseline '{name}'; expected one of {', '.join(BASELINES)}")
    return run_method(name, graph, split, cfg, seed)


def default_minority_classes(n_classes):
    """The ``n_classes // 2`` highest class ids (at least one)."""
    k = max(1, n_classes // 2)
    return tuple(range(n_classes - k, n_classes))


def split_for(graph, cfg, seed):
    minority = cfg.minority_classes or default_minority_classes(graph.n_classes)
    return make_imbalanced_split(graph, minority, cfg.im_ratio, cfg.majority_count,
                                 cfg.val_frac, seed)


# ---------------------------------------------------------------------------
# diagnostics

def edge_holdout_auc(graph, cfg, seed=0, frac=0.1):
    """Pretrain on a graph with a fraction of edges hidden; AUC of A_hat on them."""
    from .metrics import binary_auc
    train_graph, pos, neg = E.holdout_edges(graph, frac, seed)
    theta, gamma, _ = cached_pretrain(train_graph, cfg, seed)
    tp = S.as_tensors({**theta, **gamma}, trainable=False)
    H = S.semantic_forward(train_graph.features, train_graph.adjacency, tp).H
    _, A_hat = E.edge_scores(H, tp)
    scores = np.concatenate([A_hat.value[pos[:, 0], pos[:, 1]], A_hat.value[neg[:, 0], neg[:, 1]]])
    truth = np.concatenate([np.ones(len(pos), bool), np.zeros(len(neg), bool)])
    return binary_auc(scores, truth)


def embeddings(graph, theta):
    tp = S.as_tensors(theta, trainable=False)
    return S.semantic_forward(graph.features, graph.adjacency, tp).H.value


def gradcheck_problems(graph, cfg, seed=0, corrupt=None):
    """One ``(loss_and_grad, params)`` pair per trainable loss.

    ``corrupt`` names a tensor whose analytic gradient is perturbed in every
    loss, as a negative control for the checker.
    """
    ctx = GraphContext.build(graph, cfg, seed)
    theta, gamma = init_model(graph, cfg, seed, ctx.partition.T)
    sample = E.sample_pairs(ctx.dist, ctx.n_pairs, np.random.default_rng([seed, 1]))
    rng = np.random.default_rng([seed, 2])
    phi = init_classifier(rng, cfg.K * cfg.hidden, cfg.hidden, graph.n_classes)

    def pretrain_term(name):
        def fn(params):
            # tensors outside ``params`` (the edge head for L_dis) stay constant
            tp = {**S.as_tensors(gamma, trainable=False), **S.as_tensors(params)}
            loss = pretrain_losses(tp, ctx, cfg, sample)[name]
            loss.backward()
            return float(loss.value), _grads(tp)
        return fn

    minority = cfg.minority_classes or default_minority_classes(graph.n_classes)
    split = make_imbalanced_split(graph, minority, 1.0, 2, 0.5, seed)
    H0 = embeddings(graph, theta)
    syn = generate_synthetic_set(H0, graph.labels, split, {c: 1.0 for c in minority}, seed)
    M = syn.mixing_matrix(graph.n_nodes)
    scores = E.synthetic_edge_scores(M @ H0, H0, gamma["W_bar"])
    A_N = E.synthesize_edges(graph.adjacency, scores, cfg.edge_mode, cfg.eta)
    fit_nodes = np.concatenate([split.train, graph.n_nodes + np.arange(len(syn))])
    fit_labels = np.concatenate([graph.labels[split.train], syn.labels])

    def node_term(params):
        tp = S.as_tensors(params)
        H = S.semantic_forward(graph.features, graph.adjacency, tp).H
        P = tape.concat([H, Tensor(M) @ H], axis=0)
        logits = classifier_logits(P, A_N, tp, cfg.aggregation)
        loss = tape.cross_entropy(logits[fit_nodes], fit_labels)
        loss.backward()
        return float(loss.value), _grads(tp)

    def _grads(tp):
        g = {k: t.grad.copy() for k, t in tp.items() if t.grad is not None}
        if corrupt in g:
            g[corrupt] = g[corrupt] * 1.5 + 1e-3
        return g

    pre = {**theta, **gamma}
    return {
        "L_dis": (pretrain_term("L_dis"), dict(theta)),
        "L_rec": (pretrain_term("L_rec"), pre),
        "L_local": (pretrain_term("L_local"), pre),
        "L_global": (pretrain_term("L_global"), pre),
        "L_node": (node_term, {**theta, **phi}),
    }
