import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import floyd_warshall, path_graph, random_graph
from graphmixup import edges as E
from graphmixup.errors import DimensionError, DomainError
from graphmixup.graph import Graph, all_pairs_shortest_paths, partition_graph
from graphmixup.ndmath import grad_check, log_softmax
from graphmixup.semantic import as_tensors
from graphmixup.tape import Tensor


def head(rng, z_dim=3, T=2):
    return E.init_edge_predictor(rng, 5, z_dim, T)


class TestScores:
    def test_orthogonal_half(self):
        p = {"W_bar": np.eye(2)}
        _, A = E.edge_scores(np.array([[1.0, 0.0], [0.0, 1.0]]), as_tensors(p))
        assert A.value[0, 1] == 0.5

    def test_parallel_large_saturates(self):
        p = {"W_bar": np.eye(2)}
        _, A = E.edge_scores(np.array([[30.0, 0.0], [30.0, 0.0]]), as_tensors(p))
        assert A.value[0, 1] == pytest.approx(1.0)

    def test_gram_oracle(self, rng):
        H = rng.normal(size=(4, 5))
        p = head(rng)
        Z = H @ p["W_bar"].T
        G = np.array([[Z[i] @ Z[j] for j in range(4)] for i in range(4)])
        _, A = E.edge_scores(H, as_tensors(p))
        assert np.allclose(A.value, 1 / (1 + np.exp(-G)), atol=1e-15)
        assert np.array_equal(A.value, A.value.T)
        assert np.all((A.value > 0) & (A.value < 1))


class TestReconstruction:
    def test_perfect(self):
        A = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert E.reconstruction_loss(A, A) == 0.0

    def test_all_half(self):
        assert E.reconstruction_loss(np.full((2, 2), 0.5), np.zeros((2, 2))) == 1.0

    def test_scalar_loop(self, rng):
        Ah, A = rng.random((5, 5)), (rng.random((5, 5)) < 0.3).astype(float)
        want = sum((Ah[i, j] - A[i, j]) ** 2 for i in range(5) for j in range(5))
        assert E.reconstruction_loss(Ah, A) == pytest.approx(want, rel=1e-13)
        assert E.reconstruction_loss(Ah, A, "node") == pytest.approx(want / 5, rel=1e-13)
        assert E.reconstruction_loss(Ah, A, "mean") == pytest.approx(want / 25, rel=1e-13)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            E.reconstruction_loss(np.zeros((2, 2)), np.zeros((3, 3)))


class TestTruncation:
    @pytest.mark.parametrize("d, c", [(1, 0), (2, 1), (3, 2), (4, 3), (7, 3), (-1, 3)])
    def test_categories(self, d, c):
        assert E.truncate_distance(d) == c

    def test_self_pair(self):
        with pytest.raises(DomainError):
            E.truncate_distance(0)
        with pytest.raises(DomainError):
            E.truncate_distances(np.array([1, 0]))

    def test_vectorised_agrees(self):
        d = np.array([1, 2, 3, 4, 5, -1])
        assert list(E.truncate_distances(d)) == [E.truncate_distance(int(x)) for x in d]


class TestPairSampling:
    def test_categories_match_bfs(self, rng):
        g = random_graph(rng, 30, 0.08)
        dist = all_pairs_shortest_paths(g)
        s = E.sample_pairs(dist, 80, rng)
        assert len(s) == 80
        assert np.all(s.pairs[:, 0] != s.pairs[:, 1])
        oracle = floyd_warshall(g.adjacency)
        for (u, v), c in zip(s.pairs, s.categories):
            assert E.truncate_distance(int(oracle[u, v])) == c

    def test_stratified(self, rng):
        g = path_graph(40)
        s = E.sample_pairs(all_pairs_shortest_paths(g), 64, rng)
        assert np.bincount(s.categories, minlength=4).min() >= 8

    def test_needs_two_nodes(self, rng):
        with pytest.raises(DomainError):
            E.sample_pairs(np.zeros((1, 1), int), 4, rng)


class TestLocalLoss:
    def test_zero_difference_uniform_head(self, rng):
        p = head(rng)
        p["local_b"][:] = 0.3
        Z = np.ones((2, 3))
        s = E.PairSample(np.array([[0, 1]]), np.array([2]))
        assert float(E.local_path_loss(Z, s, as_tensors(p)).value) == pytest.approx(np.log(4))

    def test_confident_correct(self, rng):
        p = head(rng)
        p["local_W"][:] = 0
        p["local_b"][:] = [0, 0, 40, 0]
        s = E.PairSample(np.array([[0, 1]]), np.array([2]))
        assert float(E.local_path_loss(rng.normal(size=(2, 3)), s, as_tensors(p)).value) < 1e-12

    def test_path_graph_oracle(self, rng):
        g = path_graph(8)
        dist = all_pairs_shortest_paths(g)
        pairs = np.array([[0, 1], [0, 2], [0, 3], [0, 7], [2, 6], [5, 4], [1, 3], [7, 6], [3, 7],
                          [2, 5]])
        cats = np.array([E.truncate_distance(int(dist[u, v])) for u, v in pairs])
        s = E.PairSample(pairs, cats)
        Z, p = rng.normal(size=(8, 3)), head(rng)
        want = 0.0
        for (u, v), c in zip(pairs, cats):
            logits = p["local_W"] @ np.abs(Z[u] - Z[v]) + p["local_b"]
            want -= log_softmax(logits[None])[0, c]
        want /= len(pairs)
        assert float(E.local_path_loss(Z, s, as_tensors(p)).value) == pytest.approx(want, rel=1e-12)

    def test_empty(self, rng):
        with pytest.raises(DomainError):
            E.local_path_loss(np.zeros((2, 3)), E.PairSample(np.zeros((0, 2), int),
                                                             np.zeros(0, int)), as_tensors(head(rng)))


class TestGlobalLoss:
    def six_nodes(self):
        return Graph.from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4)],
                                np.zeros((6, 1)))

    def test_center_target_zero(self):
        g = self.six_nodes()
        part = partition_graph(g, 2)
        l = E.anchor_targets(g, part)
        for t, c in enumerate(part.centers):
            assert l[c, t] == 0
        assert np.all(l >= 0)

    def test_perfect_prediction(self, rng):
        g = self.six_nodes()
        l = E.anchor_targets(g, partition_graph(g, 2))
        p = head(rng, z_dim=3, T=2)
        p["global_W"][:] = 0
        Z = rng.normal(size=(6, 3))
        p["global_b"] = l[0].copy()
        loss = E.global_path_loss(Z, l[[0]], as_tensors(p))
        assert float(loss.value) == 0.0

    def test_scalar_loop_mse(self, rng):
        g = self.six_nodes()
        part = partition_graph(g, 2)
        l = E.anchor_targets(g, part)
        oracle = floyd_warshall(g.adjacency)
        assert np.array_equal(l, oracle[:, list(part.centers)])
        Z, p = rng.normal(size=(6, 3)), head(rng, T=2)
        want = np.mean([np.sum((p["global_W"] @ Z[i] + p["global_b"] - l[i]) ** 2)
                        for i in range(6)])
        got = float(E.global_path_loss(Z, l, as_tensors(p)).value)
        assert got == pytest.approx(want, rel=1e-12)

    def test_unreachable_uses_component_diameter(self):
        g = Graph.from_edges(5, [(0, 1), (1, 2), (3, 4)], np.zeros((5, 1)))
        part = partition_graph(g, 2)
        l = E.anchor_targets(g, part)
        other = {0: 1, 1: 0}
        for t, c in enumerate(part.centers):
            for i in range(5):
                comp_i = 0 if i < 3 else 1
                comp_c = 0 if c < 3 else 1
                if comp_i != comp_c:
                    assert l[i, t] == (2 if comp_i == 0 else 1) + 1


class TestTotal:
    def test_sums(self):
        assert E.edge_total_loss(0, 0, 0) == 0
        assert E.edge_total_loss(1.0, 0.5, 0.25) == 1.75

    def test_ablation_removes_addend(self):
        assert E.edge_total_loss(1.0, 0.5, 0.25, use_local=False) == 1.25
        assert E.edge_total_loss(1.0, 0.5, 0.25, use_global=False) == 1.5


class TestSynthesis:
    def test_binary_threshold(self):
        A = np.zeros((2, 2))
        out = E.synthesize_edges(A, np.array([[0.6, 0.5]]), "binary", 0.5)
        assert out[2, 0] == 1 and out[2, 1] == 0

    def test_continuous_copies(self, rng):
        A = random_graph(rng, 5, 0.4).adjacency
        sc = rng.random((3, 5))
        out = E.synthesize_edges(A, sc, "continuous")
        assert np.array_equal(out[5:, :5], sc)

    @pytest.mark.parametrize("eta", [0.0, 1.0, 1.5])
    def test_invalid_eta(self, eta):
        with pytest.raises(DomainError):
            E.synthesize_edges(np.zeros((2, 2)), np.zeros((1, 2)), "binary", eta)

    @given(st.integers(2, 12), st.integers(0, 6), st.sampled_from(["binary", "continuous"]),
           st.integers(0, 1000))
    @settings(max_examples=50, deadline=None)
    def test_structure(self, n, s, mode, seed):
        r = np.random.default_rng(seed)
        A = random_graph(r, n, 0.3).adjacency
        out = E.synthesize_edges(A, r.random((s, n)), mode, 0.5)
        assert np.array_equal(out[:n, :n], A)
        assert np.all(out[n:, n:] == 0)
        assert np.array_equal(out, out.T)


def test_holdout_edges(rng):
    g = random_graph(rng, 30, 0.2)
    train, pos, neg = E.holdout_edges(g, 0.1, seed=3)
    assert len(pos) == len(neg) == round(0.1 * len(g.edges))
    assert all(train.adjacency[u, v] == 0 and g.adjacency[u, v] == 1 for u, v in pos)
    assert all(g.adjacency[u, v] == 0 and u != v for u, v in neg)
    assert len(train.edges) == len(g.edges) - len(pos)


def test_losses_grad_check(rng):
    g = random_graph(rng, 9, 0.35)
    dist = all_pairs_shortest_paths(g)
    part = partition_graph(g, 2)
    targets = E.anchor_targets(g, part, dist)
    sample = E.sample_pairs(dist, 12, rng)
    H = rng.normal(size=(9, 5))
    p = head(rng)

    def fn(q):
        tp = as_tensors(q)
        Z, A_hat = E.edge_scores(Tensor(H), tp)
        loss = E.edge_total_loss(E.reconstruction_loss(A_hat, g.adjacency),
                                 E.local_path_loss(Z, sample, tp),
                                 E.global_path_loss(Z, targets, tp))
        loss.backward()
        return float(loss.value), {k: t.grad for k, t in tp.items()}
    assert grad_check(fn, p) < 1e-6
