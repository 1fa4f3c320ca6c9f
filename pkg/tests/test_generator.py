import numpy as np
import pytest
from scipy import stats

from ideocast.generator import (
    GenConfig,
    GraphSpec,
    draw_embeddings,
    draw_item_topics,
    generate_dataset,
    simulate_cascade,
)
from ideocast.graph import complete_graph
from ideocast.model import EmbeddingTable


def _cfg(**kw):
    base = dict(
        n_topics=4, polarization=4.0, alpha=0.9, beta=0.1,
        topic_concentration=0.125, n_items=10,
        graph_spec=GraphSpec.complete(20), rng_seed=0,
    )
    base.update(kw)
    return GenConfig(**base)


class TestGenConfig:
    def test_scalar_concentration_broadcast(self):
        cfg = _cfg(n_topics=3, topic_concentration=0.5)
        assert cfg.topic_concentration.tolist() == [0.5, 0.5, 0.5]

    def test_invalid_values(self):
        with pytest.raises(ValueError):
            _cfg(polarization=0.0)
        with pytest.raises(ValueError):
            _cfg(n_items=0)
        with pytest.raises(ValueError):
            _cfg(topic_concentration=[0.5, 0.5])  # wrong length for K=4


class TestDrawEmbeddings:
    def test_interest_mass_above_half(self):
        # Beta(0.9, 0.1): 92% of the mass sits above 0.5
        cfg = _cfg(n_topics=1)
        rng = np.random.default_rng(42)
        emb = draw_embeddings(cfg, 100_000, rng)
        frac = float((emb.theta > 0.5).mean())
        assert frac == pytest.approx(0.92, abs=0.01)
        assert frac == pytest.approx(stats.beta.sf(0.5, 0.9, 0.1), abs=0.005)

    def test_strong_polarization_is_bimodal(self):
        cfg = _cfg(n_topics=1, polarization=16.0)
        rng = np.random.default_rng(7)
        emb = draw_embeddings(cfg, 100_000, rng)
        phi = emb.phi.ravel()
        middle = float(((phi > 0.1) & (phi < 0.9)).mean())
        analytic = stats.beta.cdf(0.9, 1 / 16, 1 / 16) - stats.beta.cdf(0.1, 1 / 16, 1 / 16)
        assert middle == pytest.approx(analytic, abs=0.01)
        assert middle < 0.2
        # moments against the analytic Beta(1/16, 1/16)
        assert phi.mean() == pytest.approx(0.5, abs=0.01)
        assert phi.var() == pytest.approx(stats.beta.var(1 / 16, 1 / 16), abs=0.01)

    def test_no_polarization_is_uniform(self):
        cfg = _cfg(n_topics=1, polarization=1.0)
        rng = np.random.default_rng(3)
        emb = draw_embeddings(cfg, 100_000, rng)
        assert float(emb.phi.mean()) == pytest.approx(0.5, abs=0.01)
        assert float(emb.phi.var()) == pytest.approx(1 / 12, abs=0.01)

    def test_moments_within_three_sigma(self):
        cfg = _cfg(n_topics=2)
        rng = np.random.default_rng(11)
        n = 50_000
        emb = draw_embeddings(cfg, n, rng)
        for arr, (a, b) in ((emb.theta, (0.9, 0.1)), (emb.phi, (0.25, 0.25))):
            mean = stats.beta.mean(a, b)
            sd_of_mean = stats.beta.std(a, b) / np.sqrt(arr.size)
            assert abs(arr.mean() - mean) < 3 * sd_of_mean * 1.5

    def test_deterministic(self):
        cfg = _cfg()
        a = draw_embeddings(cfg, 50, np.random.default_rng(5))
        b = draw_embeddings(cfg, 50, np.random.default_rng(5))
        assert np.array_equal(a.theta, b.theta) and np.array_equal(a.phi, b.phi)


class TestDrawItemTopics:
    def test_sparse_prior_mean(self):
        cfg = _cfg()
        rng = np.random.default_rng(1)
        draws = np.stack([draw_item_topics(cfg, rng).gamma for _ in range(20_000)])
        assert np.allclose(draws.mean(axis=0), 0.25, atol=0.01)
        # concentration 1/8 makes draws sparse: the top topic dominates
        assert float(draws.max(axis=1).mean()) > 0.8
        assert float((draws.max(axis=1) > 0.9).mean()) > 0.4

    def test_single_topic_degenerates(self):
        cfg = _cfg(n_topics=1, topic_concentration=0.125)
        it = draw_item_topics(cfg, np.random.default_rng(0))
        assert it.gamma.tolist() == [1.0]

    def test_draws_normalized(self):
        cfg = _cfg()
        rng = np.random.default_rng(2)
        for _ in range(500):
            assert abs(draw_item_topics(cfg, rng).gamma.sum() - 1.0) < 1e-9


class TestSimulateCascade:
    def test_zero_interest_keeps_seed_only(self):
        g = complete_graph(10)
        emb = EmbeddingTable(np.zeros((10, 1)), np.full((10, 1), 0.5))
        events = simulate_cascade(g, np.array([1.0]), emb, np.random.default_rng(0))
        assert len(events) == 1
        assert events[0].t == 0 and events[0].exposer is None

    def test_deterministic_full_adoption(self):
        g = complete_graph(12)
        emb = EmbeddingTable(np.ones((12, 1)), np.ones((12, 1)))
        events = simulate_cascade(g, np.array([1.0]), emb, np.random.default_rng(4))
        assert len(events) == 12
        assert all(a.t == 1 for a in events[1:])

    def test_round_one_activation_rate_matches_alignment(self):
        # theta=1, phi=c everywhere: per-exposure success = c^2 + (1-c)^2
        c = 0.5
        g = complete_graph(100)
        emb = EmbeddingTable(np.ones((100, 1)), np.full((100, 1), c))
        rng = np.random.default_rng(8)
        activated = 0
        exposed = 0
        for _ in range(200):
            events = simulate_cascade(g, np.array([1.0]), emb, rng)
            exposed += 99
            activated += sum(1 for a in events if a.t == 1)
        want = c * c + (1 - c) * (1 - c)
        assert activated / exposed == pytest.approx(want, abs=0.02)

    def test_attribution_and_causality(self):
        cfg = _cfg(graph_spec=GraphSpec.barabasi_albert(60, 4), n_items=200, rng_seed=3)
        g, emb, topics, log = generate_dataset(cfg)
        for item in log.item_ids():
            nodes = log.cascade_nodes(item)
            times = log.cascade_times(item)
            exposers = log.cascade_exposers(item)
            t_of = dict(zip(nodes, times))
            for node, t, exp in zip(nodes, times, exposers):
                if t == 0:
                    assert exp is None
                    continue
                assert exp in t_of and t_of[exp] == t - 1, "exposer newly active at t-1"
                assert exp in g.in_adjacency[node]


class TestGenerateDataset:
    def test_item_count_contract_and_singletons(self):
        cfg = _cfg(n_items=500, graph_spec=GraphSpec.complete(5), alpha=0.2, beta=0.8)
        g, emb, topics, log = generate_dataset(cfg)
        assert len(topics) == 500
        assert set(log.item_ids()) <= set(range(500))
        singles = log.singleton_items()
        assert all(len(log.cascade_nodes(i)) == 1 for i in singles)
        assert len(singles) > 0  # weak interest prior leaves some seeds alone

    def test_unique_seed_at_time_zero(self):
        cfg = _cfg(n_items=100)
        _, _, _, log = generate_dataset(cfg)
        for item in log.item_ids():
            times = log.cascade_times(item)
            assert times.count(0) == 1
            assert times[0] == 0

    def test_no_duplicate_activations(self):
        cfg = _cfg(n_items=300)
        _, _, _, log = generate_dataset(cfg)
        for item in log.item_ids():
            nodes = log.cascade_nodes(item)
            assert len(nodes) == len(set(nodes))

    def test_byte_identical_under_same_seed(self):
        cfg = _cfg(n_items=60, rng_seed=9)
        a = generate_dataset(cfg)
        b = generate_dataset(cfg)
        assert np.array_equal(a[1].theta, b[1].theta)
        assert np.array_equal(a[1].phi, b[1].phi)
        assert [t.gamma.tolist() for t in a[2]] == [t.gamma.tolist() for t in b[2]]
        assert [
            (x.t, x.item, x.node, x.exposer) for x in a[3].activations()
        ] == [(x.t, x.item, x.node, x.exposer) for x in b[3].activations()]

    def test_mean_cascade_size_flat_in_polarization(self):
        """Monte-Carlo check of mean size across polarization levels.

        Expected per-exposure success is E[theta] * E[alignment] = 0.45
        regardless of p, because E[phi_u phi_v + (1-phi_u)(1-phi_v)] = 0.5
        for independent symmetric polarity draws. Mean cascade size is
        therefore the same for p in {1, 4, 16} up to sampling noise.
        """
        means = []
        for p in (1.0, 4.0, 16.0):
            sizes = []
            for seed in (21, 22, 23):
                cfg = _cfg(
                    polarization=p, n_items=400,
                    graph_spec=GraphSpec.complete(100), rng_seed=seed,
                )
                _, _, _, log = generate_dataset(cfg)
                sizes.extend(len(log.cascade_nodes(i)) for i in log.item_ids())
            means.append(float(np.mean(sizes)))
        spread = max(means) - min(means)
        assert spread < 1.5, f"mean sizes {means} should agree across p"
        assert all(30 < m < 60 for m in means)
