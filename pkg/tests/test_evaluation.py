import numpy as np
import pytest

from ideocast.evaluation import (
    MetricError,
    ScoredPair,
    SplitPlan,
    auc_roc,
    average_precision,
    build_test_pairs,
    evaluate,
    roc_points,
    score_pairs,
    split_items,
)
from ideocast.generator import GenConfig, GraphSpec, generate_dataset
from ideocast.trainer import TrainConfig, build_examples


def _pairs(labels, scores):
    return [
        ScoredPair(item=0, v=0, u=i + 1, label=l, score=s)
        for i, (l, s) in enumerate(zip(labels, scores))
    ]


class TestSplitItems:
    def test_holdout_nine_one(self):
        rng = np.random.default_rng(0)
        folds = split_items(list(range(10)), SplitPlan.holdout(0.9), rng)
        assert len(folds) == 1
        train, test = folds[0]
        assert len(train) == 9 and len(test) == 1
        assert sorted(train + test) == list(range(10))

    def test_kfold_balanced(self):
        rng = np.random.default_rng(0)
        folds = split_items(list(range(100)), SplitPlan.kfold(10), rng)
        assert len(folds) == 10
        for train, test in folds:
            assert len(test) == 10 and len(train) == 90
        all_test = sorted(t for _, test in folds for t in test)
        assert all_test == list(range(100))

    def test_deterministic_under_seed(self):
        a = split_items(list(range(50)), SplitPlan.holdout(0.8), np.random.default_rng(7))
        b = split_items(list(range(50)), SplitPlan.holdout(0.8), np.random.default_rng(7))
        assert a == b

    def test_too_few_items(self):
        with pytest.raises(ValueError):
            split_items([1], SplitPlan.holdout(0.9), np.random.default_rng(0))
        with pytest.raises(ValueError):
            split_items(list(range(5)), SplitPlan.kfold(10), np.random.default_rng(0))


class TestAucRoc:
    def test_perfect_separation(self):
        assert auc_roc(_pairs([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1])) == 1.0

    def test_all_ties_give_half(self):
        assert auc_roc(_pairs([1, 0, 1, 0], [0.5, 0.5, 0.5, 0.5])) == 0.5

    def test_hand_computed_three_quarters(self):
        # pairwise wins: (.9,.6)=1 (.9,.1)=1 (.4,.6)=0 (.4,.1)=1 -> 3/4
        assert auc_roc(_pairs([1, 1, 0, 0], [0.9, 0.4, 0.6, 0.1])) == 0.75

    def test_single_class_rejected(self):
        with pytest.raises(MetricError):
            auc_roc(_pairs([1, 1], [0.5, 0.6]))

    def test_monotone_transformation_invariance(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 2, size=200).tolist()
        labels[0], labels[1] = 0, 1
        scores = rng.random(200)
        base = auc_roc(_pairs(labels, scores))
        warped = auc_roc(_pairs(labels, np.exp(3 * scores)))
        assert warped == pytest.approx(base, abs=1e-12)

    def test_negation_symmetry(self):
        rng = np.random.default_rng(1)
        labels = rng.integers(0, 2, size=300).tolist()
        labels[0], labels[1] = 0, 1
        scores = rng.random(300)
        a = auc_roc(_pairs(labels, scores))
        b = auc_roc(_pairs(labels, -scores))
        assert a + b == pytest.approx(1.0, abs=1e-12)


class TestAveragePrecision:
    def test_all_positives_first(self):
        assert average_precision(_pairs([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1])) == 1.0

    def test_hand_computed_ranks_one_and_three(self):
        got = average_precision(_pairs([1, 0, 1, 0], [0.9, 0.8, 0.7, 0.6]))
        assert got == pytest.approx((1.0 + 2.0 / 3.0) / 2)

    def test_no_positives_rejected(self):
        with pytest.raises(MetricError):
            average_precision(_pairs([0, 0], [0.5, 0.6]))

    def test_ties_broken_by_stable_input_order(self):
        # equal scores: the earlier input row ranks first
        got = average_precision(_pairs([1, 0], [0.5, 0.5]))
        assert got == 1.0
        got = average_precision(_pairs([0, 1], [0.5, 0.5]))
        assert got == 0.5

    def test_random_scores_at_two_to_one_near_third(self):
        rng = np.random.default_rng(123)
        n_pos = 33_334
        n_neg = 2 * n_pos
        labels = np.array([1] * n_pos + [0] * n_neg)
        scores = rng.random(n_pos + n_neg)
        pairs = _pairs(labels.tolist(), scores.tolist())
        assert average_precision(pairs) == pytest.approx(1 / 3, abs=0.01)

    def test_monotone_transformation_invariance(self):
        rng = np.random.default_rng(5)
        labels = rng.integers(0, 2, size=150).tolist()
        labels[0] = 1
        scores = rng.random(150)
        a = average_precision(_pairs(labels, scores))
        b = average_precision(_pairs(labels, 10 + scores**3))
        assert a == pytest.approx(b, abs=1e-12)


class TestRocPoints:
    def test_endpoints_and_monotonicity(self):
        pts = roc_points(_pairs([1, 0, 1, 0, 1], [0.9, 0.8, 0.7, 0.3, 0.2]))
        assert pts[0] == (0.0, 0.0)
        assert pts[-1] == (1.0, 1.0)
        fprs = [p[0] for p in pts]
        tprs = [p[1] for p in pts]
        assert fprs == sorted(fprs)
        assert tprs == sorted(tprs)


def _dataset(n_items=80, seed=0):
    cfg = GenConfig(
        n_topics=2, polarization=4.0, topic_concentration=0.5, n_items=n_items,
        graph_spec=GraphSpec.complete(30), rng_seed=seed,
    )
    return generate_dataset(cfg)


class TestBuildTestPairs:
    def test_base_rate_one_third_when_pool_allows(self):
        cfg = GenConfig(
            n_topics=2, polarization=4.0, alpha=0.3, beta=0.7, topic_concentration=0.5,
            n_items=300, graph_spec=GraphSpec.barabasi_albert(100, 10), rng_seed=2,
        )
        g, _, topics, log = generate_dataset(cfg)
        pairs = build_test_pairs(g, topics, log, 2.0, np.random.default_rng(0))
        share = sum(p.label for p in pairs) / len(pairs)
        assert share == pytest.approx(1 / 3, abs=0.02)

    def test_item_without_propagation_contributes_nothing(self):
        g, _, topics, log = _dataset()
        singles = set(log.singleton_items())
        pairs = build_test_pairs(g, topics, log, 2.0, np.random.default_rng(0))
        assert all(p.item not in singles for p in pairs)

    def test_reproduces_trainer_examples_with_same_stream(self):
        g, _, topics, log = _dataset()
        cfg = TrainConfig(epochs=1, seed_sample_size=10, negative_ratio=2.0, rng_seed=0)
        xs = [
            (x.item, x.v, x.u, x.y)
            for x in build_examples(g, topics, log, cfg, np.random.default_rng(11))
        ]
        pairs = [
            (p.item, p.v, p.u, p.label)
            for p in build_test_pairs(
                g, topics, log, 2.0, np.random.default_rng(11), seed_sample_size=10
            )
        ]
        assert xs == pairs

    def test_empty_rejected(self):
        from ideocast.cascades import ActivationLog
        from ideocast.graph import complete_graph
        from ideocast.model import ItemTopics

        g = complete_graph(5)
        log = ActivationLog()
        log.add(0, 0, 1)  # seed never propagates
        topics = [ItemTopics(0, np.array([1.0]))]
        with pytest.raises(ValueError, match="no test pairs"):
            build_test_pairs(g, topics, log, 2.0, np.random.default_rng(0))


class TestEvaluate:
    def test_holdout_report_shape_and_determinism(self):
        g, _, topics, log = _dataset()
        tc = TrainConfig(epochs=2, rng_seed=1)
        rep1 = evaluate(g, topics, log, SplitPlan.holdout(0.9), tc, eval_seed=5)
        rep2 = evaluate(g, topics, log, SplitPlan.holdout(0.9), tc, eval_seed=5)
        assert len(rep1.folds) == 1
        assert rep1.folds[0].auc == rep2.folds[0].auc
        assert rep1.folds[0].ap == rep2.folds[0].ap
        assert 0.0 <= rep1.folds[0].auc <= 1.0

    def test_fold_isolation(self):
        g, _, topics, log = _dataset(n_items=60)
        tc = TrainConfig(epochs=1, rng_seed=0)
        rep = evaluate(g, topics, log, SplitPlan.kfold(3), tc, eval_seed=2)
        assert len(rep.folds) == 3
        # pooled pairs only reference test items of their fold: every item id
        # appears in exactly one fold's test set
        seen = [p.item for p in rep.pooled_pairs]
        rng = np.random.default_rng(np.random.SeedSequence([2, 11]))
        folds = split_items([t.item_id for t in topics], SplitPlan.kfold(3), rng)
        test_sets = [set(test) for _, test in folds]
        for item in set(seen):
            assert sum(item in ts for ts in test_sets) == 1

    def test_ground_truth_embedding_beats_or_matches_fit(self):
        # scoring with the generating embedding is a sanity ceiling
        cfg = GenConfig(
            n_topics=4, polarization=16.0, topic_concentration=0.125, n_items=600,
            graph_spec=GraphSpec.complete(60), rng_seed=4,
        )
        g, truth, topics, log = generate_dataset(cfg)
        tc = TrainConfig(epochs=8, rng_seed=3)
        rep = evaluate(g, topics, log, SplitPlan.holdout(0.9), tc, eval_seed=4)
        fitted_auc = rep.folds[0].auc
        rng = np.random.default_rng(np.random.SeedSequence([4, 11]))
        folds = split_items([t.item_id for t in topics], SplitPlan.holdout(0.9), rng)
        _, test_ids = folds[0]
        by_id = {t.item_id: t for t in topics}
        test_items = [by_id[i] for i in test_ids]
        pair_rng = np.random.default_rng(np.random.SeedSequence([4, 12, 0]))
        pairs = build_test_pairs(g, test_items, log.restricted_to(test_ids), 2.0, pair_rng)
        score_pairs(pairs, test_items, truth)
        oracle_auc = auc_roc(pairs)
        assert oracle_auc > fitted_auc - 0.02

    def test_macro_flag_runs(self):
        g, _, topics, log = _dataset()
        tc = TrainConfig(epochs=1, rng_seed=0)
        rep = evaluate(
            g, topics, log, SplitPlan.holdout(0.9), tc, eval_seed=1, macro_average=True
        )
        assert 0.0 <= rep.folds[0].auc <= 1.0
