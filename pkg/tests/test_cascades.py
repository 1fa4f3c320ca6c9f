import pytest

from ideocast.cascades import ActivationLog, DuplicateActivationError, compute_exposures
from ideocast.graph import build_graph, complete_graph


class TestActivationLog:
    def test_duplicate_rejected(self):
        log = ActivationLog()
        log.add(0, 1, 5)
        with pytest.raises(DuplicateActivationError, match="node 5 on item 1"):
            log.add(3, 1, 5)

    def test_same_node_on_other_item_is_fine(self):
        log = ActivationLog()
        log.add(0, 1, 5)
        log.add(0, 2, 5)
        assert len(log) == 2

    def test_negative_time_rejected(self):
        log = ActivationLog()
        with pytest.raises(ValueError):
            log.add(-1, 0, 0)

    def test_out_of_order_ingestion_sorted(self):
        log = ActivationLog()
        log.add(5, 0, 3)
        log.add(0, 0, 1)
        log.add(2, 0, 2)
        assert log.cascade_nodes(0) == [1, 2, 3]
        assert log.cascade_times(0) == [0, 2, 5]

    def test_tie_keeps_ingestion_order(self):
        log = ActivationLog()
        log.add(1, 0, 9)
        log.add(1, 0, 4)
        log.add(0, 0, 7)
        assert log.cascade_nodes(0) == [7, 9, 4]

    def test_restricted_to(self):
        log = ActivationLog()
        log.add(0, 0, 1)
        log.add(0, 1, 2)
        log.add(0, 2, 3)
        sub = log.restricted_to([0, 2])
        assert sub.item_ids() == [0, 2]
        assert len(sub) == 2
        assert log.item_ids() == [0, 1, 2]

    def test_unknown_item_is_empty(self):
        assert ActivationLog().cascade_nodes(7) == []

    def test_activations_sorted_by_item_then_time(self):
        log = ActivationLog()
        log.add(1, 1, 0)
        log.add(0, 0, 2)
        log.add(0, 1, 3)
        flat = [(a.item, a.t, a.node) for a in log.activations()]
        assert flat == [(0, 0, 2), (1, 0, 3), (1, 1, 0)]

    def test_singletons(self):
        log = ActivationLog()
        log.add(0, 0, 1)
        log.add(0, 1, 1)
        log.add(1, 1, 2)
        assert log.singleton_items() == [0]


class TestComputeExposures:
    def test_chain(self):
        g = build_graph([(0, 1), (1, 2)], node_count=4)
        log = ActivationLog()
        log.add(0, 0, 0)
        log.add(1, 0, 1)
        exp = compute_exposures(g, log, 0)
        assert exp.active == [(1, [0])]
        assert exp.inactive == [(2, [1])]  # node 3 has no active in-neighbor

    def test_ties_do_not_expose(self):
        g = complete_graph(3)
        log = ActivationLog()
        log.add(0, 0, 0)
        log.add(1, 0, 1)
        log.add(1, 0, 2)
        exp = compute_exposures(g, log, 0)
        # simultaneous activations are not each other's exposers
        assert dict(exp.active) == {1: [0], 2: [0]}
        assert exp.inactive == []

    def test_exposure_order_is_activation_order(self):
        g = complete_graph(4)
        log = ActivationLog()
        log.add(0, 0, 2)
        log.add(1, 0, 3)
        log.add(2, 0, 0)
        exp = compute_exposures(g, log, 0)
        active = dict(exp.active)
        assert active[0] == [2, 3]
        assert dict(exp.inactive)[1] == [2, 3, 0]

    def test_inactive_sets_include_all_actives(self):
        g = complete_graph(5)
        log = ActivationLog()
        log.add(0, 0, 0)
        log.add(3, 0, 4)
        exp = compute_exposures(g, log, 0)
        for u, f in exp.inactive:
            assert f == [0, 4]
        assert {u for u, _ in exp.inactive} == {1, 2, 3}
