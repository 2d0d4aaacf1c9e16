import json
import time

import numpy as np
import pytest

from uaga.adversarial import AdvConfig
from uaga.embedding import WalkConfig
from uaga.errors import AlignmentError, GraphError
from uaga.evaluation import precision_at_n
from uaga.graph import AnchorLinkSet, Graph, barabasi_albert_graph, erdos_renyi_graph, generate_aligned_pair
from uaga.incremental import AlignConfig, align_embeddings, extend_graph, round_seeds, run_iuaga, run_uaga

WALK = WalkConfig(walks_per_node=4, walk_length=20, window=3, dim=16, epochs=1)
ADV = AdvConfig(epochs=2, batch=64, hidden=32)


def oracle_extend(g, other, anchors, direction):
    pairs = anchors.pairs() if direction == "source" else [(b, a) for a, b in anchors.pairs()]
    other_edges = other.edge_set()
    new = set(g.edge_set())
    for u, up in pairs:
        for v, vp in pairs:
            if u != v and (min(up, vp), max(up, vp)) in other_edges:
                new.add((min(u, v), max(u, v)))
    return new


def test_target_gains_edge_implied_by_source():
    # source A B C D, target a b c d; B-C linked only in the source
    source = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)], list("ABCD"))
    target = Graph.from_edges(4, [(0, 1), (2, 3)], list("abcd"))
    anchors = AnchorLinkSet.from_pairs([(1, 1), (2, 2)], kind="pseudo")
    out = extend_graph(target, source, anchors, "target")
    assert out.edge_set() == {(0, 1), (1, 2), (2, 3)}
    assert out.node_labels() == target.node_labels()
    assert extend_graph(source, target, anchors, "source") == source


def test_empty_anchor_set_leaves_graph_unchanged(small_er):
    assert extend_graph(small_er, small_er, AnchorLinkSet.empty(), "source") == small_er


@pytest.mark.parametrize("seed", range(6))
def test_extension_matches_set_comprehension(seed):
    rng = np.random.default_rng(seed)
    gs, gt = erdos_renyi_graph(50, 0.08, seed), erdos_renyi_graph(50, 0.1, seed + 100)
    k = int(rng.integers(5, 50))
    anchors = AnchorLinkSet.from_pairs(zip(rng.choice(50, k, replace=False).tolist(),
                                           rng.choice(50, k, replace=False).tolist()), kind="pseudo")
    for g, other, direction in ((gs, gt, "source"), (gt, gs, "target")):
        out = extend_graph(g, other, anchors, direction)
        out.check()
        assert out.edge_set() == oracle_extend(g, other, anchors, direction)
        # monotone and bounded, never a self-loop
        assert g.edge_set() <= out.edge_set()
        assert out.edge_count <= g.edge_count + other.edge_count
        assert all(u != v for u, v in out.edge_set())


def test_extension_rejects_unknown_ids(path_graph):
    bad = AnchorLinkSet.from_pairs([(0, 0), (99, 1)], kind="pseudo")
    with pytest.raises(GraphError):
        extend_graph(path_graph, path_graph, bad, "source")
    with pytest.raises(GraphError):
        extend_graph(path_graph, path_graph, AnchorLinkSet.empty(), "sideways")


def test_round_seeds_are_distinct_and_stable():
    a = round_seeds(7, 0)
    assert a == round_seeds(7, 0)
    assert len(set(a)) == 3
    assert set(a).isdisjoint(round_seeds(7, 1))


def test_config_validation():
    with pytest.raises(AlignmentError):
        AlignConfig(outer_max=0)
    with pytest.raises(AlignmentError):
        AlignConfig(stop_tol=2.0)


def test_align_embeddings_dimension_mismatch(rng):
    with pytest.raises(AlignmentError, match="dimension mismatch"):
        align_embeddings(rng.normal(size=(10, 4)), rng.normal(size=(10, 5)), ADV)


@pytest.fixture(scope="module")
def pair():
    return generate_aligned_pair(barabasi_albert_graph(80, 3, 2), 0.9, 2)


def test_single_round_is_uaga_plus_one_extension(pair):
    cfg = AlignConfig(outer_max=1, extend_threshold=False)
    res = run_iuaga(pair.source, pair.target, WALK, ADV, cfg, seed=3, truth=pair.ground_truth)
    base = run_uaga(pair.source, pair.target, WALK, ADV, cfg, seed=3)
    assert len(res.rounds) == 1
    assert np.array_equal(res.first_round.mapping, base.mapping)
    assert np.array_equal(res.mapping, base.mapping)
    row = res.rounds[0]
    assert res.source.edge_count == pair.source.edge_count + row["added_source_edges"]
    assert res.target.edge_count == pair.target.edge_count + row["added_target_edges"]
    assert 0.0 <= row["pseudo_precision"] <= 1.0
    assert set(row["precision_at"]) == {"1", "5", "10"}


def test_no_anchor_round_stops_early(pair, caplog):
    cfg = AlignConfig(threshold=2.0, outer_max=3)
    res = run_iuaga(pair.source, pair.target, WALK, ADV, cfg, seed=1)
    assert "no pseudo anchors" in caplog.text
    assert res.stopped_early and len(res.rounds) == 1
    assert res.rounds[0]["pseudo_anchors"] == 0
    assert res.source == pair.source


def test_rounds_are_reproducible_and_checkpointed(pair, tmp_path):
    cfg = AlignConfig(outer_max=2, extend_threshold=False, stop_tol=0.0)
    a = run_iuaga(pair.source, pair.target, WALK, ADV, cfg, seed=5, truth=pair.ground_truth,
                  checkpoint_dir=tmp_path / "ck", keep_extensions=True)
    b = run_iuaga(pair.source, pair.target, WALK, ADV, cfg, seed=5, truth=pair.ground_truth)
    assert np.array_equal(a.mapping, b.mapping)
    assert a.rounds == b.rounds
    assert len(a.rounds) == 2 and len(a.extensions) == 2
    for r in range(2):
        d = tmp_path / "ck" / f"round_{r}"
        names = {p.name for p in d.iterdir()}
        assert names == {"source.edges", "target.edges", "source.emb", "target.emb", "mapping.txt",
                         "pseudo_anchors.tsv", "loss.csv", "metrics.json"}
        assert json.loads((d / "metrics.json").read_text())["round"] == r
    for gs, gt, t_hat, gs_new, gt_new in a.extensions:
        assert gs_new.edge_set() == oracle_extend(gs, gt, t_hat, "source")
        assert gt_new.edge_set() == oracle_extend(gt, gs, t_hat, "target")
    # the second round embeds the extended graphs
    assert a.rounds[1]["source_edges"] == a.rounds[0]["source_edges"] + a.rounds[0]["added_source_edges"]


def test_false_edge_counts_bounded(pair):
    cfg = AlignConfig(outer_max=1, extend_threshold=False)
    res = run_iuaga(pair.source, pair.target, WALK, ADV, cfg, seed=2, truth=pair.ground_truth)
    row = res.rounds[0]
    assert 0 <= row["false_source_edges"] <= row["added_source_edges"]
    assert 0 <= row["false_target_edges"] <= row["added_target_edges"]


def test_perfect_anchors_add_no_false_edges():
    g = erdos_renyi_graph(40, 0.15, 1)
    pair = generate_aligned_pair(g, 0.8, 1)
    gs = extend_graph(pair.source, pair.target, pair.ground_truth, "source")
    # with true anchors, the extension restores exactly the union of both edge sets
    assert gs.edge_set() == pair.source.edge_set() | pair.target.edge_set()


def test_empty_graphs_rejected():
    with pytest.raises(GraphError):
        run_iuaga(Graph.empty(0), Graph.empty(0), WALK, ADV)


def test_planted_pair_iuaga_not_worse_than_uaga():
    base = barabasi_albert_graph(300, 4, 11)
    pair = generate_aligned_pair(base, 0.95, 11)
    walk = WalkConfig(walks_per_node=10, walk_length=40, dim=32)
    adv = AdvConfig(epochs=5, hidden=256)
    cfg = AlignConfig(outer_max=3)
    u = run_uaga(pair.source, pair.target, walk, adv, cfg, seed=4)
    p_u = precision_at_n(u.candidates("Adv-Refine-CGSS", 1), pair.ground_truth, (1,))[1]
    i = run_iuaga(pair.source, pair.target, walk, adv, cfg, seed=4)
    p_i = precision_at_n(i.candidates(1), pair.ground_truth, (1,))[1]
    assert p_i >= p_u


def test_runtime_scales_below_quadratic_log():
    walk = WalkConfig(walks_per_node=4, walk_length=20, window=3, dim=16, epochs=1)
    adv = AdvConfig(epochs=2, batch=100, hidden=64)
    cfg = AlignConfig(outer_max=2, extend_threshold=False, stop_tol=0.0)
    times = {}
    run_iuaga(*_ba_pair(100), walk, adv, cfg, seed=0)  # warm the compiled kernels
    for n in (100, 200, 400):
        t0 = time.perf_counter()
        run_iuaga(*_ba_pair(n), walk, adv, cfg, seed=0)
        times[n] = time.perf_counter() - t0
    bound = 16 * np.log(400) / np.log(100)
    assert times[400] / times[100] <= bound


def _ba_pair(n):
    p = generate_aligned_pair(barabasi_albert_graph(n, 3, n), 0.9, n)
    return p.source, p.target
