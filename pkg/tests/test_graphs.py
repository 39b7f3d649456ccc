import random

import pytest

import kahlerstar.graphs as graphs
from kahlerstar.graphs import (Graph, aut_bruteforce, bullet_via_graphs, canonical_key,
                               connected_pieces, dump_graphs, enumerate_graphs,
                               graph_operator_series)
from kahlerstar.laplace import engine_for
from kahlerstar.models import Flat, build_context, random_perturbation
from kahlerstar.rings import QQi
from kahlerstar.suites import random_jet, random_point


@pytest.mark.parametrize("k", [0, 1, 2])
def test_pieces_are_valid_and_distinct(k):
    vac, root = connected_pieces(k)
    keys = set()
    for g in vac + root:
        assert g.is_valid()
        assert g.chi == k
        keys.add(canonical_key(g))
    assert len(keys) == len(vac) + len(root)


def test_automorphisms_against_brute_force():
    for k in (1, 2):
        vac, root = connected_pieces(k)
        for g in vac + root:
            assert g.aut == aut_bruteforce(g)


def test_canonical_key_ignores_labels():
    rng = random.Random(0)
    for g in connected_pieces(2)[1]:
        perm = list(range(2, g.size))
        rng.shuffle(perm)
        assert canonical_key(g.relabel([0, 1] + perm)) == canonical_key(g)


def test_grade_zero_and_one():
    vac0, root0 = connected_pieces(0)
    assert vac0 == [] and len(root0) == 1
    # the single edge L -> R has weight h and no symmetry
    assert any(g.n_edges == 1 and g.size == 2 for g in connected_pieces(1)[1])


def test_enumeration_with_vacuum_components():
    gs = enumerate_graphs(2)
    assert all(g.chi == 2 for g in gs)
    assert dump_graphs(gs) == dump_graphs(list(reversed(gs)))


@pytest.mark.parametrize("n,K", [(1, 3), (2, 2)])
def test_engines_agree(n, K):
    rng = random.Random(100 + n)
    for _ in range(3):
        m = random_perturbation(n, rng)
        ctx = build_context(m, random_point(n, rng), 2 * K + 2)
        a = engine_for(ctx).operator_series(K)
        b = graph_operator_series(ctx, K)
        assert a.diff(b) == []
        f1, f2 = random_jet(n, 2 * K, rng), random_jet(n, 2 * K, rng)
        assert bullet_via_graphs(ctx, f1, f2, K) == a.apply(f1, f2)


def test_flat_graph_series():
    ctx = build_context(Flat(2), (QQi(0), QQi(0)), 8)
    assert graph_operator_series(ctx, 3) == engine_for(ctx).operator_series(3)


def test_disk_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("KSTAR_CACHE_DIR", str(tmp_path))
    monkeypatch.setattr(graphs, "_piece_cache", {})
    vac, root = connected_pieces(3)
    files = list(tmp_path.iterdir())
    assert len(files) == 1 and files[0].name.endswith("k3.pickle")
    monkeypatch.setattr(graphs, "_piece_cache", {})
    vac2, root2 = connected_pieces(3)
    assert [(g.kinds, g.adj, g.aut) for g in vac + root] == \
        [(g.kinds, g.adj, g.aut) for g in vac2 + root2]
    # a corrupt file is ignored and rewritten
    files[0].write_bytes(b"junk")
    monkeypatch.setattr(graphs, "_piece_cache", {})
    vac3, _ = connected_pieces(3)
    assert len(vac3) == len(vac)


def test_graph_is_frozen():
    g = Graph(("L", "R"), ((0, 1), (0, 0)))
    assert g.is_valid() and g.chi == 1
    assert not Graph(("L", "R"), ((0, 0), (1, 0))).is_valid()
