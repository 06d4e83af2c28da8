import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annostream.field import make_rng
from annostream.stream import (
    GenSpec,
    GraphMatrix,
    MalformedStream,
    OracleScale,
    StreamHeader,
    StreamUpdate,
    UpdateModel,
    accumulate,
    count_four_cycles,
    dumps_stream,
    generate,
    loads_stream,
    oracle_bipartite,
    oracle_components,
    oracle_connected,
    oracle_fourcycles_incremental,
    oracle_max_matching,
    oracle_triangles,
    oracle_tutte_berge,
)

K4 = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
C4 = [(1, 2), (2, 3), (3, 4), (1, 4)]
C5 = [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)]
STAR = [(1, 2), (1, 3), (1, 4)]


def graph(n, edges):
    return GraphMatrix.from_edges(n, edges)


def insert_stream(n, edges, B=1):
    return StreamHeader(n, UpdateModel.TURNSTILE, B), [StreamUpdate(u, v, 1) for u, v in edges]


def test_accumulate_examples():
    h = StreamHeader(3, UpdateModel.TURNSTILE, 2)
    g = accumulate(h, [StreamUpdate(1, 2, 1), StreamUpdate(1, 2, 1), StreamUpdate(1, 2, -1)])
    assert g[1, 2] == 1 and g[2, 1] == 1
    hx = StreamHeader(3, UpdateModel.XOR)
    gx = accumulate(hx, [StreamUpdate(1, 2), StreamUpdate(1, 2), StreamUpdate(2, 3)])
    assert list(gx.edges()) == [(2, 3, 1)]
    with pytest.raises(MalformedStream):
        accumulate(StreamHeader(3, UpdateModel.TURNSTILE, 1), [StreamUpdate(1, 2, -1)])


def test_intermediate_negative_multiplicity_is_allowed():
    h = StreamHeader(3, UpdateModel.TURNSTILE, 1)
    g = accumulate(h, [StreamUpdate(1, 2, -1), StreamUpdate(2, 1, 1)])
    assert g[1, 2] == 0


@pytest.mark.parametrize(
    "up,model",
    [
        (StreamUpdate(2, 2, 1), UpdateModel.TURNSTILE),
        (StreamUpdate(0, 2, 1), UpdateModel.TURNSTILE),
        (StreamUpdate(1, 4, 1), UpdateModel.TURNSTILE),
        (StreamUpdate(1, 2, 0), UpdateModel.TURNSTILE),
        (StreamUpdate(1, 2, 3), UpdateModel.TURNSTILE),
        (StreamUpdate(1, 2, -1), UpdateModel.XOR),
    ],
)
def test_bad_updates_rejected(up, model):
    with pytest.raises(MalformedStream):
        up.check(StreamHeader(3, model, 2))


def test_final_multiplicity_above_bound_rejected():
    h = StreamHeader(3, UpdateModel.TURNSTILE, 1)
    with pytest.raises(MalformedStream):
        accumulate(h, [StreamUpdate(1, 2, 1), StreamUpdate(1, 2, 1)])


@given(st.integers(min_value=0, max_value=10**6), st.randoms(use_true_random=False))
@settings(max_examples=40, deadline=None)
def test_accumulate_is_order_insensitive(seed, rnd):
    h, ups = generate(GenSpec(7, 40, 2, deletion_fraction=0.3, seed=seed))
    base = accumulate(h, ups)
    shuffled = list(ups)
    rnd.shuffle(shuffled)
    # a permutation may dip below zero mid-stream; only the final matrix matters
    assert np.array_equal(accumulate(h, shuffled).mult, base.mult)


def test_triangle_oracle_examples():
    assert oracle_triangles(graph(3, [(1, 2), (2, 3), (1, 3)])) == 1
    assert oracle_triangles(graph(4, K4)) == 4
    g = GraphMatrix.from_edges(3, [(1, 2, 2), (2, 3, 3), (1, 3, 1)])
    assert oracle_triangles(g) == 6


def test_fourcycle_oracle_examples():
    assert oracle_fourcycles_incremental(*insert_stream(4, K4)) == 3
    assert oracle_fourcycles_incremental(*insert_stream(4, C4)) == 1
    assert oracle_fourcycles_incremental(*insert_stream(4, [])) == 0


def test_fourcycle_oracle_with_delete_and_reinsert():
    # the incremental sum counts walks created at each update, so the deletion
    # retracts u-z1-z2-v walks through the pre-deletion graph and the reinsertion
    # adds them back through the post-deletion graph; the totals do not cancel
    h = StreamHeader(4, UpdateModel.TURNSTILE, 1)
    ups = [StreamUpdate(u, v, 1) for u, v in C4] + [StreamUpdate(1, 2, -1), StreamUpdate(1, 2, 1)]
    assert oracle_fourcycles_incremental(h, ups) == -2
    assert count_four_cycles(accumulate(h, ups)) == 1


@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=4, max_value=8))
@settings(max_examples=60, deadline=None)
def test_fourcycle_oracle_matches_enumeration_on_simple_insert_streams(seed, n):
    rng = make_rng(seed)
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    keep = [e for e in pairs if rng.random() < 0.5]
    order = rng.permutation(len(keep))
    h, ups = insert_stream(n, [keep[i] for i in order])
    assert oracle_fourcycles_incremental(h, ups) == count_four_cycles(accumulate(h, ups))


def test_matching_oracle_examples():
    assert oracle_max_matching(graph(4, K4))[0] == 2
    assert oracle_max_matching(graph(3, [(1, 2), (2, 3)]))[0] == 1
    assert oracle_max_matching(graph(5, C5)) == (2, [(1, 2), (3, 4)])


def test_tutte_berge_examples():
    assert oracle_tutte_berge(graph(5, C5)) == (2, [])
    assert oracle_tutte_berge(graph(4, STAR)) == (1, [1])
    assert oracle_tutte_berge(graph(4, K4)) == (2, [])


def test_components_examples():
    labels, odd = oracle_components(graph(5, C5))
    assert set(labels.values()) == {1} and odd == 1
    labels, odd = oracle_components(graph(4, STAR), exclude=[1])
    assert labels == {2: 2, 3: 3, 4: 4} and odd == 3
    labels, odd = oracle_components(graph(4, []))
    assert len(set(labels.values())) == 4 and odd == 4


def test_connectivity_and_bipartite_examples():
    assert oracle_connected(graph(4, C4)) and oracle_bipartite(graph(4, C4))
    assert not oracle_bipartite(graph(5, C5))
    assert not oracle_connected(graph(4, [(1, 2), (3, 4)]))


def test_oracle_scale_limits():
    with pytest.raises(OracleScale):
        oracle_max_matching(graph(30, [(1, 2)]))
    with pytest.raises(OracleScale):
        oracle_tutte_berge(graph(25, [(1, 2)]))


def test_tutte_berge_duality_random_suite():
    for seed in range(100):
        rng = make_rng(seed)
        n = int(rng.integers(2, 10))
        pairs = list(itertools.combinations(range(1, n + 1), 2))
        g = graph(n, [e for e in pairs if rng.random() < 0.35])
        assert oracle_tutte_berge(g)[0] == oracle_max_matching(g)[0]


def test_generate_is_deterministic():
    spec = GenSpec(20, 100, 2, deletion_fraction=0.2, seed=11)
    assert dumps_stream(*generate(spec)) == dumps_stream(*generate(spec))


def test_generate_insert_only():
    _, ups = generate(GenSpec(10, 30, 1, seed=4))
    assert all(up.delta == 1 for up in ups)


def test_generate_respects_bound():
    h, ups = generate(GenSpec(50, 500, 3, deletion_fraction=0.3, seed=7))
    g = accumulate(h, ups)
    assert g.mult.min() >= 0 and g.mult.max() <= 3


def test_generate_rejects_infeasible():
    with pytest.raises(ValueError):
        generate(GenSpec(4, 100, 1))


@pytest.mark.parametrize("model", list(UpdateModel))
def test_text_roundtrip(model):
    h, ups = generate(GenSpec(9, 40, 2 if model is UpdateModel.TURNSTILE else 1, model, seed=3))
    h2, ups2 = loads_stream(dumps_stream(h, ups))
    assert (h2.n, h2.model, h2.B) == (h.n, h.model, h.B)
    assert [(u.u, u.v, u.delta) for u in ups2] == [(u.u, u.v, u.delta) for u in ups]


@pytest.mark.parametrize("text", ["", "n=3\n1 1 1\n", "n=3\n1 2\n", "bogus\n", "n=3\n1 x 1\n"])
def test_text_rejects_garbage(text):
    with pytest.raises(MalformedStream):
        loads_stream(text)
