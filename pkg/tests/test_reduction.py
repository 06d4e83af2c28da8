import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annostream.field import make_rng
from annostream.outcome import Reject
from annostream.reduction import (
    BIPARTITENESS,
    DISCONNECTIVITY,
    IndexInstance,
    MerlinList,
    bipartite_edge_index,
    bob_decide,
    build_alice_stream,
    claim_holds,
    edge_index,
    edge_position,
    final_graph,
    honest_merlin,
    random_instance,
)
from annostream.stream import accumulate, oracle_bipartite, oracle_connected


def test_colex_endpoints():
    assert edge_index(4, 1) == (1, 2)
    assert edge_index(4, 6) == (3, 4)
    assert [edge_index(4, i) for i in range(1, 7)] == [(1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)]


@pytest.mark.parametrize("n", range(2, 11))
def test_colex_roundtrip(n):
    size = n * (n - 1) // 2
    seen = {edge_index(n, i) for i in range(1, size + 1)}
    assert seen == set(itertools.combinations(range(1, n + 1), 2))
    assert all(edge_position(n, *edge_index(n, i)) == i for i in range(1, size + 1))


def test_index_bounds():
    with pytest.raises(ValueError):
        edge_index(4, 7)
    with pytest.raises(ValueError):
        edge_position(4, 2, 2)
    assert bipartite_edge_index(4, 1) == (1, 3)
    assert bipartite_edge_index(4, 4) == (2, 4)


def test_instance_validation():
    with pytest.raises(ValueError):
        IndexInstance(4, (0,) * 5, 1)
    with pytest.raises(ValueError):
        IndexInstance(5, (0,) * 4, 1, BIPARTITENESS)
    with pytest.raises(ValueError):
        IndexInstance(4, (0,) * 6, 7)


def test_zero_string_gives_only_the_hub_star():
    inst = IndexInstance(5, (0,) * 10, 3)
    h, ups = build_alice_stream(inst)
    assert h.n == 6 and sorted((u.u, u.v) for u in ups) == [(w, 6) for w in range(1, 6)]
    assert honest_merlin(inst).neighbor_bits == (0, 0, 0, 0, 1)


def test_all_ones_merlin_list():
    inst = IndexInstance(5, (1,) * 10, 3)
    assert honest_merlin(inst).neighbor_bits == (1,) * 5


@given(st.integers(min_value=0, max_value=10**6), st.sampled_from([4, 6, 8]))
@settings(max_examples=50, deadline=None)
def test_alice_graphs_have_their_promised_property(seed, n):
    rng = make_rng(seed)
    inst = random_instance(n, rng, DISCONNECTIVITY)
    assert oracle_connected(accumulate(*build_alice_stream(inst)))
    bip = random_instance(n, rng, BIPARTITENESS)
    assert oracle_bipartite(accumulate(*build_alice_stream(bip)))


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=30, deadline=None)
def test_honest_list_matches_matrix_row(seed):
    inst = random_instance(7, make_rng(seed))
    g = accumulate(*build_alice_stream(inst))
    lst = honest_merlin(inst)
    assert lst.help_bits() == 7
    assert list(lst.neighbor_bits) == [int(g[inst.u_star, w] > 0) for w in inst.others()]


@pytest.mark.parametrize("bit", [0, 1])
def test_bob_recovers_target_bit(bit):
    rng = make_rng(bit)
    inst = random_instance(6, rng)
    x = list(inst.x)
    x[inst.i_star - 1] = bit
    inst = IndexInstance(6, tuple(x), inst.i_star)
    assert bob_decide(inst, honest_merlin(inst)) == bit
    if bit:
        assert not oracle_connected(final_graph(inst, honest_merlin(inst)))


def perturbations(bits, slots):
    for k in (1, 2):
        for idx in itertools.combinations(slots, k):
            out = list(bits)
            for j in idx:
                out[j] ^= 1
            yield tuple(out)


@pytest.mark.parametrize("n", range(2, 9))
def test_disconnectivity_claim_exhaustive(n):
    rng = make_rng(100 + n)
    for _ in range(4):
        inst = random_instance(n, rng, DISCONNECTIVITY)
        honest = honest_merlin(inst)
        assert claim_holds(inst, honest)
        for bits in perturbations(honest.neighbor_bits, range(n)):
            lst = MerlinList(inst.u_star, bits)
            assert claim_holds(inst, lst)
            assert bob_decide(inst, lst) == 0


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_bipartite_claim_exhaustive_over_right_side(n):
    rng = make_rng(200 + n)
    for _ in range(4):
        inst = random_instance(n, rng, BIPARTITENESS)
        honest = honest_merlin(inst)
        assert claim_holds(inst, honest)
        right = [j for j, w in enumerate(inst.others()) if n // 2 < w <= n]
        for bits in perturbations(honest.neighbor_bits, right):
            lst = MerlinList(inst.u_star, bits)
            assert claim_holds(inst, lst)
            assert bob_decide(inst, lst) == 0


def test_bipartite_lists_naming_impossible_neighbours_are_rejected():
    inst = random_instance(6, make_rng(5), BIPARTITENESS)
    honest = honest_merlin(inst)
    others = inst.others()
    for j, w in enumerate(others):
        if w <= 3 or w == inst.v_star:
            bits = list(honest.neighbor_bits)
            bits[j] ^= 1
            if bits[j]:
                assert isinstance(bob_decide(inst, MerlinList(inst.u_star, tuple(bits))), Reject)


def test_list_length_checked():
    inst = random_instance(5, make_rng(1))
    with pytest.raises(ValueError):
        bob_decide(inst, MerlinList(inst.u_star, (0,) * 4))


def test_wrong_u_star_is_rejected():
    inst = random_instance(5, make_rng(1))
    wrong = 1 if inst.u_star != 1 else 2
    assert isinstance(bob_decide(inst, MerlinList(wrong, (0,) * 5)), Reject)


@pytest.mark.parametrize("variant,n", [(DISCONNECTIVITY, 7), (BIPARTITENESS, 6)])
def test_end_to_end_recovery(variant, n):
    rng = make_rng(77)
    for _ in range(300):
        inst = random_instance(n, rng, variant)
        assert bob_decide(inst, honest_merlin(inst)) == inst.x[inst.i_star - 1]


def test_pluggable_decide():
    inst = random_instance(5, make_rng(3))
    assert bob_decide(inst, honest_merlin(inst), decide=lambda g: False) == 0
