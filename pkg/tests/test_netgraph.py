import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vaxcontagion.netgraph import (
    EdgeListError,
    Network,
    complete_graph,
    contacts,
    disjoint_complete_graphs,
    extract_independent_pairs,
    generate_family_network,
    is_maximal,
    load_edge_list,
    nearby_pairs,
    pair_zone,
    pairs_are_distance_separated,
    pairs_are_independent,
    save_edge_list,
    scaled_out_tie_prob,
)


def rng(seed=0):
    return np.random.default_rng(seed)


# --- Network ----------------------------------------------------------------


def test_edges_are_normalised():
    net = Network(4, [(2, 1), (1, 2), (0, 3)])
    assert net.ties == {(1, 2), (0, 3)}
    assert net.tie_count == 2
    assert net.has_tie(2, 1) and net.has_tie(1, 2)


def test_self_tie_rejected():
    with pytest.raises(ValueError):
        Network(3, [(1, 1)])


def test_out_of_range_rejected():
    with pytest.raises(IndexError):
        Network(3, [(0, 3)])


def test_contacts():
    assert contacts(complete_graph(3), 0) == {1, 2}
    assert contacts(Network(3), 0) == frozenset()
    path = Network(3, [(0, 1), (1, 2)])
    assert contacts(path, 1) == {0, 2}
    with pytest.raises(IndexError):
        contacts(path, 3)


# --- generator --------------------------------------------------------------


def test_family_network_p0_is_complete_groups():
    net = generate_family_network(1, 5, 0.0, rng())
    assert net == complete_graph(5)
    assert net.tie_count == 10


def test_family_network_p1_is_complete():
    net = generate_family_network(2, 2, 1.0, rng())
    assert net == complete_graph(4)


def test_family_network_counts():
    G, s, p = 2000, 5, 1e-4
    n = G * s
    net = generate_family_network(G, s, p, rng(1))
    e = net.edges
    within = (e[:, 0] // s) == (e[:, 1] // s)
    assert within.sum() == G * s * (s - 1) // 2
    trials = n * (n - 1) // 2 - G * s * (s - 1) // 2
    mean, sd = trials * p, np.sqrt(trials * p * (1 - p))
    assert abs((~within).sum() - mean) < 4 * sd


def test_family_network_out_degree_expectation():
    # Each unordered out-of-group pair is one Bernoulli trial, so a node's
    # expected out-of-group degree is p * (n - group_size), about 1 for the
    # 10000-node configuration.
    G, s, p = 2000, 5, 1e-4
    n = G * s
    degs = []
    for seed in range(5):
        net = generate_family_network(G, s, p, rng(seed))
        degs.append(net.degree().mean() - (s - 1))
    expected = p * (n - s)
    assert abs(np.mean(degs) - expected) < 0.05


def test_family_network_deterministic():
    a = generate_family_network(100, 5, 0.01, rng(3))
    b = generate_family_network(100, 5, 0.01, rng(3))
    assert a == b


def test_scaled_out_tie_prob_keeps_out_degree():
    for n in (8000, 10000, 12000):
        assert scaled_out_tie_prob(n) * (n - 5) == pytest.approx(1e-4 * 9995)


def test_family_network_generates_only_valid_ties():
    net = generate_family_network(50, 4, 0.05, rng(2))
    e = net.edges
    assert np.all(e[:, 0] < e[:, 1])
    assert len(np.unique(e, axis=0)) == len(e)


# --- extraction -------------------------------------------------------------


def brute_force_max_pairs(net):
    """Largest number of pairwise independent ties, by enumeration."""
    edges = [tuple(map(int, t)) for t in net.edges]
    best = 0
    for r in range(1, len(edges) + 1):
        for subset in itertools.combinations(edges, r):
            zones = [pair_zone(net, a, b) for a, b in subset]
            ok = True
            for z1, z2 in itertools.combinations(zones, 2):
                touching = z1 & z2 or any(net.has_tie(u, v) for u in z1 for v in z2)
                if touching:
                    ok = False
                    break
            if ok:
                best = r
    return best


def test_single_edge_gives_one_pair():
    out = extract_independent_pairs(Network(2, [(0, 1)]), rng())
    assert len(out) == 1
    assert {out[0][0].alter, out[0][0].ego} == {0, 1}


def test_two_disjoint_edges_give_two_pairs():
    assert len(extract_independent_pairs(Network(4, [(0, 1), (2, 3)]), rng())) == 2


def test_triangle_gives_one_pair():
    net = complete_graph(3)
    assert brute_force_max_pairs(net) == 1
    for seed in range(20):
        assert len(extract_independent_pairs(net, rng(seed))) == 1


def test_empty_network():
    assert extract_independent_pairs(Network(5), rng()) == []


def test_zone_members():
    net = Network(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    assert pair_zone(net, 1, 2) == {0, 1, 2, 3}


def test_path_extraction():
    # Path 0-1-...-9: pairs must be at distance >= 4 from each other.
    net = Network(10, [(i, i + 1) for i in range(9)])
    for seed in range(30):
        out = extract_independent_pairs(net, rng(seed))
        assert pairs_are_independent(net, out)
        assert pairs_are_distance_separated(net, out)
        assert is_maximal(net, out)


def test_alter_role_is_a_fair_coin():
    net = Network(2, [(0, 1)])
    alters = [extract_independent_pairs(net, rng(s))[0][0].alter for s in range(2000)]
    k = sum(a == 0 for a in alters)
    # two-sided binomial bound at about 4 SD
    assert abs(k - 1000) < 4 * np.sqrt(500)


def test_extraction_on_family_network():
    n = 8000
    net = generate_family_network(n // 5, 5, scaled_out_tie_prob(n), rng(4))
    out = extract_independent_pairs(net, rng(5))
    assert 350 <= len(out) <= 600
    assert pairs_are_independent(net, out)
    assert pairs_are_distance_separated(net, out)
    assert is_maximal(net, out)
    for pair, zone in out:
        assert net.has_tie(pair.alter, pair.ego)
        assert zone.members == pair_zone(net, pair.alter, pair.ego)
    assert [p.pair_id for p, _ in out] == list(range(len(out)))


def test_checkers_detect_violations():
    net = Network(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])
    from vaxcontagion.netgraph import AlterEgoPair, Zone

    def make(a, e, k):
        return AlterEgoPair(a, e, k), Zone(k, pair_zone(net, a, e))

    close = [make(0, 1, 0), make(3, 4, 1)]  # zones {0,1,2} and {2,3,4,5} overlap
    assert not pairs_are_independent(net, close)
    assert not pairs_are_distance_separated(net, close)
    # on this 6-path every other tie reaches node 2 or 3, so one pair is maximal
    assert is_maximal(net, [make(0, 1, 0)])
    assert not is_maximal(net, [])


@st.composite
def random_networks(draw):
    n = draw(st.integers(min_value=1, max_value=14))
    possible = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not possible:
        return Network(n)
    mask = draw(st.lists(st.booleans(), min_size=len(possible), max_size=len(possible)))
    return Network(n, [e for e, keep in zip(possible, mask) if keep])


@settings(max_examples=200, deadline=None)
@given(net=random_networks(), seed=st.integers(0, 2 ** 32 - 1))
def test_extraction_properties(net, seed):
    out = extract_independent_pairs(net, rng(seed))
    assert pairs_are_independent(net, out)
    assert pairs_are_distance_separated(net, out)
    assert is_maximal(net, out)
    if net.tie_count:
        assert len(out) >= 1
    else:
        assert out == []


def test_nearby_pairs():
    # Zones {0,1,2} and {6,7,8} on a 9-path are joined by the path 2-3-4-5-6.
    net = Network(9, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8)])
    from vaxcontagion.netgraph import AlterEgoPair
    pairs = [AlterEgoPair(0, 1, 0), AlterEgoPair(7, 8, 1)]
    assert len(nearby_pairs(net, pairs, 2)) == 0
    assert nearby_pairs(net, pairs, 4).tolist() == [[0, 1]]


# --- edge-list I/O ----------------------------------------------------------


def test_edge_list_round_trip(tmp_path):
    path = tmp_path / "k3.txt"
    net = complete_graph(3)
    save_edge_list(net, path)
    assert load_edge_list(path) == net


def test_edge_list_round_trip_family(tmp_path):
    net = generate_family_network(30, 5, 0.02, rng(9))
    path = tmp_path / "fam.txt"
    save_edge_list(net, path)
    assert load_edge_list(path) == net


def test_edge_list_header_only(tmp_path):
    path = tmp_path / "e.txt"
    path.write_text("3\n")
    net = load_edge_list(path)
    assert net.node_count == 3 and net.tie_count == 0


def test_edge_list_comments(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("# a comment\n3\n# another\n0 1\n1 2\n")
    assert load_edge_list(path).ties == {(0, 1), (1, 2)}


@pytest.mark.parametrize("body", ["3\n0 0\n", "3\n0 3\n", "3\n2 1\n", "3\n0 x\n", "3\n0 1 2\n", ""])
def test_edge_list_errors(tmp_path, body):
    path = tmp_path / "bad.txt"
    path.write_text(body)
    with pytest.raises(EdgeListError):
        load_edge_list(path)


def test_disjoint_complete_graphs():
    net, starts = disjoint_complete_graphs([2, 3])
    assert starts.tolist() == [0, 2]
    assert net.ties == {(0, 1), (2, 3), (2, 4), (3, 4)}
