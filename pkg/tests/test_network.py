import pytest

from dqcc.network import (
    NetworkError,
    links_by_edge,
    parse_network,
    quotient,
    time_expand,
)
from conftest import TOY_NETWORK


def test_parse_toy_counts(toy_network):
    assert len(toy_network.processors) == 3
    assert len(toy_network.computation_qubits) == 6
    assert len(toy_network.communication_qubits) == 6
    assert len(toy_network.links) == 3
    assert len(toy_network.locals_) == 10
    assert toy_network.processor_of("q3") == "P2"
    assert toy_network.placement()["q5"] == "P3"


def test_parse_rejects_link_on_computation_qubit():
    text = TOY_NETWORK + "elink q1 c3\n"
    with pytest.raises(NetworkError, match="computation qubit"):
        parse_network(text)


def test_parse_rejects_intra_processor_link():
    text = TOY_NETWORK + "elink c3 c4\n"
    with pytest.raises(NetworkError, match="inside one processor"):
        parse_network(text)


def test_parse_rejects_disconnected():
    text = """
    processor P1 { comp q1 comm c1 }
    processor P2 { comp q2 comm c2 }
    local q1 c1
    local q2 c2
    """
    with pytest.raises(NetworkError, match="disconnected"):
        parse_network(text)


def test_parse_rejects_duplicate_names():
    text = "processor P1 { comp q1 comm q1 }\n"
    with pytest.raises(NetworkError, match="duplicate node"):
        parse_network(text)


def test_parse_rejects_cross_processor_local():
    text = TOY_NETWORK + "local q1 q3\n"
    with pytest.raises(NetworkError, match="crosses processors"):
        parse_network(text)


def test_quotient_of_toy(toy_network):
    q = quotient(toy_network)
    assert q.capacity == {("P1", "P2"): 2, ("P2", "P3"): 1}
    assert ("P1", "P3") not in q.capacity  # no mutual links, no edge
    assert sum(q.capacity.values()) == len(toy_network.links)


def test_quotient_parallel_links():
    lines = [
        "processor A { comm " + " ".join(f"x{i}" for i in range(5)) + " comp qa }",
        "processor B { comm " + " ".join(f"y{i}" for i in range(5)) + " comp qb }",
    ]
    lines += [f"elink x{i} y{i}" for i in range(5)]
    q = quotient(parse_network("\n".join(lines)))
    assert q.capacity == {("A", "B"): 5}


def test_quotient_invariant_under_relabeling(toy_network):
    renamed = TOY_NETWORK
    for old, new in [("c1", "z9"), ("c2", "z8"), ("c3", "z7")]:
        renamed = renamed.replace(old, new)
    q1, q2 = quotient(toy_network), quotient(parse_network(renamed))
    assert sorted(q1.capacity.values()) == sorted(q2.capacity.values())


def test_links_by_edge_orientation(toy_network):
    table = links_by_edge(toy_network)
    assert table[("P1", "P2")] == [("c1", "c3"), ("c2", "c4")]
    assert table[("P2", "P3")] == [("c5", "c6")]


def test_time_expand_shape(toy_network):
    # four processors, three commodities, horizon two
    q = quotient(
        parse_network(
            """
            processor P1 { comp q1 comm a1 }
            processor P2 { comp q2 comm a2 b2 }
            processor P3 { comp q3 comm a3 b3 }
            processor P4 { comp q4 comm a4 }
            elink a1 a2
            elink b2 a3
            elink b3 a4
            local q1 a1
            local q2 a2
            local q3 a3
            local q4 a4
            """
        )
    )
    ends = [("P1", "P2"), ("P2", "P4"), ("P3", "P1")]
    teg = time_expand(q, ends, d=2)
    assert teg.copies == (1, 2)
    assert len(teg.intra_edges) == 2 * len(q.edges())
    assert all(cap == q.capacity[e] for _, e, cap in teg.intra_edges)
    # commodity 1 reaches copy 1 only; 2 and 3 reach both copies
    assert teg.source_connectors[1] == (("P1", 1),)
    assert teg.source_connectors[2] == (("P2", 1), ("P2", 2))
    assert teg.sink_connectors[3] == (("P1", 1), ("P1", 2))
    assert [teg.connector_count(i) for i in (1, 2, 3)] == [2, 4, 4]


def test_time_expand_pruning_rule(toy_network):
    q = quotient(toy_network)
    ends4 = [("P1", "P2")] * 4
    teg = time_expand(q, ends4, d=1)
    assert all(teg.connector_count(i) == 2 for i in range(1, 5))
    teg = time_expand(q, ends4[:1], d=10)
    assert teg.connector_count(1) == 2
    assert teg.copies == tuple(range(1, 11))
    wide = time_expand(q, [("P1", "P3")] * 6, d=4)
    for i in range(1, 7):
        assert wide.connector_count(i) == 2 * min(i, 4)


def test_time_expand_rejects_bad_horizon(toy_network):
    with pytest.raises(NetworkError, match="positive"):
        time_expand(quotient(toy_network), [("P1", "P2")], 0)
