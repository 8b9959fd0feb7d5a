import pytest

from roadgame.network import Edge, Node, RoadNetwork
from roadgame.synth import generate_city


def build_net(edges, times=None, require_connected=True) -> RoadNetwork:
    """Small test network from (edge_id, u, v) triples; unit travel time
    unless ``times`` gives per-edge seconds (length = time * 10 m/s)."""
    nodes = {}
    edge_objs = []
    for eid, u, v in edges:
        for name in (u, v):
            nodes.setdefault(name, Node(name, float(len(nodes)), 0.0))
        t = 1.0 if times is None else times[eid]
        edge_objs.append(Edge(eid, u, v, t * 10.0, 10.0))
    return RoadNetwork(nodes.values(), edge_objs, require_connected=require_connected)


def clique_edges(prefix, names):
    out = []
    count = 0
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            out.append((f"{prefix}{count:02d}", names[i], names[j]))
            count += 1
    return out


@pytest.fixture(scope="session")
def p3():
    # A - B - C; edge ids ordered so the A-B edge sorts first
    return build_net([("e0", "A", "B"), ("e1", "B", "C")])


@pytest.fixture(scope="session")
def square():
    return build_net([("e0", "A", "B"), ("e1", "B", "C"),
                      ("e2", "C", "D"), ("e3", "D", "A")])


@pytest.fixture(scope="session")
def two_triangles_bridge():
    edges = [("t00", "a0", "a1"), ("t01", "a0", "a2"), ("t02", "a1", "a2"),
             ("t10", "b0", "b1"), ("t11", "b0", "b2"), ("t12", "b1", "b2"),
             ("xbridge", "a0", "b0")]
    return build_net(edges)


@pytest.fixture(scope="session")
def two_cliques_bridge():
    a = [f"a{i}" for i in range(5)]
    b = [f"b{i}" for i in range(5)]
    edges = clique_edges("ca", a) + clique_edges("cb", b) + [("xbridge", "a0", "b0")]
    return build_net(edges)


@pytest.fixture(scope="session")
def k4():
    return build_net(clique_edges("k", ["A", "B", "C", "D"]))


@pytest.fixture(scope="session")
def k5():
    return build_net(clique_edges("k", [f"n{i}" for i in range(5)]))


@pytest.fixture(scope="session")
def k6():
    return build_net(clique_edges("k", [f"n{i}" for i in range(6)]))


@pytest.fixture(scope="session")
def c6():
    names = [f"n{i}" for i in range(6)]
    return build_net([(f"e{i}", names[i], names[(i + 1) % 6]) for i in range(6)])


@pytest.fixture(scope="session")
def star5():
    return build_net([(f"s{i}", "hub", f"leaf{i}") for i in range(5)])


@pytest.fixture(scope="session")
def planted32():
    """Two 4x4 grid blocks joined by exactly two bridges."""
    return generate_city("two_cluster", size_a=16, size_b=16, bridges=2, edge_time_s=60)


@pytest.fixture(scope="session")
def bypass_city():
    """Two-cluster city with slow bypass crossings outside the bridge rows."""
    return generate_city("two_cluster", size_a=64, size_b=64, bridges=2,
                         edge_time_s=20, bypass_count=6, bypass_time_s=300)
