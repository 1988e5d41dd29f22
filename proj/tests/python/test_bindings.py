import math

import pytest

import coagtree


def test_tree_round_trip():
    t = coagtree.parse_tree("((1.0#1,2.0#2)@0.5,3.0#3)@1.25")
    assert t.mass == 6.0
    assert t.leaves == 3
    assert t.shape == "(1,(1,1))"
    assert coagtree.parse_tree(str(t)) == t
    with pytest.raises(coagtree.ParseError):
        coagtree.parse_tree("(1.0,2.0)")


def test_build_trees():
    c = coagtree.node(0.5, coagtree.leaf(1.0, 1), coagtree.leaf(2.0, 2))
    assert c.time == 0.5
    assert coagtree.serialize_tree(c) == "(1.0#1,2.0#2)@0.5"
    with pytest.raises(ValueError):
        coagtree.node(0.4, c, coagtree.leaf(1.0))


def test_combinatorics():
    assert [len(coagtree.enumerate_shapes(n)) for n in range(1, 7)] == [1, 1, 1, 2, 3, 6]
    assert coagtree.symmetry_exponent("((1,1),(1,1))") == 3
    assert len(coagtree.labelings("((1,1),(1,1))")) == math.factorial(4) // 8


def test_solve_constant_kernel():
    path = coagtree.solve("constant", 2.0, tol=1e-10)
    assert abs(path.moment(0, 2.0) - 0.5) < 1e-9
    assert abs(path.weight(1.0, 2.0) - 0.25) < 1e-9
    assert abs(path.density("(1,1)", [1.0, 1.0], [1.0], 2.0) - 0.5 / 1.5**2 / 4) < 1e-9
    with pytest.raises(coagtree.GelationError):
        coagtree.solve("product", 1.0)


def test_simulate_and_evaluate():
    log = coagtree.simulate([1.0] * 100, "constant", 2.0, seed=3)
    again = coagtree.simulate([1.0] * 100, "constant", 2.0, seed=3)
    assert log.events_csv() == again.events_csv()
    trees = log.final_trees()
    assert sum(t.leaves for t in trees) == 100
    assert coagtree.evaluate(log, 2.0, "one") == pytest.approx(len(trees) / 100)
    assert coagtree.evaluate(log, 0.0, "leaf") == pytest.approx(1.0)


def test_limit():
    value, err, tail = coagtree.limit("cherry", "constant", 2.0, tol=1e-10)
    assert abs(value - 0.125) < 1e-8
    assert tail == 0.0
    with pytest.raises(coagtree.ConfigError):
        coagtree.limit('{"type": "bogus"}')


def test_run_lln_small():
    report = coagtree.run_lln({"t": 1.0, "functionals": ["leaf"], "ladder": [20, 100],
                               "replicas": [100, 30], "seed": 1, "jobs": 1})
    assert report["functionals"][0]["name"] == "leaf"
    assert report["verdict"] in ("PASS", "FAIL", "INCONCLUSIVE")
