import random

import networkx as nx
import numpy as np
import pytest

from transfix.errors import NoFixpoint, TooLarge, UnknownLabel
from transfix.families import affine, complement, constant, identity, image, intersect_with, union_with
from transfix.oracle import (TransitionSystem, enumerate_fixpoints, gfp_bruteforce, grid, lfp_bruteforce,
                             mu_reachability)
from transfix.space import MetricSpace, PowersetLattice

from helpers import random_contraction, subsets

abc = PowersetLattice(["a", "b", "c"])
S = frozenset


class TestEnumerate:
    def test_union(self):
        fps = enumerate_fixpoints(union_with(abc, ["a"]), abc)
        expected = [x for x in subsets(["a", "b", "c"]) if "a" in x]
        assert set(fps) == set(expected) == {S("a"), S("ab"), S("ac"), S("abc")}

    def test_identity(self):
        assert enumerate_fixpoints(identity(abc), abc) == abc.elements

    def test_constant(self):
        assert enumerate_fixpoints(constant(abc, ["b"]), abc) == [S("b")]

    def test_complement_has_none(self):
        assert enumerate_fixpoints(complement(abc), abc) == []

    def test_too_large(self):
        big = PowersetLattice([f"e{i}" for i in range(17)])
        with pytest.raises(TooLarge):
            enumerate_fixpoints(identity(big), big)

    def test_metric_carrier(self):
        op = affine(MetricSpace(1), 0.5, 1.0)
        fps = enumerate_fixpoints(op, [[v] for v in grid(-4.0, 4.0, 0.5)])
        assert len(fps) == 1 and fps[0][0] == 2.0

    @pytest.mark.parametrize("seed", range(10))
    def test_contraction_has_at_most_one(self, seed):
        rng = np.random.default_rng(seed)
        A, b = random_contraction(rng, 1)
        op = affine(MetricSpace(1, tolerance=1e-6), A, b)
        fixed = float(np.linalg.solve(np.eye(1) - A, b)[0])
        # a grid that contains the fixed point exactly, plus one that straddles it
        carrier = [[fixed + k * 0.125] for k in range(-40, 41)]
        assert len(enumerate_fixpoints(op, carrier)) == 1
        assert len(enumerate_fixpoints(op, [[fixed + 0.0625 + k * 0.125] for k in range(-40, 40)])) == 0


class TestLfpGfp:
    def test_union_lfp(self):
        assert lfp_bruteforce(union_with(abc, ["a"]), abc) == S("a")

    def test_identity_bounds(self):
        assert lfp_bruteforce(identity(abc), abc) == abc.bottom
        assert gfp_bruteforce(identity(abc), abc) == abc.top

    def test_reachable_from_s0(self):
        lat = PowersetLattice(["s0", "s1", "s2"])
        op = image(lat, [("s0", "s1"), ("s1", "s2")], seed=["s0"])
        # all eight subsets, by hand: only {s0, s1, s2} contains s0 and is closed under successors
        assert enumerate_fixpoints(op, lat) == [S(["s0", "s1", "s2"])]
        assert lfp_bruteforce(op, lat) == S(["s0", "s1", "s2"])

    def test_intersection_gfp(self):
        assert gfp_bruteforce(intersect_with(abc, ["a"]), abc) == S("a")
        assert set(enumerate_fixpoints(intersect_with(abc, ["a"]), abc)) == {S(), S("a")}

    def test_constant_gfp(self):
        assert gfp_bruteforce(constant(abc, ["b"]), abc) == S("b")

    def test_no_fixpoint(self):
        with pytest.raises(NoFixpoint):
            lfp_bruteforce(complement(abc), abc)
        with pytest.raises(NoFixpoint):
            gfp_bruteforce(complement(abc), abc)


def chain():
    return TransitionSystem(["s0", "s1", "s2"], [("s0", "s1"), ("s1", "s2")],
                            {"end": ["s2"], "none": [], "start": ["s0"]})


class TestReachability:
    def test_chain(self):
        assert mu_reachability(chain(), "end") == S(["s0", "s1", "s2"])

    def test_empty_target(self):
        assert mu_reachability(chain(), "none") == S()

    def test_source_only_reaches_itself(self):
        assert mu_reachability(chain(), "start") == S(["s0"])

    def test_isolated_state(self):
        ts = TransitionSystem(["s"], [], {"here": ["s"]})
        assert mu_reachability(ts, "here") == S(["s"])

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            mu_reachability(chain(), "nope")

    def test_rejects_bad_transition(self):
        with pytest.raises(ValueError):
            TransitionSystem(["a"], [("a", "b")])

    def test_rejects_bad_label(self):
        with pytest.raises(ValueError):
            TransitionSystem(["a"], [], {"x": ["b"]})

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_graph_search(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 14)
        states = [f"q{i}" for i in range(n)]
        edges = [(rng.choice(states), rng.choice(states)) for _ in range(rng.randint(0, 2 * n))]
        target = rng.sample(states, rng.randint(0, min(3, n)))
        ts = TransitionSystem(states, edges, {"t": target})
        g = nx.DiGraph()
        g.add_nodes_from(states)
        g.add_edges_from(edges)
        expected = set(target)
        for t in target:
            expected |= nx.ancestors(g, t)
        assert mu_reachability(ts, "t") == expected


def test_grid_endpoints():
    assert grid(0.0, 1.0, 0.25) == [0.0, 0.25, 0.5, 0.75, 1.0]
