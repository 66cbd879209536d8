import itertools

import numpy as np
import pytest

from metabandit import Polyhedron, lp_argmax, lp_max_value, random_polyhedron
from metabandit.polyhedron import InvalidPolyhedronError
from metabandit.rng import substream
from metabandit.simplex import InfeasibleError, UnboundedError, simplex_maximize


def vertex_enumeration_max(a, b, c, tol=1e-9):
    """Oracle: intersect every d-subset of constraint hyperplanes, keep the
    feasible vertices, return the best objective value among them."""
    m, d = a.shape
    best = None
    for rows in itertools.combinations(range(m), d):
        sub = a[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, b[list(rows)])
        if np.all(a @ x <= b + tol):
            val = float(c @ x)
            if best is None or val > best:
                best = val
    return best


def box(d, lo=0.0, hi=1.0):
    a = np.vstack([np.eye(d), -np.eye(d)])
    b = np.concatenate([np.full(d, hi), np.full(d, -lo)])
    return a, b


class TestSimplex:
    def test_box_all_positive_objective_hits_upper_corner(self):
        a, b = box(4)
        x, val = simplex_maximize(np.ones(4), a, b)
        assert np.allclose(x, 1.0)
        assert val == pytest.approx(4.0)

    def test_zero_objective_returns_feasible_point(self):
        a, b = box(3)
        x, val = simplex_maximize(np.zeros(3), a, b)
        assert val == 0.0
        assert np.all(a @ x <= b + 1e-9)

    def test_negative_orthant_objective(self):
        a, b = box(2, lo=-2.0, hi=5.0)
        x, val = simplex_maximize(np.array([-1.0, -1.0]), a, b)
        assert np.allclose(x, -2.0)
        assert val == pytest.approx(4.0)

    def test_infeasible_detected(self):
        a = np.array([[1.0], [-1.0]])
        b = np.array([-1.0, -1.0])  # x <= -1 and x >= 1
        with pytest.raises(InfeasibleError):
            simplex_maximize(np.array([1.0]), a, b)

    def test_unbounded_detected(self):
        a = np.array([[-1.0, 0.0], [0.0, -1.0]])  # x, y >= 0 only
        b = np.zeros(2)
        with pytest.raises(UnboundedError):
            simplex_maximize(np.ones(2), a, b)

    def test_degenerate_vertex_terminates(self):
        # Many redundant constraints through one corner; Bland's rule must
        # not cycle.
        a = np.vstack([np.eye(2), -np.eye(2), [[1.0, 1.0]], [[1.0, 1.0]], [[2.0, 2.0]]])
        b = np.array([1.0, 1.0, 0.0, 0.0, 2.0, 2.0, 4.0])
        x, val = simplex_maximize(np.array([1.0, 1.0]), a, b)
        assert val == pytest.approx(2.0, abs=1e-9)

    def test_random_polytopes_match_vertex_oracle(self):
        rng = substream(47, "lp_oracle")
        for _ in range(60):
            d = int(rng.integers(2, 4))
            poly = random_polyhedron(d, rng, box=10.0)
            c = rng.standard_normal(d)
            x, val = simplex_maximize(c, poly.a, poly.b)
            oracle = vertex_enumeration_max(poly.a, poly.b, c)
            assert oracle is not None
            assert val == pytest.approx(oracle, abs=1e-8)
            assert np.all(poly.a @ x <= poly.b + 1e-9)


class TestPolyhedron:
    def test_empty_region_rejected_at_construction(self):
        a = np.array([[1.0], [-1.0]])
        b = np.array([-1.0, -1.0])
        with pytest.raises(InvalidPolyhedronError):
            Polyhedron(a, b)

    def test_unbounded_region_rejected_at_construction(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0]])
        b = np.array([1.0, 1.0])
        with pytest.raises(InvalidPolyhedronError):
            Polyhedron(a, b)

    def test_valid_region_accepted(self):
        a, b = box(3)
        poly = Polyhedron(a, b)
        assert poly.contains(np.full(3, 0.5))
        assert not poly.contains(np.full(3, 2.0))

    def test_lp_argmax_feasible_and_optimal(self):
        a, b = box(2)
        poly = Polyhedron(a, b)
        x = lp_argmax(poly, np.array([3.0, -1.0]))
        assert np.allclose(x, [1.0, 0.0])
        assert lp_max_value(poly, np.array([3.0, -1.0])) == pytest.approx(3.0)

    def test_random_polyhedron_contains_interior_point_and_box(self):
        rng = substream(53, "gen")
        for _ in range(40):
            d = int(rng.integers(2, 6))
            poly = random_polyhedron(d, rng)
            # nonempty by construction
            x = lp_argmax(poly, rng.standard_normal(d))
            assert np.all(poly.a @ x <= poly.b + 1e-9)
            assert np.all(np.abs(x) <= 50.0 + 1e-9)
