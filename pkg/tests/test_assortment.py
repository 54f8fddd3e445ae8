import numpy as np
import pytest

from opaque_mnl import (
    InstanceError,
    MarketInstance,
    approximation_report,
    brute_force_assortment,
    nested_by_valuation,
    nrv_heuristic,
    opq_revenue_exact,
    optimal_uniform_price,
    optimize_opaque_price,
    revenue_curve,
    trad_revenue,
)
from opaque_mnl.assortment import all_assortments, best_rho, nrv_candidates

from oracles import grid_argmax


class TestLineSearch:
    def test_boundary_optimum(self, substitutability_inst):
        for S in ([1, 2], [1, 2, 3]):
            q = optimize_opaque_price(substitutability_inst, S)
            assert q.rho == pytest.approx(3.0, abs=1e-3)

    def test_interior_optimum(self, high_revenue_inst):
        q = optimize_opaque_price(high_revenue_inst, [2, 3])
        assert q.rho == pytest.approx(1.99, abs=0.01)
        assert q.revenue == pytest.approx(1.15, abs=0.005)
        q = optimize_opaque_price(high_revenue_inst, [1, 2, 3])
        assert q.rho == pytest.approx(1.80, abs=0.01)
        assert q.revenue == pytest.approx(1.13, abs=0.005)

    def test_singleton_reaches_uniform_optimum(self):
        inst = MarketInstance([0.6], [9.0])
        r_star = optimal_uniform_price(inst, [1])
        q = optimize_opaque_price(inst, [1])
        assert q.rho == pytest.approx(r_star, abs=1e-5)
        assert q.revenue == pytest.approx(r_star - 1, abs=1e-9)

    def test_against_dense_grid(self):
        rng = np.random.default_rng(17)
        for _ in range(40):
            n = int(rng.integers(1, 6))
            v = rng.normal(0, 1, n)
            r = rng.lognormal(0.5, 1.0, n)
            rho, rev, _ = best_rho(v, r)
            assert 0 <= rho <= r.min()
            _, ref = grid_argmax(lambda x: opq_revenue_exact(MarketInstance(v, r), range(1, n + 1), x), 0, r.min(), 4001)
            assert rev >= ref - 1e-7
            assert rev >= trad_revenue(MarketInstance(v, r), range(1, n + 1)) - 1e-9

    def test_tolerance_validation(self, high_revenue_inst):
        with pytest.raises(InstanceError):
            optimize_opaque_price(high_revenue_inst, [1], tol=0)


class TestCurve:
    def test_endpoints(self, curve_inst):
        c = revenue_curve(curve_inst, [1, 2, 3], 50)
        assert c.points.shape == (50, 2)
        assert c.points[0, 0] == 0.0 and c.points[-1, 0] == 4.0
        assert np.all(np.diff(c.points[:, 0]) > 0)
        assert c.points[-1, 1] == pytest.approx(trad_revenue(curve_inst, [1, 2, 3]), abs=1e-9)
        d = optimize_opaque_price(curve_inst, [1, 2, 3]).distribution
        at_zero = opq_revenue_exact(curve_inst, [1, 2, 3], 0.0)
        assert c.points[0, 1] == at_zero
        assert c.to_csv().splitlines()[0] == "rho,revenue"
        assert d.p_opaque > 0

    def test_peak_ranking(self, curve_inst):
        peaks = {S: revenue_curve(curve_inst, S, 2001).points[:, 1].max() for S in all_assortments(3)}
        assert max(peaks, key=peaks.get) == (1, 3)

    def test_needs_two_points(self, curve_inst):
        with pytest.raises(InstanceError):
            revenue_curve(curve_inst, [1], 1)


class TestSolvers:
    def test_highest_revenue_product_excluded(self, high_revenue_inst):
        sol = brute_force_assortment(high_revenue_inst)
        assert sol.assortment == (2, 3)
        assert sol.revenue == pytest.approx(1.15, abs=0.005)
        assert sol.opaque_offered
        assert sol.candidates_evaluated == 7

    def test_not_nested_by_revenue(self, curve_inst):
        assert brute_force_assortment(curve_inst).assortment == (1, 3)

    def test_nrv_suboptimal_example(self, nrv_gap_inst):
        nrv = nrv_heuristic(nrv_gap_inst)
        opt = brute_force_assortment(nrv_gap_inst)
        assert nrv.assortment == (1, 2, 3)
        assert nrv.revenue == pytest.approx(1.03, abs=0.005)
        assert opt.assortment == (2, 3)
        assert opt.revenue == pytest.approx(1.05, abs=0.005)
        _, _, gap = approximation_report(nrv_gap_inst)
        assert gap == pytest.approx(100 * (1 - nrv.revenue / opt.revenue), abs=1e-12)
        assert 1.5 < gap < 2.3

    def test_single_product(self):
        sol = brute_force_assortment(MarketInstance([0.1], [2.0]))
        assert sol.assortment == (1,)

    def test_identical_products(self):
        sol = nested_by_valuation(MarketInstance([1, 1], [1, 1]))
        assert sol.assortment == (1, 2)
        assert sol.revenue == pytest.approx(0.67, abs=0.005)
        assert not sol.opaque_offered
        sol = nested_by_valuation(MarketInstance([1, 1], [1e6, 1e6]))
        assert sol.assortment == (1,)
        assert sol.revenue == pytest.approx(0.57, abs=0.005)
        assert optimize_opaque_price(MarketInstance([1, 1], [1e6, 1e6]), [1, 2]).revenue == pytest.approx(0.34, abs=0.005)

    def test_nested_requires_uniform_prices(self, curve_inst):
        with pytest.raises(InstanceError):
            nested_by_valuation(curve_inst)

    def test_nested_matches_brute_force(self):
        rng = np.random.default_rng(23)
        for _ in range(60):
            n = int(rng.integers(1, 7))
            inst = MarketInstance(rng.normal(0, 1, n), np.full(n, rng.uniform(0.3, 6)))
            a = nested_by_valuation(inst)
            b = brute_force_assortment(inst)
            assert a.revenue == pytest.approx(b.revenue, abs=1e-6)

    def test_nrv_candidates(self, nrv_gap_inst, curve_inst):
        assert nrv_candidates(nrv_gap_inst) == [(1,), (2,), (3,), (1, 2), (1, 2, 3)]
        assert (1, 3) in nrv_candidates(curve_inst)
        for S in nrv_candidates(curve_inst):
            assert len(set(S)) == len(S)

    def test_nrv_half_approximation_and_n2(self):
        rng = np.random.default_rng(29)
        for _ in range(80):
            n = int(rng.integers(2, 7))
            inst = MarketInstance(rng.lognormal(0, 0.5, n), rng.lognormal(0.5, 1.0, n))
            opt, nrv, gap = approximation_report(inst)
            assert 0.5 <= nrv.revenue / opt.revenue <= 1 + 1e-9
            assert 0 <= gap <= 50
            if n == 2:
                assert nrv.revenue == pytest.approx(opt.revenue, abs=1e-9)

    def test_brute_force_tie_breaks_to_smaller(self):
        # with identical products at an "infinite" price every singleton ties
        sol = brute_force_assortment(MarketInstance([1, 1, 1], [1e6, 1e6, 1e6]))
        assert sol.assortment == (1,)

    def test_solution_revenue_consistent(self, curve_inst):
        sol = brute_force_assortment(curve_inst)
        assert opq_revenue_exact(curve_inst, sol.assortment, sol.opaque_price) == pytest.approx(sol.revenue, abs=1e-7)

    def test_brute_force_cap(self):
        with pytest.raises(InstanceError):
            brute_force_assortment(MarketInstance(np.zeros(17), np.ones(17)))

    def test_parallel_brute_force_identical(self, curve_inst):
        assert brute_force_assortment(curve_inst, jobs=3) == brute_force_assortment(curve_inst)
