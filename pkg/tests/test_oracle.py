import numpy as np
import pytest

import gridfreq as gf
from gridfreq.diagnostics import PrimalDualPoint, kkt_residual
from gridfreq.errors import (
    BindingLimitError,
    InfeasibleError,
    NotTwoBusError,
    TooLargeError,
)

from conftest import make_two_bus_net


def two_bus_cost(entries):
    return gf.make_cost_model(2, entries)


class TestTwoBusAnalytic:
    def test_inverse_curvature_split(self, two_bus):
        net, cost, scn = two_bus
        opt = gf.two_bus_analytic_optimum(net, cost, scn.base_injection)
        assert opt.d_star == pytest.approx([8 / 15, 4 / 15], abs=1e-12)
        assert opt.cost_star == pytest.approx(32 / 75, abs=1e-12)
        assert opt.mu_star[0] == pytest.approx(16 / 15, abs=1e-12)
        assert np.all(opt.omega_star == 0.0)

    def test_symmetric_split(self):
        net = make_two_bus_net()
        cost = two_bus_cost({i: {"a": 1.0, "b": 0.0, "c": 0.0,
                                 "dmin": -1.5, "dmax": 1.5} for i in range(2)})
        opt = gf.two_bus_analytic_optimum(net, cost, np.array([0.6, 0.4]))
        assert opt.d_star == pytest.approx([0.5, 0.5])

    def test_kink_absorbs_small_imbalance(self):
        net = make_two_bus_net()
        cost = two_bus_cost({0: {"a": 1.0, "b": 1.0, "c": 0.0,
                                 "dmin": -1.5, "dmax": 1.5},
                             1: {"a": 1.0, "b": 0.0, "c": 0.0,
                                 "dmin": -1.5, "dmax": 1.5}})
        opt = gf.two_bus_analytic_optimum(net, cost, np.array([0.1, 0.0]))
        assert opt.d_star == pytest.approx([0.0, 0.1], abs=1e-12)

    def test_l1_fixture_kink_optimum(self, two_bus_l1):
        net, cost, scn = two_bus_l1
        opt = gf.two_bus_analytic_optimum(net, cost, scn.base_injection)
        assert opt.d_star == pytest.approx([-0.15, -0.25], abs=1e-12)
        assert opt.mu_star[0] == pytest.approx(0.2, abs=1e-12)

    def test_not_two_bus_rejected(self, triangle):
        net, cost, scn = triangle
        with pytest.raises(NotTwoBusError):
            gf.two_bus_analytic_optimum(net, cost, scn.base_injection)

    def test_binding_limit_raises(self):
        # curvatures favor bus 2, so 0.23 p.u. rides the 0.1-capped line
        net = make_two_bus_net(p_min=-0.1, p_max=0.1)
        cost = two_bus_cost({0: {"a": 2.0, "b": 0.0, "c": 0.0,
                                 "dmin": -1.5, "dmax": 1.5},
                             1: {"a": 1.0, "b": 0.0, "c": 0.0,
                                 "dmin": -1.5, "dmax": 1.5}})
        with pytest.raises(BindingLimitError):
            gf.two_bus_analytic_optimum(net, cost, np.array([0.5, 0.3]))


class TestGridSearch:
    def test_matches_analytic_on_two_bus(self, two_bus, two_bus_l1):
        for net, cost, scn in (two_bus, two_bus_l1):
            ana = gf.two_bus_analytic_optimum(net, cost, scn.base_injection)
            grid = gf.grid_search_optimum(net, cost, scn.base_injection,
                                          resolution=1e-3)
            assert np.max(np.abs(grid.d_star - ana.d_star)) <= 2e-3
            assert grid.cost_star <= ana.cost_star + 1e-5

    def test_too_large_rejected(self, ieee39):
        net, cost, scn = ieee39
        with pytest.raises(TooLargeError):
            gf.grid_search_optimum(net, cost, scn.base_injection)

    def test_degenerate_infeasible(self):
        net = make_two_bus_net()
        cost = two_bus_cost({0: {"a": 1.0, "b": 0.0, "c": 0.0,
                                 "dmin": 0.0, "dmax": 0.2},
                             1: {"a": 1.0, "b": 0.0, "c": 0.0,
                                 "dmin": 0.0, "dmax": 0.2}})
        # total injection 3.0 cannot be balanced by d in [0, 0.4]
        with pytest.raises(InfeasibleError):
            gf.grid_search_optimum(net, cost, np.array([2.0, 1.0]),
                                   resolution=0.05)

    def test_four_bus_hand_lagrange_and_kkt(self, four_bus):
        net, cost, scn = four_bus
        opt = gf.grid_search_optimum(net, cost, scn.base_injection,
                                     resolution=2e-3)
        # hand Lagrange with the (2,3) cap active: d* = (0, 1/5, 3/70, 11/70)
        expected = np.array([0.0, 0.2, 3 / 70, 11 / 70])
        assert np.max(np.abs(opt.d_star - expected)) <= 4e-3
        # KKT residual with the recovered multipliers stays near grid scale
        lap = gf.weighted_laplacian(net)
        theta_hat = np.linalg.lstsq(lap, scn.base_injection - opt.d_star,
                                    rcond=None)[0]
        pt = PrimalDualPoint(
            d=opt.d_star, theta_hat=theta_hat, omega=np.zeros(4),
            line_flow=gf.line_flows_from_angles(net, theta_hat),
            lam=opt.lam_star, mu=opt.mu_star, nu_minus=opt.nu_minus_star,
            nu_plus=opt.nu_plus_star)
        res = kkt_residual(net, cost, scn.base_injection, pt,
                           kink_tol=2e-2)
        assert res.total < 2e-3 * 10

    def test_four_bus_recovered_prices(self, four_bus):
        net, cost, scn = four_bus
        opt = gf.grid_search_optimum(net, cost, scn.base_injection,
                                     resolution=1e-3)
        # hand-derived nodal prices: (0.9, 0.9, 22/35, 22/35), nu+ = 19/70
        assert opt.mu_star == pytest.approx([0.9, 0.9, 22 / 35, 22 / 35],
                                            abs=2e-2)
        assert opt.nu_plus_star[1] == pytest.approx(19 / 70, abs=3e-2)
        assert opt.nu_minus_star == pytest.approx([0, 0, 0], abs=1e-9)

    def test_refinement_monotonicity(self, triangle):
        net, cost, scn = triangle
        prev_cost = np.inf
        prev_d = None
        for res in (2e-2, 1e-2, 5e-3):
            opt = gf.grid_search_optimum(net, cost, scn.base_injection,
                                         resolution=res)
            assert opt.cost_star <= prev_cost + 1e-12
            if prev_d is not None:
                assert np.max(np.abs(opt.d_star - prev_d)) <= 2 * 2e-2 * np.sqrt(3)
            prev_cost, prev_d = opt.cost_star, opt.d_star

    def test_frozen_reference_fixture_replays(self):
        # the shipped provenance records regenerate exactly (see
        # tools/gen_references.py)
        import json
        from pathlib import Path

        from gridfreq.oracle import reference_fixture

        records = json.loads(
            (Path(__file__).parent / "fixtures" / "reference_optima.json")
            .read_text())
        assert len(records) == 6
        for rec in records:
            net, cost, scn = gf.load_case(rec["case"])
            if rec["method"] == "analytic":
                opt = gf.two_bus_analytic_optimum(net, cost, scn.base_injection)
            else:
                opt = gf.grid_search_optimum(net, cost, scn.base_injection,
                                             resolution=rec["resolution"])
            assert reference_fixture(rec["case"], opt) == rec

    def test_quadratic_grid_converges_to_analytic(self, two_bus):
        net, cost, scn = two_bus
        ana = gf.two_bus_analytic_optimum(net, cost, scn.base_injection)
        errs = []
        for res in (1e-2, 5e-3, 1e-3):
            grid = gf.grid_search_optimum(net, cost, scn.base_injection,
                                          resolution=res)
            errs.append(np.max(np.abs(grid.d_star - ana.d_star)))
            assert errs[-1] <= 2 * res
        assert errs[-1] <= errs[0] + 1e-12
