import numpy as np
import pytest

import gridfreq as gf
from gridfreq.errors import (
    BadThermalLimitsError,
    DimensionMismatchError,
    DisconnectedGraphError,
    DuplicateLineError,
    EmptyBusSetError,
    NonpositiveParameterError,
    UnsortedEventsError,
)

from conftest import make_triangle_net, make_two_bus_net


def triple_loop_laplacian(net):
    """Independent elementwise oracle for C diag(B) C^T."""
    n, l = net.n, net.n_lines
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            for e in range(l):
                out[i, j] += (net.incidence[i, e] * net.susceptance[e]
                              * net.incidence[j, e])
    return out


class TestBuildNetwork:
    def test_two_bus_incidence(self):
        net = make_two_bus_net()
        assert net.incidence.tolist() == [[1.0], [-1.0]]

    def test_triangle_columns_one_plus_one_minus(self):
        net = make_triangle_net()
        c = net.incidence
        assert np.all(c.sum(axis=0) == 0.0)
        for e in range(3):
            col = c[:, e]
            assert sorted(col.tolist()) == [-1.0, 0.0, 1.0]

    def test_ones_incidence_exact(self, all_cases):
        for name, (net, _, _) in all_cases.items():
            col_sums = np.ones(net.n) @ net.incidence
            assert np.all(col_sums == 0.0), name

    def test_disconnected_rejected(self):
        with pytest.raises(DisconnectedGraphError):
            gf.build_network(
                buses=[(0, "gen"), (1, "load"), (2, "load"), (3, "load")],
                lines=[(0, 1, 5.0, -1, 1), (2, 3, 5.0, -1, 1)],
                inertia=[8, 0, 0, 0], damping=[1, 1, 1, 1])

    def test_duplicate_line_rejected(self):
        with pytest.raises(DuplicateLineError):
            gf.build_network(
                buses=[(0, "gen"), (1, "load")],
                lines=[(0, 1, 5.0, -1, 1), (1, 0, 3.0, -1, 1)],
                inertia=[8, 0], damping=[1, 1])

    @pytest.mark.parametrize("field,value", [("B", -2.0), ("B", 0.0)])
    def test_nonpositive_susceptance_rejected(self, field, value):
        with pytest.raises(NonpositiveParameterError):
            gf.build_network(
                buses=[(0, "gen"), (1, "load")],
                lines=[(0, 1, value, -1, 1)],
                inertia=[8, 0], damping=[1, 1])

    def test_nonpositive_damping_and_inertia_rejected(self):
        with pytest.raises(NonpositiveParameterError):
            gf.build_network(buses=[(0, "gen"), (1, "load")],
                             lines=[(0, 1, 1.0, -1, 1)],
                             inertia=[8, 0], damping=[1, 0.0])
        with pytest.raises(NonpositiveParameterError):
            gf.build_network(buses=[(0, "gen"), (1, "load")],
                             lines=[(0, 1, 1.0, -1, 1)],
                             inertia=[0.0, 0], damping=[1, 1])

    def test_bad_thermal_limits_rejected(self):
        with pytest.raises(BadThermalLimitsError):
            gf.build_network(buses=[(0, "gen"), (1, "load")],
                             lines=[(0, 1, 1.0, 2.0, 2.0)],
                             inertia=[8, 0], damping=[1, 1])

    def test_network_is_immutable(self):
        net = make_two_bus_net()
        with pytest.raises(ValueError):
            net.susceptance[0] = 99.0


class TestWeightedLaplacian:
    def test_two_bus_hand_value(self):
        net = make_two_bus_net(b=10.0)
        assert gf.weighted_laplacian(net).tolist() == [[10.0, -10.0],
                                                       [-10.0, 10.0]]

    def test_row_sums_zero(self, all_cases):
        for name, (net, _, _) in all_cases.items():
            lap = gf.weighted_laplacian(net)
            assert np.allclose(lap @ np.ones(net.n), 0.0, atol=1e-12), name
            assert np.allclose(lap, lap.T), name

    def test_triangle_unit_susceptance(self):
        net = make_triangle_net((1.0, 1.0, 1.0))
        lap = gf.weighted_laplacian(net)
        assert np.allclose(lap, triple_loop_laplacian(net))
        assert np.allclose(np.diag(lap), 2.0)
        off = lap[~np.eye(3, dtype=bool)]
        assert np.allclose(off, -1.0)

    def test_matches_triple_loop_on_bundled(self, all_cases):
        for name, (net, _, _) in all_cases.items():
            assert np.allclose(gf.weighted_laplacian(net),
                               triple_loop_laplacian(net), atol=1e-12), name

    def test_psd(self, all_cases):
        for name, (net, _, _) in all_cases.items():
            eig = np.linalg.eigvalsh(gf.weighted_laplacian(net))
            assert eig[0] > -1e-10, name
            # connected: null space is exactly span{1}
            assert eig[1] > 1e-8, name


class TestLineFlows:
    def test_constant_shift_gives_zero(self, all_cases):
        for name, (net, _, _) in all_cases.items():
            flows = gf.line_flows_from_angles(net, 3.7 * np.ones(net.n))
            assert np.allclose(flows, 0.0, atol=1e-12), name

    def test_two_bus_value(self):
        net = make_two_bus_net(b=10.0)
        assert gf.line_flows_from_angles(net, np.array([0.1, 0.0])) == pytest.approx([1.0])

    def test_triangle_direct_evaluation(self):
        net = make_triangle_net((1.0, 1.0, 1.0))
        theta = np.array([1.0, 0.0, 0.0])
        # direct per-line oracle: B_ij (theta_i - theta_j) in file order
        expected = [1.0 * (1.0 - 0.0), 1.0 * (0.0 - 0.0), 1.0 * (1.0 - 0.0)]
        assert gf.line_flows_from_angles(net, theta).tolist() == expected

    def test_linearity(self):
        rng = np.random.default_rng(7)
        net = make_triangle_net((2.0, 5.0, 8.0))
        for _ in range(50):
            a = rng.normal(size=3)
            b = rng.normal(size=3)
            lhs = gf.line_flows_from_angles(net, a + b)
            rhs = gf.line_flows_from_angles(net, a) + gf.line_flows_from_angles(net, b)
            assert np.allclose(lhs, rhs, atol=1e-12)

    def test_dimension_mismatch(self):
        net = make_two_bus_net()
        with pytest.raises(DimensionMismatchError):
            gf.line_flows_from_angles(net, np.zeros(3))


class TestInjectionProfile:
    def test_deterministic_and_piecewise(self):
        base = np.array([1.0, -1.0])
        prof = gf.InjectionProfile(base, steps=[(5.0, 0, 0.0), (65.0, 0, None)])
        assert prof(0.0).tolist() == [1.0, -1.0]
        assert prof(30.0).tolist() == [0.0, -1.0]
        assert prof(70.0).tolist() == [1.0, -1.0]
        a, b = prof(12.345), prof(12.345)
        assert a.tobytes() == b.tobytes()

    def test_unsorted_events_rejected(self):
        with pytest.raises(UnsortedEventsError):
            gf.InjectionProfile(np.zeros(2), steps=[(5.0, 0, 1.0), (1.0, 0, 2.0)])

    def test_empty_bus_set_rejected(self):
        with pytest.raises(EmptyBusSetError):
            gf.InjectionProfile(np.zeros(2), sinusoids=[((), 0.4, 6.0, 5.0, 65.0)])
