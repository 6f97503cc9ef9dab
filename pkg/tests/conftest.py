import numpy as np
import pytest

import gridfreq as gf


@pytest.fixture(scope="session")
def two_bus():
    return gf.load_case("two_bus_analytic")


@pytest.fixture(scope="session")
def two_bus_l1():
    return gf.load_case("two_bus_l1")


@pytest.fixture(scope="session")
def triangle():
    return gf.load_case("triangle")


@pytest.fixture(scope="session")
def four_bus():
    return gf.load_case("four_bus_line_limited")


@pytest.fixture(scope="session")
def gen_pair():
    return gf.load_case("gen_pair")


@pytest.fixture(scope="session")
def ieee39():
    return gf.load_case("ieee39_approx")


@pytest.fixture(scope="session")
def all_cases(two_bus, two_bus_l1, triangle, four_bus, gen_pair, ieee39):
    return {
        "two_bus_analytic": two_bus,
        "two_bus_l1": two_bus_l1,
        "triangle": triangle,
        "four_bus_line_limited": four_bus,
        "gen_pair": gen_pair,
        "ieee39_approx": ieee39,
    }


def make_two_bus_net(b=10.0, p_min=-3.0, p_max=3.0):
    return gf.build_network(
        buses=[(0, "gen"), (1, "load")],
        lines=[(0, 1, b, p_min, p_max)],
        inertia=[8.0, 0.0],
        damping=[1.0, 1.0],
    )


def make_triangle_net(b=(1.0, 1.0, 1.0)):
    return gf.build_network(
        buses=[(0, "gen"), (1, "load"), (2, "load")],
        lines=[(0, 1, b[0], -2, 2), (1, 2, b[1], -2, 2), (0, 2, b[2], -2, 2)],
        inertia=[8.0, 0.0, 0.0],
        damping=[1.0, 1.0, 1.0],
    )


def make_isolated_bus(kind="load", p_in=1.0):
    """Single-bus network with cost d^2 + |d|; its optimum is d* = p_in."""
    net = gf.build_network(
        buses=[(0, kind)],
        lines=[],
        inertia=[8.0] if kind == "gen" else [0.0],
        damping=[1.0],
    )
    cost = gf.make_cost_model(1, {0: {"a": 1.0, "b": 1.0, "c": 0.0,
                                      "dmin": -4.0, "dmax": 4.0}})
    return net, cost, np.array([p_in])
