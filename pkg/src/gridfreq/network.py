"""Power network graph model.

Buses are indexed 0..n-1 internally (1..n in case files and reports). Lines
are directed (from, to) pairs whose file order is authoritative: it fixes the
sign convention of the incidence matrix, of every line flow and of the thermal
limits, so lines are never re-sorted.

All matrices are dense; networks at desk scale stay below ~10^2 buses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadThermalLimitsError,
    DimensionMismatchError,
    DisconnectedGraphError,
    DuplicateLineError,
    EmptyBusSetError,
    NonpositiveParameterError,
    UnsortedEventsError,
)


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.asarray(a, dtype=dtype).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PowerNetwork:
    """Validated, immutable network: buses, directed lines, physics parameters.

    Attributes
    ----------
    n : number of buses.
    gen_buses, load_buses : 0-based index arrays, disjoint, union = all buses.
    from_bus, to_bus : per-line 0-based endpoints, in file order.
    susceptance : per-line B_ij > 0 [p.u.].
    p_min, p_max : per-line thermal limits [p.u.], p_min < p_max.
    inertia : per-bus M_i [p.u. s^2]; > 0 on generator buses, 0 on load buses.
    damping : per-bus D_i > 0 [p.u. s].
    incidence : n x l matrix C with C[i,e] = +1 if i is the source of line e,
        -1 if i is its end, 0 otherwise.
    """

    n: int
    gen_buses: np.ndarray
    load_buses: np.ndarray
    from_bus: np.ndarray
    to_bus: np.ndarray
    susceptance: np.ndarray
    p_min: np.ndarray
    p_max: np.ndarray
    inertia: np.ndarray
    damping: np.ndarray
    incidence: np.ndarray = field(repr=False)

    @property
    def n_lines(self) -> int:
        return self.from_bus.shape[0]

    def line_names(self) -> list[str]:
        """1-based "from_to" labels in file order, e.g. "1_2"."""
        return [f"{f + 1}_{t + 1}" for f, t in zip(self.from_bus, self.to_bus)]


def build_network(buses, lines, inertia, damping) -> PowerNetwork:
    """Validate raw bus/line descriptions and assemble a PowerNetwork.

    Parameters
    ----------
    buses : sequence of (index, kind) with kind "gen" or "load"; indices 0-based
        and consecutive.
    lines : sequence of (from_bus, to_bus, B, p_min, p_max), 0-based endpoints.
    inertia : per-bus M_i (ignored entries on load buses are forced to 0).
    damping : per-bus D_i.

    Raises
    ------
    DisconnectedGraphError, NonpositiveParameterError, BadThermalLimitsError,
    DuplicateLineError
    """
    n = len(buses)
    kinds = {}
    for idx, kind in buses:
        kinds[int(idx)] = kind
    if sorted(kinds) != list(range(n)):
        raise NonpositiveParameterError("bus indices must be consecutive 0..n-1")
    gen = np.array(sorted(i for i, k in kinds.items() if k == "gen"), dtype=int)
    load = np.array(sorted(i for i, k in kinds.items() if k == "load"), dtype=int)

    l = len(lines)
    from_bus = np.zeros(l, dtype=int)
    to_bus = np.zeros(l, dtype=int)
    b = np.zeros(l)
    p_min = np.zeros(l)
    p_max = np.zeros(l)
    seen = set()
    for e, (f, t, bij, lo, hi) in enumerate(lines):
        f, t = int(f), int(t)
        if not (0 <= f < n and 0 <= t < n) or f == t:
            raise NonpositiveParameterError(f"line {e}: bad endpoints ({f}, {t})")
        key = (min(f, t), max(f, t))
        if key in seen:
            raise DuplicateLineError(f"line {e}: pair ({f + 1}, {t + 1}) appears twice")
        seen.add(key)
        if bij <= 0:
            raise NonpositiveParameterError(f"line {e}: susceptance {bij} <= 0")
        if lo >= hi:
            raise BadThermalLimitsError(f"line {e}: thermal limits [{lo}, {hi}]")
        from_bus[e], to_bus[e], b[e] = f, t, bij
        p_min[e], p_max[e] = lo, hi

    m = np.asarray(inertia, dtype=float).copy()
    dmp = np.asarray(damping, dtype=float)
    if m.shape != (n,) or dmp.shape != (n,):
        raise DimensionMismatchError("inertia/damping must have one entry per bus")
    if np.any(dmp <= 0):
        raise NonpositiveParameterError("every damping D_i must be > 0")
    if np.any(m[gen] <= 0):
        raise NonpositiveParameterError("every generator inertia M_i must be > 0")
    m[load] = 0.0

    # connectivity of the undirected graph (single bus counts as connected)
    reach = np.zeros(n, dtype=bool)
    stack = [0]
    reach[0] = True
    adj = [[] for _ in range(n)]
    for f, t in zip(from_bus, to_bus):
        adj[f].append(t)
        adj[t].append(f)
    while stack:
        i = stack.pop()
        for j in adj[i]:
            if not reach[j]:
                reach[j] = True
                stack.append(j)
    if not reach.all():
        missing = [int(i) + 1 for i in np.flatnonzero(~reach)]
        raise DisconnectedGraphError(f"buses unreachable from bus 1: {missing}")

    c = np.zeros((n, l))
    c[from_bus, np.arange(l)] = 1.0
    c[to_bus, np.arange(l)] = -1.0

    return PowerNetwork(
        n=n,
        gen_buses=_frozen(gen, int),
        load_buses=_frozen(load, int),
        from_bus=_frozen(from_bus, int),
        to_bus=_frozen(to_bus, int),
        susceptance=_frozen(b),
        p_min=_frozen(p_min),
        p_max=_frozen(p_max),
        inertia=_frozen(m),
        damping=_frozen(dmp),
        incidence=_frozen(c),
    )


def weighted_laplacian(net: PowerNetwork) -> np.ndarray:
    """Dense C diag(B) C^T: symmetric PSD, row sums zero."""
    cb = net.incidence * net.susceptance
    return cb @ net.incidence.T


def line_flows_from_angles(net: PowerNetwork, theta: np.ndarray) -> np.ndarray:
    """Per-line DC flow B_ij (theta_i - theta_j), in line order.

    ``theta`` may carry leading batch axes; bus index is the last axis.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != net.n:
        raise DimensionMismatchError(
            f"theta has {theta.shape[-1]} entries, network has {net.n} buses"
        )
    return (theta @ net.incidence) * net.susceptance


def incidence_apply(net: PowerNetwork, line_values: np.ndarray) -> np.ndarray:
    """C p: per-bus net outflow of a per-line quantity (last axis = lines)."""
    if line_values.shape[-1] != net.n_lines:
        raise DimensionMismatchError(
            f"expected {net.n_lines} line values, got {line_values.shape[-1]}"
        )
    return line_values @ net.incidence.T


def laplacian_apply(net: PowerNetwork, bus_values: np.ndarray) -> np.ndarray:
    """C B C^T x without forming the matrix (last axis = buses)."""
    if bus_values.shape[-1] != net.n:
        raise DimensionMismatchError(
            f"expected {net.n} bus values, got {bus_values.shape[-1]}"
        )
    return ((bus_values @ net.incidence) * net.susceptance) @ net.incidence.T


class InjectionProfile:
    """Deterministic, piecewise-continuous uncontrolled injection P^in(t).

    Base values come first; step events replace a bus value from their event
    time onward; sinusoidal windows then multiply selected buses by
    (1 + A sin(2 pi t / T_p)) while t is inside the window.
    """

    def __init__(self, base: np.ndarray, steps=(), sinusoids=()):
        self.base = np.asarray(base, dtype=float).copy()
        self.base.flags.writeable = False
        self.steps = tuple((float(t), int(b), v if v is None else float(v)) for t, b, v in steps)
        times = [t for t, _, _ in self.steps]
        if any(t1 < t0 for t0, t1 in zip(times, times[1:])):
            raise UnsortedEventsError("step events must be sorted by time")
        sins = []
        for buses, amp, period, t0, t1 in sinusoids:
            idx = np.asarray(list(buses), dtype=int)
            if idx.size == 0:
                raise EmptyBusSetError("sinusoidal modifier needs at least one bus")
            sins.append((idx, float(amp), float(period), float(t0), float(t1)))
        self.sinusoids = tuple(sins)

    @property
    def is_constant(self) -> bool:
        return not self.steps and not self.sinusoids

    def __call__(self, t: float) -> np.ndarray:
        if self.is_constant:
            return self.base  # shared read-only view; callers never mutate
        p = self.base.copy()
        for te, bus, value in self.steps:
            if t >= te:
                p[bus] = self.base[bus] if value is None else value
        for idx, amp, period, t0, t1 in self.sinusoids:
            if t0 <= t < t1:
                p[idx] = p[idx] * (1.0 + amp * np.sin(2.0 * np.pi * t / period))
        return p
