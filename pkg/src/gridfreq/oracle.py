"""Independent desk-scale reference optima.

The analytic two-bus solver reduces the balanced problem to one variable and
solves the piecewise-linear stationarity equation exactly over its
breakpoints. The grid oracle enumerates the balanced slice of the box for up
to three controllable buses, checking thermal feasibility through the
virtual-angle flows. Both exist to certify the controller, so neither shares
code with it beyond the cost evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import CostModel, subdifferential_interval
from .errors import (
    BindingLimitError,
    InfeasibleError,
    NotTwoBusError,
    TooLargeError,
)
from .network import PowerNetwork


@dataclass
class ReferenceOptimum:
    """Frozen reference solution: loads, zero frequency, cost, multipliers."""

    d_star: np.ndarray
    omega_star: np.ndarray
    cost_star: float
    lam_star: np.ndarray | None = None
    mu_star: np.ndarray | None = None
    nu_minus_star: np.ndarray | None = None
    nu_plus_star: np.ndarray | None = None
    method: str = "analytic"
    resolution: float | None = None
    meta: dict = field(default_factory=dict)


def reference_fixture(case: str, opt: ReferenceOptimum) -> dict:
    """Serializable provenance record of one oracle run.

    These records are frozen into test fixtures before the acceptance suite
    runs, so every derived expected value traces back to an oracle output.
    """
    return {
        "case": case,
        "d_star": [float(x) for x in opt.d_star],
        "cost": float(opt.cost_star),
        "method": opt.method,
        "resolution": opt.resolution,
    }


def _piece_cost(cost: CostModel, i: int, x: float) -> float:
    return cost.k * (cost.quad[i] * x * x + cost.lin[i] * x
                     + cost.l1_weight[i] * abs(x + cost.l1_shift[i]))


def two_bus_analytic_optimum(net: PowerNetwork, cost: CostModel,
                             p_in: np.ndarray) -> ReferenceOptimum:
    """Closed-form optimum of the balanced two-bus instance.

    Minimizes f_1(d1) + f_2(S - d1) over the box intersection, where
    S = sum(p_in); the objective is piecewise quadratic with breakpoints at
    the two l1 kinks, so each smooth piece yields a linear stationarity
    equation solved exactly. Raises BindingLimitError when the resulting
    line flow hits a thermal limit (fall back to the grid oracle there).
    """
    if net.n != 2 or net.n_lines != 1 or not cost.controllable.all():
        raise NotTwoBusError("analytic oracle needs 2 buses, 1 line, both controllable")
    s = float(np.sum(p_in))
    lo = max(cost.d_lo[0], s - cost.d_hi[1])
    hi = min(cost.d_hi[0], s - cost.d_lo[1])
    if lo > hi:
        raise InfeasibleError("boxes cannot absorb the total injection")

    # knots: box edges plus both kinks mapped into d1-space
    knots = {lo, hi}
    for x in (-cost.l1_shift[0], s + cost.l1_shift[1]):
        if lo < x < hi:
            knots.add(float(x))
    knots = sorted(knots)

    def total(d1: float) -> float:
        return _piece_cost(cost, 0, d1) + _piece_cost(cost, 1, s - d1)

    best_d1, best_val = knots[0], total(knots[0])
    for left, right in zip(knots, knots[1:]):
        mid = 0.5 * (left + right)
        s1 = np.sign(mid + cost.l1_shift[0])
        s2 = np.sign(s - mid + cost.l1_shift[1])
        # d/dd1 [k(a1 d1^2 + e1 d1 + b1 s1 (d1+c1)) + k(a2 (S-d1)^2 + ...)] = 0
        denom = 2.0 * (cost.quad[0] + cost.quad[1])
        numer = (2.0 * cost.quad[1] * s - cost.lin[0] + cost.lin[1]
                 - cost.l1_weight[0] * s1 + cost.l1_weight[1] * s2)
        cand = float(np.clip(numer / denom, left, right)) if denom > 0 else left
        for x in (cand, right):
            v = total(x)
            if v < best_val - 1e-15 or (abs(v - best_val) <= 1e-15 and x < best_d1):
                best_d1, best_val = x, v

    d_star = np.array([best_d1, s - best_d1])

    # single line: the balance at the source bus fixes its flow exactly
    src = net.from_bus[0]
    flow = float(p_in[src] - d_star[src])
    if not net.p_min[0] < flow < net.p_max[0]:
        raise BindingLimitError(
            f"optimal flow {flow:.4g} hits the line limit; use grid_search_optimum")

    # shared price: lambda* = 0, mu* = m 1 with m in both subdifferentials
    lo0, hi0 = subdifferential_interval(cost, 0, float(d_star[0]))
    lo1, hi1 = subdifferential_interval(cost, 1, float(d_star[1]))
    m_lo, m_hi = max(lo0, lo1), min(hi0, hi1)
    if m_lo > m_hi + 1e-9:
        raise InfeasibleError("stationarity intervals do not intersect")
    if np.isinf(m_lo) and np.isinf(m_hi):
        m = 0.0
    elif np.isinf(m_lo):
        m = m_hi
    elif np.isinf(m_hi):
        m = m_lo
    else:
        m = 0.5 * (m_lo + m_hi)

    return ReferenceOptimum(
        d_star=d_star, omega_star=np.zeros(2), cost_star=float(best_val),
        lam_star=np.zeros(2), mu_star=np.full(2, m),
        nu_minus_star=np.zeros(1), nu_plus_star=np.zeros(1),
        method="analytic", meta={"price": m, "flow": flow})


def grid_search_optimum(net: PowerNetwork, cost: CostModel, p_in: np.ndarray,
                        resolution: float = 1e-3) -> ReferenceOptimum:
    """Exhaustive search over the balanced slice of the box grid.

    The last controllable load is eliminated through 1^T (p_in - d) = 0; each
    remaining combination is kept when the eliminated load fits its box and
    the angle flows solved from C B C^T theta = p_in - d respect every
    thermal limit. Ties break to the lexicographically smallest d.
    """
    if resolution <= 0:
        raise InfeasibleError("resolution must be positive")
    ctrl = cost.controllable_indices()
    m = ctrl.size
    if m > 3:
        raise TooLargeError(f"{m} controllable buses exceed the n <= 3 oracle limit")
    s = float(np.sum(p_in))

    if m == 1:
        cands = np.array([[s]])  # balance pins the single load
    else:
        axes = []
        for i in ctrl[:-1]:
            count = int(np.floor((cost.d_hi[i] - cost.d_lo[i]) / resolution)) + 1
            axes.append(cost.d_lo[i] + resolution * np.arange(count))
        mesh = np.meshgrid(*axes, indexing="ij")
        free = np.stack([ax.ravel() for ax in mesh], axis=1)
        last = s - free.sum(axis=1)
        cands = np.concatenate([free, last[:, None]], axis=1)

    i_last = ctrl[-1]
    ok = ((cands[:, -1] >= cost.d_lo[i_last] - 1e-12)
          & (cands[:, -1] <= cost.d_hi[i_last] + 1e-12))
    cands = cands[ok]
    if cands.shape[0] == 0:
        raise InfeasibleError("no grid point satisfies balance and the boxes")

    d_full = np.zeros((cands.shape[0], net.n))
    d_full[:, ctrl] = cands

    lap = (net.incidence * net.susceptance) @ net.incidence.T
    rhs = (p_in[None, :] - d_full).T
    theta = np.linalg.lstsq(lap, rhs, rcond=None)[0].T
    exact = np.max(np.abs(theta @ lap.T - (p_in[None, :] - d_full)), axis=1)
    flows = (theta @ net.incidence) * net.susceptance
    feas = ((exact < 1e-9)
            & np.all(flows >= net.p_min - 1e-9, axis=1)
            & np.all(flows <= net.p_max + 1e-9, axis=1))
    if not feas.any():
        raise InfeasibleError("no grid point satisfies the thermal limits; "
                              "refine the resolution")

    d_feas = d_full[feas]
    costs = (cost.quad * d_feas * d_feas + cost.lin * d_feas
             + cost.l1_weight * np.abs(d_feas + cost.l1_shift))
    totals = cost.k * costs[:, cost.controllable].sum(axis=1)
    best = int(np.argmin(totals))  # first minimum = lexicographically smallest
    d_star = d_feas[best]

    mu, nu_m, nu_p = _recover_multipliers(net, cost, d_star, flows[feas][best],
                                          tol=10.0 * resolution)
    return ReferenceOptimum(
        d_star=d_star, omega_star=np.zeros(net.n), cost_star=float(totals[best]),
        lam_star=np.zeros(net.n), mu_star=mu, nu_minus_star=nu_m, nu_plus_star=nu_p,
        method="grid", resolution=resolution,
        meta={"n_candidates": int(cands.shape[0]),
              "n_feasible": int(np.count_nonzero(feas))})


def _recover_multipliers(net: PowerNetwork, cost: CostModel, d_star: np.ndarray,
                         flows: np.ndarray, tol: float):
    """Least-squares multiplier recovery from the stationarity conditions.

    With lambda* = 0, mu must satisfy mu_i in the subdifferential interval on
    controllable buses and C B (nu- - nu+) + C B C^T mu = 0, with nu
    supported on the lines whose flow sits at a limit (within tol). Solved as
    a small least-squares problem in (mu, active nu); returns None fields if
    the fit leaves a large residual (degenerate geometries).
    """
    n, l = net.n, net.n_lines
    act_m = np.flatnonzero(flows <= net.p_min + tol)
    act_p = np.flatnonzero(flows >= net.p_max - tol)
    ctrl = cost.controllable_indices()
    lo = np.empty(ctrl.size)
    hi = np.empty(ctrl.size)
    for j, i in enumerate(ctrl):
        lo[j], hi[j] = subdifferential_interval(cost, i, float(d_star[i]),
                                                kink_tol=max(1e-9, tol * 1e-3))
    mid = np.where(np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi),
                   np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0)))

    # unknown z = [mu (n), nu_active (k)]; rows: stationarity targets (soft,
    # toward interval midpoints) + the theta-hat stationarity equation
    k = act_m.size + act_p.size
    rows_a = np.zeros((ctrl.size + n, n + k))
    rhs = np.zeros(ctrl.size + n)
    for j, i in enumerate(ctrl):
        rows_a[j, i] = 1.0
        rhs[j] = mid[j]
    lap = (net.incidence * net.susceptance) @ net.incidence.T
    cb = net.incidence * net.susceptance
    rows_a[ctrl.size:, :n] = lap
    for jj, e in enumerate(act_m):
        rows_a[ctrl.size:, n + jj] = cb[:, e]
    for jj, e in enumerate(act_p):
        rows_a[ctrl.size:, n + act_m.size + jj] = -cb[:, e]
    z, *_ = np.linalg.lstsq(rows_a, rhs, rcond=None)

    # project interval targets and re-solve once (keeps mu inside intervals)
    mu = z[:n]
    proj = np.clip(mu[ctrl], lo, hi)
    rhs[:ctrl.size] = proj
    z, *_ = np.linalg.lstsq(rows_a, rhs, rcond=None)
    mu = z[:n]
    nu_m = np.zeros(l)
    nu_p = np.zeros(l)
    nu_m[act_m] = np.maximum(z[n:n + act_m.size], 0.0)
    nu_p[act_p] = np.maximum(z[n + act_m.size:], 0.0)
    return mu, nu_m, nu_p
