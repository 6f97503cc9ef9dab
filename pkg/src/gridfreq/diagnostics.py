"""Optimality and convergence diagnostics.

Everything here is a pure function of sampled states: KKT residuals for the
eight fixed-point conditions, the two Lyapunov candidates (box-distance V_a
and the composite V_b, with the thermal-limit variant V_b'), the sqrt(t)
convergence-rate bound, the steady-state angle/flow equivalence residuals and
the sign-change chatter count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import CostModel, grad_f0, prox_box_all, subdifferential_interval
from .errors import (
    BadEquilibriumError,
    DimensionMismatchError,
    EmptyTrajectoryError,
    NotConvergedError,
)
from .network import PowerNetwork, incidence_apply, laplacian_apply
from .simulate import Trajectory


@dataclass
class PrimalDualPoint:
    """One full primal-dual point (d, theta_hat, omega, P, lambda, mu, nu-+)."""

    d: np.ndarray
    theta_hat: np.ndarray
    omega: np.ndarray
    line_flow: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    nu_minus: np.ndarray
    nu_plus: np.ndarray

    @staticmethod
    def from_trajectory(traj: Trajectory, idx: int = -1) -> "PrimalDualPoint":
        """Extract the sample at ``idx``; omega and lambda are identified in
        whichever direction the mode leaves implicit."""
        d = traj.data["d"][idx]
        omega = traj.data["omega"][idx]
        lam = traj.data["lam"][idx] if "lam" in traj.data else omega
        return PrimalDualPoint(
            d=d, theta_hat=traj.data["theta_hat"][idx], omega=omega,
            line_flow=traj.data["P"][idx], lam=lam, mu=traj.data["mu"][idx],
            nu_minus=traj.data["nu_minus"][idx], nu_plus=traj.data["nu_plus"][idx])


@dataclass
class KktResidual:
    """Euclidean residual norms of the eight optimality conditions.

    ``total`` is their maximum; it vanishes exactly at an optimal point.
    """

    stationarity_d: float
    freq_lambda: float
    theta_stationarity: float
    lambda_consensus: float
    balance_p: float
    balance_theta: float
    comp_slack_minus: float
    comp_slack_plus: float

    @property
    def total(self) -> float:
        return max(self.stationarity_d, self.freq_lambda, self.theta_stationarity,
                   self.lambda_consensus, self.balance_p, self.balance_theta,
                   self.comp_slack_minus, self.comp_slack_plus)

    def as_dict(self) -> dict:
        return {
            "stationarity_d": self.stationarity_d,
            "freq_lambda": self.freq_lambda,
            "theta_stationarity": self.theta_stationarity,
            "lambda_consensus": self.lambda_consensus,
            "balance_p": self.balance_p,
            "balance_theta": self.balance_theta,
            "comp_slack_minus": self.comp_slack_minus,
            "comp_slack_plus": self.comp_slack_plus,
            "total": self.total,
        }


def kkt_residual(net: PowerNetwork, cost: CostModel, p_in: np.ndarray,
                 point: PrimalDualPoint, *, thermal_limits: bool = True,
                 kink_tol: float = 1e-6) -> KktResidual:
    """Residuals of the fixed-point optimality system at ``point``.

    The load stationarity condition uses the exact per-bus subdifferential
    interval (quadratic gradient + sign/kink interval + box normal cone); a
    point outside its box contributes the box distance on top. Complementary
    slackness combines primal violation, dual negativity and |nu * slack|.
    """
    d, th, w = point.d, point.theta_hat, point.omega
    p, lam, mu = point.line_flow, point.lam, point.mu
    if d.shape != (net.n,) or p.shape != (net.n_lines,):
        raise DimensionMismatchError("point dimensions do not match the network")

    r_stat = []
    for i in np.flatnonzero(cost.controllable):
        di = float(np.clip(d[i], cost.d_lo[i], cost.d_hi[i]))
        box_gap = abs(float(d[i]) - di)
        lo, hi = subdifferential_interval(cost, i, di, kink_tol=kink_tol)
        v = float(lam[i] + mu[i])
        r_stat.append(max(lo - v, 0.0, v - hi) + box_gap)
    stationarity_d = float(np.linalg.norm(r_stat))

    freq_lambda = float(np.linalg.norm(w - lam))
    lambda_consensus = float(np.linalg.norm(lam @ net.incidence))
    balance_p = float(np.linalg.norm(
        p_in - d - net.damping * w - incidence_apply(net, p)))
    balance_theta = float(np.linalg.norm(p_in - d - laplacian_apply(net, th)))

    if thermal_limits and net.n_lines:
        flows_hat = (th @ net.incidence) * net.susceptance
        theta_stationarity = float(np.linalg.norm(
            incidence_apply(net, net.susceptance * (point.nu_minus - point.nu_plus))
            + laplacian_apply(net, mu)))
        slack_m = flows_hat - net.p_min
        slack_p = net.p_max - flows_hat
        rm = (np.maximum(-slack_m, 0.0) + np.maximum(-point.nu_minus, 0.0)
              + np.abs(point.nu_minus * slack_m))
        rp = (np.maximum(-slack_p, 0.0) + np.maximum(-point.nu_plus, 0.0)
              + np.abs(point.nu_plus * slack_p))
        comp_minus = float(np.linalg.norm(rm))
        comp_plus = float(np.linalg.norm(rp))
    else:
        theta_stationarity = float(np.linalg.norm(laplacian_apply(net, mu)))
        comp_minus = comp_plus = 0.0

    return KktResidual(
        stationarity_d=stationarity_d, freq_lambda=freq_lambda,
        theta_stationarity=theta_stationarity, lambda_consensus=lambda_consensus,
        balance_p=balance_p, balance_theta=balance_theta,
        comp_slack_minus=comp_minus, comp_slack_plus=comp_plus)


def lyapunov_va(cost: CostModel, d: np.ndarray) -> float:
    """Half squared distance of d to the feasible box (0 inside)."""
    return 0.5 * float(np.sum((prox_box_all(cost, d) - d) ** 2))


def _psi_terms(net: PowerNetwork, cost: CostModel, p_in: np.ndarray,
               pt: PrimalDualPoint, thermal_limits: bool):
    """Auxiliary convex potential and its pieces at one point."""
    u1 = p_in - pt.d - net.damping * pt.omega - incidence_apply(net, pt.line_flow)
    u2 = p_in - pt.d - laplacian_apply(net, pt.theta_hat)
    pw = pt.omega + u1
    pm_ = pt.mu + u2
    m = cost.controllable
    f0 = float(cost.k * np.sum((cost.quad * pt.d * pt.d + cost.lin * pt.d)[m]))
    psi = f0 + 0.5 * float(pw @ pw) + 0.5 * float(pm_ @ pm_)
    grad_d = grad_f0(cost, pt.d) - pw - pm_
    proj_m = proj_p = None
    if thermal_limits:
        flows_hat = (pt.theta_hat @ net.incidence) * net.susceptance
        proj_m = np.maximum(pt.nu_minus + net.p_min - flows_hat, 0.0)
        proj_p = np.maximum(pt.nu_plus + flows_hat - net.p_max, 0.0)
        psi += 0.5 * float(proj_m @ proj_m) + 0.5 * float(proj_p @ proj_p)
    return psi, grad_d, proj_m, proj_p


def vb_state_from_trajectory(traj: Trajectory, idx: int = -1) -> dict:
    """Collect the fields lyapunov_vb needs from one trajectory sample."""
    keys = ("eta", "d", "theta_hat", "omega", "P", "mu", "nu_minus", "nu_plus")
    return {k: traj.data[k][idx] for k in keys}


def lyapunov_vb(net: PowerNetwork, cost: CostModel, p_in: np.ndarray,
                state: dict, equilibrium: dict, *, kappa: float = 0.5,
                thermal_limits: bool = False, equilibrium_tol: float = 1e-5,
                check_equilibrium: bool = True) -> float:
    """Composite Lyapunov candidate V_b (V_b' when thermal limits are on).

    ``state`` and ``equilibrium`` are dicts with keys eta, d, theta_hat,
    omega, P, mu, nu_minus, nu_plus (see vb_state_from_trajectory). The
    equilibrium must be a converged, KKT-validated point (residual below
    ``equilibrium_tol``); V_b is evaluated against that specific equilibrium
    since the angle/flow parts need not be unique on meshed networks.
    """
    def _pt(s: dict) -> PrimalDualPoint:
        return PrimalDualPoint(
            d=s["d"], theta_hat=s["theta_hat"], omega=s["omega"],
            line_flow=s["P"], lam=s["omega"], mu=s["mu"],
            nu_minus=s["nu_minus"], nu_plus=s["nu_plus"])

    pt, pt_s = _pt(state), _pt(equilibrium)
    if check_equilibrium:
        res = kkt_residual(net, cost, p_in, pt_s, thermal_limits=thermal_limits)
        if res.total > equilibrium_tol:
            raise BadEquilibriumError(
                f"equilibrium KKT residual {res.total:.3e} > {equilibrium_tol:g}")

    psi, _, _, _ = _psi_terms(net, cost, p_in, pt, thermal_limits)
    psi_s, grad_d_s, _, _ = _psi_terms(net, cost, p_in, pt_s, thermal_limits)

    dd = pt.d - pt_s.d
    de = state["eta"] - equilibrium["eta"]
    dth = pt.theta_hat - pt_s.theta_hat
    dw = pt.omega - pt_s.omega
    dmu = pt.mu - pt_s.mu
    dp = pt.line_flow - pt_s.line_flow
    w_s, mu_s = pt_s.omega, pt_s.mu

    gap = psi - psi_s - float(grad_d_s @ dd)
    cross_w = float(w_s @ ((1.0 - net.damping) * dw))
    cross_mu = float(mu_s @ dmu)
    cross_p = float(w_s @ incidence_apply(net, dp))
    cross_th = float(mu_s @ laplacian_apply(net, dth))

    v2 = 0.5 * (float(dd @ dd) - 2.0 * kappa * float(dd @ de)
                + kappa * float(de @ de))
    v3 = (0.5 * float(dmu @ dmu) + 0.5 * float(dw @ dw)
          + 1.5 * float(dw @ (net.damping * dw)))
    v4 = 0.5 * (float(dth @ dth) + float(dp @ dp))
    v1 = gap - cross_w - cross_mu + cross_p + cross_th

    if not thermal_limits:
        return float(v1 + v2 + v3 + v4)

    # thermal-limit composition: the nu multipliers join the gap (their
    # theta_hat coupling is the stationarity condition the equilibrium
    # satisfies) and contribute their own quadratic distance
    dnm = pt.nu_minus - pt_s.nu_minus
    dnp_ = pt.nu_plus - pt_s.nu_plus
    v1 += (float(((pt_s.nu_minus - pt_s.nu_plus) * net.susceptance)
                 @ (dth @ net.incidence))
           - float(pt_s.nu_minus @ dnm) - float(pt_s.nu_plus @ dnp_))
    v3 += 0.5 * (float(dnm @ dnm) + float(dnp_ @ dnp_))
    return float(v1 + v2 + v3 + v4)


@dataclass
class RateReport:
    """sqrt(t)-scaled envelope of the dynamics magnitude g(t).

    envelope(t) = min_{s<=t} g(s) is non-increasing by construction; the pass
    flag asserts envelope(t) sqrt(t) stays within ``factor`` of its value at
    t0, the boundedness surrogate for the O(1/sqrt(t)) rate.
    """

    t: np.ndarray
    g: np.ndarray
    envelope: np.ndarray
    bound: np.ndarray
    t0: float
    bound_t0: float
    bound_final: float
    passed: bool


def rate_report(traj: Trajectory, t0: float = 1.0, factor: float = 2.0) -> RateReport:
    if traj.t.size == 0:
        raise EmptyTrajectoryError("trajectory has no samples")
    t, g = traj.t, traj.g
    idx0 = int(np.searchsorted(t, t0))
    if idx0 >= t.size:
        raise EmptyTrajectoryError(f"horizon shorter than t0={t0:g}")
    envelope = np.minimum.accumulate(g)
    bound = envelope * np.sqrt(np.maximum(t, 0.0))
    bound_t0 = float(bound[idx0])
    tail = bound[idx0:]
    passed = bool(np.all(tail <= factor * bound_t0 + 1e-15))
    return RateReport(t=t, g=g, envelope=envelope, bound=bound, t0=t0,
                      bound_t0=bound_t0, bound_final=float(bound[-1]),
                      passed=passed)


@dataclass
class Lemma2Report:
    """Steady-state equivalence residuals between plant angles and the
    controller's virtual angles, plus the frequency-restoration facts."""

    angle_residual: float   # || C^T theta - C^T theta_hat ||_inf
    flow_residual: float    # || B C^T theta - P ||_inf
    omega_inf: float
    shift_residual: float   # min over eps of || theta - theta_hat - eps 1 ||_inf


def lemma2_check(net: PowerNetwork, theta: np.ndarray, theta_hat: np.ndarray,
                 line_flow: np.ndarray, omega: np.ndarray,
                 g_final: float | None = None, g_tol: float = 1e-5) -> Lemma2Report:
    """Residual pair of the reformulation-equivalence conditions.

    Raises NotConvergedError when the supplied final dynamics magnitude shows
    the run has not settled.
    """
    if g_final is not None and g_final > g_tol:
        raise NotConvergedError(f"g(T)={g_final:.3e} > {g_tol:g}; not at steady state")
    diff = theta - theta_hat
    angle = float(np.max(np.abs(diff @ net.incidence))) if net.n_lines else 0.0
    flows = (theta @ net.incidence) * net.susceptance
    flow = float(np.max(np.abs(flows - line_flow))) if net.n_lines else 0.0
    shift = 0.5 * float(np.max(diff) - np.min(diff))
    return Lemma2Report(angle_residual=angle, flow_residual=flow,
                        omega_inf=float(np.max(np.abs(omega))),
                        shift_residual=shift)


def chatter_metric(traj: Trajectory, bus: int, window_frac: float = 0.25,
                   dead_band: float = 1e-9) -> int:
    """Sign changes of the sampled d-dot at ``bus`` over the final window.

    The derivative is taken as the increment rate between consecutive
    samples: at a sliding kink the instantaneous right-hand side can hold one
    sign at every step start while the trajectory itself zigzags, so the
    interval average is the robust sampled reading. Rates below ``dead_band``
    are ignored so a settled controller does not accumulate noise flips.
    """
    if traj.t.size == 0:
        raise EmptyTrajectoryError("trajectory has no samples")
    t = traj.t
    t_cut = t[-1] - window_frac * (t[-1] - t[0])
    keep = t >= t_cut
    tk = t[keep]
    dk = traj.data["d"][keep, bus]
    if tk.size < 2:
        return 0
    rate = np.diff(dk) / np.diff(tk)
    live = rate[np.abs(rate) >= dead_band]
    if live.size < 2:
        return 0
    signs = np.sign(live)
    return int(np.count_nonzero(signs[1:] != signs[:-1]))
