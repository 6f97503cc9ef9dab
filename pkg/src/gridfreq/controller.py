"""Distributed proximal primal-dual (DPPD) controller.

Two modes share the same primal/dual core:

* closed_loop — the plant supplies measured frequencies and line flows; the
  controller integrates the load command d, the subgradient tracker eta, the
  virtual angle theta_hat and the multipliers mu, nu-, nu+. The frequency
  plays the role of the balance multiplier (w_i = lambda_i) and the plant's
  own swing/flow dynamics realize the remaining two equations.
* pure_opt — everything, including lambda and the line flows, is integrated
  as one ODE. Stepsizes default to the analysis values (1 for the primal
  family, 1/2 for the multiplier family); "physical" selects rho_P = B_ij and
  rho_lambda = 1/M_i, which ties the flow/balance dynamics to the network's.

A projected-subgradient baseline replaces the tracker with a raw subgradient
selection; it exists for chatter comparisons only.

All functions broadcast over leading batch axes (bus/line index last).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import CostModel, prox_box_all
from .errors import DimensionMismatchError, NonpositiveParameterError
from .network import PowerNetwork, incidence_apply, laplacian_apply

ANALYSIS_RHO = {
    "eta": 1.0, "d": 1.0, "theta_hat": 1.0, "P": 1.0,
    "lambda": 0.5, "mu": 0.5, "nu_minus": 0.5, "nu_plus": 0.5,
}


@dataclass
class ControllerState:
    """DPPD state; lam and line_flow are populated in pure_opt mode only."""

    eta: np.ndarray
    d: np.ndarray
    theta_hat: np.ndarray
    mu: np.ndarray
    nu_minus: np.ndarray
    nu_plus: np.ndarray
    lam: np.ndarray | None = None
    line_flow: np.ndarray | None = None


@dataclass(frozen=True)
class DppdConfig:
    """Gains and switches for one controller instance.

    rho values are per-family scalars; rho_P and rho_lam additionally accept
    the string "physical" (per-line B_ij resp. per-bus 1/M_i), which ties
    the optimizer's flow/balance updates to the network's own dynamics.
    """

    kappa: float = 0.5
    mode: str = "closed_loop"  # or "pure_opt"
    thermal_limits: bool = True
    rho_eta: float = 1.0
    rho_d: float = 1.0
    rho_theta_hat: float = 1.0
    rho_p: float | str = 1.0
    rho_lam: float | str = 0.5
    rho_mu: float = 0.5
    rho_nu_minus: float = 0.5
    rho_nu_plus: float = 0.5
    baseline: bool = False

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise NonpositiveParameterError(f"kappa must lie in (0,1), got {self.kappa}")
        if self.mode not in ("closed_loop", "pure_opt"):
            raise NonpositiveParameterError(f"unknown mode {self.mode!r}")
        for name in ("rho_eta", "rho_d", "rho_theta_hat", "rho_mu",
                     "rho_nu_minus", "rho_nu_plus"):
            if getattr(self, name) <= 0:
                raise NonpositiveParameterError(f"{name} must be > 0")
        for name in ("rho_p", "rho_lam"):
            v = getattr(self, name)
            if isinstance(v, str):
                if v != "physical":
                    raise NonpositiveParameterError(f"{name}: bad value {v!r}")
            elif v <= 0:
                raise NonpositiveParameterError(f"{name} must be > 0")


def physical_rho_p(net: PowerNetwork, cfg: DppdConfig) -> np.ndarray | float:
    if cfg.rho_p == "physical":
        return net.susceptance
    return cfg.rho_p


def physical_rho_lam(net: PowerNetwork, cfg: DppdConfig) -> np.ndarray | float:
    if cfg.rho_lam == "physical":
        if net.load_buses.size:
            raise NonpositiveParameterError(
                "physical rho_lambda (1/M_i) needs a generator-only network; "
                "load buses realize the limit through the plant instead"
            )
        return 1.0 / net.inertia
    return cfg.rho_lam


def local_imbalances(net: PowerNetwork, d: np.ndarray, omega: np.ndarray,
                     line_flow: np.ndarray, theta_hat: np.ndarray,
                     p_in: np.ndarray, damping: np.ndarray | None = None):
    """Per-bus imbalance feedback signals (u1, u2).

    u1 uses the measured flows P, u2 the virtual-angle flows B C^T theta_hat.
    ``damping`` overrides the controller's assumed D (damping-uncertainty
    scenarios); default is the network's true D.
    """
    if d.shape[-1] != net.n or omega.shape[-1] != net.n:
        raise DimensionMismatchError("d and omega must have one entry per bus")
    dmp = net.damping if damping is None else damping
    u1 = p_in - d - dmp * omega - incidence_apply(net, line_flow)
    u2 = p_in - d - laplacian_apply(net, theta_hat)
    return u1, u2


class CoreOps:
    """Precomputed arrays for the shared DPPD right-hand side.

    Built once per run; every coefficient the hot loop touches is flattened
    into plain ndarrays here. Uncontrollable buses need no masking: their
    boxes pin the clip to zero and their cost coefficients vanish, so d and
    eta stay at zero identically once started there.
    """

    def __init__(self, net: PowerNetwork, cost: CostModel, cfg: DppdConfig):
        self.net, self.cost, self.cfg = net, cost, cfg
        self.c = net.incidence
        self.c_t = np.ascontiguousarray(net.incidence.T)
        self.b = net.susceptance
        self.cb_t = np.ascontiguousarray((net.incidence * net.susceptance).T)
        self.lap = (net.incidence * net.susceptance) @ self.c_t
        self.p_min, self.p_max = net.p_min, net.p_max
        self.twoak = 2.0 * cost.k * cost.quad
        self.ke = cost.k * cost.lin
        self.kb = cost.k * cost.l1_weight
        self.shift = cost.l1_shift
        self.d_lo, self.d_hi = cost.d_lo, cost.d_hi
        self.kappa = cfg.kappa

    def __call__(self, eta, d, theta_hat, mu, nu_minus, nu_plus,
                 lam, u1, u2, baseline: bool):
        cfg = self.cfg
        grad = self.twoak * d + self.ke
        pm_ = mu + u2
        if baseline:
            s = self.kb * np.sign(d + self.shift)
            eta_dot = np.zeros_like(eta)
            arg = d - grad - s + lam + u1 + pm_
        else:
            z = (d - self.kappa * eta) + self.shift
            prox2 = np.sign(z) * np.maximum(np.abs(z) - self.kb, 0.0) - self.shift
            eta_dot = cfg.rho_eta * (prox2 - d)
            arg = d - grad + self.kappa * eta + lam + u1 + pm_
        d_dot = cfg.rho_d * (np.clip(arg, self.d_lo, self.d_hi) - d)

        if cfg.thermal_limits:
            flows_hat = (theta_hat @ self.c) * self.b
            proj_minus = np.maximum((nu_minus + self.p_min) - flows_hat, 0.0)
            proj_plus = np.maximum((nu_plus - self.p_max) + flows_hat, 0.0)
            th_dot = cfg.rho_theta_hat * (
                (proj_minus - proj_plus) @ self.cb_t + pm_ @ self.lap)
            nu_minus_dot = cfg.rho_nu_minus * (proj_minus - nu_minus)
            nu_plus_dot = cfg.rho_nu_plus * (proj_plus - nu_plus)
        else:
            th_dot = cfg.rho_theta_hat * (pm_ @ self.lap)
            nu_minus_dot = np.zeros_like(nu_minus)
            nu_plus_dot = np.zeros_like(nu_plus)

        mu_dot = cfg.rho_mu * u2
        return eta_dot, d_dot, th_dot, mu_dot, nu_minus_dot, nu_plus_dot


def _primal_dual_core(net: PowerNetwork, cost: CostModel, cfg: DppdConfig,
                      eta, d, theta_hat, mu, nu_minus, nu_plus,
                      lam, u1, u2, baseline: bool):
    """One-shot wrapper over CoreOps for the dataclass-level entry points."""
    return CoreOps(net, cost, cfg)(eta, d, theta_hat, mu, nu_minus, nu_plus,
                                   lam, u1, u2, baseline)


def dppd_rhs_closed_loop(net: PowerNetwork, cost: CostModel, cfg: DppdConfig,
                         state: ControllerState, omega_meas: np.ndarray,
                         p_meas: np.ndarray, p_in: np.ndarray,
                         assumed_damping: np.ndarray | None = None) -> ControllerState:
    """Controller derivative given plant measurements (w, P).

    The measured frequency is identified with the balance multiplier
    (lambda := w); the flow and balance dynamics themselves are realized by
    the plant and are not integrated here.
    """
    u1, u2 = local_imbalances(net, state.d, omega_meas, p_meas,
                              state.theta_hat, p_in, damping=assumed_damping)
    eta_dot, d_dot, th_dot, mu_dot, num_dot, nup_dot = _primal_dual_core(
        net, cost, cfg, state.eta, state.d, state.theta_hat, state.mu,
        state.nu_minus, state.nu_plus, omega_meas, u1, u2, cfg.baseline)
    return ControllerState(eta=eta_dot, d=d_dot, theta_hat=th_dot, mu=mu_dot,
                           nu_minus=num_dot, nu_plus=nup_dot)


def dppd_rhs_pure_opt(net: PowerNetwork, cost: CostModel, cfg: DppdConfig,
                      state: ControllerState, p_in: np.ndarray) -> ControllerState:
    """Full DPPD ODE with internal lambda and line-flow states (w == lambda)."""
    lam, p = state.lam, state.line_flow
    if lam is None or p is None:
        raise DimensionMismatchError("pure_opt state needs lam and line_flow")
    u1, u2 = local_imbalances(net, state.d, lam, p, state.theta_hat, p_in)
    eta_dot, d_dot, th_dot, mu_dot, num_dot, nup_dot = _primal_dual_core(
        net, cost, cfg, state.eta, state.d, state.theta_hat, state.mu,
        state.nu_minus, state.nu_plus, lam, u1, u2, baseline=False)
    p_dot = physical_rho_p(net, cfg) * ((lam + u1) @ net.incidence)
    lam_dot = physical_rho_lam(net, cfg) * u1
    return ControllerState(eta=eta_dot, d=d_dot, theta_hat=th_dot, mu=mu_dot,
                           nu_minus=num_dot, nu_plus=nup_dot,
                           lam=lam_dot, line_flow=p_dot)


def subgradient_baseline_rhs(net: PowerNetwork, cost: CostModel, cfg: DppdConfig,
                             state: ControllerState, omega_meas: np.ndarray,
                             p_meas: np.ndarray, p_in: np.ndarray,
                             assumed_damping: np.ndarray | None = None) -> ControllerState:
    """Projected-subgradient stand-in: no tracker, raw sign selection in d.

    Identical to the closed-loop DPPD otherwise; the kink selection sign(0)=0
    keeps runs deterministic so chatter comparisons are reproducible.
    """
    u1, u2 = local_imbalances(net, state.d, omega_meas, p_meas,
                              state.theta_hat, p_in, damping=assumed_damping)
    eta_dot, d_dot, th_dot, mu_dot, num_dot, nup_dot = _primal_dual_core(
        net, cost, cfg, state.eta, state.d, state.theta_hat, state.mu,
        state.nu_minus, state.nu_plus, omega_meas, u1, u2, baseline=True)
    return ControllerState(eta=eta_dot, d=d_dot, theta_hat=th_dot, mu=mu_dot,
                           nu_minus=num_dot, nu_plus=nup_dot)


def initial_controller_state(net: PowerNetwork, cost: CostModel,
                             d0: np.ndarray | None = None,
                             pure_opt: bool = False) -> ControllerState:
    """All-zero multipliers with d(0) projected into the box (feasible start)."""
    n, l = net.n, net.n_lines
    d0 = np.zeros(n) if d0 is None else prox_box_all(cost, np.asarray(d0, float))
    st = ControllerState(
        eta=np.zeros(n), d=d0, theta_hat=np.zeros(n), mu=np.zeros(n),
        nu_minus=np.zeros(l), nu_plus=np.zeros(l))
    if pure_opt:
        st.lam = np.zeros(n)
        st.line_flow = np.zeros(l)
    return st
