"""Fixed-step trajectory integration for both controller modes.

State vectors are packed flat (bus/line index on the last axis), so a single
run uses shape (dim,) and a batch of independent runs shape (batch, dim) with
no code change; numpy broadcasting carries the batch through every operation.

Sampled derivatives come from the same RK4 stage evaluation at the sample
time (the k1 stage), so the logged g(t) is the exact right-hand side, not a
finite difference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controller import CoreOps, DppdConfig, physical_rho_lam, physical_rho_p
from .costs import CostModel, prox_box_all
from .errors import NonFiniteStateError, NonpositiveParameterError
from .network import InjectionProfile, PowerNetwork

CLOSED_LOOP_FIELDS = ("theta", "omega_gen", "P", "eta", "d", "theta_hat",
                      "mu", "nu_minus", "nu_plus")
PURE_OPT_FIELDS = ("eta", "d", "theta_hat", "mu", "nu_minus", "nu_plus",
                   "lam", "P")


@dataclass
class Trajectory:
    """Time-indexed samples of one run plus sampled derivatives and metrics.

    ``data`` and ``deriv`` map field names to (n_samples, width) arrays. The
    ``omega`` entry always holds the full bus vector (algebraic load-bus
    values included in closed loop; lambda in pure optimization). ``g`` sums
    the norms of the optimization-variable rates; for closed-loop runs its
    omega contribution counts the differential (generator) states only.
    """

    mode: str
    t: np.ndarray
    data: dict = field(repr=False)
    deriv: dict = field(repr=False)
    g: np.ndarray = field(repr=False)
    max_box_violation: float = 0.0
    min_nu: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.t.shape[0]

    def final(self, key: str) -> np.ndarray:
        return self.data[key][-1]


def _slices(widths):
    out, start = [], 0
    for w in widths:
        out.append(slice(start, start + w))
        start += w
    return out, start


def steady_plant_init(net: PowerNetwork, p_in0: np.ndarray, d0: np.ndarray):
    """Uncontrolled steady plant state for the given injections.

    Balanced injections give the zero-frequency dispatch; an imbalance leaves
    the exact uniform-frequency equilibrium (all buses at sum(p_in - d) over
    sum(D), the damping-absorbed offset). Line flows are set from the angle
    potential, so P = B C^T theta holds from the first step.
    """
    rhs = p_in0 - d0
    offset = float(np.sum(rhs)) / float(np.sum(net.damping))
    rhs = rhs - net.damping * offset
    lap = (net.incidence * net.susceptance) @ net.incidence.T
    theta = np.linalg.lstsq(lap, rhs, rcond=None)[0]
    flows = (theta @ net.incidence) * net.susceptance
    return theta, np.full(net.gen_buses.size, offset), flows


def _sample_plan(horizon: float, h: float, sample_every: float):
    if h <= 0 or horizon <= 0:
        raise NonpositiveParameterError("h and horizon must be positive")
    if sample_every < h:
        sample_every = h
    n_steps = max(1, int(round(horizon / h)))
    stride = max(1, int(round(sample_every / h)))
    return n_steps, stride


def _index_view(idx: np.ndarray):
    """Contiguous index arrays become slices (much cheaper in hot loops)."""
    if idx.size and np.array_equal(idx, np.arange(idx[0], idx[-1] + 1)):
        return slice(int(idx[0]), int(idx[-1]) + 1)
    return idx


def _noise(k2: float, t: float) -> float:
    return k2 * np.sin(2.0 * np.pi * t)


def run_closed_loop(net: PowerNetwork, cost: CostModel, cfg: DppdConfig,
                    profile: InjectionProfile, horizon: float, h: float,
                    sample_every: float, *, x0: np.ndarray | None = None,
                    d0: np.ndarray | None = None, init: str = "steady",
                    k1: float | None = None, damping_side: str = "controller",
                    k2: float = 0.0, baseline: bool | None = None,
                    warmup: float = 0.0, meta: dict | None = None) -> Trajectory:
    """Integrate plant + controller; returns the sampled Trajectory.

    k1 scales the controller's assumed damping (damping_side="controller",
    the default) or the plant's physical damping ("plant"); k2 adds the
    sinusoidal measurement error to the controller's frequency input on
    controllable buses. The plant always integrates its true state.

    ``warmup`` pre-rolls the loop on the scenario's initial injections held
    constant, so the controller meets the disturbance from its settled
    operating point the way a continuously running regulator would
    (measurement noise stays off during the pre-roll).
    """
    if warmup > 0.0 and x0 is None:
        pre = run_closed_loop(net, cost, cfg, InjectionProfile(profile(0.0)),
                              warmup, h, warmup, d0=d0, init=init, k1=k1,
                              damping_side=damping_side, k2=0.0,
                              baseline=baseline)
        x0 = np.concatenate([pre.data[k][-1] for k in CLOSED_LOOP_FIELDS])
    n, l, ng = net.n, net.n_lines, net.gen_buses.size
    gen, load = net.gen_buses, net.load_buses
    c_mat, b = net.incidence, net.susceptance
    use_baseline = cfg.baseline if baseline is None else baseline

    plant_damping = net.damping.copy()
    ctrl_damping = net.damping.copy()
    if k1 is not None:
        if k1 <= 0:
            raise NonpositiveParameterError("k1 must be > 0 when set")
        if damping_side == "plant":
            plant_damping *= k1
        else:
            ctrl_damping *= k1
    noisy = _index_view(cost.controllable_indices())

    core = CoreOps(net, cost, cfg)
    c_t = core.c_t
    gen_v, load_v = _index_view(gen), _index_view(load)
    d_load = plant_damping[load]
    d_gen, m_gen = plant_damping[gen], net.inertia[gen]

    sls, dim = _slices([n, ng, l, n, n, n, n, l, l])
    (sl_th, sl_wg, sl_p, sl_eta, sl_d, sl_thh, sl_mu, sl_num, sl_nup) = sls

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        wg = x[..., sl_wg]
        p = x[..., sl_p]
        eta = x[..., sl_eta]
        d = x[..., sl_d]
        thh = x[..., sl_thh]
        mu = x[..., sl_mu]
        num = x[..., sl_num]
        nup = x[..., sl_nup]

        p_in = profile(t)
        outflow = p @ c_t
        omega = np.empty(x.shape[:-1] + (n,))
        omega[..., gen_v] = wg
        if ng < n:
            omega[..., load_v] = (p_in[..., load_v] - d[..., load_v]
                                  - outflow[..., load_v]) / d_load
        p_dot = (omega @ c_mat) * b
        wg_dot = (p_in[..., gen_v] - d_gen * wg - d[..., gen_v]
                  - outflow[..., gen_v]) / m_gen

        w_meas = omega
        if k2:
            w_meas = omega.copy()
            w_meas[..., noisy] = w_meas[..., noisy] + _noise(k2, t)
        u1 = p_in - d - ctrl_damping * w_meas - outflow
        u2 = p_in - d - thh @ core.lap
        eta_dot, d_dot, thh_dot, mu_dot, num_dot, nup_dot = core(
            eta, d, thh, mu, num, nup, w_meas, u1, u2, use_baseline)
        return np.concatenate(
            [omega, wg_dot, p_dot, eta_dot, d_dot, thh_dot, mu_dot,
             num_dot, nup_dot], axis=-1)

    if x0 is None:
        d_init = prox_box_all(cost, np.zeros(n) if d0 is None else np.asarray(d0, float))
        if init == "steady":
            theta0, wg0, p0 = steady_plant_init(net, profile(0.0), d_init)
        else:
            theta0, wg0, p0 = (np.zeros(n), np.zeros(ng), np.zeros(l))
        x0 = np.zeros(dim)
        x0[sl_th], x0[sl_wg], x0[sl_p], x0[sl_d] = theta0, wg0, p0, d_init

    run_meta = dict(meta or {})
    run_meta.update({"k1": k1, "damping_side": damping_side if k1 else None,
                     "k2": k2, "baseline": use_baseline, "h": h,
                     "cost_scale_k": cost.k})
    traj = _integrate(rhs, x0, horizon, h, sample_every, mode="closed_loop",
                      field_slices=dict(zip(CLOSED_LOOP_FIELDS, sls)),
                      cost=cost, net=net, cfg=cfg, meta=run_meta)

    if x0.ndim == 1:
        # expand omega to the full bus vector (plant algebra) for reporting
        p_all = traj.data["P"]
        d_all = traj.data["d"]
        p_in_t = np.stack([profile(tk) for tk in traj.t])
        omega = np.zeros((traj.n_samples, n))
        omega[:, gen] = traj.data["omega_gen"]
        if load.size:
            outflow = p_all @ c_mat.T
            omega[:, load] = (p_in_t[:, load] - d_all[:, load]
                              - outflow[:, load]) / plant_damping[load]
        traj.data["omega"] = omega
        w_dot = np.zeros((traj.n_samples, n))
        w_dot[:, gen] = traj.deriv["omega_gen"]
        traj.deriv["omega"] = w_dot
        traj.data["p_in"] = p_in_t
    return traj


def run_pure_opt(net: PowerNetwork, cost: CostModel, cfg: DppdConfig,
                 profile: InjectionProfile, horizon: float, h: float,
                 sample_every: float, *, x0: np.ndarray | None = None,
                 d0: np.ndarray | None = None,
                 meta: dict | None = None) -> Trajectory:
    """Integrate the full DPPD ODE (internal lambda and line flows)."""
    n, l = net.n, net.n_lines
    c_mat = net.incidence
    rho_p = physical_rho_p(net, cfg)
    rho_lam = physical_rho_lam(net, cfg)
    core = CoreOps(net, cost, cfg)
    c_t, damping = core.c_t, net.damping

    sls, dim = _slices([n, n, n, n, l, l, n, l])
    (sl_eta, sl_d, sl_thh, sl_mu, sl_num, sl_nup, sl_lam, sl_p) = sls

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        eta = x[..., sl_eta]
        d = x[..., sl_d]
        thh = x[..., sl_thh]
        mu = x[..., sl_mu]
        num = x[..., sl_num]
        nup = x[..., sl_nup]
        lam = x[..., sl_lam]
        p = x[..., sl_p]

        p_in = profile(t)
        u1 = p_in - d - damping * lam - p @ c_t
        u2 = p_in - d - thh @ core.lap
        eta_dot, d_dot, thh_dot, mu_dot, num_dot, nup_dot = core(
            eta, d, thh, mu, num, nup, lam, u1, u2, False)
        p_dot = rho_p * ((lam + u1) @ c_mat)
        lam_dot = rho_lam * u1
        return np.concatenate(
            [eta_dot, d_dot, thh_dot, mu_dot, num_dot, nup_dot,
             lam_dot, p_dot], axis=-1)

    if x0 is None:
        x0 = np.zeros(dim)
        x0[sl_d] = prox_box_all(cost, np.zeros(n) if d0 is None else np.asarray(d0, float))

    run_meta = dict(meta or {})
    run_meta.update({"h": h, "cost_scale_k": cost.k})
    traj = _integrate(rhs, x0, horizon, h, sample_every, mode="pure_opt",
                      field_slices=dict(zip(PURE_OPT_FIELDS, sls)),
                      cost=cost, net=net, cfg=cfg, meta=run_meta)
    traj.data["omega"] = traj.data["lam"]
    traj.deriv["omega"] = traj.deriv["lam"]
    if np.asarray(x0).ndim == 1:
        traj.data["p_in"] = np.stack([profile(tk) for tk in traj.t])
    return traj


def run_uncontrolled(net: PowerNetwork, profile: InjectionProfile,
                     horizon: float, h: float, sample_every: float,
                     init: str = "steady", meta: dict | None = None) -> Trajectory:
    """Plant-only run with d = 0: the no-controller comparison baseline."""
    n, l, ng = net.n, net.n_lines, net.gen_buses.size
    gen, load = net.gen_buses, net.load_buses
    gen_v, load_v = _index_view(gen), _index_view(load)
    c_mat, b = net.incidence, net.susceptance
    c_t = np.ascontiguousarray(c_mat.T)
    d_load, d_gen, m_gen = net.damping[load], net.damping[gen], net.inertia[gen]

    sls, dim = _slices([n, ng, l])
    sl_th, sl_wg, sl_p = sls

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        wg = x[..., sl_wg]
        p = x[..., sl_p]
        p_in = profile(t)
        outflow = p @ c_t
        omega = np.empty(x.shape[:-1] + (n,))
        omega[..., gen_v] = wg
        if ng < n:
            omega[..., load_v] = (p_in[..., load_v] - outflow[..., load_v]) / d_load
        p_dot = (omega @ c_mat) * b
        wg_dot = (p_in[..., gen_v] - d_gen * wg - outflow[..., gen_v]) / m_gen
        return np.concatenate([omega, wg_dot, p_dot], axis=-1)

    x0 = np.zeros(dim)
    if init == "steady":
        theta0, wg0, p0 = steady_plant_init(net, profile(0.0), np.zeros(n))
        x0[sl_th], x0[sl_wg], x0[sl_p] = theta0, wg0, p0

    n_steps, stride = _sample_plan(horizon, h, sample_every)
    sample_steps = list(range(0, n_steps + 1, stride))
    if sample_steps[-1] != n_steps:
        sample_steps.append(n_steps)
    sample_set = set(sample_steps)
    ts, states = [], []
    x = x0
    for step in range(n_steps + 1):
        t = step * h
        if step in sample_set:
            ts.append(t)
            states.append(x.copy())
        if step == n_steps:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(t, x)
            k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1)
            k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2)
            k4 = rhs(t + h, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteStateError(t + h)

    t_arr = np.asarray(ts)
    state_arr = np.stack(states)
    data = {k: state_arr[..., sl] for k, sl in zip(("theta", "omega_gen", "P"), sls)}
    p_in_t = np.stack([profile(tk) for tk in t_arr])
    omega = np.zeros((t_arr.size, n))
    omega[:, gen] = data["omega_gen"]
    if load.size:
        outflow = data["P"] @ c_t
        omega[:, load] = (p_in_t[:, load] - outflow[:, load]) / net.damping[load]
    data["omega"] = omega
    data["p_in"] = p_in_t
    data["d"] = np.zeros((t_arr.size, n))
    return Trajectory(mode="uncontrolled", t=t_arr, data=data, deriv={},
                      g=np.zeros(t_arr.size), meta=dict(meta or {}, h=h))


def _integrate(rhs, x0: np.ndarray, horizon: float, h: float,
               sample_every: float, *, mode: str, field_slices: dict,
               cost: CostModel, net: PowerNetwork, cfg: DppdConfig,
               meta: dict) -> Trajectory:
    n_steps, stride = _sample_plan(horizon, h, sample_every)
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteStateError(0.0, "non-finite initial state")

    sample_steps = list(range(0, n_steps + 1, stride))
    if sample_steps[-1] != n_steps:
        sample_steps.append(n_steps)
    sample_set = set(sample_steps)

    ts, states, derivs = [], [], []
    sl_d = field_slices["d"]
    lo, hi = cost.d_lo, cost.d_hi
    mask = cost.controllable
    max_violation = 0.0
    min_nu = 0.0
    nu_sls = (field_slices["nu_minus"], field_slices["nu_plus"])

    for step in range(n_steps + 1):
        t = step * h
        k1 = rhs(t, x)
        if step in sample_set:
            ts.append(t)
            states.append(x.copy())
            derivs.append(k1)
        if step == n_steps:
            break
        # box-violation / nu-positivity bookkeeping at every step
        d_now = x[..., sl_d]
        viol = np.maximum(np.maximum(d_now - hi, lo - d_now), 0.0)
        v = float(np.max(np.where(mask, viol, 0.0))) if mask.any() else 0.0
        if v > max_violation:
            max_violation = v
        for sl in nu_sls:
            if x[..., sl].size:
                m = float(np.min(x[..., sl]))
                if m < min_nu:
                    min_nu = m

        with np.errstate(over="ignore", invalid="ignore"):
            k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1)
            k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2)
            k4 = rhs(t + h, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteStateError(t + h)

    t_arr = np.asarray(ts)
    state_arr = np.stack(states)
    deriv_arr = np.stack(derivs)
    data = {k: state_arr[..., sl] for k, sl in field_slices.items()}
    deriv = {k: deriv_arr[..., sl] for k, sl in field_slices.items()}

    g_keys = ["d", "eta", "theta_hat", "P", "mu"]
    g = sum(np.linalg.norm(deriv[k], axis=-1) for k in g_keys)
    if mode == "pure_opt":
        g = g + np.linalg.norm(deriv["lam"], axis=-1)
    else:
        g = g + np.linalg.norm(deriv["omega_gen"], axis=-1)
    if cfg.thermal_limits:
        g = g + (np.linalg.norm(deriv["nu_minus"], axis=-1)
                 + np.linalg.norm(deriv["nu_plus"], axis=-1))

    return Trajectory(mode=mode, t=t_arr, data=data, deriv=deriv, g=np.asarray(g),
                      max_box_violation=max_violation, min_nu=min_nu, meta=meta)
