"""Physical plant: linearized swing dynamics with algebraic load buses.

Generator buses carry differential frequency states M_i dw/dt = ...; load
buses have D_i > 0 and zero inertia, so their frequency is eliminated exactly
from the algebraic balance (no small-inertia regularization). Angles are
integrated for reporting and angle/flow consistency checks; the flow states
use dP/dt = B C^T w directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NonFiniteStateError
from .network import PowerNetwork, incidence_apply


@dataclass
class PlantState:
    """Physical state snapshot: angles, generator frequencies, line flows."""

    theta: np.ndarray      # per bus [rad], diagnostic reference free
    omega_gen: np.ndarray  # per generator bus [p.u.]
    line_flow: np.ndarray  # per line [p.u.]


def load_bus_frequency(net: PowerNetwork, d: np.ndarray, line_flow: np.ndarray,
                       p_in: np.ndarray) -> np.ndarray:
    """Algebraic load-bus frequency (P_i^in - d_i - net outflow) / D_i.

    Returns values for net.load_buses only, in that order. Inputs may carry
    leading batch axes.
    """
    if d.shape[-1] != net.n or p_in.shape[-1] != net.n:
        raise DimensionMismatchError("d and p_in must have one entry per bus")
    lb = net.load_buses
    outflow = incidence_apply(net, line_flow)[..., lb]
    return (p_in[..., lb] - d[..., lb] - outflow) / net.damping[lb]


def full_frequency(net: PowerNetwork, omega_gen: np.ndarray, d: np.ndarray,
                   line_flow: np.ndarray, p_in: np.ndarray) -> np.ndarray:
    """Assemble the all-bus frequency vector from differential + algebraic parts."""
    shape = np.broadcast_shapes(omega_gen.shape[:-1], d.shape[:-1])
    omega = np.zeros(shape + (net.n,))
    omega[..., net.gen_buses] = omega_gen
    if net.load_buses.size:
        omega[..., net.load_buses] = load_bus_frequency(net, d, line_flow, p_in)
    return omega


def plant_rhs(net: PowerNetwork, theta: np.ndarray, omega_gen: np.ndarray,
              line_flow: np.ndarray, d: np.ndarray, p_in: np.ndarray):
    """Swing-equation derivatives (d theta, d omega_gen, d P).

    d theta_i = w_i for every bus (load-bus w solved algebraically),
    d P_ij = B_ij (w_i - w_j), and M_i dw_i = P_i^in - D_i w_i - d_i - (C P)_i
    on generator buses.
    """
    if theta.shape[-1] != net.n:
        raise DimensionMismatchError("theta must have one entry per bus")
    omega = full_frequency(net, omega_gen, d, line_flow, p_in)
    p_dot = (omega @ net.incidence) * net.susceptance
    gb = net.gen_buses
    outflow_gen = incidence_apply(net, line_flow)[..., gb]
    omega_gen_dot = (p_in[..., gb] - net.damping[gb] * omega_gen
                     - d[..., gb] - outflow_gen) / net.inertia[gb]
    return omega, p_dot, omega_gen_dot


def rk4_step(rhs, state: np.ndarray, t: float, h: float) -> np.ndarray:
    """One classical Runge-Kutta step of the flat state vector.

    Deterministic; raises NonFiniteStateError as soon as NaN/Inf appears so a
    blown-up run aborts with the offending time.
    """
    k1 = rhs(t, state)
    k2 = rhs(t + 0.5 * h, state + (0.5 * h) * k1)
    k3 = rhs(t + 0.5 * h, state + (0.5 * h) * k2)
    k4 = rhs(t + h, state + h * k3)
    out = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteStateError(t + h)
    return out
