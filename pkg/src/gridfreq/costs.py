"""Per-bus load-adjustment cost model and its proximal maps.

Each controllable bus i carries

    f_i(d) = k * (a_i d^2 + e_i d)          smooth part
           + indicator of [d_lo_i, d_hi_i]   box part
           + k * b_i |d + c_i|               shifted weighted-l1 part

with a single global scale k >= 1 chosen so the smooth part is strongly convex
with constant beta = 2 k min_i a_i > 1. Buses without a cost entry are
uncontrollable: d_i is pinned to 0 and they contribute nothing.

All vector operations accept arrays whose last axis indexes buses, so batched
states broadcast through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatchError, NonpositiveParameterError, ZeroCurvatureError


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.asarray(a, dtype=dtype).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class CostModel:
    """Immutable three-way split cost over all buses.

    Arrays are full length n; entries on uncontrollable buses are zero and the
    boolean mask ``controllable`` excludes them from every operation.
    """

    quad: np.ndarray       # a_i >= 0 [1/p.u.]
    lin: np.ndarray        # e_i (optional linear term, default 0)
    l1_weight: np.ndarray  # b_i >= 0
    l1_shift: np.ndarray   # c_i [p.u.]
    d_lo: np.ndarray       # box lower bounds [p.u.]
    d_hi: np.ndarray       # box upper bounds [p.u.]
    controllable: np.ndarray  # bool mask
    k: float = 1.0         # global objective scale; argmin-preserving

    @property
    def n(self) -> int:
        return self.quad.shape[0]

    @property
    def beta(self) -> float:
        """Strong-convexity constant of the scaled smooth part."""
        return 2.0 * self.k * float(np.min(self.quad[self.controllable]))

    def controllable_indices(self) -> np.ndarray:
        return np.flatnonzero(self.controllable)


def make_cost_model(n: int, entries: dict[int, dict], k: float = 1.0) -> CostModel:
    """Assemble a CostModel from per-bus entries {bus_index: fields}.

    ``entries`` maps 0-based bus index to a dict with keys a, b, c, dmin, dmax
    and optional e. Buses absent from ``entries`` are uncontrollable.
    """
    quad = np.zeros(n)
    lin = np.zeros(n)
    l1w = np.zeros(n)
    l1c = np.zeros(n)
    lo = np.zeros(n)
    hi = np.zeros(n)
    mask = np.zeros(n, dtype=bool)
    for i, f in entries.items():
        if not 0 <= i < n:
            raise DimensionMismatchError(f"cost entry for nonexistent bus {i + 1}")
        mask[i] = True
        quad[i] = f["a"]
        lin[i] = f.get("e", 0.0)
        l1w[i] = f["b"]
        l1c[i] = f["c"]
        lo[i] = f["dmin"]
        hi[i] = f["dmax"]
        if quad[i] < 0 or l1w[i] < 0:
            raise NonpositiveParameterError(f"bus {i + 1}: a and b must be >= 0")
        if lo[i] >= hi[i]:
            raise NonpositiveParameterError(f"bus {i + 1}: need dmin < dmax")
    if not mask.any():
        raise NonpositiveParameterError("at least one bus must be controllable")
    return CostModel(
        quad=_frozen(quad), lin=_frozen(lin), l1_weight=_frozen(l1w),
        l1_shift=_frozen(l1c), d_lo=_frozen(lo), d_hi=_frozen(hi),
        controllable=_frozen(mask, bool), k=float(k),
    )


def scale_for_strong_convexity(cost: CostModel) -> CostModel:
    """Return the cost rescaled so beta = 2 k min_i a_i > 1.

    k is the smallest power of two achieving the strict inequality (k = 1 when
    it already holds). Scaling the whole objective leaves the argmin set
    unchanged; the box indicator absorbs the factor.
    """
    a_min = float(np.min(cost.quad[cost.controllable]))
    if a_min <= 0.0:
        raise ZeroCurvatureError("some a_i = 0: strong convexity unattainable")
    k = 1.0
    while 2.0 * k * a_min <= 1.0:
        k *= 2.0
    return replace(cost, k=k)


def grad_f0(cost: CostModel, d: np.ndarray) -> np.ndarray:
    """Gradient of the scaled smooth part: k (2 a_i d_i + e_i); 0 off-mask."""
    d = np.asarray(d, dtype=float)
    if d.shape[-1] != cost.n:
        raise DimensionMismatchError(f"d has {d.shape[-1]} entries, cost has {cost.n}")
    g = cost.k * (2.0 * cost.quad * d + cost.lin)
    return np.where(cost.controllable, g, 0.0)


def prox_box(cost: CostModel, i: int, y: float) -> float:
    """Projection of scalar y onto bus i's box [d_lo, d_hi]."""
    return float(min(max(y, cost.d_lo[i]), cost.d_hi[i]))


def prox_l1_shifted(cost: CostModel, i: int, y: float) -> float:
    """prox of k b_i |. + c_i| at y: soft(y + c_i, k b_i) - c_i.

    soft(z, tau) = sign(z) max(|z| - tau, 0); the tie at |z| = tau returns 0.
    """
    z = y + cost.l1_shift[i]
    tau = cost.k * cost.l1_weight[i]
    return float(np.sign(z) * max(abs(z) - tau, 0.0) - cost.l1_shift[i])


def prox_box_all(cost: CostModel, y: np.ndarray) -> np.ndarray:
    """Vector box projection; uncontrollable entries pin to 0."""
    out = np.clip(y, cost.d_lo, cost.d_hi)
    return np.where(cost.controllable, out, 0.0)


def prox_l1_all(cost: CostModel, y: np.ndarray) -> np.ndarray:
    """Vector shifted soft-threshold; identity (0) on uncontrollable buses."""
    z = y + cost.l1_shift
    tau = cost.k * cost.l1_weight
    out = np.sign(z) * np.maximum(np.abs(z) - tau, 0.0) - cost.l1_shift
    return np.where(cost.controllable, out, 0.0)


def l1_subgradient(cost: CostModel, d: np.ndarray) -> np.ndarray:
    """One deterministic selection from the scaled l1 subdifferential.

    sign(0) := 0, so the kink returns the zero subgradient. Used by the
    subgradient baseline controller.
    """
    s = cost.k * cost.l1_weight * np.sign(d + cost.l1_shift)
    return np.where(cost.controllable, s, 0.0)


def eval_total_cost(cost: CostModel, d: np.ndarray) -> float:
    """Total scaled cost, or +inf when some d_i leaves its box.

    Infeasibility is a return value (the indicator's +inf), not an error.
    """
    d = np.asarray(d, dtype=float)
    if d.shape[-1] != cost.n:
        raise DimensionMismatchError(f"d has {d.shape[-1]} entries, cost has {cost.n}")
    m = cost.controllable
    if np.any(d[..., m] < cost.d_lo[m]) or np.any(d[..., m] > cost.d_hi[m]):
        return float("inf")
    terms = cost.quad * d * d + cost.lin * d + cost.l1_weight * np.abs(d + cost.l1_shift)
    return float(cost.k * np.sum(terms[..., m]))


def subdifferential_interval(cost: CostModel, i: int, d_i: float,
                             kink_tol: float = 1e-6) -> tuple[float, float]:
    """Closed-form interval [lo, hi] of the full subdifferential at d_i.

    Quadratic gradient, plus b sign(d+c) (the interval [-b, b] within kink_tol
    of the kink), plus the box normal cone within kink_tol of a bound. States
    reach kinks only asymptotically, hence the classification tolerance.
    """
    base = cost.k * (2.0 * cost.quad[i] * d_i + cost.lin[i])
    tau = cost.k * cost.l1_weight[i]
    z = d_i + cost.l1_shift[i]
    if abs(z) <= kink_tol:
        lo, hi = base - tau, base + tau
    else:
        lo = hi = base + tau * np.sign(z)
    if d_i >= cost.d_hi[i] - kink_tol:
        hi = np.inf
    if d_i <= cost.d_lo[i] + kink_tol:
        lo = -np.inf
    return float(lo), float(hi)
