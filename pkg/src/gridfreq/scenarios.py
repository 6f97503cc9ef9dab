"""Scenario construction: case files, bundled networks, injection modifiers.

A case file is a single JSON document holding buses, lines, per-bus costs,
controller configuration and the scenario (horizon, injection modifiers,
uncertainty settings, named presets). Bus ids are 1-based in files and
reports, 0-based in memory. Unknown keys are rejected with a JSON-pointer
path so typos fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .controller import DppdConfig
from .costs import CostModel, make_cost_model, scale_for_strong_convexity
from .errors import SchemaError
from .network import InjectionProfile, PowerNetwork, build_network

CASES_DIR = Path(__file__).parent / "cases"

_RHO_KEYS = {"eta": "rho_eta", "d": "rho_d", "theta_hat": "rho_theta_hat",
             "P": "rho_p", "lambda": "rho_lam", "mu": "rho_mu",
             "nu_minus": "rho_nu_minus", "nu_plus": "rho_nu_plus"}


@dataclass(frozen=True)
class Scenario:
    """Everything needed to run one experiment on a loaded case."""

    name: str
    horizon: float
    sample_every: float
    h: float
    init: str                      # "steady" or "rest"
    base_injection: np.ndarray
    steps: tuple = ()              # (t, bus0, value or None=restore base)
    sinusoids: tuple = ()          # (bus0 tuple, amplitude, period, t0, t1)
    k1: float | None = None
    damping_side: str = "controller"
    k2: float = 0.0
    warmup: float = 0.0
    controller: DppdConfig = DppdConfig()
    nominal_hz: float = 60.0
    omega_unit: str = "pu"
    presets: dict | None = None

    def profile(self) -> InjectionProfile:
        return InjectionProfile(self.base_injection, self.steps, self.sinusoids)

    def preset_names(self) -> list[str]:
        return sorted(self.presets or {})

    def with_preset(self, name: str) -> "Scenario":
        """Scenario with the named preset's fields replacing the defaults."""
        if not self.presets or name not in self.presets:
            raise SchemaError(f"/scenario/presets/{name}", "unknown scenario preset")
        return _apply_scenario_fields(self, self.presets[name])


def _apply_scenario_fields(scn: Scenario, fields: dict) -> Scenario:
    kw = {}
    if "horizon" in fields:
        kw["horizon"] = float(fields["horizon"])
    if "sample_every" in fields:
        kw["sample_every"] = float(fields["sample_every"])
    if "h" in fields:
        kw["h"] = float(fields["h"])
    if "init" in fields:
        kw["init"] = fields["init"]
    if "warmup" in fields:
        kw["warmup"] = float(fields["warmup"])
    if "steps" in fields:
        kw["steps"] = _parse_steps(fields["steps"], scn.base_injection.shape[0])
    if "sinusoids" in fields:
        kw["sinusoids"] = _parse_sinusoids(fields["sinusoids"], scn.base_injection.shape[0])
    if "uncertainty" in fields:
        u = fields["uncertainty"]
        kw["k1"] = u.get("k1")
        kw["damping_side"] = u.get("damping_side", "controller")
        kw["k2"] = float(u.get("k2", 0.0))
    return replace(scn, **kw)


def step_change_profile(base: np.ndarray, events) -> InjectionProfile:
    """Piecewise-constant profile: each event (t, bus, value) sets one bus
    from t onward; value None restores the base value."""
    return InjectionProfile(base, steps=events)


def sinusoidal_profile(base: np.ndarray, buses, amplitude: float,
                       period: float, window) -> InjectionProfile:
    """Profile multiplying ``buses`` by 1 + A sin(2 pi t / T_p) inside
    ``window`` = (t0, t1) and leaving them at base outside."""
    t0, t1 = window
    return InjectionProfile(base, sinusoids=[(tuple(buses), amplitude, period, t0, t1)])


def apply_measurement_noise(omega: np.ndarray, t: float, k2: float,
                            controllable) -> np.ndarray:
    """Measured frequency: omega + k2 sin(2 pi t) on controllable buses only."""
    if k2 == 0.0:
        return omega
    out = np.array(omega, dtype=float, copy=True)
    idx = np.asarray(list(controllable), dtype=int)
    out[..., idx] = out[..., idx] + k2 * np.sin(2.0 * np.pi * t)
    return out


# --------------------------------------------------------------------------
# case-file schema
# --------------------------------------------------------------------------

def _expect(cond: bool, pointer: str, msg: str):
    if not cond:
        raise SchemaError(pointer, msg)


def _check_keys(obj: dict, allowed: set, pointer: str):
    for key in obj:
        if key not in allowed:
            raise SchemaError(f"{pointer}/{key}", "unknown key")


def _num(obj, key, pointer, required=True, default=None):
    if key not in obj:
        _expect(not required, f"{pointer}/{key}", "missing required number")
        return default
    v = obj[key]
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool),
            f"{pointer}/{key}", "expected a number")
    return float(v)


def _parse_steps(raw, n):
    steps = []
    for i, ev in enumerate(raw):
        ptr = f"/scenario/steps/{i}"
        _expect(isinstance(ev, dict), ptr, "expected an object")
        _check_keys(ev, {"t", "bus", "value"}, ptr)
        t = _num(ev, "t", ptr)
        bus = ev.get("bus")
        _expect(isinstance(bus, int) and 1 <= bus <= n, f"{ptr}/bus", "bad bus id")
        value = ev.get("value", None)
        if value is not None:
            _expect(isinstance(value, (int, float)) and not isinstance(value, bool),
                    f"{ptr}/value", "expected a number or null")
            value = float(value)
        steps.append((t, bus - 1, value))
    return tuple(steps)


def _parse_sinusoids(raw, n):
    sins = []
    for i, sv in enumerate(raw):
        ptr = f"/scenario/sinusoids/{i}"
        _expect(isinstance(sv, dict), ptr, "expected an object")
        _check_keys(sv, {"buses", "amplitude", "period", "window"}, ptr)
        buses = sv.get("buses")
        _expect(isinstance(buses, list) and buses, f"{ptr}/buses", "need a bus list")
        for b in buses:
            _expect(isinstance(b, int) and 1 <= b <= n, f"{ptr}/buses", "bad bus id")
        amp = _num(sv, "amplitude", ptr)
        period = _num(sv, "period", ptr)
        _expect(period > 0, f"{ptr}/period", "period must be > 0")
        window = sv.get("window")
        _expect(isinstance(window, list) and len(window) == 2, f"{ptr}/window",
                "window must be [t0, t1]")
        sins.append((tuple(b - 1 for b in buses), amp, period,
                     float(window[0]), float(window[1])))
    return tuple(sins)


def _parse_controller(raw: dict) -> DppdConfig:
    ptr = "/controller"
    _check_keys(raw, {"kappa", "mode", "thermal_limits", "rho", "baseline"}, ptr)
    kw = {}
    if "kappa" in raw:
        kw["kappa"] = _num(raw, "kappa", ptr)
    if "mode" in raw:
        _expect(raw["mode"] in ("closed_loop", "pure_opt"), f"{ptr}/mode",
                "mode must be closed_loop or pure_opt")
        kw["mode"] = raw["mode"]
    if "thermal_limits" in raw:
        _expect(isinstance(raw["thermal_limits"], bool), f"{ptr}/thermal_limits",
                "expected a boolean")
        kw["thermal_limits"] = raw["thermal_limits"]
    if "baseline" in raw:
        _expect(isinstance(raw["baseline"], bool), f"{ptr}/baseline",
                "expected a boolean")
        kw["baseline"] = raw["baseline"]
    rho = raw.get("rho", {})
    _expect(isinstance(rho, dict), f"{ptr}/rho", "expected an object")
    _check_keys(rho, set(_RHO_KEYS), f"{ptr}/rho")
    for key, field_name in _RHO_KEYS.items():
        if key not in rho:
            continue
        v = rho[key]
        if v == "physical":
            _expect(key in ("P", "lambda"), f"{ptr}/rho/{key}",
                    "only P and lambda accept \"physical\"")
            kw[field_name] = "physical"
        else:
            _expect(isinstance(v, (int, float)) and not isinstance(v, bool),
                    f"{ptr}/rho/{key}", "expected a number or \"physical\"")
            kw[field_name] = float(v)
    return DppdConfig(**kw)


def parse_case(doc: dict, name_hint: str = "case"):
    """Validate a case document and build (PowerNetwork, CostModel, Scenario).

    Schema errors carry a JSON-pointer to the offending element; semantic
    network errors are delegated to build_network.
    """
    _expect(isinstance(doc, dict), "", "case file must hold a JSON object")
    _check_keys(doc, {"name", "meta", "frequency", "buses", "lines", "costs",
                      "controller", "scenario", "slater"}, "")
    for key in ("buses", "lines", "costs"):
        _expect(key in doc, f"/{key}", "missing required section")
        _expect(isinstance(doc[key], list), f"/{key}", "expected a list")

    buses_raw = doc["buses"]
    n = len(buses_raw)
    _expect(n >= 1, "/buses", "need at least one bus")
    ids = set()
    buses, inertia, damping, p_in = [], np.zeros(n), np.zeros(n), np.zeros(n)
    for i, b in enumerate(buses_raw):
        ptr = f"/buses/{i}"
        _expect(isinstance(b, dict), ptr, "expected an object")
        _check_keys(b, {"id", "type", "M", "D", "Pin"}, ptr)
        bid = b.get("id")
        _expect(isinstance(bid, int) and 1 <= bid <= n, f"{ptr}/id",
                f"bus ids must be 1..{n}")
        _expect(bid not in ids, f"{ptr}/id", "duplicate bus id")
        ids.add(bid)
        kind = b.get("type")
        _expect(kind in ("gen", "load"), f"{ptr}/type", "type must be gen or load")
        if kind == "gen":
            inertia[bid - 1] = _num(b, "M", ptr)
        else:
            _expect("M" not in b, f"{ptr}/M", "load buses carry no inertia")
        damping[bid - 1] = _num(b, "D", ptr)
        p_in[bid - 1] = _num(b, "Pin", ptr)
        buses.append((bid - 1, kind))

    lines = []
    for i, ln in enumerate(doc["lines"]):
        ptr = f"/lines/{i}"
        _expect(isinstance(ln, dict), ptr, "expected an object")
        _check_keys(ln, {"from", "to", "B", "Pmin", "Pmax"}, ptr)
        f, t = ln.get("from"), ln.get("to")
        for label, v in (("from", f), ("to", t)):
            _expect(isinstance(v, int) and 1 <= v <= n, f"{ptr}/{label}", "bad bus id")
        lines.append((f - 1, t - 1, _num(ln, "B", ptr),
                      _num(ln, "Pmin", ptr), _num(ln, "Pmax", ptr)))

    entries = {}
    for i, cv in enumerate(doc["costs"]):
        ptr = f"/costs/{i}"
        _expect(isinstance(cv, dict), ptr, "expected an object")
        _check_keys(cv, {"bus", "a", "e", "b", "c", "dmin", "dmax"}, ptr)
        bus = cv.get("bus")
        _expect(isinstance(bus, int) and 1 <= bus <= n, f"{ptr}/bus", "bad bus id")
        _expect(bus - 1 not in entries, f"{ptr}/bus", "duplicate cost entry")
        entries[bus - 1] = {
            "a": _num(cv, "a", ptr), "e": _num(cv, "e", ptr, required=False, default=0.0),
            "b": _num(cv, "b", ptr), "c": _num(cv, "c", ptr),
            "dmin": _num(cv, "dmin", ptr), "dmax": _num(cv, "dmax", ptr)}

    freq = doc.get("frequency", {})
    _check_keys(freq, {"nominal_hz", "omega_unit"}, "/frequency")
    nominal_hz = _num(freq, "nominal_hz", "/frequency", required=False, default=60.0)
    omega_unit = freq.get("omega_unit", "pu")
    _expect(omega_unit in ("pu", "rad_s"), "/frequency/omega_unit",
            "omega_unit must be pu or rad_s")

    net = build_network(buses, lines, inertia, damping)
    cost = scale_for_strong_convexity(make_cost_model(n, entries))

    scn_raw = doc.get("scenario", {})
    _check_keys(scn_raw, {"horizon", "sample_every", "h", "init", "warmup",
                          "steps", "sinusoids", "uncertainty", "presets"},
                "/scenario")
    unc = scn_raw.get("uncertainty", {})
    _check_keys(unc, {"k1", "damping_side", "k2"}, "/scenario/uncertainty")
    if "damping_side" in unc:
        _expect(unc["damping_side"] in ("controller", "plant"),
                "/scenario/uncertainty/damping_side", "controller or plant")
    init = scn_raw.get("init", "steady")
    _expect(init in ("steady", "rest"), "/scenario/init", "init must be steady or rest")

    controller = _parse_controller(doc.get("controller", {}))
    scenario = Scenario(
        name=doc.get("name", name_hint),
        horizon=_num(scn_raw, "horizon", "/scenario", required=False, default=60.0),
        sample_every=_num(scn_raw, "sample_every", "/scenario", required=False,
                          default=0.05),
        h=_num(scn_raw, "h", "/scenario", required=False, default=1e-3),
        init=init,
        warmup=_num(scn_raw, "warmup", "/scenario", required=False, default=0.0),
        base_injection=p_in,
        steps=_parse_steps(scn_raw.get("steps", []), n),
        sinusoids=_parse_sinusoids(scn_raw.get("sinusoids", []), n),
        k1=unc.get("k1"),
        damping_side=unc.get("damping_side", "controller"),
        k2=float(unc.get("k2", 0.0)),
        controller=controller,
        nominal_hz=nominal_hz,
        omega_unit=omega_unit,
        presets=scn_raw.get("presets", {}),
    )

    if "slater" in doc:
        _verify_slater(doc["slater"], net, cost, p_in)
    return net, cost, scenario


def _verify_slater(raw: dict, net: PowerNetwork, cost: CostModel, p_in: np.ndarray):
    """Check the fixture's stored strictly feasible point by construction."""
    _check_keys(raw, {"d", "theta"}, "/slater")
    d = np.asarray(raw["d"], dtype=float)
    theta = np.asarray(raw["theta"], dtype=float)
    _expect(d.shape == (net.n,) and theta.shape == (net.n,), "/slater",
            "d and theta must have one entry per bus")
    m = cost.controllable
    strict_box = np.all(d[m] > cost.d_lo[m]) and np.all(d[m] < cost.d_hi[m])
    _expect(bool(strict_box) and np.all(d[~m] == 0.0), "/slater/d",
            "d must lie strictly inside the box (0 on uncontrollable buses)")
    balance = p_in - d - ((theta @ net.incidence) * net.susceptance) @ net.incidence.T
    _expect(float(np.max(np.abs(balance))) < 1e-8, "/slater/theta",
            "stored point does not balance the network")
    flows = (theta @ net.incidence) * net.susceptance
    _expect(bool(np.all(flows > net.p_min) and np.all(flows < net.p_max)),
            "/slater/theta", "stored point does not have strict line-limit slack")


def bundled_case_names() -> list[str]:
    return sorted(p.stem for p in CASES_DIR.glob("*.json"))


def load_case(path_or_name: str | Path):
    """Load a case file by bundled name or filesystem path.

    Returns (PowerNetwork, CostModel, Scenario); the cost model is already
    rescaled for strong convexity (the chosen k rides along in CostModel.k).
    """
    p = Path(path_or_name)
    if not p.suffix and not p.exists():
        candidate = CASES_DIR / f"{path_or_name}.json"
        if candidate.exists():
            p = candidate
    if not p.exists():
        raise SchemaError("", f"no such case file or bundled case: {path_or_name}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc}") from exc
    return parse_case(doc, name_hint=p.stem)
