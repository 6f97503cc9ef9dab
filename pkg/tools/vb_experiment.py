#!/usr/bin/env python3
"""Compare two compositions of the thermal-limit Lyapunov candidate V_b'.

The shipped variant doubles the equilibrium cross terms and keeps the nu
quadratics in V_3'; the alternative recomposes the same pieces as the exact
convexity gap of the potential. Both are measured here on the thermally
binding four-bus case and the meshed triangle (pure-opt analysis mode):
worst slack-adjusted increase between samples and minimum value.
"""

import dataclasses
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import gridfreq as gf
from gridfreq.controller import CoreOps
from gridfreq.network import incidence_apply, laplacian_apply


def psi_prime(net, cost, p_in, s):
    u1 = p_in - s["d"] - net.damping * s["omega"] - incidence_apply(net, s["P"])
    u2 = p_in - s["d"] - laplacian_apply(net, s["theta_hat"])
    pw = s["omega"] + u1
    pm_ = s["mu"] + u2
    m = cost.controllable
    f0 = float(cost.k * np.sum((cost.quad * s["d"] ** 2 + cost.lin * s["d"])[m]))
    flows = (s["theta_hat"] @ net.incidence) * net.susceptance
    prm = np.maximum(s["nu_minus"] + net.p_min - flows, 0.0)
    prp = np.maximum(s["nu_plus"] + flows - net.p_max, 0.0)
    psi = (f0 + 0.5 * pw @ pw + 0.5 * pm_ @ pm_
           + 0.5 * prm @ prm + 0.5 * prp @ prp)
    grad_d = cost.k * (2 * cost.quad * s["d"] + cost.lin) * m - pw - pm_
    return float(psi), grad_d


def vb_prime(net, cost, p_in, s, e, kappa, variant):
    psi, _ = psi_prime(net, cost, p_in, s)
    psi_s, grad_s = psi_prime(net, cost, p_in, e)
    dd = s["d"] - e["d"]
    de = s["eta"] - e["eta"]
    dth = s["theta_hat"] - e["theta_hat"]
    dw = s["omega"] - e["omega"]
    dmu = s["mu"] - e["mu"]
    dp = s["P"] - e["P"]
    dnm = s["nu_minus"] - e["nu_minus"]
    dnp = s["nu_plus"] - e["nu_plus"]
    w_s, mu_s = e["omega"], e["mu"]

    common = psi - psi_s - float(grad_s @ dd)
    if variant == "doubled":
        v1 = (common
              - 2 * float(w_s @ ((1 - net.damping) * dw))
              - 2 * float(mu_s @ dmu)
              + 2 * float(w_s @ incidence_apply(net, dp))
              + 2 * float(mu_s @ laplacian_apply(net, dth))
              - float(e["nu_minus"] @ dnm) - float(e["nu_plus"] @ dnp))
        v3 = 0.5 * float(dmu @ dmu) + 0.5 * float(dw @ dw) \
            + 0.5 * (float(dnm @ dnm) + float(dnp @ dnp))
    else:  # gap-consistent
        v1 = (common
              - float(w_s @ ((1 - net.damping) * dw))
              - float(mu_s @ dmu)
              + float(w_s @ incidence_apply(net, dp))
              + float(mu_s @ laplacian_apply(net, dth))
              + float(((e["nu_minus"] - e["nu_plus"]) * net.susceptance)
                      @ (dth @ net.incidence))
              - float(e["nu_minus"] @ dnm) - float(e["nu_plus"] @ dnp))
        v3 = (0.5 * float(dmu @ dmu) + 0.5 * float(dw @ dw)
              + 1.5 * float(dw @ (net.damping * dw))
              + 0.5 * (float(dnm @ dnm) + float(dnp @ dnp)))
    v2 = 0.5 * (dd @ dd - 2 * kappa * dd @ de + kappa * de @ de)
    v4 = 0.5 * (dth @ dth + dp @ dp)
    return v1 + v2 + v3 + v4


def states(traj, i):
    return {k: traj.data[k][i] for k in
            ("eta", "d", "theta_hat", "omega", "P", "mu", "nu_minus", "nu_plus")}


def main():
    for case, T in (("four_bus_line_limited", 400.0), ("triangle", 300.0)):
        net, cost, scn = gf.load_case(case)
        cfg = dataclasses.replace(scn.controller, mode="pure_opt")
        traj = gf.run_pure_opt(net, cost, cfg, scn.profile(), horizon=T,
                               h=scn.h, sample_every=0.05)
        p_in = traj.data["p_in"][-1]
        eq = states(traj, -1)
        for variant in ("doubled", "gap"):
            vb = np.array([vb_prime(net, cost, p_in, states(traj, i), eq,
                                    0.5, variant)
                           for i in range(traj.n_samples)])
            diffs = np.diff(vb)
            viol = np.max(diffs - 1e-7 * (1.0 + vb[:-1]))
            print(f"{case} {variant:8s}: min={vb.min():.3e} "
                  f"worst slack-violation={viol:.3e} vb0={vb[0]:.4f}")


if __name__ == "__main__":
    main()
