#!/usr/bin/env python3
"""Robustness sweeps: damping uncertainty (k1) and measurement noise (k2).

Two readings of "the damping coefficient is k1 times the accurate one" are
available. Plant-side scales the physical damping: lighter damping widens
the oscillation band, heavier damping tightens it. Controller-side keeps the
plant at truth while the controller's model is off; the loop tolerates
moderate mismatch and degrades as the (1 - k1 D) frequency feedback grows.

The noise sweep exposes a structural fact: with a matched damping model the
load update sees lambda + u1 = (1 - D) w' + (terms built from flow
telemetry), and D = 1 makes the noisy meter drop out exactly. The ripple of
the measurement-error study appears once the damping model is off.
"""

import numpy as np

import gridfreq as gf

net, cost, scn = gf.load_case("ieee39_approx")
s = scn.with_preset("step37_39")


def final_band(t0=55.0, **kw):
    traj = gf.run_closed_loop(net, cost, s.controller, s.profile(),
                              horizon=s.horizon, h=s.h,
                              sample_every=s.sample_every, init=s.init,
                              warmup=s.warmup, **kw)
    return float(np.abs(traj.data["omega"][traj.t >= t0]).max())


print("plant-side damping scale (physical D becomes k1 * D):")
for k1 in (0.15, 0.5, 1.0, 10.0):
    b = final_band(k1=None if k1 == 1.0 else k1, damping_side="plant")
    print(f"  k1 = {k1:5.2f}: max |w| after t=55 s = {b:.3e}")

print("\ncontroller-side damping model mismatch (plant keeps truth):")
for k1 in (0.15, 0.5, 1.0, 2.0):
    b = final_band(k1=None if k1 == 1.0 else k1, damping_side="controller")
    print(f"  k1 = {k1:5.2f}: max |w| after t=55 s = {b:.3e}")

print("\nmeasurement noise k2 sin(2 pi t) on controllable buses:")
print(f"  matched model,    k2 = 0.5: {final_band(k2=0.5):.3e} "
      f"(identical to noiseless: exact rejection)")
print(f"  k1 = 0.7 mismatch, k2 = 0.0: {final_band(k1=0.7, k2=0.0):.3e}")
print(f"  k1 = 0.7 mismatch, k2 = 0.5: {final_band(k1=0.7, k2=0.5):.3e} "
      f"(noise enters through the model error)")
