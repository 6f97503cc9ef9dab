#!/usr/bin/env python3
"""Freeze the oracle optima for the desk-scale cases into a test fixture.

Runs the analytic two-bus solver and the balanced-slice grid search on every
case they cover and writes tests/fixtures/reference_optima.json. The test
suite replays the oracles and compares against these records, so a silent
oracle regression cannot slip through.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

import gridfreq as gf
from gridfreq.oracle import reference_fixture


def main():
    records = []
    for case in ("two_bus_analytic", "two_bus_l1"):
        net, cost, scn = gf.load_case(case)
        opt = gf.two_bus_analytic_optimum(net, cost, scn.base_injection)
        records.append(reference_fixture(case, opt))
    for case, res in (("two_bus_analytic", 1e-3), ("two_bus_l1", 1e-3),
                      ("triangle", 5e-3), ("four_bus_line_limited", 1e-3)):
        net, cost, scn = gf.load_case(case)
        opt = gf.grid_search_optimum(net, cost, scn.base_injection,
                                     resolution=res)
        records.append(reference_fixture(case, opt))
    out = ROOT / "tests" / "fixtures" / "reference_optima.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(records, indent=1) + "\n")
    print(f"wrote {out} ({len(records)} records)")


if __name__ == "__main__":
    main()
