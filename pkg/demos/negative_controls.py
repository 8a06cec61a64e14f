"""Cases where integrability fails or the parallel hypothesis does not hold.

S^2 x T^2 has nonzero self-dual Weyl curvature, so G1 is large at some
sphere point. On the round S^4 a quarter-turn f does not give a parallel
D_f, so the verdict is NonApplicable and the report names the worst point.
"""
import json

from twistorcheck.scenarios import get_builtin, run_scenario

for name in ("s2xt2-negative", "s4-ftheta-pi2-nonparallel"):
    rep = run_scenario(get_builtin(name))
    print(name, "->", rep["verdict"]["classification"])
    for c in rep["checks"]:
        print(f"  {c['name']:20s} {c['max_residual']:10.3e}  pass={c['pass']}")
    worst = max(rep["checks"], key=lambda c: c["max_residual"])
    print("  largest witness:", json.dumps(worst["witness"]))
