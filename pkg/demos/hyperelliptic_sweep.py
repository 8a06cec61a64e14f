"""Sweep the rotation angle of f on every hyperelliptic surface type.

The frame is parallel up to a rotation in the plane of the last two vectors,
so D_f stays parallel for every angle and every G tensor vanishes.
"""
from twistorcheck.scenarios import builtin_scenarios, get_builtin, run_scenario, with_sampling

print(f"{'scenario':34s} {'prop3':>9s} {'max G':>9s}  verdict")
for name in builtin_scenarios():
    if not name.startswith("hyperelliptic-"):
        continue
    rep = run_scenario(with_sampling(get_builtin(name), points=4, sphere=20))
    checks = {c["name"]: c for c in rep["checks"]}
    v = rep["verdict"]
    print(f"{name:34s} {checks['prop3']['max_residual']:9.1e} {v['measured_max_g']:9.1e}  {v['classification']}")
