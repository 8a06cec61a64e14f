"""Pointwise type of the twisted structure on the flat 4-torus.

Both bundles are the self-dual forms and f rotates J and K by pi. The
assembled generalized complex structure is complex at the two poles of the
I-axis and symplectic-like (type 1) everywhere else on the sphere.
"""
import numpy as np

from twistorcheck.quaternion import AlgebraIso, QuatStructure, lambda_bases
from twistorcheck.scenarios import get_builtin, run_scenario
from twistorcheck.twistor import sphere_samples, type_table

lb = lambda_bases()
Q = QuatStructure(lb.plus(), lb.plus(), AlgebraIso(np.diag([1.0, -1.0, -1.0])))

counts = {}
for row in type_table(Q, sphere_samples(200)):
    counts.setdefault(row["type"], []).append(np.round(row["sphere"], 3))
for t, pts in sorted(counts.items()):
    print(f"type {t}: {len(pts)} sphere points, e.g. {pts[0]}")

report = run_scenario(get_builtin("example2-twisted-T4"))
print("verdict:", report["verdict"]["classification"], "integrable:", report["verdict"]["measured_integrable"])
