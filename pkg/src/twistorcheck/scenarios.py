"""Scenario descriptions, the builtin golden suite and report generation.

A scenario is a JSON object::

    {"name": ..., "description": ...,
     "manifold": {"id": ..., "params": {...}},
     "structure": {"dplus": ..., "dminus": ..., "f": ...},
     "checks": [...],
     "sampling": {"points": 25, "sphere": 50, "h": 1e-4, "seed": 0},
     "expect": {"verdict": ..., "checks": {...}, "types": {...}}}

Only ``manifold`` and ``structure`` are required; unknown keys are rejected.
"""
from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from . import __version__
from .catalog import Manifold, make_manifold, torus8_triples
from .connection import CONVENTIONS, Connection, blocks_dim4, christoffel, curvature
from .errors import ConfigError, NotAlgebraIso, TwistorCheckError
from .genlin import GenSection, eta, gen_torsion_tensor
from .quaternion import AlgebraIso, QuatStructure, assemble_Df, lambda_bases, prop3_check
from .twistor import (
    CURVATURE_ZERO,
    NONZERO,
    VANISH,
    classify,
    curvature_summary,
    g_sweep,
    matched_samples,
    prop567_checks,
    random_pair_max,
    sphere_samples,
    type_info,
    which_lambda,
)

CHECKS = (
    "gacs_invariants",
    "deck_equivariance",
    "torsion",
    "prop3",
    "curvature_blocks",
    "prop567",
    "g_tensors",
    "theorem1bis",
    "twistor_type",
)
DEFAULT_CHECKS = ("gacs_invariants", "deck_equivariance", "prop3", "curvature_blocks", "prop567", "g_tensors", "theorem1bis", "twistor_type")
DEFAULT_SAMPLING = {"points": 25, "sphere": 50, "h": 1e-4, "seed": 0}
EXPECT_MODES = ("vanish", "nonzero", "report")
TORSION_POINTS = 2
MATCH_FLOOR = 1e-6
BUNDLES = ("lambda+", "lambda-", "product++", "product+-", "product-+", "product--")

_TOP_KEYS = {"name", "description", "manifold", "structure", "checks", "sampling", "expect"}


@dataclass
class Scenario:
    name: str
    manifold: dict
    structure: dict
    checks: tuple = DEFAULT_CHECKS
    sampling: dict = field(default_factory=lambda: dict(DEFAULT_SAMPLING))
    expect: dict = field(default_factory=dict)
    description: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "manifold": copy.deepcopy(self.manifold),
            "structure": copy.deepcopy(self.structure),
            "checks": list(self.checks),
            "sampling": dict(self.sampling),
            "expect": copy.deepcopy(self.expect),
        }


def _reject_unknown(obj: dict, allowed: set, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(obj) - allowed
    if extra:
        raise ConfigError(f"unknown field(s) in {where}: {sorted(extra)}")


def parse_f(spec) -> AlgebraIso:
    """``"identity"``, ``{"theta": t}``, ``{"axis": [x, y, z], "angle": t}`` or ``{"matrix": [[...]]}``."""
    if spec is None or spec == "identity":
        return AlgebraIso.identity()
    if not isinstance(spec, dict):
        raise ConfigError(f"cannot parse f from {spec!r}")
    try:
        if set(spec) == {"theta"}:
            from .quaternion import f_theta

            return f_theta(float(spec["theta"]))
        if set(spec) == {"axis", "angle"}:
            return AlgebraIso.axis_angle(spec["axis"], float(spec["angle"]))
        if set(spec) == {"matrix"}:
            return AlgebraIso(np.array(spec["matrix"], dtype=float))
    except (TypeError, ValueError, NotAlgebraIso) as exc:
        raise ConfigError(f"bad f specification {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown f specification keys {sorted(spec)}")


def parse_scenario(obj: dict, name: Optional[str] = None) -> Scenario:
    _reject_unknown(obj, _TOP_KEYS, "scenario")
    for key in ("manifold", "structure"):
        if key not in obj:
            raise ConfigError(f"scenario is missing {key!r}")
    man = obj["manifold"]
    _reject_unknown(man, {"id", "params"}, "manifold")
    if "id" not in man:
        raise ConfigError("manifold is missing 'id'")
    st = obj["structure"]
    _reject_unknown(st, {"dplus", "dminus", "f"}, "structure")
    for key in ("dplus", "dminus"):
        if st.get(key) not in BUNDLES:
            raise ConfigError(f"structure.{key} must be one of {BUNDLES}, got {st.get(key)!r}")
    parse_f(st.get("f"))
    checks = tuple(obj.get("checks", DEFAULT_CHECKS))
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown check id(s) {bad}; known: {list(CHECKS)}")
    sampling = dict(DEFAULT_SAMPLING)
    samp = obj.get("sampling", {})
    _reject_unknown(samp, set(DEFAULT_SAMPLING), "sampling")
    sampling.update(samp)
    if int(sampling["points"]) < 1 or int(sampling["sphere"]) < 0 or not float(sampling["h"]) > 0:
        raise ConfigError(f"invalid sampling {sampling}")
    expect = obj.get("expect", {})
    _reject_unknown(expect, {"verdict", "checks", "types"}, "expect")
    _reject_unknown(expect.get("types", {}), {"poles_I", "generic", "all"}, "expect.types")
    for cid, mode in expect.get("checks", {}).items():
        if cid not in CHECKS or mode not in EXPECT_MODES:
            raise ConfigError(f"bad expectation {cid!r}: {mode!r}")
    return Scenario(
        name=obj.get("name", name or "unnamed"),
        manifold={"id": man["id"], "params": dict(man.get("params", {}))},
        structure={"dplus": st["dplus"], "dminus": st["dminus"], "f": st.get("f", "identity")},
        checks=checks,
        sampling=sampling,
        expect=expect,
        description=obj.get("description", ""),
    )


def _bundle(name: str, dim: int) -> tuple:
    if name.startswith("lambda"):
        if dim != 4:
            raise ConfigError(f"{name} needs a 4-dimensional manifold, got dim {dim}")
        lb = lambda_bases()
        return lb.plus() if name == "lambda+" else lb.minus()
    if dim != 8:
        raise ConfigError(f"{name} needs the 8-dimensional torus, got dim {dim}")
    return torus8_triples()[name[len("product"):]]


def build(scenario: Scenario) -> tuple:
    """Instantiate ``(manifold, QuatStructure)``; configuration errors raise :class:`ConfigError`."""
    man = make_manifold(scenario.manifold["id"], scenario.manifold["params"])
    st = scenario.structure
    Q = QuatStructure(_bundle(st["dplus"], man.dim), _bundle(st["dminus"], man.dim), parse_f(st["f"]), scenario.name)
    return man, Q


def sample_points(man: Manifold, count: int, seed: int, h: float) -> np.ndarray:
    """Scrambled Halton points inside the chart, ``5 h`` away from its faces (``h`` the curvature step)."""
    unit = qmc.Halton(d=man.dim, scramble=True, seed=seed).random(count)
    return man.frame.chart.rescale(unit, margin=5.0 * h)


def _check(name, residual, threshold, mode, witness, extra=None) -> dict:
    residual = float(residual)
    if mode == "vanish":
        ok = residual <= threshold
    elif mode == "nonzero":
        ok = residual >= threshold
    else:
        ok = True
    out = {"name": name, "max_residual": residual, "witness": witness, "threshold": float(threshold), "mode": mode, "pass": bool(ok)}
    if extra:
        out.update(extra)
    return out


def _pt(p) -> list:
    return [float(x) for x in p]


class _Run:
    """Per-point quantities shared by several checks, computed on demand."""

    def __init__(self, scenario: Scenario, man: Manifold, Q: QuatStructure):
        self.sc, self.man, self.Q = scenario, man, Q
        s = scenario.sampling
        self.h = float(s["h"])
        self.hc = 10.0 * self.h
        self.seed = int(s["seed"])
        self.points = sample_points(man, int(s["points"]), self.seed, self.hc)
        self.spheres = sphere_samples(int(s["sphere"]))
        self._gamma = {}
        self._curv = {}
        self._sweep = {}
        self.dplus = which_lambda(Q.dplus) if man.dim == 4 else None
        self.dminus = which_lambda(Q.dminus) if man.dim == 4 else None

    def gamma(self, k):
        if k not in self._gamma:
            self._gamma[k] = christoffel(self.man.frame, self.points[k], self.h)
        return self._gamma[k]

    def curvature(self, k):
        if k not in self._curv:
            self._curv[k] = curvature(self.man.frame, self.points[k], self.hc)
        return self._curv[k]

    def sweep(self, k):
        if k not in self._sweep:
            self._sweep[k] = g_sweep(self.curvature(k), self.Q, self.spheres, self.points[k])
        return self._sweep[k]

    def blocks(self):
        if self.man.dim != 4:
            return None
        return [blocks_dim4(self.curvature(k)) for k in range(len(self.points))]

    def mode(self, name, default="vanish"):
        return self.sc.expect.get("checks", {}).get(name, default)

    # -- checks -------------------------------------------------------
    def gacs_invariants(self):
        d = self.man.dim
        E = eta(d)
        worst, wit = 0.0, None
        for abc in self.spheres:
            J = assemble_Df(self.Q, abc).matrix
            r = max(float(np.max(np.abs(J @ J + np.eye(2 * d)))), float(np.max(np.abs(J.T @ E @ J - E))))
            if wit is None or r > worst:
                worst, wit = r, {"sphere": _pt(abc)}
        return _check("gacs_invariants", worst, 1e-10, self.mode("gacs_invariants"), wit)

    def deck_equivariance(self):
        if not self.man.deck:
            return _check("deck_equivariance", 0.0, 1e-10, "report", {"note": "no deck generators"})
        fn = self.man.frame.fn
        worst, wit = 0.0, None
        for g in self.man.deck:
            for p in self.points[:20]:
                r = float(np.max(np.abs(fn(g(p)) - g.linear @ fn(p))))
                if wit is None or r > worst:
                    worst, wit = r, {"generator": g.name, "point": _pt(p)}
        return _check("deck_equivariance", worst, 1e-10, self.mode("deck_equivariance"), wit)

    def torsion(self):
        frame = self.man.frame
        conn = Connection(frame, lambda q: christoffel(frame, q, self.h), "levi-civita")
        basis = GenSection.basis(frame)
        worst, wit = 0.0, None
        for k in range(min(TORSION_POINTS, len(self.points))):
            p = self.points[k]
            T = np.abs(gen_torsion_tensor(conn, basis, p, self.h))
            if wit is None or T.max() > worst:
                worst = float(T.max())
                wit = {"point": _pt(p), "sections": [int(i) for i in np.unravel_index(int(np.argmax(T)), T.shape)]}
        return _check("torsion", worst, 1e-6, self.mode("torsion"), wit)

    def prop3(self):
        worst, wit = 0.0, None
        for k, p in enumerate(self.points):
            res = prop3_check(self.Q, self.man.frame, self.gamma(k), p, self.h)
            if wit is None or res.value > worst:
                worst = res.value
                wit = {"point": _pt(p), **res.witness, "commutation": res.commutation, "stability_plus": res.stability_plus, "stability_minus": res.stability_minus}
        self.prop3_value = worst
        return _check("prop3", worst, VANISH if self.mode("prop3") != "nonzero" else NONZERO, self.mode("prop3"), wit)

    def curvature_blocks(self):
        worst, wit = 0.0, None
        for k, p in enumerate(self.points):
            R = self.curvature(k)
            L = R.lambda2_matrix()
            r = float(np.max(np.abs(L - L.T)))
            if wit is None or r > worst:
                worst, wit = r, {"point": _pt(p)}
        extra = {}
        blocks = self.blocks()
        if blocks is not None:
            extra["summary"] = curvature_summary(blocks)
            ss = [b.s for b in blocks]
            extra["summary"]["s_min"] = float(min(ss))
            extra["summary"]["s_max"] = float(max(ss))
        return _check("curvature_blocks", worst, 1e-5, self.mode("curvature_blocks"), wit, extra)

    def prop567(self):
        blocks = self.blocks()
        F = self.Q.f.F
        n = self.man.n
        worst, wit = 0.0, None
        applicable = getattr(self, "prop3_value", 0.0) <= VANISH
        if blocks is None:
            info = prop567_checks(None, F, n)
            flat = all(float(np.max(np.abs(self.curvature(k).Rm))) <= CURVATURE_ZERO for k in range(len(self.points)))
            info["s_zero"] = flat
            r = 0.0 if (info["f_is_identity"] or flat or not applicable) else 1.0
            return _check("prop567", r, 0.5, self.mode("prop567"), info)
        for k, b in enumerate(blocks):
            info = prop567_checks(b, F, n, self.dplus, self.dminus)
            if "prop7_relative" in info and applicable:
                r = info["prop7_relative"]
            elif self.dplus == self.dminus and applicable and not info["f_id_or_s_zero"]:
                r = 1.0
            else:
                r = 0.0
            if wit is None or r > worst:
                worst, wit = r, {"point": _pt(self.points[k]), **info}
        return _check("prop567", worst, 2e-3, self.mode("prop567"), wit)

    def g_tensors(self):
        rng = np.random.default_rng(self.seed)
        worst, wit, rand = 0.0, None, 0.0
        each = [0.0, 0.0, 0.0]
        for k, p in enumerate(self.points):
            sw = self.sweep(k)
            each = [max(a, b) for a, b in zip(each, sw.max_each())]
            if wit is None or sw.max() > worst:
                worst, wit = sw.max(), {"point": _pt(p), **sw.witness()}
            rand = max(rand, random_pair_max(self.curvature(k), self.Q, self.spheres, rng, 10, p))
        self.max_g = max(worst, rand)
        default = "vanish"
        return _check("g_tensors", self.max_g, VANISH if self.mode("g_tensors", default) != "nonzero" else NONZERO, self.mode("g_tensors", default), wit, {"max_each": each, "random_pairs_max": rand})

    def theorem1bis(self):
        worst_log, mismatches, wit = 0.0, 0, None
        tmax = 0.0
        for k, p in enumerate(self.points):
            ms = matched_samples(self.curvature(k), self.Q, self.spheres, p, self.sweep(k))
            t, g = ms["t1b"], ms["g"]
            tmax = max(tmax, float(t.max()))
            zt, zg = t <= MATCH_FLOOR, g <= MATCH_FLOOR
            bad = zt != zg
            mismatches += int(bad.sum())
            both = ~zt & ~zg
            if both.any():
                lr = np.abs(np.log10(t[both] / g[both]))
                if lr.max() > worst_log or wit is None:
                    idx = np.argwhere(both)[int(np.argmax(lr))]
                    worst_log = float(lr.max())
                    wit = {"point": _pt(p), "kind": ["C+C+", "C+C-", "C-C-"][idx[0]], "sphere": _pt(self.spheres[idx[1]]), "pair": [int(idx[2]), int(idx[3])]}
        res = _check("theorem1bis", worst_log, 1.0, self.mode("theorem1bis"), wit, {"mismatches": mismatches, "max_t1b": tmax})
        if res["mode"] == "vanish":
            res["pass"] = bool(res["pass"] and mismatches == 0)
        return res

    def twistor_type(self):
        rows = []
        for abc in self.spheres:
            info = type_info(assemble_Df(self.Q, abc).matrix)
            rows.append((abc, info.type + 1, info.margin))
        expected = self.sc.expect.get("types")
        mism = 0
        if expected:
            for abc, t, _ in rows:
                pole_I = bool(np.allclose(np.abs(abc), [1.0, 0.0, 0.0]))
                want = expected.get("all", expected.get("poles_I") if pole_I else expected.get("generic"))
                if want is not None and t != want:
                    mism += 1
        types = sorted({t for _, t, _ in rows})
        wit = {
            "types": types,
            "constant": len(types) == 1,
            "pole_types": {str(_pt(abc)): t for abc, t, _ in rows[-6:]},
            "min_margin": float(min(m for _, _, m in rows)),
        }
        return _check("twistor_type", mism, 0, "vanish" if expected else "report", wit)


def run_scenario(scenario: Scenario) -> dict:
    """Run the checks in declared order and build the report.

    Errors inside a check are recorded in that check and the run continues.
    """
    t0 = time.perf_counter()
    man, Q = build(scenario)
    run = _Run(scenario, man, Q)
    order = list(scenario.checks)
    # the verdict needs prop3 and the G maxima even when not requested
    results = []
    for cid in order:
        try:
            results.append(getattr(run, cid)())
        except TwistorCheckError as exc:
            results.append({"name": cid, "max_residual": None, "witness": None, "threshold": None, "mode": "error", "pass": False, "error": f"{type(exc).__name__}: {exc}"})
    if not hasattr(run, "prop3_value"):
        run.prop3()
    if not hasattr(run, "max_g"):
        run.g_tensors()
    blocks = run.blocks()
    verdict = classify(run.prop3_value, run.max_g, man.n, Q.f.F, run.dplus, run.dminus, curvature_summary(blocks) if blocks else None)
    vd = verdict.as_dict()
    want = scenario.expect.get("verdict")
    vd["expected"] = want
    verdict_ok = (want is None or verdict.classification == want) and verdict.agree is not False
    report = {
        "scenario": scenario.to_dict(),
        "conventions": dict(CONVENTIONS, curvature_step=run.hc, derivative_step=run.h, sphere_samples=int(len(run.spheres))),
        "checks": results,
        "verdict": vd,
        "pass": bool(all(c["pass"] for c in results) and verdict_ok),
        "seed": run.seed,
        "h": run.h,
        "version": __version__,
        "runtime": time.perf_counter() - t0,
    }
    return report


def exit_code(report: dict) -> int:
    if report["verdict"]["classification"] == "Inconclusive":
        return 3
    return 0 if report["pass"] else 1


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False)


# -- builtin golden scenarios --------------------------------------------

_ALL4 = ("gacs_invariants", "prop3", "curvature_blocks", "prop567", "g_tensors", "theorem1bis", "twistor_type")


def _sc(name, description, manifold, params, dplus, dminus, f="identity", checks=_ALL4, expect=None):
    return {
        "name": name,
        "description": description,
        "manifold": {"id": manifold, "params": params},
        "structure": {"dplus": dplus, "dminus": dminus, "f": f},
        "checks": list(checks),
        "expect": expect or {},
    }


def _builtin_list() -> list:
    out = [
        _sc(
            "example2-twisted-T4",
            "Flat 4-torus, D+ = D- = Lambda+, f reverses J and K: twisted hyperkaehler structure.",
            "flat_torus", {"dim": 4}, "lambda+", "lambda+", {"matrix": [[1, 0, 0], [0, -1, 0], [0, 0, -1]]},
            _ALL4 + ("torsion",),
            {"verdict": "Thm3a", "types": {"poles_I": 3, "generic": 1}},
        ),
        _sc(
            "example3-isometry-T4",
            "Flat 4-torus, D+ = D- = Lambda+, f an arbitrary rotation.",
            "flat_torus", {"dim": 4}, "lambda+", "lambda+", {"axis": [1.0, 2.0, 3.0], "angle": 0.9},
            expect={"verdict": "Thm3a"},
        ),
        _sc(
            "example4-ftheta-T4",
            "Flat 4-torus, D+ = D- = Lambda+, f the rotation by 0.7 about I.",
            "flat_torus", {"dim": 4}, "lambda+", "lambda+", {"theta": 0.7},
            expect={"verdict": "Thm3a", "types": {"poles_I": 3, "generic": 1}},
        ),
        _sc(
            "example4-ftheta0-T4",
            "Flat 4-torus, D+ = D- = Lambda+, f = Id: complex type everywhere.",
            "flat_torus", {"dim": 4}, "lambda+", "lambda+", {"theta": 0.0},
            expect={"verdict": "Thm3a", "types": {"all": 3}},
        ),
    ]
    for t in range(1, 8):
        for label, theta in (("0", 0.0), ("0.7", 0.7), ("pi2", np.pi / 2), ("pi", np.pi)):
            checks = ("deck_equivariance",) + _ALL4 + (("torsion",) if (t == 1 and label == "0") else ())
            out.append(
                _sc(
                    f"hyperelliptic-{t}-ftheta-{label}",
                    f"Hyperelliptic surface of type {t}, rotating frame, D+- = Lambda+-, f the rotation by {theta:.4f} about I.",
                    "hyperelliptic", {"type": t}, "lambda+", "lambda-", {"theta": theta}, checks,
                    {"verdict": "Thm4"},
                )
            )
    out += [
        _sc(
            "s1xs3-example6",
            "S1 x unit S3 with a left-invariant frame, D+- = Lambda+-, f(I-,J-,K-) = (I+,J+,K+).",
            "s1_x_space_form", {"sign": 1}, "lambda+", "lambda-", "identity", _ALL4 + ("torsion",),
            {"verdict": "Thm4", "types": {"all": 2}},
        ),
        _sc(
            "s1xh3-example6",
            "S1 x hyperbolic 3-space (upper half-space chart), D+- = Lambda+-, f = Id in the Lambda bases.",
            "s1_x_space_form", {"sign": -1}, "lambda+", "lambda-", "identity",
            expect={"verdict": "Thm4", "types": {"all": 2}},
        ),
        _sc(
            "s2xt2-negative",
            "Unit S2 x flat T2, D+ = D- = Lambda+, f = Id: Kaehler but not anti-self-dual.",
            "s2_x_t2", {}, "lambda+", "lambda+", "identity",
            expect={"verdict": "NonIntegrable", "checks": {"g_tensors": "nonzero"}},
        ),
        _sc(
            "s4-classical",
            "Round S4, D+ = D- = Lambda+, f = Id: the classical twistor space of an anti-self-dual metric.",
            "conformally_flat", {"factor": "round_s4"}, "lambda+", "lambda+", "identity",
            expect={"verdict": "Thm3b", "types": {"all": 3}},
        ),
        _sc(
            "s4-ftheta-pi2-nonparallel",
            "Round S4, D+ = D- = Lambda+, f the rotation by pi/2 about I: D_f is not parallel.",
            "conformally_flat", {"factor": "round_s4"}, "lambda+", "lambda+", {"theta": float(np.pi / 2)},
            expect={"verdict": "NonApplicable", "checks": {"prop3": "nonzero", "g_tensors": "report", "theorem1bis": "report", "prop567": "report"}},
        ),
        _sc(
            "t8-products-pp-pm",
            "Flat T8 with product hyperkaehler triples, f an arbitrary rotation.",
            "flat_torus", {"dim": 8}, "product++", "product+-", {"axis": [0.3, -1.0, 0.5], "angle": 2.1},
            expect={"verdict": "Thm2"},
        ),
        _sc(
            "t8-products-mm-mp",
            "Flat T8 with product hyperkaehler triples, f the rotation by 0.7 about I.",
            "flat_torus", {"dim": 8}, "product--", "product-+", {"theta": 0.7},
            expect={"verdict": "Thm2"},
        ),
    ]
    return out


BUILTIN = {d["name"]: d for d in _builtin_list()}


def builtin_scenarios() -> list:
    return list(BUILTIN)


def get_builtin(name: str) -> Scenario:
    if name not in BUILTIN:
        raise ConfigError(f"unknown builtin scenario {name!r}")
    return parse_scenario(copy.deepcopy(BUILTIN[name]))


def load_scenario(ref: str) -> Scenario:
    """A builtin name or a path to a JSON scenario file."""
    if ref in BUILTIN:
        return get_builtin(ref)
    try:
        with open(ref) as fh:
            obj = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"{ref!r} is neither a builtin scenario nor a readable file") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{ref}: invalid JSON ({exc})") from exc
    return parse_scenario(obj, name=ref)


def with_sampling(scenario: Scenario, **overrides) -> Scenario:
    s = copy.deepcopy(scenario)
    for k, v in overrides.items():
        if v is not None:
            s.sampling[k] = v
    return parse_scenario(s.to_dict())
