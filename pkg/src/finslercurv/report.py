"""Run configuration, per-point evaluation and serializable reports."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .bundle import BundlePoint
from .conformal import (ConformalFactor, bach, classify, cotton_york, deform, lce_residual,
                        schouten, weyl, weyl_divergence_check)
from .connection import chern_coefficients, consistency_residual
from .curvature import bianchi_residual, curvature_bundle, schur_statistic
from .errors import FinslerError, SpecError
from .jets import DEFAULT_CONFIG, DiffConfig
from .metrics import MetricSpec, cartan_tensor, eval_F, fundamental_tensor, mean_cartan_norm
from .sampling import MIN_FIBER_NORM, sample_points
from .warped import (block_structure_residual, warped_connection_blocks, verify_cylinder_case, warped_parts)

DEFAULT_TOLERANCES = {
    "bianchi": 1e-4,
    "schur": 1e-5,
    "einstein": 1e-6,
    "consistency": 1e-6,
    "lce": 1e-6,
    "two_path": 1e-4,
    "cartan": 1e-8,
    "weyl": 1e-6,
    "cotton": 1e-5,
    "bach": 1e-3,
    "weyl_div": 1e-3,
    "cylinder": 1e-4,
    "block": 1e-9,
    "warp_blocks": 1e-6,
}

SCHEMA_VERSION = "1.0"


def schema() -> dict:
    """The JSON schema every report validates against."""
    from importlib import resources
    return json.loads(resources.files("finslercurv").joinpath("schema/report.schema.json").read_text())


@dataclass
class RunConfig:
    metric: MetricSpec
    conformal: ConformalFactor | None = None
    count: int = 5
    seed: int = 0
    box: list | None = None
    min_fiber_norm: float = MIN_FIBER_NORM
    explicit_points: list | None = None
    diff: DiffConfig = DEFAULT_CONFIG
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    jobs: int = 1
    case: str | None = None
    case_params: tuple = ()
    sweep: bool = False

    def points(self) -> list[BundlePoint]:
        if self.explicit_points is not None:
            pts = [p if isinstance(p, BundlePoint) else BundlePoint(p["x"], p["y"])
                   for p in self.explicit_points]
            for p in pts:
                self.metric.check_point(p)
            return pts
        return sample_points(self.metric, self.count, self.seed, self.box, self.min_fiber_norm)

    def tol(self, key: str) -> float:
        return float(self.tolerances[key])


def _clean(obj):
    """Convert numpy containers to JSON-native values, rejecting non-finite numbers."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not math.isfinite(v):
            raise FinslerError(f"non-finite value {v} in report")
        return v + 0.0  # normalizes -0.0
    return obj


@dataclass
class GeometryReport:
    command: str
    config: RunConfig
    points: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def add_check(self, name: str, value: float, tolerance: float, passed: bool | None = None,
                  note: str = "") -> None:
        if passed is None:
            passed = value <= tolerance
        entry = {"name": name, "value": float(value), "tolerance": float(tolerance), "passed": bool(passed)}
        if note:
            entry["note"] = note
        self.checks.append(entry)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self, timestamp: bool = True) -> dict:
        cfg = self.config
        d = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "engine": {
                "name": "finslercurv",
                "version": __version__,
                "jet_order": cfg.diff.jet_order,
                "fd_step": cfg.diff.fd_step,
                "fd_scheme": cfg.diff.fd_scheme,
                "tolerances": dict(sorted(cfg.tolerances.items())),
            },
            "metric": cfg.metric.to_dict(),
            "conformal": cfg.conformal.to_dict() if cfg.conformal else None,
            "sampling": {
                "explicit": cfg.explicit_points is not None,
                "count": len(self.points),
                "seed": cfg.seed,
                "box": [list(b) for b in (cfg.box or cfg.metric.default_box())],
                "min_fiber_norm": cfg.min_fiber_norm,
            },
            "points": self.points,
            "checks": self.checks,
            "verdicts": self.verdicts,
            "extras": self.extras,
            "all_passed": self.passed,
        }
        if timestamp:
            d["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return _clean(d)

    def to_json(self, timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(timestamp), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        """One row per point; tensors flattened as ``name[i,j,...]``."""
        rows = []
        for rec in self.to_dict(timestamp=False)["points"]:
            row = {"index": rec["index"]}
            for a, v in enumerate(rec["x"]):
                row[f"x{a + 1}"] = v
            for a, v in enumerate(rec["y"]):
                row[f"y{a + 1}"] = v
            for group in ("residuals", "tensors"):
                for name, val in rec[group].items():
                    arr = np.asarray(val, dtype=float)
                    if arr.ndim == 0:
                        row[name] = float(arr)
                    else:
                        for idx in np.ndindex(arr.shape):
                            row[f"{name}[{','.join(map(str, idx))}]"] = float(arr[idx])
            rows.append(row)
        cols: list = []
        for r in rows:
            cols.extend(c for c in r if c not in cols)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: (repr(r[c]) if isinstance(r.get(c), float) else r.get(c, "")) for c in cols})
        return buf.getvalue()


# ---------------------------------------------------------------------------
# per-point work (top level so it can run in worker processes)

def _tensors_record(args) -> dict:
    spec, p, cfg = args
    n = spec.dim
    ft = fundamental_tensor(spec, p)
    con = chern_coefficients(spec, p, cfg)
    cb = curvature_bundle(spec, p, cfg)
    t = {
        "F": eval_F(spec, p),
        "g": ft.g,
        "g_inv": ft.g_inv,
        "cartan": cartan_tensor(spec, p).components,
        "mean_cartan_norm": mean_cartan_norm(spec, p),
        "spray": con.G,
        "nonlinear_connection": con.N,
        "chern_gamma": con.Gamma,
        "R": cb.R.components,
        "ric_h": cb.Ric,
        "scal_h": cb.Scal,
        "trace_free_ricci": cb.E,
        "akbar_zadeh_ric": cb.ricci_scalar_AZ,
    }
    if n >= 2:
        t["einstein_k"] = cb.ricci_scalar_AZ / (n - 1)
    if n >= 3:
        t["schouten"] = schouten(spec, p, cfg)
        t["weyl"] = weyl(spec, p, cfg).components
        t["cotton"] = cotton_york(spec, p, cfg).components
    if n >= 4:
        t["bach"] = bach(spec, p, cfg)
    r = {
        "connection_consistency": consistency_residual(con.N, con.Gamma, p.y),
        "einstein": float(np.max(np.abs(cb.E))),
        "ric_asymmetry": cb.ric_asymmetry,
        "bianchi": bianchi_residual(spec, p, cfg),
    }
    if n >= 3:
        r["weyl_divergence"] = weyl_divergence_check(spec, p, cfg)
    return {"tensors": t, "residuals": r}


def _einstein_record(args) -> dict:
    spec, p, cfg = args
    cb = curvature_bundle(spec, p, cfg)
    r = {"einstein": float(np.max(np.abs(cb.E))), "scal_h": cb.Scal,
         "akbar_zadeh_ric": cb.ricci_scalar_AZ}
    if spec.dim >= 2:
        r["schur"] = schur_statistic(spec, p, cfg)
    return {"tensors": {"ric_h": cb.Ric, "trace_free_ricci": cb.E}, "residuals": r}


def _conformal_record(args) -> dict:
    spec, u, p, cfg = args
    lce = lce_residual(spec, u, p, cfg)
    direct = curvature_bundle(deform(spec, u), p, cfg).E
    return {"tensors": {"lce_residual": lce, "deformed_trace_free_ricci": direct},
            "residuals": {"lce": float(np.max(np.abs(lce))), "direct": float(np.max(np.abs(direct)))}}


def _warp_record(args) -> dict:
    spec, p, cfg = args
    r = {"block_structure": block_structure_residual(spec, p)}
    r.update({f"warp_{k}": v for k, v in warped_connection_blocks(spec, p, cfg).items()})
    r["einstein"] = float(np.max(np.abs(curvature_bundle(spec, p, cfg).E)))
    return {"tensors": {"g": fundamental_tensor(spec, p).g}, "residuals": r}


def _fan_out(fn, jobs, config: RunConfig, pts, extra=()):
    args = [(config.metric, *extra, p, config.diff) for p in pts]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(fn, args))
    else:
        results = [fn(a) for a in args]
    out = []
    for i, (p, rec) in enumerate(zip(pts, results)):
        out.append({"index": i, "x": list(p.x), "y": list(p.y), **rec})
    return out


def _max(report: GeometryReport, key: str) -> float:
    return max(rec["residuals"][key] for rec in report.points)


# ---------------------------------------------------------------------------
# commands

def cmd_tensors(config: RunConfig) -> GeometryReport:
    """Every curvature quantity at each point plus the identity residuals."""
    rep = GeometryReport("tensors", config)
    pts = config.points()
    rep.points = _fan_out(_tensors_record, config.jobs, config, pts)
    rep.add_check("connection_consistency", _max(rep, "connection_consistency"), config.tol("consistency"))
    rep.add_check("bianchi", _max(rep, "bianchi"), config.tol("bianchi"))
    if config.metric.dim >= 3:
        rep.add_check("weyl_divergence", _max(rep, "weyl_divergence"), config.tol("weyl_div"))
    return rep


def cmd_check_einstein(config: RunConfig) -> GeometryReport:
    """R-Einstein test with the Schur statistic; fails (exit 1) if not R-Einstein."""
    rep = GeometryReport("check-einstein", config)
    pts = config.points()
    rep.points = _fan_out(_einstein_record, config.jobs, config, pts)
    e_max = _max(rep, "einstein")
    tol = config.tol("einstein")
    einstein = e_max <= tol
    scals = [rec["residuals"]["scal_h"] for rec in rep.points]
    ric_max = max(float(np.max(np.abs(rec["tensors"]["ric_h"]))) for rec in rep.points)
    spread = max(scals) - min(scals)
    rep.verdicts = {
        "r_einstein": einstein,
        "ricci_flat": ric_max <= tol,
        "ricci_constant": einstein and spread <= config.tol("schur") * max(1.0, abs(scals[0])),
        "scal_h_mean": float(np.mean(scals)),
        "scal_h_spread": spread,
    }
    rep.add_check("r_einstein", e_max, tol)
    if einstein and config.metric.dim >= 3:
        rep.add_check("schur", _max(rep, "schur"), config.tol("schur"))
    return rep


SWEEP_FAMILIES = (
    {"kind": "constant", "coeffs": [0.0]},
    {"kind": "constant", "coeffs": [0.5]},
    {"kind": "affine", "coeffs": [0.0, 1.0]},
    {"kind": "poly", "terms": None},
)


def sweep_factors(dim: int) -> list[ConformalFactor]:
    out = []
    for d in SWEEP_FAMILIES:
        if d["kind"] == "poly":
            out.append(ConformalFactor("poly", dim, terms=[[0.3, [2] + [0] * (dim - 1)]]))
        else:
            out.append(ConformalFactor.from_dict(d, dim))
    return out


def cmd_conformal(config: RunConfig) -> GeometryReport:
    """Conformal residual, two-path agreement and the dimension-specific classification."""
    if config.conformal is None and not config.sweep:
        raise SpecError("the conformal command needs --conformal FILE (or --sweep)")
    rep = GeometryReport("conformal", config)
    pts = config.points()
    spec = config.metric
    factors = [config.conformal] if config.conformal is not None else sweep_factors(spec.dim)
    thr = config.tol("two_path")
    sweep = []
    for i, u in enumerate(factors):
        recs = _fan_out(_conformal_record, config.jobs, config, pts, extra=(u,))
        agree = [(r["residuals"]["lce"] <= thr) == (r["residuals"]["direct"] <= thr) for r in recs]
        lce_max = max(r["residuals"]["lce"] for r in recs)
        sweep.append({"factor": u.to_dict(), "lce_max": lce_max,
                      "direct_max": max(r["residuals"]["direct"] for r in recs), "agree": agree})
        if i == 0:
            rep.points = recs
        rep.add_check(f"two_path[{i}]", float(sum(not a for a in agree)), 0.0)
        if config.conformal is not None:
            rep.add_check("lce_vanishes", lce_max, config.tol("lce"))
    rep.extras["factors"] = sweep
    tol_keys = {"cartan", "einstein", "weyl", "cotton", "bach", "lce"}
    cls = classify(spec, pts, factors, config.diff,
                   {k: v for k, v in config.tolerances.items() if k in tol_keys})
    rep.verdicts = cls.to_dict()
    return rep


def cmd_warp(config: RunConfig) -> GeometryReport:
    """Block structure and connection identities of a warped metric; optional cylinder case."""
    spec = config.metric
    w = warped_parts(spec)
    rep = GeometryReport("warp", config)
    pts = config.points()
    rep.points = _fan_out(_warp_record, config.jobs, config, pts)
    rep.add_check("block_structure", _max(rep, "block_structure"), config.tol("block"))
    rep.add_check("warp_mixed_block", _max(rep, "warp_mixed_block"), config.tol("warp_blocks"))
    if w.base.is_quadratic:
        rep.add_check("warp_base_block", _max(rep, "warp_base_block"), config.tol("warp_blocks"))
        if w.fiber.is_quadratic:
            rep.add_check("warp_base_fiber_R", _max(rep, "warp_base_fiber_R"), config.tol("warp_blocks"))
    if config.case:
        tr = verify_cylinder_case(spec, config.case, config.case_params, pts, config.diff,
                                tol=config.tol("cylinder"), fiber_tol=config.tol("einstein"))
        rep.extras["cylinder_case"] = tr.to_dict()
        rep.verdicts["cylinder_case"] = config.case
        rep.verdicts["precondition_ok"] = tr.precondition_ok
        if tr.precondition_ok:
            rep.add_check("cylinder_einstein", max(tr.einstein_residuals), config.tol("cylinder"))
            rep.add_check("cylinder_mixed", max(tr.mixed_residuals), config.tol("cylinder"))
            rep.add_check("cylinder_ode", tr.ode_residual, 1e-9)
        else:
            rep.add_check("cylinder_precondition", 1.0, 0.0, passed=False, note=tr.message)
    return rep


COMMANDS = {
    "tensors": cmd_tensors,
    "check-einstein": cmd_check_einstein,
    "conformal": cmd_conformal,
    "warp": cmd_warp,
}
