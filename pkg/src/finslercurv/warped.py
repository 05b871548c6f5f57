"""Warped products ``F^2 = F1^2 + f(x1)^2 F2^2``, cylinders, and the
conformal factors that make a cylinder over an Einstein fiber Einstein.

On a cylinder ``R x M2`` with ``t = x^1`` the candidate factors are
``u = -log phi(t)`` where ``phi'' = s* phi`` and
``s* = Scal(M2) / ((n-1)(n-2))``:

==========  =====================  ==============
family      phi                    sign of s*
==========  =====================  ==============
linear      alpha t + beta         0
cosh        cosh(sqrt(s*) t + g)   > 0
cos         mu cos(sqrt(-s*) t+th) < 0
==========  =====================  ==============
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from . import jets as J
from .bundle import BundlePoint
from .conformal import ConformalFactor, deform, lce_residual
from .connection import chern_coefficients
from .curvature import curvature_bundle, einstein_residual, hh_curvature, trace_free_ricci
from .errors import CaseError, ChartDomainError, InvalidMetricError, SpecError
from .jets import DEFAULT_CONFIG, DiffConfig
from .metrics import MetricSpec, Poly, _Family, euclidean, metric_from_dict, register_family

WARP_KINDS = ("constant", "affine", "exp", "cosh", "cos", "poly")


class WarpFunction:
    """Positive function ``f`` of the base coordinates.

    ``constant``: ``c0``; ``affine``: ``c0 + c.x``; ``exp`` / ``cosh`` /
    ``cos``: ``scale * fn(a.x + shift)``; ``poly``: polynomial ``terms``.
    """

    def __init__(self, kind: str, dim: int, coeffs: Sequence[float] = (), terms=None,
                 shift: float = 0.0, scale: float = 1.0):
        if kind not in WARP_KINDS:
            raise SpecError(f"unknown warp kind {kind!r}; known: {WARP_KINDS}")
        self.kind, self.dim = kind, int(dim)
        self.coeffs = tuple(float(c) for c in coeffs)
        self.shift, self.scale = float(shift), float(scale)
        self.poly = Poly.parse(terms, self.dim) if kind == "poly" else None
        if kind == "poly" and terms is None:
            raise SpecError("poly warp needs 'terms'")
        if kind == "constant" and len(self.coeffs) != 1:
            raise SpecError("constant warp needs exactly one coefficient")
        if kind == "affine" and not 1 <= len(self.coeffs) <= self.dim + 1:
            raise SpecError(f"affine warp needs 1..{self.dim + 1} coefficients")
        if kind in ("exp", "cosh", "cos") and not 1 <= len(self.coeffs) <= self.dim:
            raise SpecError(f"{kind} warp needs 1..{self.dim} direction coefficients")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.poly is not None:
            d["terms"] = self.poly.to_json()
        else:
            d["coeffs"] = list(self.coeffs)
        if self.kind in ("exp", "cosh", "cos"):
            d["shift"] = self.shift
            d["scale"] = self.scale
        return d

    @classmethod
    def from_dict(cls, obj: dict, dim: int) -> "WarpFunction":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise SpecError("warp must be an object with a 'kind' field")
        terms = obj.get("terms", obj.get("coeffs") if obj["kind"] == "poly" else None)
        coeffs = obj.get("coeffs", ()) if obj["kind"] != "poly" else ()
        return cls(obj["kind"], dim, coeffs, terms, obj.get("shift", 0.0), obj.get("scale", 1.0))

    @classmethod
    def constant(cls, c: float, dim: int = 1) -> "WarpFunction":
        return cls("constant", dim, [c])

    def __call__(self, x):
        k = self.kind
        zero = 0.0 * x[0]
        if k == "constant":
            return self.coeffs[0] + zero
        if k == "affine":
            return self.coeffs[0] + sum((c * x[i] for i, c in enumerate(self.coeffs[1:])), zero)
        if k == "poly":
            return self.poly(x) + zero
        arg = sum((c * x[i] for i, c in enumerate(self.coeffs)), zero) + self.shift
        fn = {"exp": J.jet_exp, "cosh": J.jet_cosh, "cos": J.jet_cos}[k]
        return self.scale * fn(arg)


@register_family("warped")
class _Warped(_Family):
    def __init__(self, dim, params):
        super().__init__(dim, params)
        try:
            self.base = metric_from_dict(params["base"])
            self.fiber = metric_from_dict(params["fiber"])
        except KeyError as exc:
            raise SpecError("warped metric needs 'base' and 'fiber'") from exc
        self.n1 = self.base.dim
        if self.n1 + self.fiber.dim != dim:
            raise SpecError(f"warped dimension {dim} != {self.n1} + {self.fiber.dim}")
        self.warp = WarpFunction.from_dict(params.get("warp", {"kind": "constant", "coeffs": [1.0]}), self.n1)
        self.quadratic = self.base.is_quadratic and self.fiber.is_quadratic

    def F2(self, x, y):
        n1 = self.n1
        f = self.warp(x[:n1])
        return self.base.F2(x[:n1], y[:n1]) + f * f * self.fiber.F2(x[n1:], y[n1:])

    def split(self, p: BundlePoint) -> tuple[BundlePoint, BundlePoint]:
        n1 = self.n1
        # BundlePoint rejects a vanishing block: F is not smooth there
        return BundlePoint(p.x[:n1], p.y[:n1]), BundlePoint(p.x[n1:], p.y[n1:])

    def check_point(self, p):
        p1, p2 = self.split(p)
        self.base.check_point(p1)
        self.fiber.check_point(p2)
        f = float(np.asarray(self.warp(list(p1.x))))
        if not f > 0:
            raise InvalidMetricError(f"warp function is not positive at x={p1.x}: f = {f:.4g}")

    def default_box(self):
        return self.base.default_box() + self.fiber.default_box()

    def fiber_blocks(self):
        return [slice(0, self.n1), slice(self.n1, self.dim)]


def build_warped(base: MetricSpec, fiber: MetricSpec, warp: WarpFunction | None = None) -> MetricSpec:
    """``sqrt(F_base^2 + f^2 F_fiber^2)`` on the product chart."""
    warp = warp or WarpFunction.constant(1.0, base.dim)
    if warp.dim != base.dim:
        raise SpecError("warp function must live on the base")
    return MetricSpec("warped", base.dim + fiber.dim,
                      {"base": base.to_dict(), "fiber": fiber.to_dict(), "warp": warp.to_dict()})


def cylinder(fiber: MetricSpec) -> MetricSpec:
    """``sqrt(t^2 + F_fiber^2)`` on ``R x M2`` (``t`` is the first coordinate)."""
    return build_warped(euclidean(1), fiber, WarpFunction.constant(1.0, 1))


def warped_parts(spec: MetricSpec) -> _Warped:
    if spec.family != "warped":
        raise SpecError(f"expected a warped metric, got family {spec.family!r}")
    from .metrics import family_impl
    return family_impl(spec)


def warped_connection_blocks(spec: MetricSpec, p: BundlePoint, cfg: DiffConfig = DEFAULT_CONFIG) -> dict:
    """Connection and curvature block identities of a warped product.

    Returns max-norm residuals of

    * ``base_block``: base components of Gamma minus the base metric's Gamma
      (expected zero for a Riemannian base);
    * ``mixed_block``: ``Gamma^alpha_{a beta} - (d_a f / f) delta^alpha_beta``
      (and the symmetric slot), ``a`` base, ``alpha, beta`` fiber;
    * ``base_fiber_R``: ``R[a, b, mu, c]`` with ``a, b, c`` base and ``mu`` fiber.
    """
    w = warped_parts(spec)
    n1, n = w.n1, spec.dim
    p1, _ = w.split(p)
    Gam = chern_coefficients(spec, p, cfg).Gamma
    Gb = chern_coefficients(w.base, p1, cfg).Gamma
    base_res = float(np.max(np.abs(Gam[:n1, :n1, :n1] - Gb)))
    z = [J.Jet.variable(v, i, n1, 1) for i, v in enumerate(p1.x)]
    fj = w.warp(z)
    if isinstance(fj, J.Jet):
        dlogf = np.array([fj.d(a).value for a in range(n1)]) / fj.value
    else:
        dlogf = np.zeros(n1)
    fib = slice(n1, n)
    n2 = n - n1
    expect = np.eye(n2)
    mixed = 0.0
    for a in range(n1):
        block1 = Gam[fib, a, fib]  # Gamma^alpha_{a beta}
        block2 = Gam[fib, fib, a]
        mixed = max(mixed, float(np.max(np.abs(block1 - dlogf[a] * expect))),
                    float(np.max(np.abs(block2 - dlogf[a] * expect))))
    R = hh_curvature(spec, p, cfg).components
    cor = float(np.max(np.abs(R[:n1, :n1, n1:, :n1])))
    return {"base_block": base_res, "mixed_block": mixed, "base_fiber_R": cor}


def block_structure_residual(spec: MetricSpec, p: BundlePoint) -> float:
    """Max-norm of ``g`` minus ``diag(g_base, f^2 g_fiber)``."""
    from .metrics import fundamental_tensor
    w = warped_parts(spec)
    p1, p2 = w.split(p)
    n1 = w.n1
    g = fundamental_tensor(spec, p).g
    f = float(np.asarray(w.warp(list(p1.x))))
    expect = np.zeros_like(g)
    expect[:n1, :n1] = fundamental_tensor(w.base, p1).g
    expect[n1:, n1:] = f * f * fundamental_tensor(w.fiber, p2).g
    return float(np.max(np.abs(g - expect)))


# ---------------------------------------------------------------------------
# the ODE families

ODE_FAMILIES = ("linear", "cosh", "cos")
COS_WINDOW_FLOOR = 0.05


@dataclass(frozen=True)
class OdeFamily:
    """``phi'' = s* phi`` with ``phi`` from one of three closed forms.

    ``params``: linear ``(alpha, beta)``; cosh ``(gamma,)``; cos ``(mu, theta)``.
    """

    s_star: float
    family: str
    params: tuple

    def __post_init__(self):
        if self.family not in ODE_FAMILIES:
            raise CaseError(f"unknown family {self.family!r}; known: {ODE_FAMILIES}")
        s = self.s_star
        ok = {"linear": abs(s) <= 1e-9, "cosh": s > 0, "cos": s < 0}[self.family]
        if not ok:
            raise CaseError(f"family {self.family!r} does not match s* = {s:.6g}")
        need = {"linear": 2, "cosh": 1, "cos": 2}[self.family]
        if len(self.params) != need:
            raise CaseError(f"family {self.family!r} takes {need} parameters")

    def phi(self, t, order: int = 0):
        """``phi`` or its ``order``-th derivative at ``t``."""
        t = np.asarray(t, dtype=float)
        if self.family == "linear":
            a, b = self.params
            return [a * t + b, a + 0 * t][order] if order < 2 else 0 * t
        if self.family == "cosh":
            r = math.sqrt(self.s_star)
            arg = r * t + self.params[0]
            return r ** order * (np.cosh(arg) if order % 2 == 0 else np.sinh(arg))
        mu, theta = self.params
        r = math.sqrt(-self.s_star)
        arg = r * t + theta
        cyc = (np.cos(arg), -np.sin(arg), -np.cos(arg), np.sin(arg))
        return mu * r ** order * cyc[order % 4]

    def ode_residual(self, t) -> np.ndarray:
        """``|phi'' - s* phi|``."""
        return np.abs(self.phi(t, 2) - self.s_star * self.phi(t))

    def u_residual(self, t) -> np.ndarray:
        """``|u'' - u'^2 + s*|`` for ``u = -log phi``."""
        p0, p1, p2 = self.phi(t), self.phi(t, 1), self.phi(t, 2)
        du = -p1 / p0
        ddu = -p2 / p0 + (p1 / p0) ** 2
        return np.abs(ddu - du * du + self.s_star)

    def window(self) -> tuple[float, float]:
        """Largest t-interval around the origin-side peak with ``phi >= floor`` (cos family)."""
        if self.family != "cos":
            return (-math.inf, math.inf)
        mu, theta = self.params
        if mu <= COS_WINDOW_FLOOR:
            raise ChartDomainError(f"cos family amplitude {mu} leaves no window with phi >= {COS_WINDOW_FLOOR}")
        r = math.sqrt(-self.s_star)
        half = math.acos(COS_WINDOW_FLOOR / mu)
        return ((-half - theta) / r, (half - theta) / r)


def cylinder_factor(s_star: float, family: str, params, dim: int,
                       window: tuple[float, float] | None = None,
                       linear_form: str = "reciprocal") -> ConformalFactor:
    """Conformal factor ``u(t)`` on an ``dim``-dimensional cylinder.

    ``u = -log phi`` for every family, i.e. ``exp(u) = 1/phi``.  For the
    linear family ``linear_form="literal"`` instead returns
    ``exp(u) = alpha t + beta``, which does *not* solve the Einstein
    equation in general; it is provided to demonstrate exactly that.

    Raises
    ------
    CaseError
        Family does not match the sign of ``s_star``.
    ChartDomainError
        ``phi <= 0`` somewhere in ``window`` (or, for cos, below the floor).
    """
    ode = OdeFamily(float(s_star), family, tuple(float(v) for v in params))
    if window is not None:
        lo, hi = window
        ts = np.linspace(lo, hi, 201)
        floor = COS_WINDOW_FLOOR if family == "cos" else 0.0
        if np.min(ode.phi(ts)) <= floor:
            raise ChartDomainError(f"phi drops to {np.min(ode.phi(ts)):.4g} on t in [{lo}, {hi}]")
    zeros = [0] * (dim - 1)
    if family == "linear":
        a, b = ode.params
        if a == 0.0:
            if b <= 0:
                raise ChartDomainError("beta must be positive for a constant factor")
            return ConformalFactor("constant", dim, [-math.log(b) if linear_form == "reciprocal" else math.log(b)])
        terms = [[b, [0] + zeros], [a, [1] + zeros]]
        kind = {"reciprocal": "neg_log_poly", "literal": "log_poly"}[linear_form]
        return ConformalFactor(kind, dim, terms=terms)
    if family == "cosh":
        return ConformalFactor("log_cosh", dim, [math.sqrt(s_star)], shift=ode.params[0])
    mu, theta = ode.params
    return ConformalFactor("log_cos", dim, [math.sqrt(-s_star)], shift=theta, scale=mu)


# ---------------------------------------------------------------------------

@dataclass
class CylinderCaseReport:
    family: str
    s_star: float
    scal_fiber: float
    precondition_ok: bool
    tolerance: float
    factor: dict | None = None
    einstein_residuals: list = dc_field(default_factory=list)
    mixed_residuals: list = dc_field(default_factory=list)
    lce_residuals: list = dc_field(default_factory=list)
    ode_residual: float = 0.0
    u_residual: float = 0.0
    message: str = ""

    @property
    def passed(self) -> bool:
        return (self.precondition_ok and bool(self.einstein_residuals)
                and max(self.einstein_residuals) <= self.tolerance
                and max(self.mixed_residuals) <= self.tolerance
                and self.ode_residual <= 1e-9)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "family", "s_star", "scal_fiber", "precondition_ok", "tolerance", "factor",
            "einstein_residuals", "mixed_residuals", "lce_residuals", "ode_residual",
            "u_residual", "message")}
        d["passed"] = self.passed
        return d


def cylinder_points(cyl: MetricSpec, ts: Sequence[float], seed: int = 0,
                    min_fiber_norm: float = 0.1) -> list[BundlePoint]:
    """Bundle points on a cylinder with prescribed ``t`` and random fiber data."""
    w = warped_parts(cyl)
    rng = np.random.default_rng(seed)
    box = w.fiber.default_box()
    pts = []
    for t in ts:
        xf = [rng.uniform(lo, hi) for lo, hi in box]
        while True:
            y = rng.normal(size=cyl.dim)
            if abs(y[0]) >= min_fiber_norm and np.linalg.norm(y[1:]) >= min_fiber_norm:
                break
        pts.append(BundlePoint([t] + xf, y))
    return pts


def verify_cylinder_case(cyl: MetricSpec, family: str, params, points: Sequence[BundlePoint],
                       cfg: DiffConfig = DEFAULT_CONFIG, tol: float = 1e-4,
                       fiber_tol: float = 1e-6, linear_form: str = "reciprocal") -> CylinderCaseReport:
    """Deform a cylinder by the case factor and measure how Einstein the result is.

    ``s*`` is computed from the fiber's measured horizontal scalar
    curvature.  The fiber must be R-Einstein with constant scalar curvature
    at the sampled points; otherwise only a precondition report is returned.
    """
    w = warped_parts(cyl)
    n = cyl.dim
    if w.base != euclidean(1) or w.warp.to_dict() != WarpFunction.constant(1.0, 1).to_dict():
        raise SpecError("verify_cylinder_case expects a cylinder R x M2")
    if n < 3:
        raise SpecError("cylinders need a fiber of dimension >= 2")
    fiber_pts = [w.split(p)[1] for p in points]
    scals = [curvature_bundle(w.fiber, q, cfg).Scal for q in fiber_pts]
    e_fib = max(einstein_residual(w.fiber, q, cfg) for q in fiber_pts)
    scal2 = float(np.mean(scals))
    s_star = scal2 / ((n - 1) * (n - 2))
    rep = CylinderCaseReport(family, s_star, scal2, True, tol)
    spread = max(scals) - min(scals)
    if e_fib > fiber_tol or spread > fiber_tol * max(1.0, abs(scal2)):
        rep.precondition_ok = False
        rep.message = f"fiber not R-Einstein with constant Scal (E max {e_fib:.3g}, Scal spread {spread:.3g})"
        return rep
    if family == "linear" and abs(s_star) <= fiber_tol:
        s_star = 0.0
        rep.s_star = 0.0
    try:
        ts = [p.x[0] for p in points]
        u = cylinder_factor(s_star, family, params, n, window=(min(ts), max(ts)),
                               linear_form=linear_form)
    except (CaseError, ChartDomainError) as exc:
        rep.precondition_ok = False
        rep.message = str(exc)
        return rep
    rep.factor = u.to_dict()
    ode = OdeFamily(s_star, family, tuple(float(v) for v in params))
    ts = np.asarray(ts)
    rep.ode_residual = float(np.max(ode.ode_residual(ts)))
    rep.u_residual = float(np.max(ode.u_residual(ts)))
    deformed = deform(cyl, u)
    for p in points:
        E = trace_free_ricci(deformed, p, cfg)
        rep.einstein_residuals.append(float(np.max(np.abs(E))))
        rep.mixed_residuals.append(float(max(np.max(np.abs(E[0, 1:])), np.max(np.abs(E[1:, 0])))))
        rep.lce_residuals.append(float(np.max(np.abs(lce_residual(cyl, u, p, cfg)))))
    return rep
