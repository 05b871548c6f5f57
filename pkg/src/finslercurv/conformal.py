"""Conformal deformations, the conformal Einstein residual, and the
Schouten / Weyl / Cotton-York / Bach tensors.

A conformal factor ``u`` depends on the chart position only.  The deformed
metric ``exp(u) F`` is an ordinary :class:`MetricSpec` of family
``"conformal"``, so every tensor of it is computed the same way as for any
other metric; this is what the two-path check compares against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from . import jets as J
from .bundle import BundlePoint, TensorValue
from .connection import local_jets
from .curvature import (BASE_ORDER, Field, curvature_bundle, einstein_residual, evaluate,
                        trace_free_ricci)
from .errors import DimensionError, JetDomainError, SpecError
from .jets import DEFAULT_CONFIG, DiffConfig, Jet
from .metrics import (MetricSpec, Poly, _Family, family_impl, mean_cartan_norm, cartan_tensor,
                      fundamental_tensor, metric_from_dict, register_family)

FACTOR_KINDS = ("constant", "affine", "poly", "log_cosh", "log_cos", "log_poly", "neg_log_poly")


class ConformalFactor:
    """Scalar ``u(x)`` on the chart.

    Kinds (``coeffs`` are always numbers):

    ``constant``      ``u = c0``
    ``affine``        ``u = c0 + c1 x1 + ... + cn xn``
    ``poly``          ``u = p(x)`` with ``terms = [[coef, [exponents]], ...]``
    ``log_cosh``      ``u = -log cosh(a.x + shift)``
    ``log_cos``       ``u = -log(scale * cos(a.x + shift))``
    ``log_poly``      ``u = log p(x)``
    ``neg_log_poly``  ``u = -log p(x)``
    """

    def __init__(self, kind: str, dim: int, coeffs: Sequence[float] = (), terms=None,
                 shift: float = 0.0, scale: float = 1.0):
        if kind not in FACTOR_KINDS:
            raise SpecError(f"unknown conformal factor kind {kind!r}; known: {FACTOR_KINDS}")
        self.kind, self.dim = kind, int(dim)
        self.coeffs = tuple(float(c) for c in coeffs)
        self.shift, self.scale = float(shift), float(scale)
        self.poly = None
        if kind in ("poly", "log_poly", "neg_log_poly"):
            if terms is None:
                raise SpecError(f"factor kind {kind!r} needs 'terms'")
            self.poly = Poly.parse(terms, self.dim)
        elif kind == "constant":
            if len(self.coeffs) != 1:
                raise SpecError("constant factor needs exactly one coefficient")
        elif kind == "affine":
            if not 1 <= len(self.coeffs) <= self.dim + 1:
                raise SpecError(f"affine factor needs 1..{self.dim + 1} coefficients")
        else:
            if not 1 <= len(self.coeffs) <= self.dim:
                raise SpecError(f"{kind} factor needs 1..{self.dim} direction coefficients")
            if kind == "log_cos" and self.scale <= 0:
                raise SpecError("log_cos scale must be positive")

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.poly is not None:
            d["terms"] = self.poly.to_json()
        else:
            d["coeffs"] = list(self.coeffs)
        if self.kind in ("log_cosh", "log_cos"):
            d["shift"] = self.shift
        if self.kind == "log_cos":
            d["scale"] = self.scale
        return d

    @classmethod
    def from_dict(cls, obj: dict, dim: int) -> "ConformalFactor":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise SpecError("conformal factor must be an object with a 'kind' field")
        terms = obj.get("terms")
        if terms is None and obj["kind"] in ("poly", "log_poly", "neg_log_poly"):
            terms = obj.get("coeffs")
            coeffs = ()
        else:
            coeffs = obj.get("coeffs", ())
        return cls(obj["kind"], dim, coeffs, terms, obj.get("shift", 0.0), obj.get("scale", 1.0))

    @classmethod
    def zero(cls, dim: int) -> "ConformalFactor":
        return cls("constant", dim, [0.0])

    def __eq__(self, other):
        return isinstance(other, ConformalFactor) and self.dim == other.dim and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.dim, repr(self.to_dict())))

    def __repr__(self):
        return f"ConformalFactor({self.to_dict()})"

    # -- evaluation ---------------------------------------------------------
    @property
    def is_constant(self) -> bool:
        if self.kind == "constant":
            return True
        if self.kind == "affine":
            return not any(self.coeffs[1:])
        if self.poly is not None:
            return self.poly.is_constant
        return not any(self.coeffs)

    def _linear(self, x):
        return sum((c * x[i] for i, c in enumerate(self.coeffs)), 0.0) + self.shift

    def __call__(self, x):
        """``u`` at chart position ``x`` (floats or jets)."""
        k = self.kind
        if k == "constant":
            return self.coeffs[0] + 0.0 * x[0]
        if k == "affine":
            return self.coeffs[0] + sum((c * x[i] for i, c in enumerate(self.coeffs[1:])), 0.0 * x[0])
        if k == "poly":
            return self.poly(x) + 0.0 * x[0]
        if k == "log_poly":
            return J.jet_log(self.poly(x) + 0.0 * x[0])
        if k == "neg_log_poly":
            return -J.jet_log(self.poly(x) + 0.0 * x[0])
        if k == "log_cosh":
            return -J.jet_log(J.jet_cosh(self._linear(x)))
        c = J.jet_cos(self._linear(x))
        return -J.jet_log(self.scale * c)

    def derivatives(self, x) -> tuple[float, np.ndarray, np.ndarray]:
        """``u``, its gradient and its coordinate Hessian at ``x``."""
        n = self.dim
        z = [Jet.variable(float(v), i, n, 2) for i, v in enumerate(x)]
        val = self(z)
        if not isinstance(val, Jet):
            return float(val), np.zeros(n), np.zeros((n, n))
        grad = np.array([val.partial([int(i == a) for i in range(n)]) for a in range(n)])
        hess = np.empty((n, n))
        for a in range(n):
            for b in range(n):
                alpha = [0] * n
                alpha[a] += 1
                alpha[b] += 1
                hess[a, b] = val.partial(alpha)
        return float(val.value), grad, hess

    def grad(self, x) -> np.ndarray:
        return self.derivatives(x)[1]

    def hess_h(self, spec: MetricSpec, p: BundlePoint, cfg: DiffConfig = DEFAULT_CONFIG) -> np.ndarray:
        """Horizontal Hessian ``d_i d_j u - Gamma^m_ij d_m u`` (Chern connection)."""
        from .connection import chern_coefficients
        _, du, ddu = self.derivatives(p.x)
        Gamma = chern_coefficients(spec, p, cfg).Gamma
        return ddu - np.einsum("mij,m->ij", Gamma, du)


# ---------------------------------------------------------------------------
# the deformed metric as a family

@register_family("conformal")
class _Conformal(_Family):
    """``F = exp(u(x)) F_base``."""

    def __init__(self, dim, params):
        super().__init__(dim, params)
        if "base" not in params or "u" not in params:
            raise SpecError("conformal metric needs 'base' and 'u'")
        self.base = metric_from_dict(params["base"])
        if self.base.dim != dim:
            raise SpecError("conformal base dimension mismatch")
        self.u = ConformalFactor.from_dict(params["u"], dim)
        self.quadratic = self.base.is_quadratic

    def F2(self, x, y):
        return J.jet_exp(2.0 * self.u(x)) * self.base.F2(x, y)

    def check_point(self, p):
        self.base.check_point(p)
        try:
            self.u(list(p.x))
        except JetDomainError as exc:
            raise SpecError(f"conformal factor undefined at x={p.x}: {exc}") from exc

    def default_box(self):
        return self.base.default_box()

    def fiber_blocks(self):
        return self.base.fiber_blocks()


def deform(spec: MetricSpec, u: ConformalFactor) -> MetricSpec:
    """The metric ``exp(u) F``."""
    if u.dim != spec.dim:
        raise SpecError(f"factor dimension {u.dim} differs from metric dimension {spec.dim}")
    return MetricSpec("conformal", spec.dim, {"base": spec.to_dict(), "u": u.to_dict()})


# ---------------------------------------------------------------------------
# the conformal Einstein residual

def b_map(spec: MetricSpec, u: ConformalFactor, p: BundlePoint) -> np.ndarray:
    """``B[s, q] = (1/2F) d_r u  d(F^2 g^rs - 2 y^r y^s)/dy^q``."""
    n = spec.dim
    lj = local_jets(spec, p, BASE_ORDER)
    g = np.asarray(lj.g.value)
    g_inv = np.asarray(lj.g_inv.value)
    dginv = np.stack([np.asarray(lj.g_inv.d(n + q).value) for q in range(n)], axis=-1)  # [r, s, q]
    y = p.ya
    F2 = float(y @ g @ y)
    dF2 = 2.0 * g @ y
    eye = np.eye(n)
    # d/dy^q of F^2 g^rs - 2 y^r y^s
    D = (np.einsum("q,rs->rsq", dF2, g_inv) + F2 * dginv
         - 2.0 * (np.einsum("rq,s->rsq", eye, y) + np.einsum("r,sq->rsq", y, eye)))
    du = u.grad(p.x)
    return np.einsum("r,rsq->sq", du, D) / (2.0 * math.sqrt(F2))


def lce_residual(spec: MetricSpec, u: ConformalFactor, p: BundlePoint,
                 cfg: DiffConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Left-hand side of the conformal R-Einstein equation for ``exp(u) F``.

    ``E - (n-2)(H - du du) + (n-2)/n (tr H - |du|^2) g + (n-1)/n (du^q B^s_q I_s) g``
    with ``H`` the horizontal Hessian of ``u`` and ``I`` the mean Cartan form.
    Vanishes exactly where the deformed metric is R-Einstein.
    """
    n = spec.dim
    ft = fundamental_tensor(spec, p)
    g, g_inv = ft.g, ft.g_inv
    E = trace_free_ricci(spec, p, cfg)
    _, du, _ = u.derivatives(p.x)
    H = u.hess_h(spec, p, cfg)
    dudu = np.outer(du, du)
    tr_h = float(np.einsum("ij,ij->", g_inv, H))
    norm2 = float(du @ g_inv @ du)
    res = E - (n - 2) * (H - dudu) + (n - 2) / n * (tr_h - norm2) * g
    if not u.is_constant and not spec.is_quadratic:
        A = cartan_tensor(spec, p).components
        I = np.einsum("kl,skl->s", g_inv, A)
        du_up = g_inv @ du
        cartan_term = (n - 1) / n * float(np.einsum("q,sq,s->", du_up, b_map(spec, u, p), I))
        res = res + cartan_term * g
    return res


@dataclass
class TwoPathReport:
    threshold: float
    residual_path: list = dc_field(default_factory=list)
    direct_path: list = dc_field(default_factory=list)
    agree: list = dc_field(default_factory=list)

    @property
    def all_agree(self) -> bool:
        return all(self.agree)

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "residual_path": self.residual_path,
                "direct_path": self.direct_path, "agree": self.agree, "all_agree": self.all_agree}


def direct_vs_residual_check(spec: MetricSpec, u: ConformalFactor, points,
                             cfg: DiffConfig = DEFAULT_CONFIG, threshold: float = 1e-4) -> TwoPathReport:
    """Compare the residual equation with the trace-free Ricci of ``exp(u) F``.

    The two paths must classify each point the same way (zero if the
    max-norm is at most ``threshold``); a disagreement indicates a
    convention error.
    """
    deformed = deform(spec, u)
    rep = TwoPathReport(threshold)
    for p in points:
        r1 = float(np.max(np.abs(lce_residual(spec, u, p, cfg))))
        r2 = einstein_residual(deformed, p, cfg)
        rep.residual_path.append(r1)
        rep.direct_path.append(r2)
        rep.agree.append((r1 <= threshold) == (r2 <= threshold))
    return rep


# ---------------------------------------------------------------------------
# Schouten, Weyl, Cotton-York, Bach

def _schouten_fn(c):
    n = c.n
    return (c.Ric - c.Scal * c.g * (1.0 / (2 * (n - 1)))) * (1.0 / (n - 2))


def _weyl_fn(c):
    S, g = c.get(SCHOUTEN), c.g
    return (c.R - J.einsum("lj,ik->lijk", g, S) - J.einsum("ik,lj->lijk", g, S)
            + J.einsum("lk,ij->lijk", g, S) + J.einsum("ij,lk->lijk", g, S))


def _cotton_fn(c):
    D = c.nabla(SCHOUTEN)  # [i, k, j] = nabla_j S_ik
    return J.transpose(D, (0, 2, 1)) - D


def _bach_fn(c):
    DC = c.nabla(COTTON)  # [i, j, k, m] = nabla_m C_ijk
    div = J.einsum("km,ijkm->ij", c.g_inv, DC)
    S_up = J.einsum("la,ak->lk", c.g_inv, J.einsum("ab,bk->ak", c.get(SCHOUTEN), c.g_inv))
    return div + J.einsum("lk,likj->ij", S_up, c.get(WEYL))


def _weyl_div_fn(c):
    DW = c.nabla(WEYL)  # [l, i, j, k, m]
    return J.einsum("lm,lijkm->ijk", c.g_inv, DW) - c.get(COTTON) * float(c.n - 3)


SCHOUTEN = Field("schouten", _schouten_fn, 0, (1, 1, 0))
WEYL = Field("weyl", _weyl_fn, 0, (2, 2, 0))
COTTON = Field("cotton", _cotton_fn, 1, (1, 2, 0))
BACH = Field("bach", _bach_fn, 2, (1, 1, 0))
WEYL_DIVERGENCE_DEFECT = Field("weyl_div_defect", _weyl_div_fn, 1, (1, 2, 0))


def _need(spec: MetricSpec, n_min: int, what: str):
    if spec.dim < n_min:
        raise DimensionError(f"the {what} tensor needs dimension >= {n_min}, got {spec.dim}")


def schouten(spec, p, cfg=DEFAULT_CONFIG) -> np.ndarray:
    """``S = (Ric - Scal/(2(n-1)) g) / (n-2)``."""
    _need(spec, 3, "Schouten")
    return evaluate(SCHOUTEN, spec, p, cfg)


def weyl(spec, p, cfg=DEFAULT_CONFIG) -> TensorValue:
    _need(spec, 3, "Weyl")
    return TensorValue((2, 2, 0), evaluate(WEYL, spec, p, cfg), p)


def cotton_york(spec, p, cfg=DEFAULT_CONFIG, method: str = "auto") -> TensorValue:
    """``C[i, j, k] = nabla_j S_ik - nabla_k S_ij``."""
    _need(spec, 3, "Cotton-York")
    return TensorValue((1, 2, 0), evaluate(COTTON, spec, p, cfg, method), p)


def bach(spec, p, cfg=DEFAULT_CONFIG, method: str = "auto") -> np.ndarray:
    """``B_ij = g^km nabla_m C_ijk + S^lk W_likj`` (meant for n >= 4)."""
    _need(spec, 3, "Bach")
    return evaluate(BACH, spec, p, cfg, method)


def weyl_divergence_check(spec, p, cfg=DEFAULT_CONFIG, method: str = "auto") -> float:
    """Max-norm of ``nabla^l W_lijk - (n-3) C_ijk``."""
    _need(spec, 3, "Weyl")
    return float(np.max(np.abs(evaluate(WEYL_DIVERGENCE_DEFECT, spec, p, cfg, method))))


# ---------------------------------------------------------------------------
# classification

DEFAULT_TOLERANCES = {
    "cartan": 1e-8,
    "einstein": 1e-6,
    "weyl": 1e-6,
    "cotton": 1e-5,
    "bach": 1e-3,
    "lce": 1e-6,
}


@dataclass
class ConformalClassification:
    dim: int
    verdict: str | None
    statistics: dict
    flags: dict
    thresholds: dict

    def to_dict(self) -> dict:
        return {"dim": self.dim, "verdict": self.verdict, "statistics": self.statistics,
                "flags": self.flags, "thresholds": self.thresholds}


def classify(spec: MetricSpec, points, u_families: Sequence[ConformalFactor] = (),
             cfg: DiffConfig = DEFAULT_CONFIG, tolerances: dict | None = None) -> ConformalClassification:
    """Apply the dimension-specific conformal classification to sampled data.

    A statistic counts as vanishing when its maximum over the points is
    below ten times its tolerance.  Dimension 2 uses the mean Cartan norm
    and the trace-free Ricci tensor; dimension 3 the Cotton-York tensor;
    dimension 4 the Bach tensor.  Other dimensions get statistics only.
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    thr = {k: 10.0 * v for k, v in tol.items()}
    n = spec.dim
    points = list(points)
    stats: dict = {}
    flags: dict = {}
    stats["einstein_max"] = max(einstein_residual(spec, p, cfg) for p in points)
    stats["cartan_max"] = max(mean_cartan_norm(spec, p) for p in points)
    flags["riemannian"] = stats["cartan_max"] < thr["cartan"]
    flags["r_einstein"] = stats["einstein_max"] < thr["einstein"]
    for i, u in enumerate(u_families):
        stats[f"lce_max[{i}]"] = max(float(np.max(np.abs(lce_residual(spec, u, p, cfg)))) for p in points)
    verdict = None
    if n == 2:
        if flags["riemannian"]:
            verdict = "riemannian"
        elif flags["r_einstein"]:
            verdict = "constant_factor_and_R_Einstein"
        else:
            verdict = "not_conformally_einstein"
    elif n == 3:
        stats["cotton_max"] = max(cotton_york(spec, p, cfg).max_abs() for p in points)
        stats["weyl_max"] = max(weyl(spec, p, cfg).max_abs() for p in points)
        flags["cotton_vanishing"] = stats["cotton_max"] < thr["cotton"]
        verdict = "cotton_vanishing" if flags["cotton_vanishing"] else "cotton_nonvanishing"
    elif n == 4:
        stats["bach_max"] = max(float(np.max(np.abs(bach(spec, p, cfg)))) for p in points)
        flags["bach_vanishing"] = stats["bach_max"] < thr["bach"]
        verdict = "bach_vanishing" if flags["bach_vanishing"] else "bach_nonvanishing"
    return ConformalClassification(n, verdict, stats, flags, thr)
