"""hh-curvature, horizontal Ricci/scalar curvature, covariant derivatives, checks.

Index conventions (all arrays are plain numpy, lower indices only unless
named ``*_inv``):

* ``Kend[m, a, j, k]`` is the curvature endomorphism ``phi(d_j, d_k) d_a``
  expanded as ``Kend^m_ajk d_m``;
* ``R[l, i, k, j] = g(phi(delta_j, delta_k) d_l, d_i)``, so the horizontal
  pair is the last two slots and the first slot is the one being rotated;
* ``Ric[i, j] = g^kl R[i, k, j, l] = Kend^l_{i l j}`` which is the usual
  (positive on spheres) Ricci tensor; it is *not* symmetrized;
* ``Scal = g^ij Ric[i, j]`` and ``E = Ric - Scal/n g``.

Derivatives of curvature tensors are organised as :class:`Field` objects.
A field is a function of an evaluation context; the context either carries
jets (exact derivatives, needs ``jet_order >= 4 + depth``) or plain values
at a point, in which case covariant derivatives fall back to finite
differences along the horizontal directions.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from . import jets as J
from .bundle import BundlePoint, TensorValue
from .connection import chern_coefficients, horizontal_delta, horizontal_direction, local_jets
from .errors import UndefinedQuantityError
from .jets import DEFAULT_CONFIG, DiffConfig, Jet
from .metrics import MetricSpec

BASE_ORDER = 4


@dataclass(frozen=True)
class CurvatureJets:
    """Jets of connection and curvature carrying ``extra`` spare derivative orders."""

    extra: int
    g: Jet
    g_inv: Jet
    N: Jet
    Gamma: Jet
    Kend: Jet
    R: Jet
    Ric: Jet
    Scal: Jet
    E: Jet


@functools.lru_cache(maxsize=512)
def curvature_jets(spec: MetricSpec, p: BundlePoint, extra: int = 0) -> CurvatureJets:
    lj = local_jets(spec, p, BASE_ORDER + extra)
    n = spec.dim
    dG = horizontal_delta(lj.Gamma, lj.N, n)  # [m, k, a, j] = delta_j Gamma^m_ka
    Gam = lj.Gamma.truncate(extra)
    Kend = (J.transpose(dG, (0, 2, 3, 1)) - J.transpose(dG, (0, 2, 1, 3))
            + J.einsum("mjp,pka->majk", Gam, Gam) - J.einsum("mkp,pja->majk", Gam, Gam))
    g = lj.g.truncate(extra)
    g_inv = lj.g_inv.truncate(extra)
    R = J.einsum("bm,madc->abcd", g, Kend)
    Ric = J.einsum("lm,limj->ij", np.eye(n), Kend)
    Scal = J.einsum("ij,ij->", g_inv, Ric)
    E = Ric - Scal * g * (1.0 / n)
    return CurvatureJets(extra, lj.g, lj.g_inv, lj.N, lj.Gamma, Kend, R, Ric, Scal, E)


# ---------------------------------------------------------------------------
# plain values

@dataclass(frozen=True)
class CurvatureBundle:
    R: TensorValue
    Ric: np.ndarray
    Scal: float
    E: np.ndarray
    ricci_scalar_AZ: float
    base: BundlePoint

    @property
    def ric_asymmetry(self) -> float:
        return float(np.max(np.abs(self.Ric - self.Ric.T)))


def curvature_bundle(spec: MetricSpec, p: BundlePoint,
                     cfg: DiffConfig = DEFAULT_CONFIG) -> CurvatureBundle:
    chern_coefficients(spec, p, cfg)  # runs the connection self-check
    cj = curvature_jets(spec, p, 0)
    Ric = np.asarray(cj.Ric.value)
    g = np.asarray(cj.g.value)
    F2 = float(np.einsum("ij,i,j->", g, p.ya, p.ya))
    l = p.ya / np.sqrt(F2)
    return CurvatureBundle(
        TensorValue((2, 2, 0), np.asarray(cj.R.value), p), Ric, float(cj.Scal.value),
        np.asarray(cj.E.value), float(l @ Ric @ l), p)


def hh_curvature(spec, p, cfg=DEFAULT_CONFIG) -> TensorValue:
    """hh-curvature ``R[l, i, k, j] = g(phi(delta_j, delta_k) d_l, d_i)``."""
    return curvature_bundle(spec, p, cfg).R


def ricci_h(spec, p, cfg=DEFAULT_CONFIG) -> np.ndarray:
    return curvature_bundle(spec, p, cfg).Ric


def scal_h(spec, p, cfg=DEFAULT_CONFIG) -> float:
    return curvature_bundle(spec, p, cfg).Scal


def trace_free_ricci(spec, p, cfg=DEFAULT_CONFIG) -> np.ndarray:
    return curvature_bundle(spec, p, cfg).E


def akbar_zadeh_ric(spec, p, cfg=DEFAULT_CONFIG) -> float:
    """``l^i l^j Ric_ij`` with ``l = y / F``."""
    return curvature_bundle(spec, p, cfg).ricci_scalar_AZ


def einstein_k(spec, p, cfg=DEFAULT_CONFIG) -> float:
    if spec.dim < 2:
        raise UndefinedQuantityError("the Einstein scalar k needs dimension >= 2")
    return akbar_zadeh_ric(spec, p, cfg) / (spec.dim - 1)


# ---------------------------------------------------------------------------
# fields and covariant derivatives

@dataclass(frozen=True)
class Field:
    """A tensor field with only lower indices, built from curvature data.

    ``fn(ctx)`` returns the components using ``ctx`` attributes (``g``,
    ``g_inv``, ``Gamma``, ``R``, ``Ric``, ``Scal``, ``E``, ``n``) and
    ``ctx.get`` / ``ctx.nabla`` for other fields.  ``depth`` counts the
    covariant derivatives taken on top of the curvature.
    """

    name: str
    fn: Callable = dc_field(compare=False)
    depth: int = 0
    signature: tuple = (0, 0, 0)


def connection_terms(T, Gamma):
    """``sum_s Gamma^m_{k a_s} T[.. m ..]`` with the derivative index ``k`` last."""
    rank = len(T.shape) if isinstance(T, Jet) else np.ndim(T)
    letters = "abcdefgh"[:rank]
    total = None
    for s in range(rank):
        src = letters[:s] + "m" + letters[s + 1:]
        term = J.einsum(f"mk{letters[s]},{src}->{letters}k", Gamma, T)
        total = term if total is None else total + term
    return total


class _Context:
    def __init__(self, spec: MetricSpec, p: BundlePoint, cfg: DiffConfig):
        self.spec, self.point, self.cfg = spec, p, cfg
        self.n = spec.dim
        self._memo: dict = {}

    def get(self, f: Field):
        if f.name not in self._memo:
            self._memo[f.name] = f.fn(self)
        return self._memo[f.name]

    def nabla(self, f: Field):
        key = "nabla:" + f.name
        if key not in self._memo:
            self._memo[key] = self._nabla(f)
        return self._memo[key]


class JetContext(_Context):
    """Fields evaluated on jets; covariant derivatives are exact."""

    def __init__(self, spec, p, cfg, extra):
        super().__init__(spec, p, cfg)
        cj = curvature_jets(spec, p, extra)
        self.extra = extra
        self.g, self.g_inv, self.N, self.Gamma = cj.g, cj.g_inv, cj.N, cj.Gamma
        self.R, self.Ric, self.Scal, self.E = cj.R, cj.Ric, cj.Scal, cj.E
        self.y = p.ya

    def _nabla(self, f):
        T = self.get(f)
        if not isinstance(T, Jet):
            T = J.as_jet(T, self.g)
        dT = horizontal_delta(T, self.N, self.n)
        terms = connection_terms(T, self.Gamma)
        return dT if terms is None else dT - terms


class PointContext(_Context):
    """Fields evaluated from values at one point; derivatives by finite differences."""

    def __init__(self, spec, p, cfg):
        super().__init__(spec, p, cfg)
        cj = curvature_jets(spec, p, 0)
        self.g, self.g_inv = np.asarray(cj.g.value), np.asarray(cj.g_inv.value)
        self.N, self.Gamma = np.asarray(cj.N.value), np.asarray(cj.Gamma.value)
        self.R, self.Ric = np.asarray(cj.R.value), np.asarray(cj.Ric.value)
        self.Scal, self.E = float(cj.Scal.value), np.asarray(cj.E.value)
        self.y = p.ya

    def _nabla(self, f):
        T = np.asarray(self.get(f))
        parts = [J.outer_fd(lambda q: evaluate(f, self.spec, q, self.cfg), self.point,
                            horizontal_direction(self.N, k), self.cfg)
                 for k in range(self.n)]
        dT = np.stack(parts, axis=-1)
        terms = connection_terms(T, self.Gamma)
        return dT if terms is None else dT - terms


def _use_jets(f: Field, cfg: DiffConfig, method: str) -> bool:
    if method == "jet":
        return True
    if method == "fd":
        return False
    return cfg.jet_order >= BASE_ORDER + f.depth


@functools.lru_cache(maxsize=4096)
def _evaluate(f: Field, spec: MetricSpec, p: BundlePoint, cfg: DiffConfig, method: str):
    if _use_jets(f, cfg, method):
        ctx = JetContext(spec, p, cfg, f.depth)
        out = ctx.get(f)
        out = out.value if isinstance(out, Jet) else out
    else:
        out = PointContext(spec, p, cfg).get(f)
    arr = np.array(out, dtype=float)
    arr.setflags(write=False)
    return arr


def evaluate(f: Field, spec: MetricSpec, p: BundlePoint, cfg: DiffConfig = DEFAULT_CONFIG,
             method: str = "auto") -> np.ndarray:
    """Components of ``f`` at ``p``.

    ``method`` is ``"jet"`` (exact; raises if the jet order is insufficient
    only through memory/time, never silently), ``"fd"`` (outer finite
    differences for every covariant derivative layer) or ``"auto"``
    (jets when ``cfg.jet_order`` carries enough derivatives).
    """
    if method not in ("auto", "jet", "fd"):
        raise ValueError(f"unknown evaluation method {method!r}")
    chern_coefficients(spec, p, cfg)
    return np.array(_evaluate(f, spec, p, cfg, method))


METRIC = Field("g", lambda c: c.g, 0, (1, 1, 0))
RIEMANN = Field("R", lambda c: c.R, 0, (2, 2, 0))
RICCI = Field("ric", lambda c: c.Ric, 0, (1, 1, 0))
SCAL = Field("scal", lambda c: c.Scal, 0, (0, 0, 0))
TRACE_FREE_RICCI = Field("E", lambda c: c.E, 0, (1, 1, 0))
NABLA_R = Field("nabla_R", lambda c: c.nabla(RIEMANN), 1, (2, 3, 0))
NABLA_SCAL = Field("nabla_scal", lambda c: c.nabla(SCAL), 1, (0, 1, 0))
NABLA_G = Field("nabla_g", lambda c: c.nabla(METRIC), 1, (1, 2, 0))

FIELDS = {f.name: f for f in (METRIC, RIEMANN, RICCI, SCAL, TRACE_FREE_RICCI)}
# unique names keep cached evaluations of distinct user callables apart
_USER_FIELD_IDS = itertools.count()


def horizontal_covariant_derivative(spec: MetricSpec, p: BundlePoint, T, direction: int | None = None,
                                    cfg: DiffConfig = DEFAULT_CONFIG, method: str = "auto") -> TensorValue:
    """Horizontal covariant derivative ``nabla_k T``.

    ``T`` is a :class:`Field`, the name of a built-in field (``"g"``,
    ``"R"``, ``"ric"``, ``"scal"``, ``"E"``) or a callable mapping a
    :class:`BundlePoint` to a component array (differentiated by finite
    differences).  The derivative slot is appended last; with a
    ``direction`` only that component is returned.
    """
    if isinstance(T, str):
        T = FIELDS[T]
    if isinstance(T, Field):
        f = T
    else:
        user = T

        def _components(c):
            v = user(c.point)
            return np.asarray(v.components if isinstance(v, TensorValue) else v, dtype=float)

        probe = user(p)
        sig = probe.signature if isinstance(probe, TensorValue) else (np.ndim(probe), 0, 0)
        f = Field(f"user:{next(_USER_FIELD_IDS)}", _components, 0, tuple(sig))
        method = "fd"
    d = Field(f"nabla:{f.name}", lambda c: c.nabla(f), f.depth + 1)
    if method == "fd":
        out = PointContext(spec, p, cfg).nabla(f)
        chern_coefficients(spec, p, cfg)
    else:
        out = evaluate(d, spec, p, cfg, method)
    out = np.asarray(out)
    p1, p2, q = f.signature
    if direction is not None:
        return TensorValue((p1, p2, q), out[..., direction], p)
    return TensorValue((p1, p2 + 1, q), out, p)


# ---------------------------------------------------------------------------
# identities and residuals

def bianchi_cyclic(nabla_R: np.ndarray) -> np.ndarray:
    """Cyclic sum over (horizontal slot, horizontal slot, derivative slot)."""
    X = nabla_R
    return X + np.einsum("abdmc->abcdm", X) + np.einsum("abmcd->abcdm", X)


def bianchi_residual(spec: MetricSpec, p: BundlePoint, cfg: DiffConfig = DEFAULT_CONFIG,
                     method: str = "auto") -> float:
    """Max-norm of the cyclic sum of ``nabla R`` over its horizontal slots."""
    # for n = 2 every cyclic triple repeats an index and cancels identically
    return float(np.max(np.abs(bianchi_cyclic(evaluate(NABLA_R, spec, p, cfg, method)))))


def einstein_residual(spec: MetricSpec, p: BundlePoint, cfg: DiffConfig = DEFAULT_CONFIG) -> float:
    """Max-norm of ``Ric - Scal/n g``."""
    return float(np.max(np.abs(trace_free_ricci(spec, p, cfg))))


def schur_statistic(spec: MetricSpec, p: BundlePoint, cfg: DiffConfig = DEFAULT_CONFIG,
                    method: str = "auto") -> float:
    """``max_k |nabla_k Scal|``."""
    return float(np.max(np.abs(evaluate(NABLA_SCAL, spec, p, cfg, method))))


@dataclass(frozen=True)
class EinsteinFlags:
    einstein_residual: float
    r_einstein: bool
    ricci_flat: bool
    ricci_constant: bool
    scal: float


def einstein_flags(spec: MetricSpec, points, cfg: DiffConfig = DEFAULT_CONFIG,
                   tol: float = 1e-6, schur_tol: float = 1e-5) -> EinsteinFlags:
    """Classify a metric over sample points as R-Einstein / Ricci-flat / Ricci-constant.

    Ricci-constant means R-Einstein with a horizontal scalar curvature that
    is the same constant at every sample point.
    """
    res, ric, scals = 0.0, 0.0, []
    for p in points:
        cb = curvature_bundle(spec, p, cfg)
        res = max(res, float(np.max(np.abs(cb.E))))
        ric = max(ric, float(np.max(np.abs(cb.Ric))))
        scals.append(cb.Scal)
    einstein = res <= tol
    spread = (max(scals) - min(scals)) if scals else 0.0
    return EinsteinFlags(res, einstein, ric <= tol, einstein and spread <= schur_tol * max(1.0, abs(scals[0])),
                         float(np.mean(scals)) if scals else 0.0)
