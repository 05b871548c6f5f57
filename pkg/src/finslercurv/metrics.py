"""Finsler metric specifications, the metric zoo, and fiber-derivative tensors.

A :class:`MetricSpec` is a declarative, JSON-serializable description
(``family`` + ``dim`` + ``params``).  Each family knows how to evaluate
``F^2(x, y)`` on jets, so every quantity downstream is obtained by exact
differentiation of that single expression.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .bundle import BundlePoint, TensorValue
from .errors import ChartDomainError, InvalidMetricError, SpecError
from .jets import DEFAULT_CONFIG, DiffConfig, Jet

__all__ = [
    "MetricSpec", "Poly", "FundamentalTensor", "register_family", "family_impl",
    "euclidean", "riemannian_quadratic", "round_sphere", "hyperbolic", "randers",
    "minkowski_quartic", "eval_F", "fundamental_tensor", "cartan_tensor",
    "mean_cartan_norm", "metric_from_dict", "BundlePoint", "TensorValue",
]


# ---------------------------------------------------------------------------
# polynomials in the chart coordinates

class Poly:
    """Polynomial ``sum_t coef_t * prod_i x_i**e_ti``.

    JSON form: a bare number (constant) or a list of ``[coef, [e_1..e_n]]``.
    """

    def __init__(self, terms: Sequence[tuple[float, Sequence[int]]], nvars: int):
        self.nvars = nvars
        clean = []
        for coef, exps in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars or any(e < 0 for e in exps):
                raise SpecError(f"bad exponent vector {exps} for {nvars} variables")
            clean.append((float(coef), exps))
        self.terms = tuple(clean)

    @classmethod
    def parse(cls, obj, nvars: int) -> "Poly":
        if isinstance(obj, Poly):
            return obj
        if isinstance(obj, (int, float)):
            return cls([(obj, (0,) * nvars)], nvars)
        try:
            return cls([(c, e) for c, e in obj], nvars)
        except (TypeError, ValueError) as exc:
            raise SpecError(f"cannot parse polynomial {obj!r}: {exc}") from exc

    @classmethod
    def constant(cls, c: float, nvars: int) -> "Poly":
        return cls([(c, (0,) * nvars)], nvars)

    @classmethod
    def linear(cls, c0: float, coeffs: Sequence[float]) -> "Poly":
        n = len(coeffs)
        terms = [(c0, (0,) * n)]
        for i, c in enumerate(coeffs):
            if c:
                terms.append((c, tuple(int(j == i) for j in range(n))))
        return cls(terms, n)

    def to_json(self):
        return [[c, list(e)] for c, e in self.terms]

    def __call__(self, xs):
        powers: dict = {}

        def pw(i, e):
            if (i, e) not in powers:
                powers[(i, e)] = xs[i] ** e
            return powers[(i, e)]

        total = 0.0
        for coef, exps in self.terms:
            term = coef
            for i, e in enumerate(exps):
                if e:
                    term = term * pw(i, e)
            total = total + term
        return total

    @property
    def is_constant(self) -> bool:
        return all(not any(e) for _, e in self.terms)


def _parse_matrix(obj, n: int, nvars: int):
    if obj is None:
        return [[Poly.constant(float(i == j), nvars) for j in range(n)] for i in range(n)]
    if len(obj) != n or any(len(row) != n for row in obj):
        raise SpecError(f"matrix must be {n}x{n}")
    return [[Poly.parse(obj[i][j], nvars) for j in range(n)] for i in range(n)]


def _quadratic(a, y):
    """``a_ij y^i y^j`` with ``a`` symmetrized on the fly."""
    n = len(y)
    total = 0.0
    for i in range(n):
        for j in range(i, n):
            aij = a[i][i] if i == j else a[i][j] + a[j][i]
            total = total + aij * (y[i] * y[j])
    return total


def _numeric_matrix(a, x) -> np.ndarray:
    m = np.array([[float(np.asarray(p(x))) for p in row] for row in a])
    return 0.5 * (m + m.T)


# ---------------------------------------------------------------------------
# metric specifications and the family registry

_FAMILIES: dict[str, type] = {}


def register_family(name: str):
    def deco(cls):
        cls.name = name
        _FAMILIES[name] = cls
        return cls
    return deco


def _canonical(obj):
    if isinstance(obj, MetricSpec):
        return obj.to_dict()
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


class MetricSpec:
    """Immutable description of a Finsler metric in one chart."""

    __slots__ = ("family", "dim", "params", "_key")

    def __init__(self, family: str, dim: int, params: dict | None = None):
        if family not in _FAMILIES:
            _load_extra_families()
        if family not in _FAMILIES:
            raise SpecError(f"unknown metric family {family!r}; known: {sorted(_FAMILIES)}")
        if int(dim) != dim or dim < 1:
            raise SpecError(f"dim must be a positive integer, got {dim!r}")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "dim", int(dim))
        params = _canonical(params or {})
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "_key", json.dumps(
            {"family": family, "dim": int(dim), "params": params}, sort_keys=True))
        family_impl(self)  # validate eagerly

    def __setattr__(self, name, value):
        raise AttributeError("MetricSpec is immutable")

    def __reduce__(self):
        return (MetricSpec, (self.family, self.dim, self.params))

    def __eq__(self, other):
        return isinstance(other, MetricSpec) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"MetricSpec({self.family!r}, dim={self.dim})"

    @property
    def key(self) -> str:
        return self._key

    def to_dict(self) -> dict:
        return {"family": self.family, "dim": self.dim, "params": json.loads(json.dumps(self.params))}

    # evaluation hooks used by the rest of the engine
    def F2(self, x, y):
        return family_impl(self).F2(x, y)

    def F(self, x, y):
        return J.jet_sqrt(self.F2(x, y))

    def check_point(self, p: BundlePoint) -> None:
        if p.dim != self.dim:
            raise ChartDomainError(f"point has dimension {p.dim}, metric has {self.dim}")
        family_impl(self).check_point(p)

    def default_box(self) -> list[tuple[float, float]]:
        return family_impl(self).default_box()

    def fiber_blocks(self) -> list[slice]:
        return family_impl(self).fiber_blocks()

    @property
    def is_quadratic(self) -> bool:
        """True when the family is Riemannian by construction."""
        return family_impl(self).quadratic


@functools.lru_cache(maxsize=512)
def family_impl(spec: MetricSpec):
    return _FAMILIES[spec.family](spec.dim, spec.params)


def _load_extra_families():
    # warped/conformal register themselves on import
    from . import conformal, warped  # noqa: F401


def metric_from_dict(obj: dict) -> MetricSpec:
    """Build a spec from its JSON form; accepts the cylinder shorthand."""
    if not isinstance(obj, dict):
        raise SpecError("metric description must be a JSON object")
    if "cylinder" in obj:
        from .warped import cylinder
        fiber = obj["cylinder"].get("fiber") if isinstance(obj["cylinder"], dict) else None
        if fiber is None:
            raise SpecError("cylinder shorthand needs a 'fiber' metric")
        return cylinder(metric_from_dict(fiber))
    if "base" in obj and "fiber" in obj and "family" not in obj:
        from .warped import WarpFunction, build_warped
        base = metric_from_dict(obj["base"])
        return build_warped(base, metric_from_dict(obj["fiber"]),
                            WarpFunction.from_dict(obj.get("warp", {"kind": "constant", "coeffs": [1.0]}), base.dim))
    missing = {"family", "dim"} - set(obj)
    if missing:
        raise SpecError(f"metric description lacks field(s) {sorted(missing)}")
    return MetricSpec(obj["family"], obj["dim"], obj.get("params", {}))


class _Family:
    quadratic = False

    def __init__(self, dim: int, params: dict):
        self.dim = dim
        self.params = params

    def check_point(self, p: BundlePoint) -> None:
        pass

    def default_box(self):
        return [(-1.0, 1.0)] * self.dim

    def fiber_blocks(self):
        return [slice(0, self.dim)]


@register_family("euclidean")
class _Euclidean(_Family):
    quadratic = True

    def F2(self, x, y):
        return sum((yi * yi for yi in y[1:]), y[0] * y[0])


@register_family("riemannian_quadratic")
class _Quadratic(_Family):
    """``F^2 = a_ij(x) y^i y^j`` with polynomial entries ``a_ij``."""

    quadratic = True

    def __init__(self, dim, params):
        super().__init__(dim, params)
        self.a = _parse_matrix(params.get("matrix"), dim, dim)
        box = params.get("box")
        self.box = [tuple(b) for b in box] if box else None

    def F2(self, x, y):
        a = [[p(x) for p in row] for row in self.a]
        return _quadratic(a, y)

    def check_point(self, p):
        eig = np.linalg.eigvalsh(_numeric_matrix(self.a, p.x))
        if eig[0] <= 0:
            raise InvalidMetricError(
                f"quadratic form not positive definite at x={p.x}: eigenvalue {eig[0]:.3g}")

    def default_box(self):
        return self.box or super().default_box()


@register_family("round_sphere_chart")
class _Sphere(_Family):
    """Stereographic chart of the round sphere of radius ``r``:
    ``g = 4 r^4 |dx|^2 / (r^2 + |x|^2)^2`` (sectional curvature ``1/r^2``)."""

    quadratic = True

    def __init__(self, dim, params):
        super().__init__(dim, params)
        self.r = float(params.get("radius", 1.0))
        if self.r <= 0:
            raise SpecError("sphere radius must be positive")

    def F2(self, x, y):
        r2 = self.r * self.r
        den = sum((xi * xi for xi in x), 0.0) + r2
        yy = sum((yi * yi for yi in y[1:]), y[0] * y[0])
        return 4.0 * r2 * r2 * yy / (den * den)

    def default_box(self):
        return [(-self.r, self.r)] * self.dim


@register_family("hyperbolic_chart")
class _Hyperbolic(_Family):
    """Poincare-ball chart of curvature ``-1/r^2``, domain ``|x| < r``."""

    quadratic = True

    def __init__(self, dim, params):
        super().__init__(dim, params)
        self.r = float(params.get("radius", 1.0))
        if self.r <= 0:
            raise SpecError("hyperbolic radius must be positive")

    def F2(self, x, y):
        r2 = self.r * self.r
        den = r2 - sum((xi * xi for xi in x[1:]), x[0] * x[0])
        yy = sum((yi * yi for yi in y[1:]), y[0] * y[0])
        return 4.0 * r2 * r2 * yy / (den * den)

    def check_point(self, p):
        if np.dot(p.x, p.x) >= self.r ** 2:
            raise ChartDomainError(f"x={p.x} outside the Poincare ball of radius {self.r}")

    def default_box(self):
        h = 0.6 * self.r / math.sqrt(self.dim)
        return [(-h, h)] * self.dim


@register_family("randers")
class _Randers(_Family):
    """``F = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i`` with ``|b|_a < 1``."""

    def __init__(self, dim, params):
        super().__init__(dim, params)
        self.a = _parse_matrix(params.get("alpha"), dim, dim)
        b = params.get("b")
        if b is None or len(b) != dim:
            raise SpecError(f"randers needs a 1-form 'b' with {dim} components")
        self.b = [Poly.parse(bi, dim) for bi in b]
        box = params.get("box")
        self.box = [tuple(v) for v in box] if box else None

    def F2(self, x, y):
        a = [[p(x) for p in row] for row in self.a]
        alpha = J.jet_sqrt(_quadratic(a, y))
        beta = sum((self.b[i](x) * y[i] for i in range(1, self.dim)), self.b[0](x) * y[0])
        f = alpha + beta
        return f * f

    def b_norm(self, x) -> float:
        a = _numeric_matrix(self.a, x)
        b = np.array([float(np.asarray(bi(list(x)))) for bi in self.b])
        return float(np.sqrt(b @ np.linalg.solve(a, b)))

    def check_point(self, p):
        eig = np.linalg.eigvalsh(_numeric_matrix(self.a, p.x))
        if eig[0] <= 0:
            raise InvalidMetricError(f"Randers base form not positive definite at x={p.x}")
        nb = self.b_norm(p.x)
        if nb >= 1.0:
            raise InvalidMetricError(f"Randers convexity violated at x={p.x}: |b|_alpha = {nb:.4g} >= 1")

    def default_box(self):
        return self.box or super().default_box()


@register_family("minkowski_norm")
class _Minkowski(_Family):
    """x-independent quartic norm ``F = (sum_i w_i (y^i)^4 + mix |y|^4)^(1/4)``.

    ``mix = 0`` is the pure l4 norm, which is not strongly convex on the
    coordinate axes; any ``mix > 0`` is.
    """

    def __init__(self, dim, params):
        super().__init__(dim, params)
        kind = params.get("kind", "quartic")
        if kind != "quartic":
            raise SpecError(f"unsupported minkowski_norm kind {kind!r}")
        self.mix = float(params.get("mix", 1.0))
        self.w = [float(v) for v in params.get("weights", [1.0] * dim)]
        if len(self.w) != dim or min(self.w) <= 0 or self.mix < 0:
            raise SpecError("minkowski_norm needs positive weights and mix >= 0")

    def F2(self, x, y):
        sq = [yi * yi for yi in y]
        quart = sum((self.w[i] * (sq[i] * sq[i]) for i in range(1, self.dim)), self.w[0] * (sq[0] * sq[0]))
        if self.mix:
            s = sum(sq[1:], sq[0])
            quart = quart + self.mix * (s * s)
        return J.jet_sqrt(quart)


# convenience constructors -------------------------------------------------

def euclidean(n: int) -> MetricSpec:
    return MetricSpec("euclidean", n)


def riemannian_quadratic(matrix, box=None) -> MetricSpec:
    n = len(matrix)
    mat = [[Poly.parse(e, n).to_json() for e in row] for row in matrix]
    params = {"matrix": mat}
    if box:
        params["box"] = [list(b) for b in box]
    return MetricSpec("riemannian_quadratic", n, params)


def round_sphere(n: int, radius: float = 1.0) -> MetricSpec:
    return MetricSpec("round_sphere_chart", n, {"radius": radius})


def hyperbolic(n: int, radius: float = 1.0) -> MetricSpec:
    return MetricSpec("hyperbolic_chart", n, {"radius": radius})


def randers(b, alpha=None, box=None) -> MetricSpec:
    n = len(b)
    params = {"b": [Poly.parse(bi, n).to_json() for bi in b]}
    if alpha is not None:
        params["alpha"] = [[Poly.parse(e, n).to_json() for e in row] for row in alpha]
    if box:
        params["box"] = [list(v) for v in box]
    return MetricSpec("randers", n, params)


def minkowski_quartic(n: int, mix: float = 1.0, weights=None) -> MetricSpec:
    params = {"kind": "quartic", "mix": mix}
    if weights is not None:
        params["weights"] = list(weights)
    return MetricSpec("minkowski_norm", n, params)


# ---------------------------------------------------------------------------
# evaluations

def _y_jets(spec: MetricSpec, p: BundlePoint, order: int) -> tuple[list, list]:
    n = spec.dim
    z = J.lift(p, range(n, 2 * n), order, max_order=order)
    return z[:n], z[n:]


def eval_F(spec: MetricSpec, p: BundlePoint) -> float:
    spec.check_point(p)
    f2 = spec.F2(list(p.x), list(p.y))
    f2 = float(np.asarray(f2))
    if not f2 > 0:
        raise InvalidMetricError(f"F^2 = {f2} is not positive at {p}")
    return math.sqrt(f2)


@dataclass(frozen=True)
class FundamentalTensor:
    g: np.ndarray
    g_inv: np.ndarray
    F_value: float
    l: np.ndarray
    base: BundlePoint


def _check_positive(g: np.ndarray, p: BundlePoint) -> None:
    eig = np.linalg.eigvalsh(g)
    if eig[0] <= 0:
        raise InvalidMetricError(
            f"fundamental tensor not positive definite at {p}: smallest eigenvalue {eig[0]:.6g}")


def fundamental_tensor(spec: MetricSpec, p: BundlePoint) -> FundamentalTensor:
    """``g_ij = (1/2) d^2 F^2 / dy^i dy^j`` together with its inverse."""
    spec.check_point(p)
    n = spec.dim
    x, y = _y_jets(spec, p, 2)
    f2 = spec.F2(x, y)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            g[i, j] = g[j, i] = 0.5 * f2.partial(alpha)
    _check_positive(g, p)
    F = math.sqrt(f2.value)
    return FundamentalTensor(g, np.linalg.inv(g), F, p.ya / F, p)


def cartan_tensor(spec: MetricSpec, p: BundlePoint) -> TensorValue:
    """``A_ijk = (F/2) dg_ij/dy^k`` as a ``(3,0;0)`` tensor."""
    spec.check_point(p)
    n = spec.dim
    x, y = _y_jets(spec, p, 3)
    f2 = spec.F2(x, y)
    F = math.sqrt(f2.value)
    A = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                alpha = [0] * n
                for v in (i, j, k):
                    alpha[v] += 1
                A[i, j, k] = 0.25 * F * f2.partial(alpha)
    return TensorValue((3, 0, 0), A, p)


def mean_cartan_norm(spec: MetricSpec, p: BundlePoint) -> float:
    """g-norm of the mean Cartan form ``I_i = g^jk A_ijk`` (zero iff Riemannian)."""
    ft = fundamental_tensor(spec, p)
    A = cartan_tensor(spec, p).components
    I = np.einsum("jk,ijk->i", ft.g_inv, A)
    return float(math.sqrt(max(I @ ft.g_inv @ I, 0.0)))
