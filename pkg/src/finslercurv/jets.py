"""Truncated multivariate Taylor arithmetic ("jets").

A :class:`Jet` stores the Taylor coefficients ``c[alpha] = d^alpha f / alpha!``
of a smooth function of ``nvars`` variables for every multi-index ``alpha``
of total degree ``<= order``.  Coefficients live in the last axis of a numpy
array, so one ``Jet`` can also hold a whole tensor of jets (leading axes are
tensor slots).  Products are exact up to the truncation order, which makes
extracted partial derivatives exact for polynomials and accurate to rounding
for every composition of the supported elementary functions.

An outer finite-difference layer (:func:`outer_fd`) differentiates fields
whose derivative order exceeds what the configured jet order carries.
"""

from __future__ import annotations

import functools
import itertools
import math
import string
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bundle import BundlePoint, TensorValue
from .errors import CapabilityError, JetDomainError, StencilError

FD_SCHEMES = ("central_2", "central_4_richardson")


@dataclass(frozen=True)
class DiffConfig:
    jet_order: int = 4
    fd_step: float = 1e-4
    fd_scheme: str = "central_4_richardson"

    def __post_init__(self):
        if int(self.jet_order) != self.jet_order or self.jet_order < 2:
            raise ValueError(f"jet_order must be an integer >= 2, got {self.jet_order}")
        if not 1e-8 < self.fd_step < 1e-1:
            raise ValueError(f"fd_step must lie in (1e-8, 1e-1), got {self.fd_step}")
        if self.fd_scheme not in FD_SCHEMES:
            raise ValueError(f"fd_scheme must be one of {FD_SCHEMES}, got {self.fd_scheme!r}")


DEFAULT_CONFIG = DiffConfig()


# ---------------------------------------------------------------------------
# monomial bookkeeping

@functools.lru_cache(maxsize=None)
def _monomials(nvars: int, order: int):
    """Multi-indices of total degree <= order, graded by degree.

    The ordering within a degree does not depend on ``order``, so the basis
    of a lower order is always a prefix of the basis of a higher one.
    """
    monos = []
    for deg in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for v in combo:
                alpha[v] += 1
            monos.append(tuple(alpha))
    return tuple(monos)


def ncoef(nvars: int, order: int) -> int:
    return math.comb(nvars + order, order)


@functools.lru_cache(maxsize=None)
def _index(nvars: int, order: int) -> dict:
    return {m: i for i, m in enumerate(_monomials(nvars, order))}


@functools.lru_cache(maxsize=None)
def _mul_table(nvars: int, order: int):
    monos = _monomials(nvars, order)
    index = _index(nvars, order)
    left, right, target = [], [], []
    for i, mi in enumerate(monos):
        room = order - sum(mi)
        for j in range(ncoef(nvars, room)):
            mj = monos[j]
            left.append(i)
            right.append(j)
            target.append(index[tuple(a + b for a, b in zip(mi, mj))])
    target = np.array(target)
    perm = np.argsort(target, kind="stable")
    starts = np.searchsorted(target[perm], np.arange(len(monos)))
    return np.array(left)[perm], np.array(right)[perm], starts


@functools.lru_cache(maxsize=None)
def _deriv_table(nvars: int, order: int, var: int):
    """Index/factor arrays mapping an order-``order`` jet to its d/d(var)."""
    index = _index(nvars, order)
    src, fac = [], []
    for beta in _monomials(nvars, order - 1):
        up = list(beta)
        up[var] += 1
        src.append(index[tuple(up)])
        fac.append(beta[var] + 1)
    return np.array(src), np.array(fac, dtype=float)


def _free_letter(*subscripts: str) -> str:
    used = set("".join(subscripts))
    for ch in string.ascii_letters:
        if ch not in used:
            return ch
    raise ValueError("no free einsum letter left")


# ---------------------------------------------------------------------------

class Jet:
    """Truncated Taylor expansion (optionally tensor-valued).

    Parameters
    ----------
    c : array_like
        Coefficients with shape ``(*shape, ncoef(nvars, order))``.
    nvars, order : int
        Number of independent variables and truncation order.
    """

    __slots__ = ("c", "nvars", "order")
    __array_priority__ = 100

    def __init__(self, c, nvars: int, order: int):
        c = np.asarray(c, dtype=float)
        if c.shape[-1] != ncoef(nvars, order):
            raise ValueError(
                f"expected {ncoef(nvars, order)} coefficients for nvars={nvars}, "
                f"order={order}; got trailing axis {c.shape[-1]}"
            )
        self.c = c
        self.nvars = nvars
        self.order = order

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (ncoef(nvars, order),))
        c[..., 0] = value
        return cls(c, nvars, order)

    @classmethod
    def variable(cls, value: float, var: int, nvars: int, order: int) -> "Jet":
        c = np.zeros(ncoef(nvars, order))
        c[0] = value
        if order >= 1:
            c[1 + var] = 1.0
        return cls(c, nvars, order)

    @staticmethod
    def stack(jets: Sequence["Jet"], axis: int = 0) -> "Jet":
        order = min(j.order for j in jets)
        nvars = jets[0].nvars
        if axis < 0:
            raise ValueError("negative axes are ambiguous for jet stacks")
        arrs = [j.truncate(order).c for j in jets]
        return Jet(np.stack(arrs, axis=axis), nvars, order)

    # -- introspection ------------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.c.shape[:-1]

    @property
    def value(self):
        v = self.c[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def coeffs(self) -> dict:
        """Scalar jets only: mapping multi-index -> Taylor coefficient."""
        if self.shape:
            raise ValueError("coeffs() is defined for scalar jets")
        return dict(zip(_monomials(self.nvars, self.order), self.c.tolist()))

    def partial(self, alpha: Sequence[int]):
        """Mixed partial derivative ``d^alpha`` at the expansion point."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.nvars:
            raise ValueError(f"multi-index needs {self.nvars} entries")
        if sum(alpha) > self.order:
            raise CapabilityError(
                f"derivative of total order {sum(alpha)} exceeds jet order {self.order}"
            )
        k = _index(self.nvars, self.order)[alpha]
        scale = math.prod(math.factorial(a) for a in alpha)
        v = self.c[..., k] * scale
        return float(v) if v.ndim == 0 else v

    def d(self, var: int) -> "Jet":
        """Exact derivative with respect to one variable (order drops by one)."""
        if self.order < 1:
            raise CapabilityError("cannot differentiate an order-0 jet")
        src, fac = _deriv_table(self.nvars, self.order, var)
        return Jet(self.c[..., src] * fac, self.nvars, self.order - 1)

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise CapabilityError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.c[..., : ncoef(self.nvars, order)], self.nvars, order)

    def __getitem__(self, idx) -> "Jet":
        c = self.c[idx]
        if c.shape[-1:] != self.c.shape[-1:] or c.ndim == 0:
            raise IndexError("indexing must not touch the coefficient axis")
        return Jet(c, self.nvars, self.order)

    def __len__(self):
        return self.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __repr__(self):
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order}, value={self.value!r})"

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, other

    def __add__(self, other):
        a, b = self._coerce(other)
        if isinstance(b, Jet):
            return Jet(a.c + b.c, a.nvars, a.order)
        c = a.c.copy() if np.ndim(b) <= a.c.ndim - 1 else np.broadcast_to(
            a.c, np.shape(b) + a.c.shape[-1:]).copy()
        c[..., 0] = c[..., 0] + b
        return Jet(c, a.nvars, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.nvars, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._coerce(other)
        if isinstance(b, Jet):
            p, q, starts = _mul_table(a.nvars, a.order)
            prod = a.c[..., p] * b.c[..., q]
            return Jet(np.add.reduceat(prod, starts, axis=-1), a.nvars, a.order)
        return Jet(a.c * np.asarray(b, dtype=float)[..., None], a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)):
            if p == 0:
                return Jet.constant(np.ones(self.shape), self.nvars, self.order)
            if p < 0:
                return reciprocal(self ** (-p))
            result, base, e = None, self, int(p)
            while e:
                if e & 1:
                    result = base if result is None else result * base
                e >>= 1
                if e:
                    base = base * base
            return result
        return jet_pow(self, float(p))

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(len(self.shape)))
        return Jet(self.c.sum(axis=axis), self.nvars, self.order)


def as_jet(a, like: Jet) -> Jet:
    if isinstance(a, Jet):
        return a
    return Jet.constant(a, like.nvars, like.order)


def einsum(subscripts: str, a, b):
    """Two-operand ``einsum`` where either operand may be a :class:`Jet`.

    Jet operands contribute a hidden coefficient axis; a product of two jets
    is expanded over the truncated multiplication table.
    """
    ins, out = subscripts.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    z = _free_letter(subscripts)
    if isinstance(a, Jet) and isinstance(b, Jet):
        a, b = a._coerce(b)
        p, q, starts = _mul_table(a.nvars, a.order)
        prod = np.einsum(f"{sa}{z},{sb}{z}->{out}{z}", a.c[..., p], b.c[..., q])
        return Jet(np.add.reduceat(prod, starts, axis=-1), a.nvars, a.order)
    if isinstance(a, Jet):
        return Jet(np.einsum(f"{sa}{z},{sb}->{out}{z}", a.c, np.asarray(b, float)), a.nvars, a.order)
    if isinstance(b, Jet):
        return Jet(np.einsum(f"{sa},{sb}{z}->{out}{z}", np.asarray(a, float), b.c), b.nvars, b.order)
    return np.einsum(subscripts, a, b)


def transpose(a, axes: Sequence[int]):
    """Permute tensor axes of a jet (or of a plain array)."""
    if not isinstance(a, Jet):
        return np.transpose(a, tuple(axes))
    return Jet(np.transpose(a.c, tuple(axes) + (a.c.ndim - 1,)), a.nvars, a.order)


# ---------------------------------------------------------------------------
# elementary functions

def _compose(a: Jet, taylor: np.ndarray) -> Jet:
    """Evaluate ``sum_m taylor[m] * (a - a0)**m`` with Horner's rule.

    ``taylor[m]`` holds ``f^(m)(a0) / m!`` (broadcast over the jet's shape).
    """
    h = Jet(a.c.copy(), a.nvars, a.order)
    h.c[..., 0] = 0.0
    res = Jet.constant(taylor[a.order], a.nvars, a.order)
    for m in range(a.order - 1, -1, -1):
        res = res * h + taylor[m]
    return res


def _check(name, ok, value):
    if not np.all(ok):
        bad = np.asarray(value)[~np.asarray(ok)] if np.ndim(value) else value
        raise JetDomainError(name, np.ravel(bad)[0] if np.ndim(bad) else bad)


def jet_pow(a, p: float):
    if not isinstance(a, Jet):
        return np.power(a, p)
    a0 = np.asarray(a.c[..., 0])
    if float(p).is_integer() and p >= 0:
        return a ** int(p)
    _check("pow", a0 > 0, a0)
    coef = np.empty((a.order + 1,) + a0.shape)
    binom = 1.0
    for m in range(a.order + 1):
        coef[m] = binom * a0 ** (p - m)
        binom *= (p - m) / (m + 1)
    return _compose(a, coef)


def jet_sqrt(a):
    if not isinstance(a, Jet):
        _check("sqrt", np.asarray(a) > 0, a)
        return np.sqrt(a)
    _check("sqrt", a.c[..., 0] > 0, a.c[..., 0])
    return jet_pow(a, 0.5)


def reciprocal(a):
    if not isinstance(a, Jet):
        return 1.0 / a
    a0 = np.asarray(a.c[..., 0])
    _check("reciprocal", a0 != 0, a0)
    coef = np.empty((a.order + 1,) + a0.shape)
    for m in range(a.order + 1):
        coef[m] = (-1.0) ** m / a0 ** (m + 1)
    return _compose(a, coef)


def jet_exp(a):
    if not isinstance(a, Jet):
        return np.exp(a)
    e = np.exp(a.c[..., 0])
    coef = np.array([e / math.factorial(m) for m in range(a.order + 1)])
    return _compose(a, coef)


def jet_log(a):
    if not isinstance(a, Jet):
        _check("log", np.asarray(a) > 0, a)
        return np.log(a)
    a0 = np.asarray(a.c[..., 0])
    _check("log", a0 > 0, a0)
    coef = np.empty((a.order + 1,) + a0.shape)
    coef[0] = np.log(a0)
    for m in range(1, a.order + 1):
        coef[m] = (-1.0) ** (m - 1) / (m * a0 ** m)
    return _compose(a, coef)


def _periodic(a: Jet, cycle) -> Jet:
    a0 = np.asarray(a.c[..., 0])
    vals = [f(a0) for f in cycle]
    coef = np.array([vals[m % len(vals)] / math.factorial(m) for m in range(a.order + 1)])
    return _compose(a, coef)


def jet_sin(a):
    if not isinstance(a, Jet):
        return np.sin(a)
    return _periodic(a, (np.sin, np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t)))


def jet_cos(a):
    if not isinstance(a, Jet):
        return np.cos(a)
    return _periodic(a, (np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin))


def jet_cosh(a):
    if not isinstance(a, Jet):
        return np.cosh(a)
    return _periodic(a, (np.cosh, np.sinh))


def jet_sinh(a):
    if not isinstance(a, Jet):
        return np.sinh(a)
    return _periodic(a, (np.sinh, np.cosh))


# ---------------------------------------------------------------------------

def lift(point: BundlePoint, seed_vars: Sequence[int], order: int,
         cfg: DiffConfig = DEFAULT_CONFIG, max_order: int | None = None) -> list[Jet]:
    """Lift the ``2n`` coordinates ``(x, y)`` of ``point`` to jets.

    Coordinates listed in ``seed_vars`` (indices into ``(x1..xn, y1..yn)``)
    become independent variables, in the order given; the rest are constants.
    Differentiating any composition of the returned jets therefore yields
    partials with respect to exactly the seeded coordinates.
    """
    limit = cfg.jet_order if max_order is None else max_order
    if order > limit:
        raise CapabilityError(f"jet order {order} exceeds configured maximum {limit}")
    seed_vars = list(seed_vars)
    if not seed_vars:
        raise ValueError("seed_vars must be nonempty")
    z = point.z
    if len(set(seed_vars)) != len(seed_vars) or not all(0 <= v < len(z) for v in seed_vars):
        raise ValueError(f"invalid seed variables {seed_vars} for {len(z)} coordinates")
    nv = len(seed_vars)
    slot = {v: i for i, v in enumerate(seed_vars)}
    return [
        Jet.variable(z[k], slot[k], nv, order) if k in slot else Jet.constant(z[k], nv, order)
        for k in range(len(z))
    ]


def _direction_vector(direction, n: int) -> np.ndarray:
    if isinstance(direction, (int, np.integer)):
        if not 0 <= direction < n:
            raise ValueError(f"chart direction {direction} out of range for dimension {n}")
        v = np.zeros(2 * n)
        v[direction] = 1.0
        return v
    v = np.asarray(direction, dtype=float)
    if v.shape != (2 * n,):
        raise ValueError(f"direction vector must have {2 * n} components")
    return v


def outer_fd(field: Callable[[BundlePoint], object], point: BundlePoint, direction,
             cfg: DiffConfig = DEFAULT_CONFIG):
    """Finite-difference directional derivative of a tensor field.

    ``direction`` is a chart index (derivative along ``d/dx^k``) or a vector
    of length ``2n`` in ``(x, y)`` coordinates.  Returns the same kind of
    object the field returns (``TensorValue`` or array).
    """
    v = _direction_vector(direction, point.dim)
    h = cfg.fd_step

    def at(s):
        try:
            shifted = point.shifted(s * v)
            out = field(shifted)
        except Exception as exc:  # noqa: BLE001 - rewrapped with location
            raise StencilError((tuple(point.z + s * v)), exc) from exc
        return out

    samples = {}
    offsets = (1, -1) if cfg.fd_scheme == "central_2" else (1, -1, 2, -2)
    for k in offsets:
        samples[k] = at(k * h)
    proto = samples[1]
    arr = {k: np.asarray(s.components if isinstance(s, TensorValue) else s, dtype=float)
           for k, s in samples.items()}
    if cfg.fd_scheme == "central_2":
        d = (arr[1] - arr[-1]) / (2 * h)
    else:
        d = (8.0 * (arr[1] - arr[-1]) - (arr[2] - arr[-2])) / (12.0 * h)
    if isinstance(proto, TensorValue):
        return TensorValue(proto.signature, d, point)
    return d
