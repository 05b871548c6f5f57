"""Geodesic spray, nonlinear connection and Chern connection coefficients.

Everything is computed from jets of ``F^2`` expanded at the base point, so
the connection quantities come out as jets themselves and can be
differentiated further (the curvature module relies on this).

The construction is spray-first::

    G^i   = 1/4 g^il (d2F2/dx^k dy^l y^k - dF2/dx^l)
    N^i_j = dG^i/dy^j
    Gamma^i_jk = 1/2 g^il (d_k g_jl + d_j g_lk - d_l g_jk),  d_k = d/dx^k - N^m_k d/dy^m

and the identity ``N^i_j = Gamma^i_jk y^k`` is checked at runtime.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets as J
from .bundle import BundlePoint
from .errors import ConsistencyError, InvalidMetricError
from .jets import DEFAULT_CONFIG, DiffConfig, Jet
from .metrics import MetricSpec

CONSISTENCY_TOL = 1e-6


def grad(t: Jet, variables) -> Jet:
    """Stack ``d t / d v`` for ``v`` in ``variables`` along a new last tensor axis."""
    parts = [t.d(v).c for v in variables]
    return Jet(np.stack(parts, axis=-2), t.nvars, t.order - 1)


def inverse(g: Jet) -> Jet:
    """Jet of the matrix inverse, via the (finite) Neumann series of the nilpotent part."""
    g0 = np.asarray(g.value)
    a0 = np.linalg.inv(g0)
    h = g - g0
    step = J.einsum("ij,jk->ik", -a0, h)
    term = Jet.constant(a0, g.nvars, g.order)
    total = term
    for _ in range(g.order):
        term = J.einsum("ij,jk->ik", step, term)
        total = total + term
    return total


def horizontal_delta(t: Jet, N: Jet, n: int) -> Jet:
    """``delta_k t`` for all ``k`` (new last axis); order drops by one."""
    dx = grad(t, range(n))
    dy = grad(t, range(n, 2 * n))
    sub = "".join(chr(ord("a") + i) for i in range(len(t.shape)))
    return dx - J.einsum(f"mk,{sub}m->{sub}k", N, dy)


@dataclass(frozen=True)
class LocalJets:
    """Jets of the metric and connection around one bundle point.

    ``order`` is the order of the ``F^2`` jet; ``g`` and ``G`` carry
    ``order - 2``, ``N`` and ``Gamma`` carry ``order - 3``.
    """

    spec: MetricSpec
    point: BundlePoint
    order: int
    F2: Jet
    g: Jet
    g_inv: Jet
    G: Jet
    N: Jet
    Gamma: Jet


@functools.lru_cache(maxsize=256)
def local_jets(spec: MetricSpec, p: BundlePoint, order: int) -> LocalJets:
    """Expand ``F^2`` to ``order`` at ``p`` and derive the connection jets."""
    spec.check_point(p)
    n = spec.dim
    z = J.lift(p, range(2 * n), order, max_order=order)
    x, y = z[:n], z[n:]
    F2 = spec.F2(x, y)
    if not isinstance(F2, Jet):
        F2 = Jet.constant(F2, 2 * n, order)
    if not F2.value > 0:
        raise InvalidMetricError(f"F^2 = {F2.value} is not positive at {p}")
    xs, ys = range(n), range(n, 2 * n)

    dyF2 = grad(F2, ys)
    g = grad(dyF2, ys) * 0.5
    g = Jet(0.5 * (g.c + np.swapaxes(g.c, 0, 1)), g.nvars, g.order)
    eig = np.linalg.eigvalsh(g.value)
    if eig[0] <= 0:
        raise InvalidMetricError(
            f"fundamental tensor not positive definite at {p}: smallest eigenvalue {eig[0]:.6g}")
    g_inv = inverse(g)

    dxF2 = grad(F2, xs)
    mixed = grad(dxF2, ys)  # [k, l] = d2F2 / dx^k dy^l
    yv = Jet.stack(y)
    bracket = J.einsum("kl,k->l", mixed, yv) - dxF2
    G = 0.25 * J.einsum("il,l->i", g_inv, bracket)
    N = grad(G, ys)  # [i, j] = dG^i/dy^j

    D = horizontal_delta(g, N, n)  # [a, b, c] = delta_c g_ab
    T = J.transpose(D, (0, 2, 1)) + J.transpose(D, (2, 1, 0)) - D  # [j, k, l]
    Gamma = 0.5 * J.einsum("il,jkl->ijk", g_inv, T)
    return LocalJets(spec, p, order, F2, g, g_inv, G, N, Gamma)


@dataclass(frozen=True)
class ConnectionData:
    G: np.ndarray
    N: np.ndarray
    Gamma: np.ndarray
    base: BundlePoint


def _order(cfg: DiffConfig) -> int:
    # the curvature pipeline needs four derivatives; share its cache entry
    return 4


def spray(spec: MetricSpec, p: BundlePoint, cfg: DiffConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Spray coefficients ``G^i`` at ``p``."""
    return np.asarray(local_jets(spec, p, _order(cfg)).G.value)


def consistency_residual(N: np.ndarray, Gamma: np.ndarray, y) -> float:
    return float(np.max(np.abs(N - np.einsum("ijk,k->ij", Gamma, np.asarray(y)))))


def chern_coefficients(spec: MetricSpec, p: BundlePoint,
                       cfg: DiffConfig = DEFAULT_CONFIG) -> ConnectionData:
    """Spray, nonlinear connection and Chern coefficients ``Gamma[i, j, k] = Gamma^i_jk``.

    Raises
    ------
    ConsistencyError
        If ``N^i_j`` and ``Gamma^i_jk y^k`` disagree by more than 1e-6
        (relative to the size of ``N``).
    """
    lj = local_jets(spec, p, _order(cfg))
    N = np.asarray(lj.N.value)
    Gamma = np.asarray(lj.Gamma.value)
    res = consistency_residual(N, Gamma, p.y)
    scale = max(1.0, float(np.max(np.abs(N))))
    if res > CONSISTENCY_TOL * scale:
        raise ConsistencyError(f"N - Gamma.y residual {res:.3g} at {p}")
    return ConnectionData(np.asarray(lj.G.value), N, Gamma, p)


def horizontal_direction(N: np.ndarray, k: int) -> np.ndarray:
    """``delta/delta x^k`` as a vector in ``(x, y)`` coordinates."""
    n = N.shape[0]
    v = np.zeros(2 * n)
    v[k] = 1.0
    v[n:] = -N[:, k]
    return v


def delta_derivative(spec: MetricSpec, p: BundlePoint, field: Callable, k: int,
                     cfg: DiffConfig = DEFAULT_CONFIG, on_jets: bool = True):
    """Apply ``delta/delta x^k`` to a scalar or tensor field.

    With ``on_jets=True`` the field is called as ``field(x, y)`` on lists of
    first-order jets and differentiated exactly.  With ``on_jets=False`` it
    is called as ``field(point)`` and differentiated by finite differences
    along the horizontal direction.
    """
    n = spec.dim
    N = chern_coefficients(spec, p, cfg).N
    if not on_jets:
        return J.outer_fd(field, p, horizontal_direction(N, k), cfg)
    z = J.lift(p, range(2 * n), 1, max_order=1)
    val = field(z[:n], z[n:])
    if not isinstance(val, Jet):
        return np.zeros(np.shape(val)) if np.ndim(val) else 0.0
    out = val.d(k).value - sum(N[m, k] * val.d(n + m).value for m in range(n))
    return out
