"""Independent reference computations used by the tests.

Nothing here imports the engine's differentiation code: the classical
Riemannian oracle differentiates symbolic metric components with sympy and
assembles Christoffel symbols and curvature with plain numpy; the Finsler
oracles use finite differences of hand-written ``F`` functions.
"""

from __future__ import annotations

import functools

import numpy as np
import sympy as sp


class RiemannOracle:
    """Classical Levi-Civita geometry of ``g_ij(x)`` given as sympy expressions."""

    def __init__(self, matrix, symbols):
        self.x = list(symbols)
        n = len(self.x)
        self.n = n
        G = sp.Matrix(matrix)
        d1 = [[[sp.diff(G[i, j], self.x[k]) for k in range(n)] for j in range(n)] for i in range(n)]
        d2 = [[[[sp.diff(d1[i][j][k], self.x[l]) for l in range(n)] for k in range(n)]
               for j in range(n)] for i in range(n)]
        self._g = sp.lambdify(self.x, G.tolist(), "numpy")
        self._d1 = sp.lambdify(self.x, d1, "numpy")
        self._d2 = sp.lambdify(self.x, d2, "numpy")

    @functools.lru_cache(maxsize=None)
    def _at(self, x: tuple):
        g = np.array(self._g(*x), dtype=float)
        dg = np.array(self._d1(*x), dtype=float)    # [i, j, k] = d_k g_ij
        ddg = np.array(self._d2(*x), dtype=float)   # [i, j, k, l] = d_l d_k g_ij
        gi = np.linalg.inv(g)
        # first-kind symbols and their derivatives
        low = 0.5 * (np.einsum("jlk->ljk", dg) + np.einsum("lkj->ljk", dg) - np.einsum("jkl->ljk", dg))
        dlow = 0.5 * (np.einsum("jlkm->ljkm", ddg) + np.einsum("lkjm->ljkm", ddg)
                      - np.einsum("jklm->ljkm", ddg))
        Gam = np.einsum("il,ljk->ijk", gi, low)
        dgi = -np.einsum("ia,abm,bl->ilm", gi, dg, gi)
        dGam = np.einsum("ilm,ljk->ijkm", dgi, low) + np.einsum("il,ljkm->ijkm", gi, dlow)
        # Rup[m, a, j, k] = R(d_j, d_k) d_a components
        Rup = (np.einsum("mkaj->majk", dGam) - np.einsum("mjak->majk", dGam)
               + np.einsum("mjp,pka->majk", Gam, Gam) - np.einsum("mkp,pja->majk", Gam, Gam))
        return g, gi, Gam, Rup

    def metric(self, x):
        return self._at(tuple(map(float, x)))[0]

    def christoffel(self, x):
        """``Gamma[i, j, k] = Gamma^i_jk``."""
        return self._at(tuple(map(float, x)))[2]

    def riemann_lowered(self, x):
        """``R[a, b, c, d] = g(R(d_d, d_c) d_a, d_b)`` (the engine's slot order)."""
        g, _, _, Rup = self._at(tuple(map(float, x)))
        return np.einsum("bm,madc->abcd", g, Rup)

    def ricci(self, x):
        return np.einsum("jajk->ak", self._at(tuple(map(float, x)))[3])

    def scalar(self, x):
        gi = self._at(tuple(map(float, x)))[1]
        return float(np.einsum("ij,ij->", gi, self.ricci(x)))


def sphere_chart(n: int, r: float = 1.0) -> RiemannOracle:
    x = sp.symbols(f"x1:{n + 1}")
    conf = 4 * sp.Float(r) ** 4 / (sp.Float(r) ** 2 + sum(v ** 2 for v in x)) ** 2
    return RiemannOracle(sp.eye(n) * conf, x)


def hyperbolic_chart(n: int, r: float = 1.0) -> RiemannOracle:
    x = sp.symbols(f"x1:{n + 1}")
    conf = 4 * sp.Float(r) ** 4 / (sp.Float(r) ** 2 - sum(v ** 2 for v in x)) ** 2
    return RiemannOracle(sp.eye(n) * conf, x)


def polynomial_2d() -> RiemannOracle:
    x1, x2 = sp.symbols("x1 x2")
    return RiemannOracle([[1 + sp.Rational(3, 10) * x1 ** 2, 0],
                          [0, 1 + sp.Rational(1, 5) * x1 * x2 + sp.Rational(1, 10) * x2 ** 2]], (x1, x2))


def polynomial_3d() -> RiemannOracle:
    x1, x2, x3 = sp.symbols("x1 x2 x3")
    R = sp.Rational
    return RiemannOracle([
        [1 + R(1, 5) * x2 ** 2, R(1, 10) * x3, 0],
        [R(1, 10) * x3, R(3, 2) + R(1, 5) * x1, R(1, 20) * x1 * x2],
        [0, R(1, 20) * x1 * x2, 1 + R(1, 10) * x1 ** 2 + R(1, 10) * x3 ** 2],
    ], (x1, x2, x3))


# ---------------------------------------------------------------------------
# finite-difference oracles for Finsler quantities

def fd_hessian(f, y, h=1e-3):
    """Fourth-order central-difference Hessian of ``f`` at ``y``."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    H = np.empty((n, n))
    e = np.eye(n) * h
    for i in range(n):
        for j in range(n):
            def d(a, b):
                return f(y + a * e[i] + b * e[j])
            # 4th-order mixed stencil from the 1D 5-point weights
            w = {-2: 1 / 12, -1: -8 / 12, 1: 8 / 12, 2: -1 / 12}
            H[i, j] = sum(wa * wb * d(a, b) for a, wa in w.items() for b, wb in w.items()) / (h * h)
    return H


def fd_gradient(f, y, h=1e-4):
    y = np.asarray(y, dtype=float)
    out = []
    for i in range(len(y)):
        e = np.zeros_like(y)
        e[i] = h
        out.append((8 * (f(y + e) - f(y - e)) - (f(y + 2 * e) - f(y - 2 * e))) / (12 * h))
    return np.array(out)


def randers_F(b):
    """``F = |y| + b.y`` (Euclidean alpha, constant 1-form)."""
    b = np.asarray(b, dtype=float)
    return lambda y: float(np.sqrt(y @ y) + b @ y)


class SprayOracle:
    """Flag-curvature data of ``F(x, y)`` given as a sympy expression.

    The spray and its first and second partials are derived symbolically
    from ``F^2``; the Riemann curvature of the spray is then assembled
    numerically as
    ``R^i_k = 2 dG^i/dx^k - y^j d2G^i/dx^j dy^k + 2 G^j d2G^i/dy^j dy^k
    - dG^i/dy^j dG^j/dy^k``
    and ``Ric(x, y) = R^m_m``.
    """

    def __init__(self, F, xs, ys):
        n = len(xs)
        F2 = F ** 2
        g = sp.Matrix(n, n, lambda i, j: sp.diff(F2, ys[i], ys[j]) / 2)
        gi = g.inv(method="ADJ")
        rhs = [sum(sp.diff(F2, xs[k], ys[l]) * ys[k] for k in range(n)) - sp.diff(F2, xs[l]) for l in range(n)]
        G = [sum(gi[i, l] * rhs[l] for l in range(n)) / 4 for i in range(n)]
        dx = [[sp.diff(G[i], v) for v in xs] for i in range(n)]
        dy = [[sp.diff(G[i], v) for v in ys] for i in range(n)]
        dxy = [[[sp.diff(dx[i][j], v) for v in ys] for j in range(n)] for i in range(n)]
        dyy = [[[sp.diff(dy[i][j], v) for v in ys] for j in range(n)] for i in range(n)]
        args = list(xs) + list(ys)
        self._f = sp.lambdify(args, [G, dx, dy, dxy, dyy, F2], "numpy", cse=True)

    def spray(self, x, y):
        return np.array(self._f(*x, *y)[0], dtype=float)

    def flag_ricci(self, x, y):
        """``Ric(x, y) / F^2``: the average flag curvature times ``n - 1``."""
        G, dx, dy, dxy, dyy, F2 = (np.array(a, dtype=float) for a in self._f(*x, *y))
        y = np.asarray(y, dtype=float)
        R = (2 * dx - np.einsum("j,ijk->ik", y, dxy) + 2 * np.einsum("j,ijk->ik", G, dyy)
             - dy @ dy)
        return float(np.trace(R)) / float(F2)


def randers_2d_spray() -> SprayOracle:
    x1, x2, y1, y2 = sp.symbols("x1 x2 y1 y2")
    R = sp.Rational
    F = sp.sqrt(y1 ** 2 + y2 ** 2) + R(2, 5) * x2 * y1 + (R(2, 5) * x1 + R(3, 10) * x2 ** 2) * y2
    return SprayOracle(F, (x1, x2), (y1, y2))
