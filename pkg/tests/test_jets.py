import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from finslercurv import jets as J
from finslercurv.bundle import BundlePoint
from finslercurv.errors import CapabilityError, JetDomainError, StencilError
from finslercurv.jets import DiffConfig, Jet

small = st.floats(-2.0, 2.0, allow_nan=False)


def _vars(vals, order):
    return [Jet.variable(v, i, len(vals), order) for i, v in enumerate(vals)]


def _all_partials(expr, syms, point, order):
    """Every mixed partial up to ``order`` from sympy, keyed by multi-index."""
    out = {}
    for alpha in J._monomials(len(syms), order):
        d = expr
        for s, a in zip(syms, alpha):
            if a:
                d = sp.diff(d, s, a)
        out[alpha] = float(d.subs(dict(zip(syms, point))))
    return out


def test_monomial_basis_is_graded_prefix():
    lo, hi = J._monomials(3, 2), J._monomials(3, 4)
    assert hi[:len(lo)] == lo
    assert len(hi) == J.ncoef(3, 4) == 35
    assert [sum(m) for m in hi] == sorted(sum(m) for m in hi)


@settings(max_examples=40, deadline=None)
@given(a=small, b=small, c=st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_polynomials_are_exact(a, b, c):
    x, y = sp.symbols("x y")
    expr = c[0] + c[1] * x * y + c[2] * x ** 3 + c[3] * y ** 4 + c[4] * x ** 2 * y ** 2 + c[5] * x * y ** 3
    X, Y = _vars([a, b], 4)
    jet = c[0] + c[1] * X * Y + c[2] * X ** 3 + c[3] * Y ** 4 + c[4] * X ** 2 * Y ** 2 + c[5] * X * Y ** 3
    ref = _all_partials(expr, (x, y), (a, b), 4)
    for alpha, v in ref.items():
        assert jet.partial(alpha) == pytest.approx(v, rel=1e-12, abs=1e-10)


@pytest.mark.parametrize("name,fj,fs,lo", [
    ("exp", J.jet_exp, sp.exp, -1.0),
    ("log", J.jet_log, sp.log, 0.3),
    ("sqrt", J.jet_sqrt, sp.sqrt, 0.3),
    ("sin", J.jet_sin, sp.sin, -1.0),
    ("cos", J.jet_cos, sp.cos, -1.0),
    ("cosh", J.jet_cosh, sp.cosh, -1.0),
    ("sinh", J.jet_sinh, sp.sinh, -1.0),
    ("recip", J.reciprocal, lambda e: 1 / e, 0.3),
    ("pow", lambda a: J.jet_pow(a, -1.5), lambda e: e ** sp.Rational(-3, 2), 0.3),
])
def test_elementary_functions_match_symbolic_derivatives(name, fj, fs, lo):
    x, y = sp.symbols("x y")
    inner = 1.2 + 0.5 * x + 0.3 * x * y - 0.2 * y ** 2
    point = (0.4 + lo * 0.1, -0.3)
    X, Y = _vars(point, 4)
    jet = fj(1.2 + 0.5 * X + 0.3 * X * Y - 0.2 * Y ** 2)
    for alpha, v in _all_partials(fs(inner), (x, y), point, 4).items():
        assert jet.partial(alpha) == pytest.approx(v, rel=1e-10, abs=1e-10), (name, alpha)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.05, 20.0), b=small)
def test_exp_of_log_is_identity(a, b):
    X, Y = _vars([a, b], 4)
    f = X * X + 0.1 * X * Y + 1.0
    back = J.jet_exp(J.jet_log(f))
    assert np.allclose(back.c, f.c, rtol=1e-10, atol=1e-10 * np.max(np.abs(f.c)))


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.2, 5.0), b=small)
def test_division_inverts_multiplication(a, b):
    X, Y = _vars([a, b], 3)
    f, g = X + Y * Y + 3.0, X * X + 0.5
    assert np.allclose(((f * g) / g).c, f.c, atol=1e-9)


def test_derivative_lowers_order_and_agrees_with_partial():
    X, Y = _vars([0.3, 0.7], 4)
    f = J.jet_exp(X * Y) * J.jet_sin(Y)
    dfx = f.d(0)
    assert dfx.order == 3
    assert dfx.partial((1, 2)) == pytest.approx(f.partial((2, 2)))


def test_tensor_valued_einsum_matches_scalar_products():
    X, Y = _vars([0.2, -0.5], 3)
    A = Jet.stack([Jet.stack([X, Y]), Jet.stack([X * Y, X + 1.0])])
    v = np.array([2.0, -1.0])
    Av = J.einsum("ij,j->i", A, v)
    assert np.allclose(Av[0].c, (2 * X - Y).c)
    AA = J.einsum("ij,jk->ik", A, A)
    assert np.allclose(AA[1][0].c, (X * Y * X + (X + 1.0) * X * Y).c)
    At = J.transpose(A, (1, 0))
    assert np.allclose(At[0][1].c, A[1][0].c)


def test_capability_and_domain_errors():
    X, = _vars([0.5], 2)
    with pytest.raises(CapabilityError):
        X.partial((3,))
    with pytest.raises(CapabilityError):
        X.truncate(3)
    with pytest.raises(JetDomainError):
        J.jet_log(X - 1.0)
    with pytest.raises(JetDomainError):
        J.reciprocal(X * 0.0)
    p = BundlePoint([0.0], [1.0])
    with pytest.raises(CapabilityError):
        J.lift(p, [0], 5, DiffConfig(jet_order=4))


def test_lift_seeds_only_requested_coordinates():
    p = BundlePoint([0.1, 0.2], [1.0, -1.0])
    z = J.lift(p, [2, 0], 2)
    assert z[2].partial((1, 0)) == 1.0 and z[0].partial((0, 1)) == 1.0
    assert z[1].partial((1, 0)) == 0.0 and z[1].value == 0.2


@pytest.mark.parametrize("scheme,tol", [("central_2", 1e-7), ("central_4_richardson", 1e-10)])
def test_outer_fd_accuracy(scheme, tol):
    p = BundlePoint([0.3, -0.2], [1.0, 0.5])
    field = lambda q: np.array([math.sin(q.x[0]) * q.y[1], q.x[1] ** 3])  # noqa: E731
    d = J.outer_fd(field, p, 0, DiffConfig(fd_step=1e-3 if scheme != "central_2" else 1e-5,
                                           fd_scheme=scheme))
    assert np.allclose(d, [math.cos(0.3) * 0.5, 0.0], atol=tol)


def test_outer_fd_reports_failing_stencil_point():
    p = BundlePoint([0.0], [1.0])

    def field(q):
        if q.x[0] > 0:
            raise JetDomainError("log", -1.0)
        return np.zeros(1)

    with pytest.raises(StencilError):
        J.outer_fd(field, p, 0)


@pytest.mark.parametrize("kw", [dict(jet_order=1), dict(fd_step=0.5), dict(fd_scheme="forward")])
def test_diff_config_validation(kw):
    with pytest.raises(ValueError):
        DiffConfig(**kw)
