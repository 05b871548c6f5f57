"""Named example metrics used by the tests, the CLI and the docs."""

from __future__ import annotations

from .conformal import ConformalFactor, deform
from .metrics import (MetricSpec, euclidean, hyperbolic, minkowski_quartic, randers,
                      riemannian_quadratic, round_sphere)
from .warped import WarpFunction, build_warped, cylinder


def randers_2d() -> MetricSpec:
    """Randers metric with Euclidean alpha and an x-dependent, non-closed 1-form."""
    return randers([[[0.4, [0, 1]]], [[0.4, [1, 0]], [0.3, [0, 2]]]], box=[(-1, 1), (-1, 1)])


def randers_3d_nonberwald() -> MetricSpec:
    """3D Randers metric whose 1-form is not parallel (not of Berwald type)."""
    return randers([[[0.3, [0, 1, 0]]], [[0.2, [1, 0, 0]], [0.1, [0, 0, 0]]], [[0.15, [0, 0, 1]]]],
                   box=[(-1, 1)] * 3)


def quad_2d() -> MetricSpec:
    """2D metric with non-constant Gaussian curvature."""
    return riemannian_quadratic([[[[1, [0, 0]], [0.3, [2, 0]]], 0.0],
                                 [0.0, [[1, [0, 0]], [0.2, [1, 1]], [0.1, [0, 2]]]]],
                                box=[(-1, 1), (-1, 1)])


def quad_3d() -> MetricSpec:
    """3D metric with off-diagonal polynomial entries (not Einstein)."""
    return riemannian_quadratic([
        [[[1, [0, 0, 0]], [0.2, [0, 2, 0]]], [[0.1, [0, 0, 1]]], 0.0],
        [[[0.1, [0, 0, 1]]], [[1.5, [0, 0, 0]], [0.2, [1, 0, 0]]], [[0.05, [1, 1, 0]]]],
        [0.0, [[0.05, [1, 1, 0]]], [[1, [0, 0, 0]], [0.1, [2, 0, 0]], [0.1, [0, 0, 2]]]],
    ], box=[(-0.8, 0.8)] * 3)


def conformally_flat_4d() -> MetricSpec:
    """``exp(2u)|dx|^2`` with ``u = -log((1 + |x|^2) / 2)``: the unit 4-sphere in disguise."""
    terms = [[0.5, [0, 0, 0, 0]]] + [[0.5, [2 * (i == j) for j in range(4)]] for i in range(4)]
    return deform(euclidean(4), ConformalFactor("neg_log_poly", 4, terms=terms))


def conformally_flat_4d_poly() -> MetricSpec:
    """``exp(2u)|dx|^2`` with a generic polynomial ``u`` (conformally flat, not Einstein)."""
    return deform(euclidean(4), ConformalFactor("poly", 4, terms=[
        [0.2, [1, 0, 0, 0]], [0.15, [0, 1, 1, 0]], [-0.1, [0, 0, 0, 2]]]))


def zoo() -> dict[str, MetricSpec]:
    """Every named example metric, by dimension and kind."""
    return {
        "euclid2": euclidean(2),
        "euclid3": euclidean(3),
        "euclid4": euclidean(4),
        "sphere2": round_sphere(2),
        "sphere2_r2": round_sphere(2, 2.0),
        "sphere3": round_sphere(3),
        "sphere4": round_sphere(4),
        "hyperbolic2": hyperbolic(2),
        "hyperbolic3": hyperbolic(3),
        "quad2": quad_2d(),
        "quad3": quad_3d(),
        "randers2": randers_2d(),
        "randers3_const": randers([0.3, -0.2, 0.1]),
        "minkowski2": minkowski_quartic(2),
        "minkowski3": minkowski_quartic(3, mix=0.5, weights=[1.0, 2.0, 1.5]),
        "cylinder_s2": cylinder(round_sphere(2)),
        "cylinder_h2": cylinder(hyperbolic(2)),
        "product_s2xs2": build_warped(round_sphere(2, 1.0), round_sphere(2, 2.0)),
        "product_quad2xs2": build_warped(quad_2d(), round_sphere(2, 2.0)),
        "warped_exp": build_warped(euclidean(1), euclidean(1), WarpFunction("exp", 1, [1.0])),
        "warped_cosh_s2": build_warped(euclidean(1), round_sphere(2), WarpFunction("cosh", 1, [1.0])),
        "conformal_flat4": conformally_flat_4d(),
        "conformal_poly4": conformally_flat_4d_poly(),
    }


def one_dimensional() -> dict[str, MetricSpec]:
    return {
        "euclid1": euclidean(1),
        "quad1": riemannian_quadratic([[[[1, [0]], [0.5, [2]], [0.1, [3]]]]], box=[(-1, 1)]),
        "randers1": randers([[[0.3, [1]], [0.2, [0]]]], box=[(-1, 1)]),
    }


# metrics excluded from identities that only hold for Berwald-type metrics
NON_BERWALD_3D = {"randers3_nonberwald": randers_3d_nonberwald()}
