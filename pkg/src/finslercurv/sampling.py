"""Deterministic sampling of bundle points inside a metric's chart box."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .bundle import BundlePoint
from .errors import FinslerError
from .metrics import MetricSpec

MIN_FIBER_NORM = 0.1
_MAX_TRIES = 1000


def sample_points(spec: MetricSpec, count: int, seed: int = 0,
                  box: Sequence[tuple[float, float]] | None = None,
                  min_fiber_norm: float = MIN_FIBER_NORM) -> list[BundlePoint]:
    """``count`` valid points drawn with ``numpy.random.default_rng(seed)``.

    ``x`` is uniform in ``box`` (the family's default box if omitted);
    ``y`` is Gaussian, redrawn until every fiber block has norm at least
    ``min_fiber_norm``.  Draws the metric rejects are skipped, so the
    sample depends only on ``(spec, count, seed, box)``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    box = list(box) if box is not None else spec.default_box()
    if len(box) != spec.dim:
        raise ValueError(f"box has {len(box)} intervals, metric has dimension {spec.dim}")
    blocks = spec.fiber_blocks()
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    out: list[BundlePoint] = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > _MAX_TRIES * count:
            raise FinslerError(f"could not find {count} valid points in box {box}")
        x = lo + (hi - lo) * rng.random(spec.dim)
        y = rng.normal(size=spec.dim)
        if any(np.linalg.norm(y[b]) < min_fiber_norm for b in blocks):
            continue
        try:
            p = BundlePoint(x, y)
            spec.check_point(p)
        except FinslerError:
            continue
        out.append(p)
    return out
