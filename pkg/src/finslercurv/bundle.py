"""Points of the slit tangent bundle and tensor values attached to them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SlitBundleError

# Fiber vectors shorter than this (relative to the base-point scale) are
# treated as lying on the zero section.
ZERO_SECTION_RTOL = 1e-6


@dataclass(frozen=True)
class BundlePoint:
    """A point ``(x, y)`` of the slit tangent bundle in a single chart."""

    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        x = tuple(float(v) for v in np.ravel(self.x))
        y = tuple(float(v) for v in np.ravel(self.y))
        if len(x) != len(y):
            raise ValueError(f"x has {len(x)} components but y has {len(y)}")
        if not x:
            raise ValueError("empty bundle point")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        scale = max(1.0, max(abs(v) for v in x))
        if max(abs(v) for v in y) <= ZERO_SECTION_RTOL * scale:
            raise SlitBundleError(f"fiber vector {y} lies on the zero section")

    @property
    def dim(self) -> int:
        return len(self.x)

    @property
    def xa(self) -> np.ndarray:
        return np.array(self.x)

    @property
    def ya(self) -> np.ndarray:
        return np.array(self.y)

    @property
    def z(self) -> np.ndarray:
        """Concatenated coordinates ``(x, y)``."""
        return np.concatenate([self.x, self.y])

    def shifted(self, dz) -> "BundlePoint":
        dz = np.asarray(dz, dtype=float)
        n = self.dim
        return BundlePoint(self.xa + dz[:n], self.ya + dz[n:])

    def scaled_fiber(self, c: float) -> "BundlePoint":
        return BundlePoint(self.x, c * self.ya)

    def to_dict(self) -> dict:
        return {"x": list(self.x), "y": list(self.y)}


@dataclass(frozen=True)
class TensorValue:
    """Dense components of a ``(p1, p2; q)`` tensor at one bundle point.

    Axes are ordered: ``p1`` pullback-covariant slots, then ``p2``
    horizontal slots, then ``q`` contravariant slots.
    """

    signature: tuple[int, int, int]
    components: np.ndarray
    base: BundlePoint | None = field(default=None, compare=False)

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        object.__setattr__(self, "components", comps)
        rank = sum(self.signature)
        if comps.ndim != rank:
            raise ValueError(
                f"signature {self.signature} needs {rank} axes, got shape {comps.shape}"
            )
        if rank and len(set(comps.shape)) != 1:
            raise ValueError(f"all slots must share one extent, got {comps.shape}")

    @property
    def dim(self) -> int:
        return self.components.shape[0] if self.components.ndim else 0

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype)
