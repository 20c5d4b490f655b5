"""Exact circle-circle lens geometry.

The overlap ("lens") of a disk of radius ``a`` centered at the origin and a
disk of radius ``b`` centered at ``(d0, 0)`` is the support region for active
scatterers.  This module provides the closed-form overlap area, the
mixed-partial density kernel behind the joint distance law, the marginal
support bounds, and uniform rejection sampling inside the lens.

All lengths are in meters, areas in square meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelDomainError",
    "EmptyRegionError",
    "LensSpec",
    "lens_area",
    "lens_area_partial",
    "density_kernel",
    "support_bounds",
    "lens_bounding_box",
    "sample_uniform_in_lens",
]

# Radicands slightly below zero (floating-point cancellation at the branch
# boundaries) are rounded up to zero when within this relative slack.
_RADICAND_SLACK = 1e-9


class KernelDomainError(ValueError):
    """Kernel evaluated where a square-root radicand is non-positive."""


class EmptyRegionError(ValueError):
    """Operation requires a lens with strictly positive area."""


def _require_positive_finite(**values):
    for name, value in values.items():
        if not math.isfinite(value) or value <= 0.0:
            raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class LensSpec:
    """Two circles: radius ``a`` at the origin, radius ``b`` at ``(d0, 0)``."""

    d0: float
    a: float
    b: float

    def __post_init__(self):
        if not math.isfinite(self.d0) or self.d0 < 0.0:
            raise ValueError(f"d0 must be finite and >= 0, got {self.d0!r}")
        _require_positive_finite(a=self.a, b=self.b)

    # Boundary ties resolve toward the degenerate branches; both coincide
    # with the limit of the partial-overlap formula.
    @property
    def is_disjoint(self) -> bool:
        return self.a + self.b <= self.d0

    @property
    def is_contained(self) -> bool:
        return not self.is_disjoint and abs(self.a - self.b) >= self.d0


def lens_area(spec: LensSpec) -> float:
    """Intersection area of the two circles of ``spec``."""
    if spec.is_disjoint:
        return 0.0
    if spec.is_contained:
        return math.pi * min(spec.a, spec.b) ** 2
    return lens_area_partial(spec.d0, spec.a, spec.b)


def lens_area_partial(d0: float, a: float, b: float) -> float:
    """Overlap area in the genuine partial-overlap regime.

    Requires ``|a - b| <= d0 <= a + b`` with ``d0 > 0``.  The inverse
    cosines and the triangle root are evaluated through the factored forms
    ``1 -/+ cos = (product of side sums/differences) / (2 d0 r)`` and
    ``acos(c) = 2 atan2(sqrt(1 - c), sqrt(1 + c))``, which stay accurate
    arbitrarily close to the tangency boundaries where the direct
    ``acos((d0^2 + r^2 - s^2) / (2 d0 r))`` form loses several digits.
    """
    _require_positive_finite(d0=d0, a=a, b=b)
    if abs(a - b) > d0 or d0 > a + b:
        raise ValueError(
            f"(d0={d0}, a={a}, b={b}) is outside the partial-overlap regime"
        )
    if a < b:
        # The expression is symmetric in (a, b); canonicalize so the
        # floating-point result is exactly symmetric too.
        a, b = b, a
    f1 = max(d0 + b - a, 0.0)  # internal-tangency factor
    f2 = d0 + b + a
    f3 = max(a + b - d0, 0.0)  # external-tangency factor
    f4 = a + d0 - b
    angle_a = 2.0 * math.atan2(math.sqrt(f3 * f4), math.sqrt(f1 * f2))
    angle_b = 2.0 * math.atan2(math.sqrt(f3 * f1), math.sqrt(f4 * f2))
    root = math.sqrt(f1 * f2 * f3 * f4)
    return b * b * angle_a + a * a * angle_b - 0.5 * root


def density_kernel(d_prime: float, x: float, y: float) -> float:
    """Mixed second partial of the overlap area with respect to both radii.

    The raw mixed partial is a sum of three inverse-square-root terms whose
    leading singularities cancel; the sum collapses algebraically to
    ``4xy / sqrt(4 d'^2 x^2 - (d'^2 + x^2 - y^2)^2)``, which is what is
    evaluated here (the three-term form loses all precision near the
    boundary, where two ~eps^-1.5 terms cancel down to the true ~eps^-0.5
    growth).  Defined only where the radicand is strictly positive, i.e.
    strictly inside the triangle region ``|x - y| < d' < x + y``.

    Raises:
        KernelDomainError: outside that region (callers treat the density
            as zero there).
    """
    _require_positive_finite(d_prime=d_prime, x=x, y=y)
    d2 = d_prime * d_prime
    x2 = x * x
    y2 = y * y
    scale = (d_prime * max(x, y)) ** 2
    radicand = 4.0 * d2 * x2 - (d2 + x2 - y2) ** 2
    if radicand <= _RADICAND_SLACK * scale:
        raise KernelDomainError(
            f"kernel undefined at (d'={d_prime}, x={x}, y={y}): radicand <= 0"
        )
    return 4.0 * x * y / math.sqrt(radicand)


def support_bounds(spec: LensSpec) -> tuple[float, float, float, float]:
    """Marginal distance bounds ``(a_min, a_max, b_min, b_max)`` of the lens.

    ``a`` refers to the distance from the origin circle's center, ``b`` to the
    distance from the offset circle's center.
    """
    if lens_area(spec) <= 0.0:
        raise EmptyRegionError(f"lens {spec} has zero area")
    d0, a, b = spec.d0, spec.a, spec.b
    return (max(d0 - b, 0.0), min(d0 + b, a), max(d0 - a, 0.0), min(d0 + a, b))


def lens_bounding_box(spec: LensSpec) -> tuple[float, float, float, float]:
    """Axis-aligned box ``(x_lo, x_hi, y_lo, y_hi)`` enclosing the lens."""
    x_lo = max(-spec.a, spec.d0 - spec.b)
    x_hi = min(spec.a, spec.d0 + spec.b)
    y_hi = min(spec.a, spec.b)
    return (x_lo, x_hi, -y_hi, y_hi)


def sample_uniform_in_lens(spec: LensSpec, rng: np.random.Generator, size=None):
    """Draw points uniformly over the lens by rejection from its bounding box.

    Returns a single ``(2,)`` point when ``size`` is None, else an
    ``(size, 2)`` array.
    """
    area = lens_area(spec)
    if area <= 0.0:
        raise EmptyRegionError(f"cannot sample from zero-area lens {spec}")
    n = 1 if size is None else int(size)
    if n < 0:
        raise ValueError(f"size must be non-negative, got {size!r}")
    x_lo, x_hi, y_lo, y_hi = lens_bounding_box(spec)
    accept_rate = area / ((x_hi - x_lo) * (y_hi - y_lo))
    out = np.empty((n, 2))
    filled = 0
    while filled < n:
        m = max(int((n - filled) / accept_rate * 1.2) + 16, 64)
        px = rng.uniform(x_lo, x_hi, m)
        py = rng.uniform(y_lo, y_hi, m)
        inside = (px * px + py * py <= spec.a * spec.a) & (
            (px - spec.d0) ** 2 + py * py <= spec.b * spec.b
        )
        hits_x = px[inside]
        hits_y = py[inside]
        take = min(len(hits_x), n - filled)
        out[filled : filled + take, 0] = hits_x[:take]
        out[filled : filled + take, 1] = hits_y[:take]
        filled += take
    return out[0] if size is None else out
