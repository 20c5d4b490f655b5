"""Independent numerical oracles used across the test suite.

These deliberately avoid the library's closed forms: areas come from Monte
Carlo membership counting, the kernel check from central finite differences,
and integrals from Gauss-Legendre quadrature with an endpoint-taming cosine
substitution.
"""

import math

import numpy as np

from dvrchan.analytics import _y_max
from dvrchan.geometry import lens_area_partial, lens_bounding_box


def mc_lens_area(d0, a, b, n, rng):
    """Monte Carlo intersection area of two circles, by membership counting."""
    x_lo, x_hi = max(-a, d0 - b), min(a, d0 + b)
    y_hi = min(a, b)
    if x_hi <= x_lo:
        return 0.0
    px = rng.uniform(x_lo, x_hi, n)
    py = rng.uniform(-y_hi, y_hi, n)
    inside = (px * px + py * py <= a * a) & ((px - d0) ** 2 + py * py <= b * b)
    return inside.mean() * (x_hi - x_lo) * 2.0 * y_hi


def fd_mixed_partial(d_prime, x, y, h=1e-2):
    """Central finite-difference mixed partial of the partial-overlap area."""
    return (
        lens_area_partial(d_prime, x + h, y + h)
        - lens_area_partial(d_prime, x + h, y - h)
        - lens_area_partial(d_prime, x - h, y + h)
        + lens_area_partial(d_prime, x - h, y - h)
    ) / (4.0 * h * h)


def _cos_nodes(lo, hi, t, w):
    # Clusters nodes at both endpoints; tames inverse-square-root
    # singularities of the kernel at the support boundary.
    u = (t + 1.0) * math.pi / 2.0
    nodes = lo + (hi - lo) * (1.0 - np.cos(u)) / 2.0
    weights = w * (math.pi / 2.0) * (hi - lo) / 2.0 * np.sin(u)
    return nodes, weights


def joint_support(scenario, class_kind):
    cls = scenario.scatterer_class(class_kind)
    d = scenario.d_prime
    x_min = max(d - cls.v2, 0.0)
    x_max = min(d + cls.v2, cls.v1)
    return cls, d, x_min, x_max


def inner_integral(pdf, scenario, class_kind, x, n_nodes=160):
    """Integrate ``pdf(x, y)`` over the admissible y range at fixed x."""
    cls, d, _, _ = joint_support(scenario, class_kind)
    y_lo = abs(d - x)
    y_hi = min(_y_max(d, x, cls.v1, cls.v2), x + d)
    if y_hi <= y_lo:
        return 0.0
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    ys, ws = _cos_nodes(y_lo, y_hi, t, w)
    return float(sum(wy * pdf(x, float(yv)) for yv, wy in zip(ys, ws)))


def double_integral(pdf, scenario, class_kind, n_inner=160, n_outer=160):
    """Integrate ``pdf(x, y)`` over the full joint support."""
    cls, d, x_min, x_max = joint_support(scenario, class_kind)
    corners = {x_min, x_max}
    for c in (abs(d - cls.v2), d + cls.v2, abs(cls.v2 - d), d, cls.v1, cls.v2 - d):
        if x_min < c < x_max:
            corners.add(c)
    corners = sorted(corners)
    t, w = np.polynomial.legendre.leggauss(n_outer)
    total = 0.0
    for lo, hi in zip(corners[:-1], corners[1:]):
        xs, wxs = _cos_nodes(lo, hi, t, w)
        for xv, wx in zip(xs, wxs):
            total += wx * inner_integral(pdf, scenario, class_kind, float(xv), n_inner)
    return total


def grid_cell_probabilities(spec, grid, n, rng):
    """Lens-restricted cell probabilities of a grid over the bounding box."""
    x_lo, x_hi, y_lo, y_hi = lens_bounding_box(spec)
    px = rng.uniform(x_lo, x_hi, n)
    py = rng.uniform(y_lo, y_hi, n)
    inside = (px * px + py * py <= spec.a**2) & ((px - spec.d0) ** 2 + py * py <= spec.b**2)
    counts = np.bincount(grid_cells(spec, grid, px[inside], py[inside]), minlength=grid * grid)
    return counts / counts.sum()


def grid_cells(spec, grid, x, y):
    x_lo, x_hi, y_lo, y_hi = lens_bounding_box(spec)
    ix = np.clip(((x - x_lo) / (x_hi - x_lo) * grid).astype(int), 0, grid - 1)
    iy = np.clip(((y - y_lo) / (y_hi - y_lo) * grid).astype(int), 0, grid - 1)
    return ix * grid + iy
