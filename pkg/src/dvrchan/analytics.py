"""Closed-form channel statistics for the dual-visibility-region model.

Covers the multipath-count PMF (a two-component Poisson mixture driven by the
tall-scatterer gate), the marginal distance laws of an active scatterer, the
mean time of arrival, the joint distance density, and the mean received power
through single-bounce NLoS paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .geometry import (
    KernelDomainError,
    LensSpec,
    density_kernel,
    lens_area,
    sample_uniform_in_lens,
    support_bounds,
)
from .pointprocess import Scenario, mean_active_count

__all__ = [
    "SPEED_OF_LIGHT",
    "DegenerateScenarioError",
    "NoPathError",
    "InteractionModel",
    "MomentTerms",
    "mpc_pmf",
    "mpc_mean",
    "distance_cdf_bs",
    "distance_cdf_ms",
    "mean_distance_bs",
    "mean_distance_ms",
    "mean_toa",
    "joint_pdf",
    "moment_terms",
    "mean_received_power",
]

SPEED_OF_LIGHT = 299792458.0

MODES = ("reflection", "scattering")


class DegenerateScenarioError(ValueError):
    """A required scatterer class has an empty visibility lens."""


class NoPathError(DegenerateScenarioError):
    """The scenario admits no multipath component at all."""


@dataclass(frozen=True)
class InteractionModel:
    """Electromagnetic profile of the bounce: reflection or scattering.

    The mode fixes the phase argument ``g1``, the amplitude divisor ``g2``
    and the transmission constant ``k0``; the per-bounce coefficient is
    Normal(``coeff_mean``, ``coeff_var``).
    """

    mode: str
    transmit_power: float
    wavelength: float
    coeff_mean: float
    coeff_var: float

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (math.isfinite(self.transmit_power) and self.transmit_power > 0.0):
            raise ValueError(f"transmit_power must be > 0, got {self.transmit_power!r}")
        if not (math.isfinite(self.wavelength) and self.wavelength > 0.0):
            raise ValueError(f"wavelength must be > 0, got {self.wavelength!r}")
        if not (math.isfinite(self.coeff_var) and self.coeff_var >= 0.0):
            raise ValueError(f"coeff_var must be >= 0, got {self.coeff_var!r}")

    @property
    def k0(self) -> float:
        if self.mode == "scattering":
            return self.transmit_power * self.wavelength**2 / (4.0 * math.pi) ** 3
        return self.transmit_power * (self.wavelength / (4.0 * math.pi)) ** 2

    def g1(self, x, y):
        return x + y

    def g2(self, x, y):
        if self.mode == "scattering":
            return x * y
        return x + y

    def phase(self, x, y):
        return 2.0 * math.pi * self.g1(x, y) / self.wavelength


@dataclass(frozen=True)
class MomentTerms:
    """Monte Carlo estimates of the in-phase/quadrature bounce moments.

    ``h``/``h_prime`` are the means of the cosine and sine terms,
    ``g``/``g_prime`` their variances; ``se_*`` are the matching standard
    errors.
    """

    h: float
    g: float
    h_prime: float
    g_prime: float
    se_h: float
    se_g: float
    se_h_prime: float
    se_g_prime: float


def _mus(scenario: Scenario) -> tuple[float, float]:
    return (
        mean_active_count(scenario, "short"),
        mean_active_count(scenario, "tall"),
    )


def mpc_pmf(n, scenario: Scenario):
    """PMF of the number of multipath components.

    Mixture of Poisson(mu_s + mu_t) with weight gamma and Poisson(mu_s) with
    weight 1 - gamma.  Accepts scalar or array ``n``.
    """
    mu_s, mu_t = _mus(scenario)
    g = scenario.gamma
    return g * stats.poisson.pmf(n, mu_s + mu_t) + (1.0 - g) * stats.poisson.pmf(n, mu_s)


def mpc_mean(scenario: Scenario) -> float:
    """Mean number of multipath components: mu_s + gamma * mu_t."""
    mu_s, mu_t = _mus(scenario)
    return mu_s + scenario.gamma * mu_t


def _class_lens(scenario: Scenario, class_kind: str) -> LensSpec:
    return scenario.scatterer_class(class_kind).lens(scenario.d_prime)


def _full_area(scenario: Scenario, class_kind: str) -> float:
    area = lens_area(_class_lens(scenario, class_kind))
    if area <= 0.0:
        raise DegenerateScenarioError(
            f"{class_kind} class has an empty visibility lens at d'={scenario.d_prime}"
        )
    return area


def distance_cdf_bs(x: float, scenario: Scenario, class_kind: str) -> float:
    """CDF of the BS-to-scatterer distance for an active scatterer."""
    cls = scenario.scatterer_class(class_kind)
    area = _full_area(scenario, class_kind)
    a_min, a_max, _, _ = support_bounds(_class_lens(scenario, class_kind))
    if x <= a_min:
        return 0.0
    if x >= a_max:
        return 1.0
    return lens_area(LensSpec(scenario.d_prime, x, cls.v2)) / area


def distance_cdf_ms(y: float, scenario: Scenario, class_kind: str) -> float:
    """CDF of the MS-to-scatterer distance for an active scatterer."""
    cls = scenario.scatterer_class(class_kind)
    area = _full_area(scenario, class_kind)
    _, _, b_min, b_max = support_bounds(_class_lens(scenario, class_kind))
    if y <= b_min:
        return 0.0
    if y >= b_max:
        return 1.0
    return lens_area(LensSpec(scenario.d_prime, y, cls.v1)) / area


def _mean_from_cdf(cdf, upper: float, breakpoint: float) -> float:
    points = [breakpoint] if 0.0 < breakpoint < upper else None
    value, _ = integrate.quad(
        lambda t: 1.0 - cdf(t), 0.0, upper, points=points, epsrel=1e-9, limit=200
    )
    return value


def mean_distance_bs(scenario: Scenario, class_kind: str) -> float:
    """Mean BS-to-scatterer distance, as the integral of the survival function."""
    a_min, a_max, _, _ = support_bounds(_class_lens(scenario, class_kind))
    return _mean_from_cdf(lambda t: distance_cdf_bs(t, scenario, class_kind), a_max, a_min)


def mean_distance_ms(scenario: Scenario, class_kind: str) -> float:
    """Mean MS-to-scatterer distance, as the integral of the survival function."""
    _, _, b_min, b_max = support_bounds(_class_lens(scenario, class_kind))
    return _mean_from_cdf(lambda t: distance_cdf_ms(t, scenario, class_kind), b_max, b_min)


def _mean_path_length(scenario: Scenario, class_kind: str) -> float:
    return mean_distance_bs(scenario, class_kind) + mean_distance_ms(scenario, class_kind)


def mean_toa(scenario: Scenario) -> float:
    """Mean time of arrival of a single multipath component, in seconds.

    Semantics: expected path length of one component chosen uniformly among
    the active scatterers, mixing the gate-open branch (class weights
    mu_k / (mu_s + mu_t)) with weight gamma and the gate-closed short-only
    branch with weight 1 - gamma.
    """
    mu_s, mu_t = _mus(scenario)
    gamma = scenario.gamma
    if gamma < 1.0 and mu_s <= 0.0:
        raise NoPathError("gate-closed branch has no short-scatterer paths")
    if gamma > 0.0 and mu_s + mu_t <= 0.0:
        raise NoPathError("gate-open branch has no paths")
    tau_s = _mean_path_length(scenario, "short") if mu_s > 0.0 else 0.0
    tau_t = _mean_path_length(scenario, "tall") if mu_t > 0.0 else 0.0
    expected = 0.0
    if gamma > 0.0:
        expected += gamma * (mu_s * tau_s + mu_t * tau_t) / (mu_s + mu_t)
    if gamma < 1.0:
        expected += (1.0 - gamma) * tau_s
    return expected / SPEED_OF_LIGHT


def _y_max(d_prime: float, x: float, v1: float, v2: float) -> float:
    # Four-way support split on the radii/separation configuration; the first
    # matching case wins.  The kernel's own domain handles the residual
    # triangle-inequality cut inside these (occasionally loose) bounds.
    if v1 - v2 >= d_prime:
        return v2
    if v2 - v1 >= d_prime:
        return min(d_prime + x, d_prime + v1)
    if v1 < d_prime and v2 < d_prime:
        return v2
    return min(d_prime + x, v2)


def joint_pdf(x: float, y: float, scenario: Scenario, class_kind: str) -> float:
    """Joint density of the BS and MS distances of an active scatterer.

    Zero outside the support; kernel domain violations inside the nominal
    support box also map to zero.
    """
    cls = scenario.scatterer_class(class_kind)
    area = _full_area(scenario, class_kind)
    d_prime = scenario.d_prime
    x_min = max(d_prime - cls.v2, 0.0)
    x_max = min(d_prime + cls.v2, cls.v1)
    if not x_min < x < x_max:
        return 0.0
    y_min = max(d_prime - x, 0.0)
    y_max = _y_max(d_prime, x, cls.v1, cls.v2)
    if not y_min < y < y_max:
        return 0.0
    try:
        return density_kernel(d_prime, x, y) / area
    except KernelDomainError:
        return 0.0


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _distances(points: np.ndarray, d_prime: float) -> tuple[np.ndarray, np.ndarray]:
    x = np.hypot(points[:, 0], points[:, 1])
    y = np.hypot(points[:, 0] - d_prime, points[:, 1])
    return x, y


def moment_terms(
    scenario: Scenario,
    class_kind: str,
    interaction: InteractionModel,
    n_mc: int,
    rng=None,
) -> MomentTerms:
    """Estimate the bounce moments for one class by Monte Carlo.

    Draws ``n_mc`` scatterer positions from the exact joint distance law
    (uniform over the class lens) and independent normal coefficients.
    """
    if n_mc < 10_000:
        raise ValueError(f"n_mc must be >= 10000 for stable moments, got {n_mc}")
    rng = _as_rng(rng)
    lens = _class_lens(scenario, class_kind)
    if lens_area(lens) <= 0.0:
        raise DegenerateScenarioError(f"{class_kind} class lens is empty")
    points = sample_uniform_in_lens(lens, rng, size=n_mc)
    x, y = _distances(points, scenario.d_prime)
    theta = interaction.phase(x, y)
    r = rng.normal(interaction.coeff_mean, math.sqrt(interaction.coeff_var), n_mc)
    amp = r / interaction.g2(x, y)
    results = []
    for sample in (amp * np.cos(theta), amp * np.sin(theta)):
        mean = float(sample.mean())
        centered = sample - mean
        m2 = float(np.mean(centered**2))
        m4 = float(np.mean(centered**4))
        var = float(sample.var(ddof=1))
        se_mean = math.sqrt(var / n_mc)
        se_var = math.sqrt(max(m4 - m2 * m2, 0.0) / n_mc)
        results.append((mean, var, se_mean, se_var))
    (h, g, se_h, se_g), (hp, gp, se_hp, se_gp) = results
    return MomentTerms(h, g, hp, gp, se_h, se_g, se_hp, se_gp)


_ZERO_TERMS = MomentTerms(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def mean_received_power(
    scenario: Scenario,
    interaction: InteractionModel,
    n_mc: int,
    rng=None,
) -> tuple[float, float]:
    """Mean NLoS received power in watts, with propagated standard error.

    Assembles the closed-form second-moment expression from per-class
    Monte Carlo bounce moments; classes with an empty lens contribute
    nothing.
    """
    rng = _as_rng(rng)
    mu_s, mu_t = _mus(scenario)
    if mu_s <= 0.0 and mu_t <= 0.0:
        raise DegenerateScenarioError("both scatterer classes are degenerate")
    terms = {}
    for kind, mu in (("short", mu_s), ("tall", mu_t)):
        if mu > 0.0:
            terms[kind] = moment_terms(scenario, kind, interaction, n_mc, rng)
        else:
            terms[kind] = _ZERO_TERMS
    k0 = interaction.k0
    gamma = scenario.gamma
    mus = {"short": mu_s, "tall": mu_t}

    s_cos = sum(terms[k].h * mus[k] for k in terms)
    s_sin = sum(terms[k].h_prime * mus[k] for k in terms)
    quad_sum = sum(
        (terms[k].g + terms[k].h**2 + terms[k].g_prime + terms[k].h_prime**2) * mus[k]
        for k in terms
    )
    ts = terms["short"]
    short_only = (
        (ts.g + ts.h**2 + ts.g_prime + ts.h_prime**2) * mu_s
        + (ts.h * mu_s) ** 2
        + (ts.h_prime * mu_s) ** 2
    )
    value = gamma * k0 * (quad_sum + s_cos**2 + s_sin**2) + (1.0 - gamma) * k0 * short_only

    # First-order error propagation; per-class streams are independent and
    # the mean/variance estimator covariances within a class are neglected.
    variance = 0.0
    for kind in terms:
        t = terms[kind]
        mu = mus[kind]
        d_h = gamma * k0 * (2.0 * t.h * mu + 2.0 * s_cos * mu)
        d_hp = gamma * k0 * (2.0 * t.h_prime * mu + 2.0 * s_sin * mu)
        d_g = gamma * k0 * mu
        d_gp = gamma * k0 * mu
        if kind == "short":
            d_h += (1.0 - gamma) * k0 * (2.0 * t.h * mu + 2.0 * t.h * mu * mu)
            d_hp += (1.0 - gamma) * k0 * (2.0 * t.h_prime * mu + 2.0 * t.h_prime * mu * mu)
            d_g += (1.0 - gamma) * k0 * mu
            d_gp += (1.0 - gamma) * k0 * mu
        variance += (
            (d_h * t.se_h) ** 2
            + (d_hp * t.se_h_prime) ** 2
            + (d_g * t.se_g) ** 2
            + (d_gp * t.se_g_prime) ** 2
        )
    return value, math.sqrt(variance)
