"""Monte Carlo experiment engine.

Generates realizations of the scatterer process, builds per-component records
(distances, path length, departure/arrival angles, bounce coefficients),
evaluates the coherent received-power sum per realization, and aggregates the
empirical statistics that cross-check every closed-form result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytics import InteractionModel
from .pointprocess import (
    Realization,
    Scenario,
    mean_active_count,
    sample_block,
    substream,
)

__all__ = [
    "N_ANGLE_BINS",
    "ANGLE_BIN_EDGES",
    "MpcRecord",
    "RunSummary",
    "compute_angles",
    "trace_realization",
    "run_experiment",
]

# 64 uniform angle bins with centers on multiples of 2*pi/64, so that 0 and
# pi are bin centers rather than shared edges.
N_ANGLE_BINS = 64
_BIN_WIDTH = 2.0 * math.pi / N_ANGLE_BINS
ANGLE_BIN_EDGES = -math.pi + _BIN_WIDTH / 2.0 + np.arange(N_ANGLE_BINS + 1) * _BIN_WIDTH

_BLOCK_SIZE = 8192


@dataclass
class MpcRecord:
    """One multipath component: BS->scatterer->MS."""

    class_kind: str
    x: float
    y: float
    tau: float
    aod: float
    aoa: float
    r_coeff: float


def _wrap_angle(angle):
    """Wrap to the half-open interval (-pi, pi]."""
    wrapped = np.where(angle <= -math.pi, angle + 2.0 * math.pi, angle)
    return wrapped if isinstance(angle, np.ndarray) else float(wrapped)


def compute_angles(point, d_prime: float) -> tuple[float, float]:
    """Departure angle at the BS and arrival angle at the MS of a scatterer.

    Both are measured from the +x axis (the BS->MS direction), wrapped to
    (-pi, pi].
    """
    px, py = float(point[0]), float(point[1])
    if px == 0.0 and py == 0.0:
        raise ValueError("scatterer coincides with the BS; angle undefined")
    if px == d_prime and py == 0.0:
        raise ValueError("scatterer coincides with the MS; angle undefined")
    aod = _wrap_angle(math.atan2(py, px))
    aoa = _wrap_angle(math.atan2(py, px - d_prime))
    return aod, aoa


def _coherent_power(x, y, r, interaction: InteractionModel) -> float:
    if len(x) == 0:
        return 0.0
    theta = interaction.phase(x, y)
    amp = r / interaction.g2(x, y)
    re = float(np.sum(amp * np.cos(theta)))
    im = float(np.sum(-amp * np.sin(theta)))
    return interaction.k0 * (re * re + im * im)


def trace_realization(
    realization: Realization,
    scenario: Scenario,
    interaction: InteractionModel,
    rng: np.random.Generator,
) -> tuple[list[MpcRecord], float]:
    """Build the per-component records and the realization's received power.

    Each active scatterer contributes exactly one component; the power is the
    coherent sum over all of them.  An empty realization has power zero.
    """
    sigma = math.sqrt(interaction.coeff_var)
    records: list[MpcRecord] = []
    xs, ys, rs = [], [], []
    for kind, points in (("short", realization.short_points), ("tall", realization.tall_points)):
        coeffs = rng.normal(interaction.coeff_mean, sigma, len(points))
        for point, coeff in zip(points, coeffs):
            x = math.hypot(point[0], point[1])
            y = math.hypot(point[0] - scenario.d_prime, point[1])
            aod, aoa = compute_angles(point, scenario.d_prime)
            records.append(MpcRecord(kind, x, y, x + y, aod, aoa, float(coeff)))
            xs.append(x)
            ys.append(y)
            rs.append(float(coeff))
    power = _coherent_power(np.asarray(xs), np.asarray(ys), np.asarray(rs), interaction)
    return records, power


@dataclass
class RunSummary:
    """Aggregated statistics of a batch of realizations.

    Path-length ("tau") accumulators are kept separately for the gate-open
    and gate-closed branches; the single-component time-of-arrival estimator
    reweights the branches by the gate probability so that its expectation
    matches the closed-form mean regardless of how often a branch is empty.
    """

    gamma: float
    mode: str
    n_realizations: int = 0
    n_gate_open: int = 0
    mpc_count_histogram: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    tau_open_count: int = 0
    tau_open_sum: float = 0.0
    tau_open_sumsq: float = 0.0
    tau_closed_count: int = 0
    tau_closed_sum: float = 0.0
    tau_closed_sumsq: float = 0.0
    pooled_tau_count: int = 0
    pooled_tau_sum: float = 0.0
    pooled_tau_sumsq: float = 0.0
    power_sum: float = 0.0
    power_sumsq: float = 0.0
    aod_histogram: np.ndarray = field(default_factory=lambda: np.zeros(N_ANGLE_BINS, dtype=np.int64))
    aoa_histogram: np.ndarray = field(default_factory=lambda: np.zeros(N_ANGLE_BINS, dtype=np.int64))

    def merge(self, other: "RunSummary") -> "RunSummary":
        if (self.gamma, self.mode) != (other.gamma, other.mode):
            raise ValueError("cannot merge summaries from different configurations")
        width = max(len(self.mpc_count_histogram), len(other.mpc_count_histogram))
        hist = np.zeros(width, dtype=np.int64)
        hist[: len(self.mpc_count_histogram)] += self.mpc_count_histogram
        hist[: len(other.mpc_count_histogram)] += other.mpc_count_histogram
        merged = RunSummary(self.gamma, self.mode)
        merged.n_realizations = self.n_realizations + other.n_realizations
        merged.n_gate_open = self.n_gate_open + other.n_gate_open
        merged.mpc_count_histogram = hist
        for name in (
            "tau_open_count", "tau_open_sum", "tau_open_sumsq",
            "tau_closed_count", "tau_closed_sum", "tau_closed_sumsq",
            "pooled_tau_count", "pooled_tau_sum", "pooled_tau_sumsq",
            "power_sum", "power_sumsq",
        ):
            setattr(merged, name, getattr(self, name) + getattr(other, name))
        merged.aod_histogram = self.aod_histogram + other.aod_histogram
        merged.aoa_histogram = self.aoa_histogram + other.aoa_histogram
        return merged

    @staticmethod
    def _mean_stderr(count, total, sumsq):
        if count == 0:
            return math.nan, math.nan
        mean = total / count
        if count < 2:
            return mean, math.nan
        var = max(sumsq / count - mean * mean, 0.0) * count / (count - 1)
        return mean, math.sqrt(var / count)

    @property
    def empirical_pmf(self) -> np.ndarray:
        return self.mpc_count_histogram / self.n_realizations

    @property
    def toa_mean(self) -> float:
        """Gate-reweighted single-component mean ToA estimate, in seconds."""
        return self._toa_estimate()[0]

    @property
    def toa_stderr(self) -> float:
        return self._toa_estimate()[1]

    def _toa_estimate(self) -> tuple[float, float]:
        from .analytics import SPEED_OF_LIGHT

        open_mean, open_se = self._mean_stderr(
            self.tau_open_count, self.tau_open_sum, self.tau_open_sumsq
        )
        closed_mean, closed_se = self._mean_stderr(
            self.tau_closed_count, self.tau_closed_sum, self.tau_closed_sumsq
        )
        tau = 0.0
        var = 0.0
        if self.gamma > 0.0:
            tau += self.gamma * open_mean
            var += (self.gamma * open_se) ** 2
        if self.gamma < 1.0:
            tau += (1.0 - self.gamma) * closed_mean
            var += ((1.0 - self.gamma) * closed_se) ** 2
        return tau / SPEED_OF_LIGHT, math.sqrt(var) / SPEED_OF_LIGHT

    @property
    def pooled_toa_mean(self) -> float:
        """Mean ToA over all components pooled across realizations, seconds."""
        from .analytics import SPEED_OF_LIGHT

        mean, _ = self._mean_stderr(
            self.pooled_tau_count, self.pooled_tau_sum, self.pooled_tau_sumsq
        )
        return mean / SPEED_OF_LIGHT

    @property
    def power_mean(self) -> float:
        return self._mean_stderr(self.n_realizations, self.power_sum, self.power_sumsq)[0]

    @property
    def power_stderr(self) -> float:
        return self._mean_stderr(self.n_realizations, self.power_sum, self.power_sumsq)[1]

    def _angle_density(self, counts: np.ndarray) -> np.ndarray:
        total = counts.sum()
        if total == 0:
            return np.zeros_like(counts, dtype=float)
        return counts / (total * _BIN_WIDTH)

    @property
    def aod_density(self) -> np.ndarray:
        return self._angle_density(self.aod_histogram)

    @property
    def aoa_density(self) -> np.ndarray:
        return self._angle_density(self.aoa_histogram)


def _histogram_angles(angles: np.ndarray) -> np.ndarray:
    shifted = np.where(angles <= ANGLE_BIN_EDGES[0], angles + 2.0 * math.pi, angles)
    counts, _ = np.histogram(shifted, bins=ANGLE_BIN_EDGES)
    return counts.astype(np.int64)


def _process_block(
    scenario: Scenario,
    interaction: InteractionModel,
    block_index: int,
    block_len: int,
    seed: int,
    hist_width: int,
) -> RunSummary:
    rng = substream(seed, block_index)
    block = sample_block(scenario, block_len, rng)
    sigma = math.sqrt(interaction.coeff_var)
    r_short = rng.normal(interaction.coeff_mean, sigma, len(block.short_points))
    r_tall = rng.normal(interaction.coeff_mean, sigma, len(block.tall_points))
    pick = rng.random(block_len)

    d_prime = scenario.d_prime
    xs, ys = _class_xy(block.short_points, d_prime)
    xt, yt = _class_xy(block.tall_points, d_prime)
    tau_s = xs + ys
    tau_t = xt + yt

    seg_s = np.repeat(np.arange(block_len), block.n_short)
    seg_t = np.repeat(np.arange(block_len), block.n_tall)
    re = np.zeros(block_len)
    im = np.zeros(block_len)
    for x, y, r, seg in ((xs, ys, r_short, seg_s), (xt, yt, r_tall, seg_t)):
        if len(x) == 0:
            continue
        theta = interaction.phase(x, y)
        amp = r / interaction.g2(x, y)
        re += np.bincount(seg, weights=amp * np.cos(theta), minlength=block_len)
        im += np.bincount(seg, weights=-amp * np.sin(theta), minlength=block_len)
    power = interaction.k0 * (re * re + im * im)

    n_total = block.n_short + block.n_tall
    nonempty = np.flatnonzero(n_total > 0)
    idx = np.minimum((pick[nonempty] * n_total[nonempty]).astype(np.int64), n_total[nonempty] - 1)
    is_short = idx < block.n_short[nonempty]
    tau_choice = np.empty(len(nonempty))
    sel = nonempty[is_short]
    tau_choice[is_short] = tau_s[block.short_offsets[sel] + idx[is_short]]
    sel = nonempty[~is_short]
    tau_choice[~is_short] = tau_t[
        block.tall_offsets[sel] + idx[~is_short] - block.n_short[sel]
    ]
    open_mask = block.u[nonempty]

    summary = RunSummary(scenario.gamma, interaction.mode)
    summary.n_realizations = block_len
    summary.n_gate_open = int(block.u.sum())
    hist = np.bincount(n_total, minlength=hist_width).astype(np.int64)
    summary.mpc_count_histogram = hist
    for branch_mask, prefix in ((open_mask, "tau_open"), (~open_mask, "tau_closed")):
        values = tau_choice[branch_mask]
        setattr(summary, f"{prefix}_count", len(values))
        setattr(summary, f"{prefix}_sum", float(values.sum()))
        setattr(summary, f"{prefix}_sumsq", float(np.sum(values * values)))
    pooled = np.concatenate((tau_s, tau_t))
    summary.pooled_tau_count = len(pooled)
    summary.pooled_tau_sum = float(pooled.sum())
    summary.pooled_tau_sumsq = float(np.sum(pooled * pooled))
    summary.power_sum = float(power.sum())
    summary.power_sumsq = float(np.sum(power * power))
    points = np.concatenate((block.short_points, block.tall_points))
    if len(points):
        summary.aod_histogram = _histogram_angles(np.arctan2(points[:, 1], points[:, 0]))
        summary.aoa_histogram = _histogram_angles(
            np.arctan2(points[:, 1], points[:, 0] - d_prime)
        )
    return summary


def _class_xy(points: np.ndarray, d_prime: float) -> tuple[np.ndarray, np.ndarray]:
    if len(points) == 0:
        return np.empty(0), np.empty(0)
    x = np.hypot(points[:, 0], points[:, 1])
    y = np.hypot(points[:, 0] - d_prime, points[:, 1])
    return x, y


def run_experiment(
    scenario: Scenario,
    interaction: InteractionModel,
    n_realizations: int,
    seed: int | None = None,
    workers: int = 1,
    block_size: int = _BLOCK_SIZE,
) -> RunSummary:
    """Run a Monte Carlo experiment and aggregate its statistics.

    Realizations are partitioned into fixed-size blocks with deterministic
    per-block RNG substreams and merged in block order, so the result depends
    only on (scenario, seed, n_realizations), never on the worker count.
    """
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}")
    if seed is None:
        seed = scenario.seed
    mu = mean_active_count(scenario, "short") + mean_active_count(scenario, "tall")
    hist_width = int(math.ceil(mu + 10.0 * math.sqrt(mu))) + 16
    sizes = [
        min(block_size, n_realizations - start)
        for start in range(0, n_realizations, block_size)
    ]

    def job(args):
        index, length = args
        return _process_block(scenario, interaction, index, length, seed, hist_width)

    tasks = list(enumerate(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(job, tasks))
    else:
        partials = [job(t) for t in tasks]
    summary = partials[0]
    for part in partials[1:]:
        summary = summary.merge(part)
    return summary
