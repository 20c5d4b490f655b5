"""Command-line front end.

Subcommands run the closed-form and Monte Carlo pipelines and emit CSV files
with a ``#``-prefixed metadata block (config hash, seed, version) followed by
a header row.  Outputs are byte-identical for identical config and seed,
regardless of worker count.

Exit codes: 0 success, 1 validation/runtime failure, 2 config error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from . import analytics
from .analytics import (
    DegenerateScenarioError,
    NoPathError,
    mean_received_power,
    mean_toa,
    mpc_mean,
    mpc_pmf,
)
from .config import ConfigError, RunConfig, load_config
from .geometry import LensSpec, lens_area, sample_uniform_in_lens
from .pointprocess import mean_active_count, sample_realization, substream
from .simulator import ANGLE_BIN_EDGES, run_experiment

__all__ = ["main"]


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".12g")
    return str(value)


def _write_csv(path: str, cfg: RunConfig, seed: int, command: str, header, rows):
    lines = [
        f"# config_hash={cfg.hash}",
        f"# seed={seed}",
        f"# version={__version__}",
        f"# command={command}",
        ",".join(header),
    ]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def _pmf_support(scenario) -> np.ndarray:
    mu = mean_active_count(scenario, "short") + mean_active_count(scenario, "tall")
    cap = int(math.ceil(mu + 10.0 * math.sqrt(mu))) + 1
    return np.arange(max(cap, 2))


def cmd_pmf(cfg: RunConfig, seed: int, n: int, workers: int, out: str) -> int:
    scenario = cfg.scenario(seed=seed)
    mode = next(iter(cfg.interactions))
    summary = run_experiment(scenario, cfg.interactions[mode], n, seed, workers)
    support = _pmf_support(scenario)
    analytic = mpc_pmf(support, scenario)
    empirical = np.zeros(len(support))
    hist = summary.empirical_pmf
    width = min(len(hist), len(support))
    empirical[:width] = hist[:width]
    stderr = np.sqrt(empirical * (1.0 - empirical) / n)
    rows = [
        (int(k), float(analytic[k]), float(empirical[k]), float(stderr[k]))
        for k in support
    ]
    _write_csv(out, cfg, seed, "pmf", ("n", "analytic_pmf", "empirical_pmf", "stderr"), rows)
    return 0


def cmd_toa_sweep(cfg: RunConfig, seed: int, n: int, workers: int, out: str) -> int:
    mode = next(iter(cfg.interactions))
    rows = []
    for d_prime in cfg.toa_d_prime:
        for gamma in cfg.toa_gamma:
            scenario = cfg.scenario(d_prime=d_prime, gamma=gamma, seed=seed)
            try:
                analytic_us = mean_toa(scenario) * 1e6
            except NoPathError:
                # No-path grid point: neither estimator is defined.
                rows.append((d_prime, gamma, math.nan, math.nan, math.nan))
                continue
            summary = run_experiment(scenario, cfg.interactions[mode], n, seed, workers)
            rows.append(
                (
                    d_prime,
                    gamma,
                    analytic_us,
                    summary.toa_mean * 1e6,
                    summary.toa_stderr * 1e6,
                )
            )
    header = ("d_prime_m", "gamma", "analytic_mean_toa_us", "empirical_mean_toa_us", "stderr_us")
    _write_csv(out, cfg, seed, "toa-sweep", header, rows)
    return 0


def cmd_power(cfg: RunConfig, seed: int, n: int, workers: int, out: str) -> int:
    rows = []
    for d_prime in cfg.power_d_prime:
        scenario = cfg.scenario(d_prime=d_prime, seed=seed)
        for mode, interaction in cfg.interactions.items():
            theory, theory_se = mean_received_power(
                scenario, interaction, n_mc=max(10 * n, 10_000), rng=substream(seed, 0)
            )
            summary = run_experiment(scenario, interaction, n, seed, workers)
            rows.append(
                (d_prime, mode, theory, theory_se, summary.power_mean, summary.power_stderr)
            )
    header = (
        "d_prime_m",
        "mode",
        "closed_form_mean_w",
        "closed_form_stderr_w",
        "simulated_mean_w",
        "simulated_stderr_w",
    )
    _write_csv(out, cfg, seed, "power", header, rows)
    return 0


def cmd_angles(cfg: RunConfig, seed: int, n: int, workers: int, out: str) -> int:
    scenario = cfg.scenario(seed=seed)
    mode = next(iter(cfg.interactions))
    summary = run_experiment(scenario, cfg.interactions[mode], n, seed, workers)
    centers = 0.5 * (ANGLE_BIN_EDGES[:-1] + ANGLE_BIN_EDGES[1:])
    rows = [
        (float(c), float(a), float(b))
        for c, a, b in zip(centers, summary.aod_density, summary.aoa_density)
    ]
    _write_csv(out, cfg, seed, "angles", ("bin_center_rad", "aod_density", "aoa_density"), rows)
    return 0


def _check_geometry_continuity(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(200):
        a = rng.uniform(0.5, 500.0)
        b = rng.uniform(0.5, 500.0)
        eps = 1e-9 * max(a, b)
        # Contained boundary: |a - b| = d0.
        d0 = abs(a - b)
        if d0 > eps:
            inner = lens_area(LensSpec(d0 + eps, a, b))
            worst = max(worst, abs(inner - math.pi * min(a, b) ** 2) / (math.pi * min(a, b) ** 2))
        # Disjoint boundary: a + b = d0.
        outer = lens_area(LensSpec(a + b - eps, a, b))
        worst = max(worst, outer / (math.pi * min(a, b) ** 2))
    return worst < 1e-6, f"max relative discontinuity {worst:.3g}"


def _check_pmf_normalization(scenario) -> tuple[bool, str]:
    total = float(np.sum(mpc_pmf(_pmf_support(scenario), scenario)))
    return total > 1.0 - 1e-10, f"pmf mass {total:.15f}"


def _check_ks_marginals(cfg, scenario, seed, n) -> list[tuple[str, bool, str]]:
    checks = []
    for offset, kind in enumerate(("short", "tall")):
        if mean_active_count(scenario, kind) <= 0.0:
            checks.append((f"ks-{kind}", True, "class degenerate, skipped"))
            continue
        lens = scenario.scatterer_class(kind).lens(scenario.d_prime)
        points = sample_uniform_in_lens(lens, substream(seed, 1000 + offset), size=n)
        x = np.hypot(points[:, 0], points[:, 1])
        y = np.hypot(points[:, 0] - scenario.d_prime, points[:, 1])
        for axis, samples, cdf in (
            ("x", x, lambda t, k=kind: analytics.distance_cdf_bs(t, scenario, k)),
            ("y", y, lambda t, k=kind: analytics.distance_cdf_ms(t, scenario, k)),
        ):
            result = stats.kstest(samples, np.vectorize(cdf))
            checks.append(
                (
                    f"ks-{kind}-{axis}",
                    result.pvalue > 0.01,
                    f"KS D={result.statistic:.4g} p={result.pvalue:.4g}",
                )
            )
    return checks


def _check_power_consistency(cfg, scenario, seed, n) -> list[tuple[str, bool, str]]:
    checks = []
    for mode, interaction in cfg.interactions.items():
        theory, theory_se = mean_received_power(
            scenario, interaction, n_mc=max(10 * n, 10_000), rng=substream(seed, 2000)
        )
        summary = run_experiment(scenario, interaction, n, seed)
        diff = abs(theory - summary.power_mean)
        bound = 3.0 * math.hypot(theory_se, summary.power_stderr)
        checks.append(
            (
                f"power-dual-{mode}",
                diff <= bound,
                f"|closed form - simulated| = {diff:.3g} W vs 3 sigma = {bound:.3g} W",
            )
        )
    return checks


def cmd_validate(cfg: RunConfig, seed: int, n: int | None, workers: int) -> int:
    scenario = cfg.scenario(seed=seed)
    checks = []
    checks.append(("geometry-continuity",) + _check_geometry_continuity(substream(seed, 900)))
    checks.append(("pmf-normalization",) + _check_pmf_normalization(scenario))
    if mpc_mean(scenario) <= 0.0:
        # Degenerate scenario: confirm the no-path handling itself.
        realization = sample_realization(scenario, substream(seed, 3000))
        empty = len(realization.short_points) == 0 and len(realization.tall_points) == 0
        checks.append(("degenerate-realizations-empty", empty, "sampled realization is empty"))
        try:
            mean_toa(scenario)
            checks.append(("degenerate-no-path", False, "mean_toa did not flag no-path"))
        except NoPathError:
            checks.append(("degenerate-no-path", True, "no-path condition reported"))
        except DegenerateScenarioError:
            checks.append(("degenerate-no-path", True, "no-path condition reported"))
    else:
        n_ks = n or 100_000
        checks.extend(_check_ks_marginals(cfg, scenario, seed, n_ks))
        checks.extend(_check_power_consistency(cfg, scenario, seed, cfg.realizations["power"]))
    failed = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += 0 if ok else 1
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dvrchan",
        description="Dual-visibility-region channel model: analytics and Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("pmf", "multipath-count PMF, analytic vs empirical"),
        ("toa-sweep", "mean time of arrival over a distance/gamma grid"),
        ("power", "mean received power, closed form vs direct simulation"),
        ("angles", "departure/arrival angle histograms"),
        ("validate", "run the invariant suite and report pass/fail"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", default=None, help="JSON config (default: GTU preset)")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--realizations", type=int, default=None, help="override realization count")
        p.add_argument("--workers", type=int, default=1, help="parallel worker count")
    return parser


_DEFAULT_REALIZATION_KEY = {"pmf": "pmf", "toa-sweep": "toa", "power": "power", "angles": "angles"}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    seed = cfg.seed if args.seed is None else args.seed
    workers = max(args.workers, 1)
    if args.command == "validate":
        return cmd_validate(cfg, seed, args.realizations, workers)
    if args.out is None:
        print("error: --out is required for this command", file=sys.stderr)
        return 2
    n = args.realizations or cfg.realizations[_DEFAULT_REALIZATION_KEY[args.command]]
    handler = {
        "pmf": cmd_pmf,
        "toa-sweep": cmd_toa_sweep,
        "power": cmd_power,
        "angles": cmd_angles,
    }[args.command]
    try:
        return handler(cfg, seed, n, workers, args.out)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 1
    except DegenerateScenarioError as exc:
        print(f"error: degenerate scenario: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
