"""End-to-end driver: scenario generation, the alternating solve, and
parameter sweeps over power, PA count, or waveguide count."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import BaselineKind, fixed_uniform_layout, run_baseline
from .errors import ConvergenceError
from .inner import (
    SolveSettings,
    feasible_init_beams,
    min_energy_margin,
    total_power,
    wmmse_inner_loop,
)
from .metrics import all_harvested, matched_filters_weights, sum_rate
from .model import Receivers, SystemConfig, build_channels, dbm_to_watts
from .positions import gauss_seidel_sweep
from .trace import POSITION_STEP, SolveTrace

PROPOSED = "proposed"
ALL_SCHEMES = (PROPOSED,) + tuple(k.value for k in BaselineKind)

SWEEP_PARAMETERS = ("P_max", "P_max_dbm", "N", "M")


@dataclass
class Scenario:
    """One reproducible problem instance."""

    seed: int
    config: SystemConfig
    receivers: Receivers
    initial_layout: np.ndarray
    initial_beams: np.ndarray | None = None


def sample_scenario(seed: int, config: SystemConfig) -> Scenario:
    """Draw receiver anchors uniformly over the admissible rectangle.

    Uses numpy's seeded PCG64 stream and consumes exactly (K + Q) * 2 draws
    (IDRs first, x before y), so extending a sweep never shifts earlier
    scenarios. Anchors keep the whole ULA inside the region.
    """
    rng = np.random.default_rng(seed)
    x_hi = config.L_x - (config.J - 1) * config.d_s
    u = rng.random((config.K + config.Q, 2))
    xy = u * np.array([x_hi, config.L_y])
    receivers = Receivers(idr_xy=xy[: config.K], ehr_xy=xy[config.K :])
    return Scenario(
        seed=seed,
        config=config,
        receivers=receivers,
        initial_layout=fixed_uniform_layout(config),
    )


@dataclass
class SolveResult:
    beams: np.ndarray
    layout: np.ndarray
    trace: SolveTrace
    converged: bool
    outer_iters: int
    sum_rate: float
    power: float
    energy_margins: np.ndarray


def solve_scenario(scenario: Scenario, settings: SolveSettings | None = None) -> SolveResult:
    """Alternate beam optimization and position sweeps until the sum-rate
    settles (relative change below the outer tolerance).

    With ``max_outer_iters == 0`` this degenerates to a single beam-only
    solve on the initial layout. Raises ConvergenceError (result attached)
    when the outer cap is hit before the tolerance is met.
    """
    settings = settings or SolveSettings()
    config = scenario.config
    layout = np.array(scenario.initial_layout, dtype=float)
    ch = build_channels(layout, scenario.receivers, config)
    H, G = ch.H, ch.G
    W = (
        np.asarray(scenario.initial_beams, dtype=complex)
        if scenario.initial_beams is not None
        else feasible_init_beams(H, G, config)
    )
    trace = SolveTrace()

    def make_result(converged, outer_iters):
        return SolveResult(
            beams=W,
            layout=layout,
            trace=trace,
            converged=converged,
            outer_iters=outer_iters,
            sum_rate=sum_rate(H, W, config.sigma2),
            power=total_power(W),
            energy_margins=(
                all_harvested(G, W, config.eta) - config.E_min
                if config.Q
                else np.zeros(0)
            ),
        )

    if settings.max_outer_iters == 0:
        W, steps = wmmse_inner_loop(H, G, W, config, settings)
        for st in steps:
            trace.add(0, st.t, st.surrogate, st.sum_rate, st.power, st.energy_margin, layout)
        return make_result(converged=True, outer_iters=0)

    rate_prev = None
    converged = False
    outer_done = 0
    for outer in range(settings.max_outer_iters):
        W, steps = wmmse_inner_loop(H, G, W, config, settings)
        for st in steps:
            trace.add(outer, st.t, st.surrogate, st.sum_rate, st.power, st.energy_margin, layout)
        U, Lam = matched_filters_weights(H, W, config.sigma2)
        layout, report, H, G = gauss_seidel_sweep(
            layout, H, G, W, U, Lam, scenario.receivers, config
        )
        rate_now = sum_rate(H, W, config.sigma2)
        trace.add(
            outer, POSITION_STEP, report.objective_after, rate_now,
            total_power(W), min_energy_margin(G, W, config), layout,
        )
        outer_done = outer + 1
        if rate_prev is not None and abs(rate_now - rate_prev) <= settings.outer_rel_tol * max(
            1.0, abs(rate_prev)
        ):
            converged = True
            break
        rate_prev = rate_now

    result = make_result(converged, outer_done)
    if not converged:
        raise ConvergenceError(
            f"outer loop hit the {settings.max_outer_iters}-iteration cap", result=result
        )
    return result


@dataclass
class SchemeRun:
    """Uniform record of one scheme evaluated on one scenario."""

    scheme: str
    seed: int
    sum_rate: float
    power: float
    energy_margin: float
    feasible: bool
    converged: bool
    iterations: int
    wall_time: float
    trace: SolveTrace | None
    error: str | None = None


def run_scheme(scheme: str, scenario: Scenario, settings: SolveSettings | None = None) -> SchemeRun:
    """Run one scheme on a scenario, capturing failures instead of raising."""
    settings = settings or SolveSettings()
    t0 = time.perf_counter()
    try:
        if scheme == PROPOSED:
            try:
                res = solve_scenario(scenario, settings)
                converged = True
            except ConvergenceError as exc:
                res = exc.result
                converged = False
            margins = res.energy_margins
            margin = float(margins.min()) if margins.size else math.inf
            feasible = res.power <= scenario.config.P_max * (1 + 1e-9) and (
                margins.size == 0 or margin >= -1e-6 * scenario.config.E_min
            )
            return SchemeRun(
                scheme, scenario.seed, res.sum_rate, res.power, margin, feasible,
                converged, res.outer_iters, time.perf_counter() - t0, res.trace,
            )
        base = run_baseline(BaselineKind(scheme), scenario, settings)
        margin = float(base.energy_margins.min()) if base.energy_margins.size else math.inf
        return SchemeRun(
            scheme, scenario.seed, base.sum_rate, base.power, margin, base.feasible,
            base.converged, base.iterations, time.perf_counter() - t0, base.trace,
        )
    except Exception as exc:  # recorded, never fatal to a sweep
        return SchemeRun(
            scheme, scenario.seed, math.nan, math.nan, math.nan, False, False, 0,
            time.perf_counter() - t0, None, error=f"{type(exc).__name__}: {exc}",
        )


def apply_parameter(config: SystemConfig, parameter: str, value) -> SystemConfig:
    """Config for one sweep point; waveguide spacing tracks M automatically."""
    if parameter == "P_max":
        return replace(config, P_max=float(value))
    if parameter == "P_max_dbm":
        return replace(config, P_max=dbm_to_watts(float(value)))
    if parameter == "N":
        return replace(config, N=int(value))
    if parameter == "M":
        return replace(config, M=int(value), d=None, waveguide_lengths=None)
    raise ValueError(f"unknown sweep parameter {parameter!r}; use one of {SWEEP_PARAMETERS}")


@dataclass
class SweepRow:
    parameter: str
    value: float
    seed: int
    scheme: str
    sum_rate: float
    iterations: int
    wall_time: float
    power: float
    energy_margin: float
    feasible: bool
    converged: bool
    error: str | None
    trace: SolveTrace | None = field(repr=False, default=None)


@dataclass
class SummaryRow:
    parameter: str
    value: float
    scheme: str
    mean_sum_rate: float
    n_runs: int
    n_errors: int
    n_feasible: int


def _run_cell(args):
    parameter, value, seed, scheme, config, settings = args
    scenario = sample_scenario(seed, config)
    run = run_scheme(scheme, scenario, settings)
    return SweepRow(
        parameter=parameter,
        value=float(value),
        seed=seed,
        scheme=scheme,
        sum_rate=run.sum_rate,
        iterations=run.iterations,
        wall_time=run.wall_time,
        power=run.power,
        energy_margin=run.energy_margin,
        feasible=run.feasible,
        converged=run.converged,
        error=run.error,
        trace=run.trace,
    )


def sweep(
    parameter: str,
    values,
    seeds,
    config: SystemConfig | None = None,
    schemes=ALL_SCHEMES,
    settings: SolveSettings | None = None,
    workers: int = 1,
):
    """Evaluate schemes over a parameter grid; one row per (value, seed, scheme).

    Individual failures land in their row's ``error`` column; the sweep
    itself never aborts. Returns (rows, summary) with rows sorted by
    (value, seed, scheme) regardless of execution order.
    """
    values = list(values)
    if any(values[i] >= values[i + 1] for i in range(len(values) - 1)):
        raise ValueError("sweep values must be strictly ascending")
    config = config or SystemConfig()
    settings = settings or SolveSettings()

    cells = [
        (parameter, value, seed, scheme, apply_parameter(config, parameter, value), settings)
        for value in values
        for seed in seeds
        for scheme in schemes
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    rows.sort(key=lambda r: (r.value, r.seed, r.scheme))

    summary = []
    for value in values:
        for scheme in schemes:
            cell_rows = [r for r in rows if r.value == float(value) and r.scheme == scheme]
            good = [r for r in cell_rows if r.error is None]
            summary.append(
                SummaryRow(
                    parameter=parameter,
                    value=float(value),
                    scheme=scheme,
                    mean_sum_rate=(
                        float(np.mean([r.sum_rate for r in good])) if good else math.nan
                    ),
                    n_runs=len(cell_rows),
                    n_errors=len(cell_rows) - len(good),
                    n_feasible=sum(1 for r in good if r.feasible),
                )
            )
    return rows, summary
