"""Benchmark schemes: ZF beamforming with position optimization, fixed
uniform PA positions, and a conventional centered-ULA MIMO transmitter."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .inner import (
    ENERGY_SLACK,
    SolveSettings,
    feasible_init_beams,
    min_energy_margin,
    total_power,
    wmmse_inner_loop,
)
from .metrics import all_harvested, matched_filters_weights, sum_rate
from .model import ChannelMatrixSet, SystemConfig, build_channels, validate_layout
from .positions import gauss_seidel_sweep
from .trace import POSITION_STEP, SolveTrace

# Ridge added to the stacked-channel Gram matrix when exact nulling is
# impossible (more streams than waveguides).
ZF_RIDGE = 1e-8


class BaselineKind(enum.Enum):
    ZF_PASS = "zf_pass"
    FIXED_PA = "fixed_pa"
    CONVENTIONAL_MIMO = "conventional_mimo"


@dataclass
class BaselineResult:
    kind: BaselineKind
    sum_rate: float
    power: float
    energy_margins: np.ndarray
    feasible: bool
    converged: bool
    iterations: int
    trace: SolveTrace
    beams: np.ndarray
    layout: np.ndarray | None


def fixed_uniform_layout(config: SystemConfig) -> np.ndarray:
    """PAs at L_x/(N+1) * (n+1), identical on every waveguide."""
    spacing = config.L_x / (config.N + 1)
    if spacing < config.L_0:
        raise ConfigError(
            f"uniform spacing {spacing:.6g} m violates the minimum PA spacing "
            f"{config.L_0:.6g} m"
        )
    positions = spacing * np.arange(1, config.N + 1)
    if positions[-1] > min(config.waveguide_lengths):
        raise ConfigError("uniform layout exceeds a waveguide length")
    return np.tile(positions, (config.M, 1))


def zf_beamformer(H: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Zero-forcing beams from the stacked IDR channels, at full power.

    With K*J streams at most M, the plain pseudo-inverse nulls inter-user
    interference exactly; otherwise a ridge of 1e-8 * P_max makes the
    stacked Gram invertible and nulling is only approximate. Per-stream
    equal power, scaled so the total is exactly P_max.
    """
    K, M, J = H.shape
    Nd = config.N_d
    stacked = np.concatenate([H[k].T for k in range(K)], axis=0)  # (K*J, M)
    if K * J <= M:
        P = np.linalg.pinv(stacked)
    else:
        gram = stacked @ stacked.conj().T
        ridge = ZF_RIDGE * config.P_max
        P = stacked.conj().T @ np.linalg.inv(gram + ridge * np.eye(K * J))
    W = np.zeros((K, M, Nd), dtype=complex)
    per_stream = config.P_max / (K * Nd)
    for k in range(K):
        block = P[:, k * J : k * J + Nd]
        for s in range(Nd):
            col = block[:, s]
            nrm = np.linalg.norm(col)
            if nrm < 1e-300:
                col = np.zeros(M)
                col[s % M] = 1.0
                nrm = 1.0
            W[k, :, s] = math.sqrt(per_stream) * col / nrm
    return W


def conventional_mimo_channels(receivers, config: SystemConfig) -> ChannelMatrixSet:
    """Channels of a half-wavelength ULA centered at [L_x/2, L_y/2, a].

    One radiator per RF chain: the free-space spherical term only, with no
    in-waveguide phase and no 1/sqrt(N) split.
    """
    lam = config.wavelength
    tx_x = config.L_x / 2 + (np.arange(config.M) - (config.M - 1) / 2) * lam / 2
    tx_y = config.L_y / 2

    def matrices(anchors):
        if anchors.size == 0:
            return np.zeros((0, config.M, config.J), dtype=complex)
        ant_x = anchors[:, 0][:, None] + np.arange(config.J)[None, :] * config.d_s
        dx = tx_x[None, :, None] - ant_x[:, None, :]                    # (R, M, J)
        dy2 = (tx_y - anchors[:, 1]) ** 2                               # (R,)
        D = np.sqrt(dx**2 + dy2[:, None, None] + config.a**2)
        return config.xi * np.exp(-1j * config.kappa * D) / D

    return ChannelMatrixSet(H=matrices(receivers.idr_xy), G=matrices(receivers.ehr_xy))


def _result(kind, H, G, W, config, trace, converged, iterations, layout):
    margins = all_harvested(G, W, config.eta) - config.E_min if config.Q else np.zeros(0)
    power = total_power(W)
    feasible = power <= config.P_max * (1 + 1e-9) and (
        config.Q == 0 or bool(np.all(margins >= -ENERGY_SLACK * config.E_min))
    )
    return BaselineResult(
        kind=kind,
        sum_rate=sum_rate(H, W, config.sigma2),
        power=power,
        energy_margins=margins,
        feasible=feasible,
        converged=converged,
        iterations=iterations,
        trace=trace,
        beams=W,
        layout=layout,
    )


def _run_inner_only(kind, H, G, config, settings, layout, W_init=None):
    W0 = feasible_init_beams(H, G, config) if W_init is None else W_init
    W, steps = wmmse_inner_loop(H, G, W0, config, settings)
    trace = SolveTrace()
    for st in steps:
        trace.add(0, st.t, st.surrogate, st.sum_rate, st.power, st.energy_margin, layout)
    converged = len(steps) < settings.max_inner_iters or (
        len(steps) >= 2
        and abs(steps[-1].surrogate - steps[-2].surrogate)
        <= settings.surrogate_rel_tol * max(1.0, abs(steps[-2].surrogate))
    )
    return _result(kind, H, G, W, config, trace, converged, len(steps), layout)


def _run_zf_pass(scenario, settings):
    config = scenario.config
    layout = np.array(scenario.initial_layout, dtype=float)
    ch = build_channels(layout, scenario.receivers, config)
    H, G = ch.H, ch.G
    trace = SolveTrace()
    converged = False
    rate_prev = None
    iterations = 0
    for outer in range(max(settings.max_outer_iters, 1)):
        W = zf_beamformer(H, config)
        iterations = outer + 1
        rate_now = sum_rate(H, W, config.sigma2)
        trace.add(
            outer, 0, rate_now, rate_now, total_power(W),
            min_energy_margin(G, W, config), layout,
        )
        if rate_prev is not None and abs(rate_now - rate_prev) <= settings.outer_rel_tol * max(
            1.0, abs(rate_prev)
        ):
            converged = True
            break
        rate_prev = rate_now
        U, Lam = matched_filters_weights(H, W, config.sigma2)
        # ZF ignores the harvesters, so the energy filter only applies while
        # the current beams actually satisfy the floor.
        enforce = config.Q > 0 and min_energy_margin(G, W, config) >= -ENERGY_SLACK * config.E_min
        layout, report, H, G = gauss_seidel_sweep(
            layout, H, G, W, U, Lam, scenario.receivers, config, enforce_energy=enforce
        )
        trace.add(
            outer, POSITION_STEP, report.objective_after,
            sum_rate(H, W, config.sigma2), total_power(W),
            min_energy_margin(G, W, config), layout,
        )
    return _result(
        BaselineKind.ZF_PASS, H, G, W, config, trace, converged, iterations, layout
    )


def run_baseline(kind: BaselineKind, scenario, settings: SolveSettings | None = None) -> BaselineResult:
    """Evaluate one benchmark scheme on a scenario.

    ZF_PASS alternates zero-forcing beams with position sweeps; FIXED_PA
    optimizes beams on the uniform layout; CONVENTIONAL_MIMO optimizes beams
    on the centered-ULA channels. Energy shortfalls are reported in the
    result, never patched up.
    """
    settings = settings or SolveSettings()
    kind = BaselineKind(kind)
    config = scenario.config
    if kind is BaselineKind.ZF_PASS:
        return _run_zf_pass(scenario, settings)
    if kind is BaselineKind.FIXED_PA:
        layout = fixed_uniform_layout(config)
        assert not validate_layout(layout, config)
        ch = build_channels(layout, scenario.receivers, config)
        return _run_inner_only(
            kind, ch.H, ch.G, config, settings, layout, W_init=scenario.initial_beams
        )
    ch = conventional_mimo_channels(scenario.receivers, config)
    return _run_inner_only(kind, ch.H, ch.G, config, settings, layout=None)
