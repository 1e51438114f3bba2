import numpy as np
import pytest

from passwipt import Receivers, SystemConfig, build_channels


@pytest.fixture
def default_config():
    """Desk-scale evaluation configuration."""
    return SystemConfig()


@pytest.fixture
def small_config():
    """Cheaper instance for unit tests: coarser grid, fewer receivers."""
    return SystemConfig(K=2, Q=1, J=2, M=3, N=2, grid_points=201)


def random_layout(rng, config):
    """Valid layout: sorted uniform draws plus the mandatory spacing."""
    slack = np.array(
        [lm - (config.N - 1) * config.L_0 for lm in config.waveguide_lengths]
    )
    base = np.sort(rng.random((config.M, config.N)), axis=1) * slack[:, None]
    return base + np.arange(config.N)[None, :] * config.L_0


def random_receivers(rng, config):
    x_hi = config.L_x - (config.J - 1) * config.d_s
    xy = rng.random((config.K + config.Q, 2)) * np.array([x_hi, config.L_y])
    return Receivers(idr_xy=xy[: config.K], ehr_xy=xy[config.K :])


def random_beams(rng, config, power=None):
    """Complex-normal beams scaled to the given total power (default P_max)."""
    shape = (config.K, config.M, config.N_d)
    W = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    power = config.P_max if power is None else power
    return W * np.sqrt(power / np.sum(np.abs(W) ** 2))


def random_instance(rng, config):
    """(channels, layout, receivers) for a random valid scenario."""
    layout = random_layout(rng, config)
    receivers = random_receivers(rng, config)
    return build_channels(layout, receivers, config), layout, receivers


def phase_flat_config(**overrides):
    """Carrier low enough that phase barely varies across the region.

    In this regime the rate depends on channel magnitudes only, so grid
    search reduces to distance minimization with known closed forms.
    """
    kwargs = dict(
        f_c=1e4, M=1, N=1, K=1, Q=0, J=1, d_s=0.01, L_0=0.0,
        sigma2=1.0, E_min=0.0, eta=(), grid_points=2001,
    )
    kwargs.update(overrides)
    if "P_max" not in kwargs:
        cfg0 = SystemConfig(**dict(kwargs, P_max=1.0))
        # SNR ~ 30 at the minimum ground distance a.
        kwargs["P_max"] = 30.0 * cfg0.a**2 / cfg0.xi**2
    return SystemConfig(**kwargs)
