"""System geometry, configuration, and the waveguide channel model.

Coordinate system: waveguides run along the x-axis at height ``a``, parallel
over the y-axis with spacing ``d``; receivers sit on the ground plane
(z = 0), each a J-element ULA extended over the x-axis. All internal
quantities are SI (watts, meters, hertz); dBm enters only at the config-file
boundary.

A pinching-antenna layout is a plain ``(M, N)`` float array ``layout`` with
``layout[m, n]`` the x-position of PA ``n`` on waveguide ``m`` (0-based
indices everywhere). Validity means every position stays within its
waveguide length and adjacent PAs on a waveguide keep at least ``L_0``
spacing; see :func:`validate_layout`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, LayoutError

# Fixed propagation speed used throughout [m/s].
SPEED_OF_LIGHT = 2.998e8


def dbm_to_watts(x_dbm: float) -> float:
    """Convert a power from dBm to watts."""
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(p_watts: float) -> float:
    """Convert a power from watts to dBm."""
    if p_watts <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(p_watts) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """All scalar parameters of one scenario.

    Defaults reproduce the desk-scale evaluation setup: 28 GHz carrier,
    4 waveguides x 3 PAs over a 30 m x 6 m region, 2 information receivers
    and 2 energy harvesters with 3-antenna ULAs, 43 dBm power budget,
    -50 dBm noise, 0.5e-7 W energy floor, 2001-point search grid.
    """

    f_c: float = 28e9            # carrier frequency [Hz]
    c: float = SPEED_OF_LIGHT    # propagation speed [m/s]
    M: int = 4                   # number of waveguides
    N: int = 3                   # PAs per waveguide
    K: int = 2                   # information-decoding receivers
    Q: int = 2                   # energy-harvesting receivers
    J: int = 3                   # antennas per receiver ULA
    d_s: float | None = None     # receiver antenna spacing [m]; None -> lambda/2
    a: float = 5.0               # waveguide height [m]
    d: float | None = None       # waveguide spacing [m]; None -> L_y/(M-1)
    L_x: float = 30.0            # region length [m]
    L_y: float = 6.0             # region width [m]
    L_0: float | None = None     # minimum PA spacing [m]; None -> lambda/2
    waveguide_lengths: tuple[float, ...] | None = None  # None -> L_x each
    iota_ref: float = 1.44       # waveguide refractive index
    sigma2: float = 1e-8         # noise power [W] (-50 dBm)
    P_max: float = dbm_to_watts(43.0)  # transmit power budget [W]
    E_min: float = 0.5e-7        # per-EHR harvested-power floor [W]
    eta: tuple[float, ...] | float = 0.5  # transducer efficiency per EHR
    grid_points: int = 2001      # points of the per-waveguide search grid

    # Derived from f_c and c; recomputed on construction, never passed in.
    kappa: float = field(init=False)  # free-space wavenumber [rad/m]
    xi: float = field(init=False)     # path-gain scale [m], xi * kappa = 1/2

    def __post_init__(self):
        issues = []
        if not self.f_c > 0:
            issues.append("carrier frequency f_c must be positive")
        if not self.c > 0:
            issues.append("propagation speed c must be positive")
        for name in ("a", "L_x", "L_y", "sigma2", "P_max"):
            if not getattr(self, name) > 0:
                issues.append(f"{name} must be positive")
        for name in ("M", "N", "K", "J"):
            if getattr(self, name) < 1:
                issues.append(f"{name} must be at least 1")
        if self.Q < 0:
            issues.append("Q must be nonnegative")
        if self.E_min < 0:
            issues.append("E_min must be nonnegative")
        if self.grid_points < 2:
            issues.append("grid_points must be at least 2")
        if issues:
            raise ConfigError("; ".join(issues))

        lam = self.c / self.f_c
        object.__setattr__(self, "kappa", 2.0 * math.pi * self.f_c / self.c)
        object.__setattr__(self, "xi", self.c / (4.0 * math.pi * self.f_c))
        if self.d_s is None:
            object.__setattr__(self, "d_s", lam / 2.0)
        if self.L_0 is None:
            object.__setattr__(self, "L_0", lam / 2.0)
        if self.d is None:
            spacing = self.L_y / (self.M - 1) if self.M > 1 else 0.0
            object.__setattr__(self, "d", spacing)
        if self.waveguide_lengths is None:
            object.__setattr__(self, "waveguide_lengths", (self.L_x,) * self.M)
        else:
            object.__setattr__(
                self, "waveguide_lengths", tuple(float(x) for x in self.waveguide_lengths)
            )
        if isinstance(self.eta, (int, float)):
            object.__setattr__(self, "eta", (float(self.eta),) * self.Q)
        else:
            object.__setattr__(self, "eta", tuple(float(x) for x in self.eta))

        issues = []
        if len(self.waveguide_lengths) != self.M:
            issues.append("waveguide_lengths must have one entry per waveguide")
        if len(self.eta) != self.Q:
            issues.append("eta must have one entry per EHR")
        if any(not (0.0 < e < 1.0) for e in self.eta):
            issues.append("every eta must lie in (0, 1)")
        if not self.d_s > 0:
            issues.append("d_s must be positive")
        if self.d < 0:
            issues.append("d must be nonnegative")
        if self.L_0 < 0:
            issues.append("L_0 must be nonnegative")
        if any(lm <= 0 for lm in self.waveguide_lengths):
            issues.append("waveguide lengths must be positive")
        if any((self.N - 1) * self.L_0 > lm for lm in self.waveguide_lengths):
            issues.append("(N-1)*L_0 exceeds a waveguide length; no feasible layout")
        if (self.J - 1) * self.d_s >= self.L_x:
            issues.append("receiver ULA extent (J-1)*d_s must fit in the region")
        if issues:
            raise ConfigError("; ".join(issues))

    @property
    def wavelength(self) -> float:
        return self.c / self.f_c

    @property
    def N_d(self) -> int:
        """Number of data streams per receiver, min(M, J)."""
        return min(self.M, self.J)


def derive_constants(config: SystemConfig) -> SystemConfig:
    """Return a config with the derived wavenumber/path-gain fields rebuilt.

    Construction already derives them; this re-derivation is the hook to use
    after replacing ``f_c`` or ``c`` on an existing config.
    """
    return replace(config)


@dataclass
class Receivers:
    """ULA anchor points (start of each array) for IDRs and EHRs.

    idr_xy: (K, 2) array of ground-plane anchors, ehr_xy: (Q, 2).
    Antenna j of a receiver anchored at (x, y) sits at (x + j*d_s, y, 0).
    """

    idr_xy: np.ndarray
    ehr_xy: np.ndarray

    def __post_init__(self):
        self.idr_xy = np.atleast_2d(np.asarray(self.idr_xy, dtype=float))
        self.ehr_xy = (
            np.asarray(self.ehr_xy, dtype=float).reshape(-1, 2)
            if np.size(self.ehr_xy)
            else np.zeros((0, 2))
        )


def validate_receivers(receivers: Receivers, config: SystemConfig) -> list[str]:
    """Check that every receiver antenna stays inside the service rectangle."""
    issues = []
    x_hi = config.L_x - (config.J - 1) * config.d_s
    for name, xy in (("idr", receivers.idr_xy), ("ehr", receivers.ehr_xy)):
        for i, (x, y) in enumerate(xy):
            if not (0.0 <= x <= x_hi):
                issues.append(f"{name} {i}: anchor x={x:.6g} outside [0, {x_hi:.6g}]")
            if not (0.0 <= y <= config.L_y):
                issues.append(f"{name} {i}: anchor y={y:.6g} outside [0, {config.L_y:.6g}]")
    return issues


def antenna_points(anchor_xy, config: SystemConfig) -> np.ndarray:
    """(J, 3) positions of one receiver's ULA elements on the ground plane."""
    x0, y0 = float(anchor_xy[0]), float(anchor_xy[1])
    pts = np.zeros((config.J, 3))
    pts[:, 0] = x0 + np.arange(config.J) * config.d_s
    pts[:, 1] = y0
    return pts


@dataclass
class LayoutViolation:
    """One violated layout constraint, with 0-based (m, n) indices."""

    kind: str   # "box" or "spacing"
    m: int
    n: int
    value: float
    limit: float

    def __str__(self):
        if self.kind == "box":
            return (
                f"box: PA ({self.m},{self.n}) at {self.value:.6g} m outside "
                f"[0, {self.limit:.6g}]"
            )
        return (
            f"spacing: PAs ({self.m},{self.n - 1})-({self.m},{self.n}) gap "
            f"{self.value:.6g} m < {self.limit:.6g} m"
        )


def validate_layout(layout: np.ndarray, config: SystemConfig) -> list[LayoutViolation]:
    """List every box/spacing violation of a layout (empty list = valid)."""
    layout = np.asarray(layout, dtype=float)
    if layout.shape != (config.M, config.N):
        raise ValueError(f"layout must have shape ({config.M}, {config.N})")
    violations = []
    for m in range(config.M):
        lm = config.waveguide_lengths[m]
        for n in range(config.N):
            pos = layout[m, n]
            if not (0.0 <= pos <= lm):
                violations.append(LayoutViolation("box", m, n, pos, lm))
        for n in range(1, config.N):
            gap = layout[m, n] - layout[m, n - 1]
            if gap < config.L_0:
                violations.append(LayoutViolation("spacing", m, n, gap, config.L_0))
    return violations


def pa_point(config: SystemConfig, m: int, l: float) -> np.ndarray:
    """3-D position of a PA at x-position ``l`` on waveguide ``m`` (0-based)."""
    if not 0 <= m < config.M:
        raise IndexError(f"waveguide index {m} out of range [0, {config.M})")
    return np.array([l, m * config.d, config.a])


def distance(config: SystemConfig, m: int, l: float, antenna_point) -> float:
    """Euclidean distance from a PA position to a ground-plane antenna."""
    antenna_point = np.asarray(antenna_point, dtype=float)
    if antenna_point[2] != 0.0:
        raise ValueError("receiver antennas sit on the ground plane (z = 0)")
    return float(np.linalg.norm(pa_point(config, m, l) - antenna_point))


def channel_coefficient(config: SystemConfig, m: int, l: float, antenna_point) -> complex:
    """Free-space coefficient xi * exp(-j*kappa*D) / D for one PA/antenna pair."""
    D = distance(config, m, l, antenna_point)
    return config.xi * np.exp(-1j * config.kappa * D) / D


def effective_channel(config: SystemConfig, m: int, positions, antenna_point) -> complex:
    """Waveguide-to-antenna coefficient: all N PAs of one waveguide combined.

    Each PA radiates an attenuated (sqrt(1/N)) copy of the feed signal with
    the accumulated in-waveguide phase kappa * iota_ref * l on top of the
    free-space propagation term.
    """
    positions = np.asarray(positions, dtype=float)
    total = 0.0 + 0.0j
    for l in positions:
        D = distance(config, m, float(l), antenna_point)
        phase = config.kappa * (D + config.iota_ref * l)
        total += np.exp(-1j * phase) / (math.sqrt(len(positions)) * D)
    return config.xi * total


@dataclass
class ChannelMatrixSet:
    """Channel matrices per receiver: H (K, M, J) for IDRs, G (Q, M, J) for EHRs."""

    H: np.ndarray
    G: np.ndarray


def _waveguide_rows(layout: np.ndarray, anchor_xy, config: SystemConfig) -> np.ndarray:
    """(M, J) effective-channel matrix from every waveguide to one receiver."""
    ant = antenna_points(anchor_xy, config)           # (J, 3)
    wg_y = np.arange(config.M) * config.d             # (M,)
    dx = layout[:, :, None] - ant[None, None, :, 0]   # (M, N, J)
    dy2 = (wg_y[:, None, None] - ant[None, None, :, 1]) ** 2
    D = np.sqrt(dx**2 + dy2 + config.a**2)
    phase = config.kappa * (D + config.iota_ref * layout[:, :, None])
    terms = np.exp(-1j * phase) / (math.sqrt(config.N) * D)
    return config.xi * terms.sum(axis=1)


def build_channels(layout: np.ndarray, receivers: Receivers, config: SystemConfig) -> ChannelMatrixSet:
    """Assemble the (K, M, J) IDR and (Q, M, J) EHR channel matrices.

    Raises LayoutError when the layout violates box or spacing constraints.
    """
    layout = np.asarray(layout, dtype=float)
    violations = validate_layout(layout, config)
    if violations:
        raise LayoutError(violations)
    H = np.stack(
        [_waveguide_rows(layout, xy, config) for xy in receivers.idr_xy]
    ) if len(receivers.idr_xy) else np.zeros((0, config.M, config.J), dtype=complex)
    G = np.stack(
        [_waveguide_rows(layout, xy, config) for xy in receivers.ehr_xy]
    ) if len(receivers.ehr_xy) else np.zeros((0, config.M, config.J), dtype=complex)
    return ChannelMatrixSet(H=H, G=G)
