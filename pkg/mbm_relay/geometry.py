"""Air-to-ground path loss and per-hop average SNR.

All dB/linear conversions of the package live here.
"""
import math
from dataclasses import dataclass
from typing import Dict, Tuple

from mbm_relay.errors import ConfigurationError, DomainError

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_CARRIER_HZ = 2e9
DEFAULT_PATHLOSS_EXPONENT = 2.0


@dataclass(frozen=True)
class EnvironmentProfile:
    """Excess-loss constants of one propagation environment.

    Attributes:
        name: Environment label.
        eta_los: Mean excess loss of line-of-sight links, dB.
        eta_nlos: Mean excess loss of non-line-of-sight links, dB.
        a_prime: Sigmoid midpoint, degrees of elevation.
        b_prime: Sigmoid steepness, per degree.
    """

    name: str
    eta_los: float
    eta_nlos: float
    a_prime: float
    b_prime: float


ENVIRONMENTS: Dict[str, EnvironmentProfile] = {
    profile.name: profile
    for profile in (
        EnvironmentProfile("Suburban", 0.1, 21.0, 4.88, 0.429),
        EnvironmentProfile("Urban", 1.0, 20.0, 9.6117, 0.1581),
        EnvironmentProfile("DenseUrban", 1.6, 23.0, 12.081, 0.1139),
        EnvironmentProfile("HighriseUrban", 2.3, 34.0, 27.2304, 0.0797),
    )
}


def environment(name: str) -> EnvironmentProfile:
    """Look up a profile by name, ignoring case, spaces and underscores.

    Raises:
        ConfigurationError: For an unknown environment.
    """
    key = name.replace(" ", "").replace("_", "").replace("-", "").lower()
    for profile in ENVIRONMENTS.values():
        if profile.name.lower() == key:
            return profile
    raise ConfigurationError(
        f"unknown environment '{name}'. Must be one of: {list(ENVIRONMENTS)}"
    )


@dataclass(frozen=True)
class LinkGeometry:
    """Placement of the hovering UAV relative to one ground terminal."""

    uav_height_m: float
    ground_distance_m: float
    carrier_hz: float = DEFAULT_CARRIER_HZ
    pathloss_exponent: float = DEFAULT_PATHLOSS_EXPONENT

    def __post_init__(self) -> None:
        """Check h > 0, d >= 0, f_c > 0 and alpha >= 2."""
        if not self.uav_height_m > 0:
            raise DomainError(
                f"UAV height must be positive: {self.uav_height_m}"
            )
        if not self.ground_distance_m >= 0:
            raise DomainError(
                f"ground distance must be >= 0: {self.ground_distance_m}"
            )
        if not self.carrier_hz > 0:
            raise DomainError(f"carrier must be positive: {self.carrier_hz}")
        if not self.pathloss_exponent >= 2:
            raise DomainError(
                f"path loss exponent must be >= 2: {self.pathloss_exponent}"
            )


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power, receiver noise and path loss of one hop."""

    tx_power_dbm: float
    noise_power_dbm: float
    path_loss_linear: float

    def __post_init__(self) -> None:
        """Path loss must be a positive finite factor."""
        if not 0 < self.path_loss_linear < math.inf:
            raise DomainError(
                f"path loss must be positive and finite: "
                f"{self.path_loss_linear}"
            )


def db_to_linear(value_db: float) -> float:
    """10^(dB/10)."""
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """10 log10(value)."""
    if not value > 0:
        raise DomainError(f"cannot express {value} in dB")
    return 10.0 * math.log10(value)


def noise_power_dbm(density_dbm_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power over the given bandwidth."""
    if not bandwidth_hz > 0:
        raise DomainError(f"bandwidth must be positive: {bandwidth_hz}")
    return density_dbm_hz + 10.0 * math.log10(bandwidth_hz)


def split_total_distance(total_m: float) -> Tuple[float, float]:
    """Ground distances of both hops for a UAV midway between UE and BS."""
    if not total_m >= 0:
        raise DomainError(f"distance must be >= 0: {total_m}")
    return 0.5 * total_m, 0.5 * total_m


def elevation_angle_deg(h: float, d: float) -> float:
    """Elevation angle arctan(h / d) in degrees; 90 at d = 0.

    Raises:
        DomainError: If h <= 0 or d < 0.
    """
    if not h > 0:
        raise DomainError(f"UAV height must be positive: {h}")
    if not d >= 0:
        raise DomainError(f"ground distance must be >= 0: {d}")
    return math.degrees(math.atan2(h, d))


def excess_loss_db(env: EnvironmentProfile, theta_deg: float) -> float:
    """Elevation-dependent part of 10 log10(beta), in dB.

    Equals eta_LoS - eta_NLoS directly overhead and falls to 0 at grazing
    angles; :func:`path_loss_linear` adds the free-space and NLoS terms.
    """
    a = env.eta_los - env.eta_nlos
    sigmoid = 10.0 + 10.0 * env.a_prime * math.exp(
        -env.b_prime * (theta_deg - env.a_prime)
    )
    return 10.0 * a / sigmoid


def path_loss_linear(env: EnvironmentProfile, geom: LinkGeometry) -> float:
    """Linear path loss beta * (sqrt(h^2 + d^2))^alpha."""
    theta = elevation_angle_deg(geom.uav_height_m, geom.ground_distance_m)
    intercept_db = (
        20.0 * math.log10(4.0 * math.pi * geom.carrier_hz / SPEED_OF_LIGHT)
        + env.eta_nlos
    )
    beta_db = intercept_db + excess_loss_db(env, theta)
    slant = math.hypot(geom.uav_height_m, geom.ground_distance_m)
    return db_to_linear(beta_db) * slant ** geom.pathloss_exponent


def link_snr_linear(budget: LinkBudget) -> float:
    """Average SNR Omega = P / (L_P N_0) of one hop."""
    return (
        db_to_linear(budget.tx_power_dbm - budget.noise_power_dbm)
        / budget.path_loss_linear
    )
