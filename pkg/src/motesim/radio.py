"""Log-distance path loss with Gaussian shadowing, and its inverse."""
from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass

FEET = 0.3048
REFERENCE_DISTANCE = 1.0  # d0, meters

_LENGTH_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(m|ft)\s*$")


def parse_length(text: str) -> float:
    """Parse a unit-suffixed length such as ``"5 ft"`` or ``"1.524 m"`` into meters."""
    if not isinstance(text, str):
        raise ValueError(f"length must be a string with a unit suffix, got {text!r}")
    m = _LENGTH_RE.match(text)
    if m is None:
        raise ValueError(f"cannot parse length {text!r}; expected e.g. '5 ft' or '1.5 m'")
    value = float(m.group(1))
    return value * FEET if m.group(2) == "ft" else value


def format_length(meters: float) -> str:
    return f"{meters!r} m"


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")


@dataclass(frozen=True)
class EnvironmentProfile:
    name: str
    path_loss_exponent: float
    reference_loss: float
    shadowing_sigma: float
    noise_floor: float = -100.0
    retransmission_bias: float = 0.0

    def __post_init__(self):
        if not 1.5 <= self.path_loss_exponent <= 6.0:
            raise ValueError(f"path_loss_exponent {self.path_loss_exponent} outside [1.5, 6]")
        if self.shadowing_sigma < 0:
            raise ValueError("shadowing_sigma must be >= 0")
        if not 0 <= self.retransmission_bias < 1:
            raise ValueError("retransmission_bias must be in [0, 1)")


PRESETS: dict[str, EnvironmentProfile] = {
    "lab": EnvironmentProfile("lab", 2.0, 55.0, 2.0, retransmission_bias=0.05),
    "auditorium": EnvironmentProfile("auditorium", 2.2, 55.0, 3.0, retransmission_bias=0.10),
    "basketball_court": EnvironmentProfile("basketball_court", 2.4, 55.0, 3.5,
                                           retransmission_bias=0.12),
    "parking_lot": EnvironmentProfile("parking_lot", 2.8, 55.0, 4.0, retransmission_bias=0.20),
}


@dataclass(frozen=True)
class RadioSpec:
    """Transceiver parameters; defaults are CC2420-class."""
    tx_power: float = 0.0
    rx_sensitivity: float = -90.0

    def __post_init__(self):
        if not self.rx_sensitivity < self.tx_power:
            raise ValueError("rx_sensitivity must be below tx_power")

    def max_range(self, env: EnvironmentProfile) -> float:
        """Distance at which the mean RSSI equals the receiver sensitivity."""
        return estimate_distance(self, self.rx_sensitivity, env)


def geometric_distance(a: Position, b: Position) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def mean_rssi(spec: RadioSpec, d: float, env: EnvironmentProfile) -> float:
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    return spec.tx_power - (env.reference_loss
                            + 10.0 * env.path_loss_exponent * math.log10(d / REFERENCE_DISTANCE))


def rssi_at(spec: RadioSpec, d: float, env: EnvironmentProfile, rng: random.Random) -> float:
    """Received power in dBm at distance ``d``.

    Always consumes exactly one normal draw, even when sigma is zero, so
    streams stay aligned across environments.
    """
    base = mean_rssi(spec, d, env)
    return base + env.shadowing_sigma * rng.gauss(0.0, 1.0)


def estimate_distance(spec: RadioSpec, rssi: float, env: EnvironmentProfile) -> float:
    exponent = (spec.tx_power - env.reference_loss - rssi) / (10.0 * env.path_loss_exponent)
    return REFERENCE_DISTANCE * 10.0 ** exponent


def retransmissions(env: EnvironmentProfile, rng: random.Random) -> int:
    """Geometric retransmission count, one uniform draw per call.

    Inverse-CDF sampling from a shared uniform makes the count monotone in
    ``retransmission_bias``: a noisier environment never retransmits less.
    """
    u = 1.0 - rng.random()  # (0, 1]
    b = env.retransmission_bias
    if b <= 0.0:
        return 0
    return int(math.floor(math.log(u) / math.log(b)))


def deliver(spec: RadioSpec, rssi: float, env: EnvironmentProfile,
            rng: random.Random) -> tuple[bool, int]:
    """Per-link delivery decision and retransmission count."""
    k = retransmissions(env, rng)
    if rssi >= spec.rx_sensitivity:
        return True, k
    return False, 0
