"""Powertrace tick counters to millijoules, and battery-life projection."""
from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import TICKS_PER_SECOND


class LifetimeError(ValueError):
    """Lifetime is undefined for a non-positive average power."""


class ComparisonError(ValueError):
    """Reports being compared do not share topology or duration."""


@dataclass(frozen=True)
class PowertraceCounters:
    cpu: int = 0
    lpm: int = 0
    tx: int = 0
    rx: int = 0

    def __add__(self, other: PowertraceCounters) -> PowertraceCounters:
        return PowertraceCounters(self.cpu + other.cpu, self.lpm + other.lpm,
                                  self.tx + other.tx, self.rx + other.rx)

    def __sub__(self, other: PowertraceCounters) -> PowertraceCounters:
        return PowertraceCounters(self.cpu - other.cpu, self.lpm - other.lpm,
                                  self.tx - other.tx, self.rx - other.rx)


@dataclass(frozen=True)
class EnergyCoefficients:
    # Currents in mA as they appear in the Z1 powertrace energy equation.
    cpu_ma: float = 0.5
    lpm_ma: float = 0.0005
    tx_ma: float = 17.4
    rx_ma: float = 18.8
    volts: float = 3.0
    ticks_per_s: int = TICKS_PER_SECOND

    def __post_init__(self):
        for name in ("cpu_ma", "lpm_ma", "tx_ma", "rx_ma", "volts", "ticks_per_s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_COEFFICIENTS = EnergyCoefficients()


@dataclass(frozen=True)
class BatteryModel:
    """Two AA cells by default."""
    capacity_mah: float = 2200.0
    voltage: float = 3.0

    def __post_init__(self):
        if not self.capacity_mah > 0:
            raise ValueError("capacity_mah must be positive")
        if not self.voltage > 0:
            raise ValueError("voltage must be positive")


def energy_mj(counters: PowertraceCounters,
              coeffs: EnergyCoefficients = DEFAULT_COEFFICIENTS) -> float:
    return ((counters.cpu * coeffs.cpu_ma + counters.lpm * coeffs.lpm_ma
             + counters.tx * coeffs.tx_ma + counters.rx * coeffs.rx_ma)
            / coeffs.ticks_per_s * coeffs.volts)


def estimate_lifetime(avg_power_mw: float, battery: BatteryModel = BatteryModel()) -> float:
    """Hours until ``battery`` is drained at a constant ``avg_power_mw``.

    Battery energy in mWh (capacity x voltage) divided by draw in mW.
    """
    if not avg_power_mw > 0:
        raise LifetimeError(f"lifetime undefined for average power {avg_power_mw} mW")
    return battery.capacity_mah * battery.voltage / avg_power_mw


def average_power_mw(cumulative_mj: float, elapsed_s: float) -> float:
    return cumulative_mj / elapsed_s


@dataclass
class EnergyReport:
    """Per-node energy for one run under one condition."""
    label: str
    duration_s: float
    topology: tuple
    interval_mj: dict[int, list[float]] = field(default_factory=dict)
    cumulative_mj: dict[int, float] = field(default_factory=dict)

    @property
    def total_mj(self) -> float:
        return sum(self.cumulative_mj[n] for n in sorted(self.cumulative_mj))


@dataclass
class ConditionComparison:
    reference: str
    totals: dict[str, float]
    node_deltas: dict[str, dict[int, float]]
    total_deltas: dict[str, float]
    ordering: list[str]

    def ordering_text(self) -> str:
        return " < ".join(self.ordering)


def compare_conditions(reports: list[EnergyReport]) -> ConditionComparison:
    """Deltas of every report against the first, and the ascending order of totals."""
    if len(reports) < 2:
        raise ComparisonError("need at least two reports to compare")
    ref = reports[0]
    for r in reports[1:]:
        if r.topology != ref.topology:
            raise ComparisonError(f"report {r.label!r} has a different topology from {ref.label!r}")
        if r.duration_s != ref.duration_s:
            raise ComparisonError(f"report {r.label!r} has a different duration from {ref.label!r}")
    labels = [r.label for r in reports]
    if len(set(labels)) != len(labels):
        raise ComparisonError("report labels must be unique")
    totals = {r.label: r.total_mj for r in reports}
    node_deltas = {
        r.label: {n: r.cumulative_mj[n] - ref.cumulative_mj[n] for n in sorted(ref.cumulative_mj)}
        for r in reports
    }
    total_deltas = {r.label: totals[r.label] - totals[ref.label] for r in reports}
    ordering = sorted(labels, key=lambda lbl: (totals[lbl], labels.index(lbl)))
    return ConditionComparison(ref.label, totals, node_deltas, total_deltas, ordering)
