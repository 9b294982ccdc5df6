# Radio model and battery projections, without running a full scenario.

import random

from motesim.energy import BatteryModel, PowertraceCounters, energy_mj, estimate_lifetime
from motesim.radio import PRESETS, RadioSpec, estimate_distance, mean_rssi, rssi_at

spec = RadioSpec()

# Mean RSSI at the grid's spacings, and the range limit in each preset.
for name, env in PRESETS.items():
    row = "  ".join(f"{mean_rssi(spec, d, env):6.1f}" for d in (1.524, 3.048, 4.572))
    print(f"{name:>16}: {row} dBm   R_max {spec.max_range(env):5.1f} m")

# Shadowing makes a single sample a poor range estimate; the detector uses
# the median of the last 16.
env = PRESETS["parking_lot"]
rng = random.Random(0)
samples = sorted(rssi_at(spec, 4.572, env, rng) for _ in range(16))
print("\none sample ->", round(estimate_distance(spec, samples[0], env), 2), "m")
print("median     ->", round(estimate_distance(spec, (samples[7] + samples[8]) / 2, env), 2), "m")

# One minute of a mote that listens 10% of the time and sends 1%.
minute = 60 * 32768
c = PowertraceCounters(cpu=minute // 50, lpm=minute - minute // 50, tx=minute // 100, rx=minute // 10)
mj = energy_mj(c)
print(f"\n{mj:.1f} mJ per minute = {mj / 60:.3f} mW")
print(f"two AA cells last {estimate_lifetime(mj / 60, BatteryModel()) / 24:.0f} days")
