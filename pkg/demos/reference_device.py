"""Walk through the reference two-photon detector from junction to error budget.

Run with ``python3 demos/reference_device.py``.
"""

import numpy as np

from jpmcount import derive_levels, device_rates, n_max, table1_config, wkb_rates
from jpmcount.circuit import TWO_PI
from jpmcount.harness import reproduce_table1
from jpmcount.rates import discrimination_error, optimal_time, p_bright, p_false

cfg = table1_config()

# The bias sets a shallow well holding three levels; the 0-1 and 1-2 spacings
# differ by the anharmonicity, so the resonator can drive 0 -> 2 with two photons.
levels = derive_levels(cfg)
print(f"plasma frequency   {levels.omega_p / TWO_PI / 1e9:.3f} GHz, barrier {levels.n0:.2f} quanta")
print(f"resonator          {levels.omega / TWO_PI / 1e9:.4f} GHz")
print(f"one-photon detuning {levels.Delta / TWO_PI / 1e6:.1f} MHz")

# Tunneling out of each level grows by orders of magnitude per rung.
for r in wkb_rates(cfg):
    print(f"level {r.level_index}: WKB escape rate {r.rate_hz:.3g} Hz")

# With the quoted tunneling rates the two-photon absorption rate and the
# optimal waiting time follow in closed form.
rates = device_rates(cfg)
opt = optimal_time(rates)
print(f"B20/2pi {rates.B20 / TWO_PI / 1e6:.3f} MHz, N_max {n_max(rates)}")
print(f"t_opt {opt.t_opt * 1e6:.2f} us, minimal error {100 * opt.eps_min:.2f}%")

# Error against waiting time: dark counts grow linearly while misses decay
# exponentially toward the relaxation floor.
for t in np.array([0.5, 1, 2, 4, 8]) * 1e-6:
    eps = float(discrimination_error(t, rates).value)
    pb = float(p_bright(t, rates).value)
    print(f"t = {t * 1e6:4.1f} us  P_false {100 * float(p_false(t, rates.gamma0)):.3f}%"
          f"  P_bright {100 * pb:6.2f}%  error {100 * eps:.2f}%")
print(f"miss floor from relaxation: {100 * rates.branching:.2f}%")

print()
for row in reproduce_table1(cfg):
    status = "ok" if row.passed else "off"
    print(f"{row.quantity:9s} {row.reference:>10g} {row.unit:4s} computed {row.computed:.4g}  {status}")
