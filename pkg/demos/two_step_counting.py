"""Count 0, 1 or 2 photons with two bias settings, and trade coupling for speed.

Stage one biases for three levels and clicks on photon pairs; stage two
rebiases for two levels and clicks on any remaining photon.
Run with ``python3 demos/two_step_counting.py``.
"""

from jpmcount import table1_config
from jpmcount.circuit import TWO_PI
from jpmcount.harness import protocol_report

cfg = table1_config()
report = protocol_report(cfg)
print(f"stage one: t_opt {report.t_opt * 1e6:.2f} us, P_bright {100 * report.p_bright_at_topt:.2f}%")
print(f"stage two: P_bright {100 * report.p_bright_01:.2f}%")
print(f"counting error with equal priors {100 * report.eps2:.2f}%")
print("validity:", "all satisfied" if all(c.passed for c in report.validity) else
      ", ".join(c.name for c in report.validity if not c.passed))

# Stronger coupling speeds up absorption but erodes the perturbative margin.
print()
for lam in (0.05, 0.1, 0.15, 0.2):
    rep = protocol_report(table1_config(lambda2=lam))
    failed = [c.name for c in rep.validity if not c.passed]
    print(f"lambda2 {lam:4.2f}: B20/2pi {rep.b20 / TWO_PI / 1e6:6.3f} MHz  t_opt {rep.t_opt * 1e6:5.2f} us"
          f"  error {100 * rep.eps2:.2f}%  failing: {', '.join(failed) or 'none'}")
