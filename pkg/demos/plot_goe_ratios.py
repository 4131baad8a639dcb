"""
Typical observables: GOE averages
=================================

For random real symmetric observables on two qubits, compare the minimal
product-state expectation with the minimal eigenvalue, and the average
volume ratio for one and two observables.
"""

import numpy as np

from seprange.drivers import RunConfig, goe_calibration, goe_tau_samples
from seprange.septools import SeesawConfig, goe_ratio_statistic

stat = goe_ratio_statistic(2, 500, SeesawConfig(restarts=16), seed=0)
print(f"<l_sep_min / l_min> = {stat.mean_ratio:.4f} +- {stat.stderr:.4f}")

# absolute values depend on the normalization of the ensemble
cal = goe_calibration(4)
print(f"<|l_min|> = {cal * stat.mean_abs_lmin:.3f}, <|l_sep_min|> = {cal * stat.mean_abs_lsep_min:.3f}")

cfg = RunConfig(directions=240, restarts=16)
for k, n in [(1, 200), (2, 20)]:
    r = goe_tau_samples(2, k, n, cfg)
    print(f"k={k}: tau = {np.mean(r):.3f} +- {np.std(r, ddof=1) / np.sqrt(n):.3f}, "
          f"ratio^k = {stat.mean_ratio ** k:.3f}")
