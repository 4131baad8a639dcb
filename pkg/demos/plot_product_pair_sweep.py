"""
Closed-form areas for a locally traceless product pair
======================================================

A_1 = X x X and A_2 = (cos a X + sin a Z) x (cos b X + sin b Z). Both
areas are known in closed form; we compare them with the numerical
polygons on a few angles and locate the smallest ratio.
"""

import math

from seprange.analytic import (ProductAngles, min_ratio_product_2q, ratio_product_2q,
                               sep_volume_product_2q, all_volume_product_2q)
from seprange.drivers import RunConfig, product_row

cfg = RunConfig(directions=360, mc_samples=20_000, restarts=16)

for a, b in [(3 * math.pi / 4, math.pi / 3), (1.0, 2.0), (math.pi / 2, math.pi / 2)]:
    row = product_row(a, b, cfg)
    print(f"a={a:.3f} b={b:.3f}  analytic {row['ratio_analytic']:.5f}  "
          f"numeric {row['ratio_numeric']:.5f}  [{row['ratio_lower']:.4f}, {row['ratio_upper']:.4f}]")

# the orthogonal pair: diamond inside the square
ang = ProductAngles(math.pi / 2, math.pi / 2)
print("areas at (pi/2, pi/2):", sep_volume_product_2q(ang), all_volume_product_2q(ang))

v, arg = min_ratio_product_2q()
print(f"smallest ratio {v:.6f} at ({arg.theta_A:.4f}, {arg.theta_B:.4f});"
      f" check {ratio_product_2q(arg):.6f}")
