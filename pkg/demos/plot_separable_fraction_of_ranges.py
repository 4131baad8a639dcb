"""
How much of a numerical range is reachable without entanglement
===============================================================

Two observables X x X and Z x Z on two qubits. Every state maps to the
point of expectation values; the full range is the square |x|, |y| <= 1
and product states only reach the diamond |x| + |y| <= 1.
"""

import numpy as np

from seprange.qlinalg import X, Z, ObservableSet, kron
from seprange.rangegeom import build_body, ratio_bracket, support_all_batch, volume_bracket
from seprange.septools import SeesawConfig, SeparableOracle

obs = ObservableSet.of(kron(X, X), kron(Z, Z), dims=(2, 2))

# outer and inner polygons from support values in 360 directions
sep = build_body(obs, SeparableOracle(SeesawConfig(restarts=16)), 360)
full = build_body(obs, support_all_batch, 360)

vs, va = volume_bracket(sep, 50_000), volume_bracket(full, 50_000, seed=1)
print(f"separable area in [{vs.lower:.4f}, {vs.upper:.4f}]  (exact 2)")
print(f"full area      in [{va.lower:.4f}, {va.upper:.4f}]  (exact 4)")

rb = ratio_bracket(vs, va)
print(f"ratio {rb.estimate:.4f}, bracket [{rb.lower:.4f}, {rb.upper:.4f}]")

# the corner (1, 1) belongs to the Bell state only
print("all support directions certified:", bool(np.all(sep.certified)))
