"""Backward flow and the probability of an empty population.

With constant offspring factor the flow has a closed form, so the solver can
be checked directly. We then follow p_00(t) for a recurrent process and watch
it settle at w(0).
"""
import numpy as np

from mbpi import ProcessSpec
from mbpi.invariant import w_gf
from mbpi.kolmogorov import flow_R, transition_gf

spec = ProcessSpec(nu=0.3, delta=0.8)
t = np.array([0.0, 1.0, 10.0, 100.0, 1e3, 1e4])
s = np.array([0.0, 0.5, 0.9])

F = 1.0 - flow_R(spec, t, s)
exact = 1.0 - ((1.0 - s) ** -0.3 + 0.3 * t[:, None]) ** (-1 / 0.3)
print("max |F - closed form| over the grid:", np.max(np.abs(F - exact)))

print("\n      t       p00(t)")
for tk in t[1:]:
    print(f"{tk:8.0f}   {float(transition_gf(spec, 0, tk, 0.0)):.9f}")
print(f"   limit   {float(w_gf(spec, 0.0)):.9f}  (= exp(-1/gamma) for unit constants)")
