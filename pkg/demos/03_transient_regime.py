"""Transient regime: pi(s), the exact-cancellation family and the limit of exp(T) p_00.

For ell = |gamma| and L = 1 the bracket inside log B vanishes identically, so
B = 1 and pi(s) = exp((1-s)**-|gamma|). A perturbed ell shows the general case.
"""
import math

import numpy as np

from mbpi import ProcessSpec, SlowlyVaryingSpec as S
from mbpi.asymptotics import validate_cor1, validate_thm2, validate_thm4
from mbpi.invariant import B_gf, pi_gf

exact = ProcessSpec(0.6, 0.4, S.constant(1.0), S.constant(0.2))
perturbed = ProcessSpec(0.6, 0.4, S.constant(1.0), S.with_remainder(0.2, 0.4, 1.0))

print("exact family:     pi(0) =", float(pi_gf(exact, 0.0)), " e =", math.e)
print("                  B(0.5) =", float(B_gf(exact, 0.5)))
print("perturbed family: B(0) =", float(B_gf(perturbed, 0.0)), " pi(0) =", float(pi_gf(perturbed, 0.0)))

grid = np.logspace(0, 5, 11)
for sp in (exact, perturbed):
    rep = validate_cor1(sp, grid)
    print()
    print(rep.summary())

print()
print(validate_thm2(exact, np.logspace(1, 4, 13)).summary())
print()
# the remainder of ell/L slows convergence of exp(T) P(t;s) / pi(s)
print(validate_thm4(perturbed, np.logspace(1, 4, 13), [0.0, 0.5, 0.75]).summary())
