"""Recurrent regime: the limit GF w, its functional equation and the invariant measure.

The example uses a non-constant offspring factor so that nothing below reduces
to a closed form.
"""
import numpy as np

from mbpi import ProcessSpec, SlowlyVaryingSpec as S
from mbpi.asymptotics import validate_thm1
from mbpi.invariant import check_invariance, check_schroder, invariant_measure, w_gf

spec = ProcessSpec(0.3, 0.8, S.with_remainder(1.0, 0.5, 0.5), S.constant(1.0))
print("gamma =", spec.gamma)
print("w(0), w(0.5), w(0.9):", w_gf(spec, np.array([0.0, 0.5, 0.9])))

for tau in (0.1, 1.0, 10.0):
    r = check_schroder(spec, tau, np.array([0.0, 0.5, 0.9]))
    print(f"functional equation residual at tau={tau:<4}: {np.max(np.abs(r)):.1e}")

m = invariant_measure(spec, 64)
res = check_invariance(m, spec, 1.0)
print("\nfirst invariant weights:", np.round(m.m[:6], 6))
print(f"invariance after t=1: max residual {res.max_residual:.2e}, within bound: {res.passed}")

# the decay of kappa for unit constants is geometric in tau, i.e. a power of t
rep = validate_thm1(ProcessSpec(0.3, 0.8), np.logspace(1, 4, 13))
print()
print(rep.summary())
