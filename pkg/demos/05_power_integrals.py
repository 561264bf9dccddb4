"""Closed forms for power-weighted integrals of slowly varying functions.

For constant L the closed forms are exact. With a remainder the finite-range
formula with a fixed lower limit keeps a nonvanishing relative error when
sigma > 0, because the integral is governed by L near the lower limit rather
than by L(t). With the lower limit proportional to t the error decays like
the remainder.
"""
import numpy as np

from mbpi.slowvar import SlowlyVaryingSpec as S, lemma2_asymptotic, lemma2_quadrature, lemma3_asymptotic, lemma3_quadrature

L = S.with_remainder(1.0, 0.5, 1.0)
print("      t    fixed c, s=+0.5   c = t/10, s=+0.5   fixed c, s=-0.7   tail, s=0.5")
for t in 10.0 ** np.arange(2, 7):
    a = abs(lemma2_asymptotic(L, 0.5, 1.0, t) / lemma2_quadrature(L, 0.5, 1.0, t) - 1)
    b = abs(lemma2_asymptotic(L, 0.5, t / 10, t) / lemma2_quadrature(L, 0.5, t / 10, t) - 1)
    c = abs(lemma2_asymptotic(L, -0.7, 1.0, t) / lemma2_quadrature(L, -0.7, 1.0, t) - 1)
    v, tail = lemma3_quadrature(L, 0.5, t)
    d = abs(lemma3_asymptotic(L, 0.5, t) / (v + tail) - 1)
    print(f"{t:8.0e}   {a:15.3e}   {b:16.3e}   {c:15.3e}   {d:11.3e}")
print("remainder envelope t^-0.5 at t = 1e6:", 1e-3)
