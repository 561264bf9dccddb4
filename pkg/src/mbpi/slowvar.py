"""Slowly varying functions with remainder and their power-weighted integrals.

Three closed families are supported::

    constant(c)              L(x) = c
    log_power(c, p)          L(x) = c * max(1, ln x)**p
    with_remainder(c, rho, d) L(x) = c * (1 + d * x**(-rho))

For each family the deviation ``|L(lam*x)/L(x) - 1|`` is known analytically,
which is what makes remainder rates checkable downstream.

Integrals of the form ``int_a^b y**-(1+sigma) L(y) dy`` are evaluated after the
substitution ``y = exp(v)``. The integrand becomes ``exp(-sigma*v) L(exp(v))``,
which spreads the region near the lower endpoint over many subintervals and
lets complex endpoints be handled along a straight segment in ``v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ArgumentError, DomainError, NumericalError

FAMILIES = ("constant", "log_power", "with_remainder")


@dataclass(frozen=True)
class SlowlyVaryingSpec:
    """A member of the closed catalogue of slowly varying functions.

    Use the :meth:`constant`, :meth:`log_power` and :meth:`with_remainder`
    constructors rather than the raw initializer.
    """

    family: str
    c: float = 1.0
    p: float = 0.0
    rho: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ArgumentError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not self.c > 0:
            raise ArgumentError("scale c must be positive")
        if self.family == "with_remainder":
            if not self.rho > 0:
                raise ArgumentError("with_remainder needs rho > 0")
            if not self.d > -1:
                raise ArgumentError("with_remainder needs d > -1 so that L(x) > 0 for x >= 1")

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", c=float(c))

    @classmethod
    def log_power(cls, c=1.0, p=1.0):
        return cls("log_power", c=float(c), p=float(p))

    @classmethod
    def with_remainder(cls, c, rho, d):
        return cls("with_remainder", c=float(c), rho=float(rho), d=float(d))

    @property
    def analytic(self):
        """True when ``s -> L(1/(1-s))`` continues analytically to ``|s| < 1``."""
        return self.family != "log_power"

    @property
    def limit(self):
        """``lim_{x->inf} L(x)`` when finite and positive, else ``None``."""
        if self.family == "log_power" and self.p != 0:
            return None
        return self.c

    @property
    def remainder_exponent(self):
        """Power ``rho`` with ``L(x) = limit * (1 + O(x**-rho))``; ``inf`` if exact, 0 if logarithmic."""
        if self.family == "constant" or (self.family == "with_remainder" and self.d == 0):
            return math.inf
        if self.family == "with_remainder":
            return self.rho
        return math.inf if self.p == 0 else 0.0

    def __call__(self, x):
        """Evaluate ``L`` for real ``x >= 1`` or, for analytic families, complex ``x``."""
        x = np.asarray(x)
        if self.family == "constant":
            return np.full(x.shape, self.c, dtype=np.result_type(x.dtype, float))
        if self.family == "with_remainder":
            return self.c * (1.0 + self.d * x ** (-self.rho))
        if np.iscomplexobj(x):
            raise DomainError("log_power family has no analytic continuation off the real axis")
        return self.c * np.maximum(1.0, np.log(x)) ** self.p

    def excess(self, x):
        """``L(x)/limit - 1`` computed without cancellation."""
        x = np.asarray(x)
        if self.family == "constant":
            return np.zeros(x.shape, dtype=np.result_type(x.dtype, float))
        if self.family == "with_remainder":
            return self.d * x ** (-self.rho)
        if self.p != 0:
            raise ArgumentError("log_power family has no finite limit")
        return np.zeros(x.shape)

    def remainder_envelope(self, x):
        """Bound (up to a lam-dependent constant) on ``|L(lam*x)/L(x) - 1|``."""
        x = np.asarray(x, dtype=float)
        if self.family == "constant":
            return np.zeros_like(x)
        if self.family == "with_remainder":
            return abs(self.d) * x ** (-self.rho)
        return 1.0 / np.maximum(1.0, np.log(x))

    def to_dict(self):
        out = {"family": self.family, "c": self.c}
        if self.family == "log_power":
            out["p"] = self.p
        elif self.family == "with_remainder":
            out.update(rho=self.rho, d=self.d)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        family = data.pop("family", "constant")
        return cls(family, **{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class RemainderForm:
    """Remainder envelope ``scale * L(x) / x**exponent`` attached to a basic assumption.

    ``kind`` is ``"order_nu"`` (offspring side) or ``"order_delta"``
    (immigration side); ``exponent`` is then nu or delta respectively.
    """

    kind: str
    exponent: float
    L: SlowlyVaryingSpec
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("order_nu", "order_delta"):
            raise ArgumentError(f"unknown remainder kind {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * self.L(x) / x**self.exponent


def eval_L(spec: SlowlyVaryingSpec, x):
    """Evaluate ``spec`` on its tail domain ``x >= 1``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 1):
        raise DomainError("slowly varying families are defined for x >= 1")
    out = spec(xa)
    return float(out) if out.ndim == 0 else out


def power_integral(L: Callable, sigma: float, a, b=math.inf, *, epsabs=1e-13, epsrel=1e-13, limit=200):
    """``int_a^b y**-(1+sigma) * L(y) dy`` along ``y = exp(v)``.

    ``a`` and ``b`` may be complex with positive real part, in which case the
    path is the straight segment between their principal logarithms. With
    ``b = inf`` the path runs from ``log(a)`` to ``+inf`` parallel to the real
    axis, which needs ``sigma > 0``.
    """
    cplx = np.iscomplexobj(a) or np.iscomplexobj(b)
    if b == a:
        return 0j if cplx else 0.0
    va = np.log(complex(a)) if cplx else math.log(a)

    if b == math.inf:
        if not sigma > 0:
            raise ArgumentError("tail integral diverges for sigma <= 0")

        def h(x):
            v = va + x
            return np.exp(-sigma * v) * L(np.exp(v))

        # weight exp(-sigma*x) is below 1e-22 past hi; exp(v) must stay finite
        lo, hi = 0.0, min(50.0 / sigma, 700.0 - float(np.real(va)))
        if sigma * hi < 30.0:
            raise NumericalError("tail too heavy to truncate in double precision", error_estimate=math.exp(-sigma * hi))
    else:
        vb = np.log(complex(b)) if cplx else math.log(b)
        if not cplx:
            def h(v):
                return math.exp(-sigma * v) * float(L(math.exp(v)))

            lo, hi = va, vb
        else:
            dv = vb - va

            def h(x):
                v = va + x * dv
                return np.exp(-sigma * v) * L(np.exp(v)) * dv

            lo, hi = 0.0, 1.0

    if cplx:
        val, err = integrate.quad(
            lambda x: complex(h(x)), lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit, complex_func=True
        )
        err = abs(complex(err))
    elif b == math.inf:
        val, err = integrate.quad(lambda x: float(h(x)), lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit)
        val, err = float(val), float(err)
    else:
        val, err = integrate.quad(h, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit)
    scale = max(abs(val), 1.0)
    if err > 1e3 * max(epsabs, epsrel * scale):
        raise NumericalError(f"quadrature error estimate {err:.3g} exceeds tolerance", error_estimate=err)
    return val


def lemma2_quadrature(L: SlowlyVaryingSpec, sigma: float, c: float, t: float, *, tol=1e-10):
    """Exact (quadrature) value of ``int_c^t y**-(1+sigma) L(y) dy`` for ``0 < c < t``."""
    if not 0 < c < t:
        raise ArgumentError("need 0 < c < t")
    if sigma == 0:
        raise ArgumentError("sigma must be nonzero")
    return power_integral(L, sigma, float(c), float(t), epsabs=tol, epsrel=min(tol, 1e-12))


def lemma2_asymptotic(L: SlowlyVaryingSpec, sigma: float, c: float, t: float):
    """Closed-form asymptotic value of the finite power integral.

    Returns the main term only; the ``(1 + r(t))`` factor is an error order
    and is left to callers comparing ratios.
    """
    if not 0 < c < t:
        raise ArgumentError("need 0 < c < t")
    if sigma == 0:
        raise ArgumentError("formula undefined for sigma = 0")
    mu = c / t
    Lt = float(L(t))
    if sigma > 0:
        return Lt * (1.0 - mu**sigma) / (sigma * c**sigma)
    a = -sigma
    return Lt * t**a * (1.0 - mu**a) / a


def lemma3_asymptotic(L: SlowlyVaryingSpec, sigma: float, t: float):
    """Main term ``L(t) t**-sigma / sigma`` of ``int_t^inf y**-(1+sigma) L(y) dy``."""
    if not sigma > 0:
        raise ArgumentError("tail integral diverges for sigma <= 0")
    if t < 1:
        raise DomainError("need t >= 1")
    return float(L(t)) / (sigma * t**sigma)


def lemma3_quadrature(L: SlowlyVaryingSpec, sigma: float, t: float, *, span=1e8, L_max=None, tol=1e-10):
    """Oracle for the tail integral: quadrature on ``[t, span*t]`` plus a tail bound.

    Returns ``(value, tail_bound)``; ``value`` includes the truncated part only
    and the discarded tail is at most ``L_max * (span*t)**-sigma / sigma``.
    ``L_max`` defaults to the sup of ``L`` over a log grid of the discarded range.
    """
    if not sigma > 0:
        raise ArgumentError("tail integral diverges for sigma <= 0")
    T = span * t
    val = power_integral(L, sigma, float(t), float(T), epsabs=tol, epsrel=min(tol, 1e-12))
    if L_max is None:
        grid = T * np.logspace(0, 12, 97)
        L_max = float(np.max(L(grid)))
    return val, L_max * T ** (-sigma) / sigma
