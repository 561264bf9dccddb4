"""Infinitesimal intensities of a critical branching process with immigration.

The offspring and immigration generating functions are given in closed tail form::

    f(s) =  (1-s)**(1+nu)  * L(1/(1-s))
    g(s) = -(1-s)**delta   * ell(1/(1-s))

For the analytic families (constant and with_remainder) both are finite sums
of powers of ``1-s``, so the coefficients ``a_j`` and ``b_j`` follow from the
generalized binomial series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArgumentError, ConstructionError, DomainError
from .slowvar import RemainderForm, SlowlyVaryingSpec

DEFAULT_J = 2**14
DEFAULT_J_MC = 2**20
CLAMP = 1e-14


@dataclass(frozen=True)
class ProcessSpec:
    """Parameters ``(nu, L)`` of the offspring law and ``(delta, ell)`` of immigration."""

    nu: float
    delta: float
    L: SlowlyVaryingSpec = field(default_factory=SlowlyVaryingSpec.constant)
    ell: SlowlyVaryingSpec = field(default_factory=SlowlyVaryingSpec.constant)

    def __post_init__(self):
        if not 0 < self.nu < 1:
            raise ArgumentError("need 0 < nu < 1")
        if not 0 < self.delta < 1:
            raise ArgumentError("need 0 < delta < 1")

    @property
    def gamma(self):
        return self.delta - self.nu

    @property
    def C(self):
        """``lim ell(x)/L(x)`` when both families tend to constants, else ``None``."""
        a, b = self.ell.limit, self.L.limit
        if a is None or b is None:
            return None
        return a / b

    @property
    def regime(self):
        g = self.gamma
        if abs(g) < 1e-12:
            return "boundary"
        return "recurrent" if g > 0 else "transient"

    @property
    def analytic(self):
        return self.L.analytic and self.ell.analytic

    @property
    def Lhat_remainder_exponent(self):
        """Power of the remainder of ``ell/L`` around its limit."""
        return min(self.L.remainder_exponent, self.ell.remainder_exponent)

    def remainder_forms(self):
        return (
            RemainderForm("order_nu", self.nu, self.L),
            RemainderForm("order_delta", self.delta, self.ell),
        )

    def Lhat(self, y):
        """Ratio ``ell(y) / L(y)``."""
        return self.ell(y) / self.L(y)

    def Lhat_deficit(self, y):
        """``C - ell(y)/L(y)`` evaluated from the families' exact excesses."""
        C = self.C
        if C is None:
            raise ArgumentError("ell/L has no finite limit")
        eL, el = self.L.excess(y), self.ell.excess(y)
        return C * (eL - el) / (1.0 + eL)

    def f(self, s):
        """``f(s)`` for real ``s < 1`` or complex ``|s| < 1`` (principal branch)."""
        s = np.asarray(s)
        z = 1.0 - s
        return z ** (1.0 + self.nu) * self.L(1.0 / z)

    def g(self, s):
        s = np.asarray(s)
        z = 1.0 - s
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -(z**self.delta) * self.ell(1.0 / z)
        return np.where(z == 0, 0.0, out)

    def to_dict(self):
        return {"nu": self.nu, "delta": self.delta, "L": self.L.to_dict(), "ell": self.ell.to_dict()}

    @classmethod
    def from_dict(cls, data):
        return cls(
            nu=float(data["nu"]),
            delta=float(data["delta"]),
            L=SlowlyVaryingSpec.from_dict(data.get("L", {"family": "constant", "c": 1.0})),
            ell=SlowlyVaryingSpec.from_dict(data.get("ell", {"family": "constant", "c": 1.0})),
        )


def f_eval(spec: ProcessSpec, s):
    if np.any(np.asarray(s) >= 1) or np.any(np.asarray(s) < 0):
        raise DomainError("f is evaluated on 0 <= s < 1")
    out = spec.f(np.asarray(s, dtype=float))
    return float(out) if out.ndim == 0 else out


def g_eval(spec: ProcessSpec, s):
    if np.any(np.asarray(s) > 1) or np.any(np.asarray(s) < 0):
        raise DomainError("g is evaluated on 0 <= s <= 1")
    out = spec.g(np.asarray(s, dtype=float))
    return float(out) if out.ndim == 0 else out


def binomial_series(alpha, J):
    """Coefficients of ``(1-s)**alpha`` up to ``s**J``."""
    j = np.arange(J, dtype=float)
    out = np.empty(J + 1)
    out[0] = 1.0
    out[1:] = np.cumprod((j - alpha) / (j + 1.0))
    return out


@dataclass(frozen=True)
class IntensityTable:
    """Truncated intensity sequences ``a[0..J]`` and ``b[0..J]`` with discarded mass."""

    a: np.ndarray
    b: np.ndarray
    tail_mass_a: float
    tail_mass_b: float
    spec: ProcessSpec | None = None

    @property
    def J(self):
        return len(self.a) - 1

    @property
    def branch_rate(self):
        return -float(self.a[1]) if len(self.a) > 1 else 0.0

    @property
    def immigration_rate(self):
        return -float(self.b[0])

    def validate(self, tol=1e-10):
        a, b = self.a, self.b
        if not a[0] > 0:
            raise ConstructionError("a_0 must be positive", index=0)
        if not a[1] < 0:
            raise ConstructionError("a_1 must be negative", index=1)
        bad = np.nonzero(a[2:] < 0)[0]
        if bad.size:
            raise ConstructionError(f"negative offspring intensity a_{bad[0] + 2}", index=int(bad[0] + 2))
        if not a[0] < -a[1]:
            raise ConstructionError("need a_0 < -a_1", index=0)
        if not b[0] < 0:
            raise ConstructionError("b_0 must be negative", index=0)
        bad = np.nonzero(b[1:] < 0)[0]
        if bad.size:
            raise ConstructionError(f"negative immigration intensity b_{bad[0] + 1}", index=int(bad[0] + 1))
        ra = math.fsum(a[[0]].tolist() + a[2:].tolist()) + self.tail_mass_a + a[1]
        rb = math.fsum(b[1:].tolist()) + self.tail_mass_b + b[0]
        if abs(ra) > tol or self.tail_mass_a < -tol:
            raise ConstructionError(f"offspring intensities do not balance (residual {ra:.3g})", index=1)
        if abs(rb) > tol or self.tail_mass_b < -tol:
            raise ConstructionError(f"immigration intensities do not balance (residual {rb:.3g})", index=0)
        return self

    def f_poly(self, s):
        return np.polynomial.polynomial.polyval(s, self.a)

    def g_poly(self, s):
        return np.polynomial.polynomial.polyval(s, self.b)

    def to_csv(self, path):
        path = Path(path)
        lines = []
        if self.spec is not None:
            lines.append(f"# spec={self.spec.to_dict()!r}")
        lines.append(f"# J={self.J} tail_mass_a={self.tail_mass_a!r} tail_mass_b={self.tail_mass_b!r}")
        lines.append("index,a,b")
        for j in range(self.J + 1):
            lines.append(f"{j},{float(self.a[j])!r},{float(self.b[j])!r}")
        path.write_text("\n".join(lines) + "\n")
        return path

    @classmethod
    def from_csv(cls, path):
        meta = {}
        rows = []
        for line in Path(path).read_text().splitlines():
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith(("tail_mass_a=", "tail_mass_b=")):
                        k, v = tok.split("=")
                        meta[k] = float(v)
            elif line and not line.startswith("index"):
                rows.append([float(x) for x in line.split(",")])
        arr = np.array(rows)
        return cls(arr[:, 1].copy(), arr[:, 2].copy(), meta["tail_mass_a"], meta["tail_mass_b"])


def _closed_form_terms(sv: SlowlyVaryingSpec, base):
    """``L(1/(1-s)) (1-s)**base`` as a list of ``(coef, exponent)`` power terms."""
    if sv.family == "constant":
        return [(sv.c, base)]
    if sv.family == "with_remainder":
        return [(sv.c, base), (sv.c * sv.d, base + sv.rho)]
    raise ConstructionError(
        "log_power family is not analytic at s = 0 and has no power series; "
        "use constant or with_remainder families to build intensities"
    )


def _series_from_terms(terms, J):
    out = np.zeros(J + 1)
    for coef, alpha in terms:
        out += coef * binomial_series(alpha, J)
    return out


def build_intensities(spec: ProcessSpec, J: int = DEFAULT_J, method="binomial", validate=True):
    """Recover ``{a_j}`` and ``{b_j}`` from the closed tail forms of ``f`` and ``g``.

    ``method="binomial"`` expands each power of ``1-s`` exactly;
    ``method="extract"`` samples ``f`` and ``g`` on a circle and inverts the
    discrete transform (practical only for modest ``J``).
    """
    if J < 2:
        raise ArgumentError("need J >= 2")
    if method == "binomial":
        a = _series_from_terms(_closed_form_terms(spec.L, 1.0 + spec.nu), J)
        b = -_series_from_terms(_closed_form_terms(spec.ell, spec.delta), J)
    elif method == "extract":
        from .kolmogorov import extract_coefficients

        if not spec.analytic:
            _closed_form_terms(spec.L if not spec.L.analytic else spec.ell, 0.0)
        # radius**-J bounds roundoff amplification at 1e4; M = 4J keeps aliasing near 1e-16
        radius = 10.0 ** (-4.0 / J)
        a = extract_coefficients(spec.f, J, radius=radius).coeffs
        b = extract_coefficients(spec.g, J, radius=radius).coeffs
        a[2:] = np.where(np.abs(a[2:]) < CLAMP, np.maximum(a[2:], 0.0), a[2:])
        b[1:] = np.where(np.abs(b[1:]) < CLAMP, np.maximum(b[1:], 0.0), b[1:])
    else:
        raise ArgumentError(f"unknown method {method!r}")
    tail_a = -a[1] - math.fsum(a[[0]].tolist() + a[2:].tolist())
    tail_b = -b[0] - math.fsum(b[1:].tolist())
    table = IntensityTable(a, b, float(tail_a), float(tail_b), spec)
    a.setflags(write=False)
    b.setflags(write=False)
    return table.validate() if validate else table


def criticality_check(spec: ProcessSpec, ks=range(4, 9)):
    """One-sided derivative estimates of ``f`` at ``s = 1`` and their extrapolated limit.

    Returns ``(estimates, limit)``. The estimates ``-f(1-h)/h`` behave like
    ``h**nu`` times a slowly varying factor, so the limit is extrapolated with
    Aitken's delta-squared on the geometric sequence of step sizes.
    """
    h = 10.0 ** -np.asarray(list(ks), dtype=float)
    D = -spec.f(1.0 - h) / h
    x0, x1, x2 = D[-3:]
    denom = x0 - 2 * x1 + x2
    limit = x2 if denom == 0 else (x0 * x2 - x1 * x1) / denom
    return D, float(limit)
