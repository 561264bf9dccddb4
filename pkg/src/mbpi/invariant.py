"""Limit generating functions and invariant measures.

Recurrent regime (gamma > 0)::

    w(s) = exp(-int_{1/(1-s)}^inf y**-(1+gamma) Lhat(y) dy)

Transient regime (gamma < 0, ``Lhat -> C = |gamma|``)::

    B(s)  = exp(int_{1/(1-s)}^inf y**(|gamma|-1) (C - Lhat(y)) dy)
    pi(s) = exp((1-s)**-|gamma|) * B(s)

In the transient case the two singular pieces ``g/f`` and
``|gamma| (1-u)**-(1+|gamma|)`` are never integrated separately; only their
sum, which is integrable at ``u = 1``, is handed to the quadrature.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, RegimeError
from .kolmogorov import (
    SeriesCoefficients,
    extract_coefficients,
    flow_R,
    log_transition_gf,
    transition_coefficients,
)
from .laws import ProcessSpec
from .slowvar import power_integral

W_RADIUS = 0.9
PI_RADIUS = 0.9
C_MATCH_RTOL = 1e-9


def _require_recurrent(spec):
    if not spec.gamma > 0:
        raise RegimeError(f"gamma > 0 required (gamma = {spec.gamma:.6g})")


def require_theorem4(spec: ProcessSpec):
    """Raise unless ``gamma < 0``, ``C = |gamma|`` and ``1 < nu/delta < 2``."""
    g = spec.gamma
    if not g < 0:
        raise RegimeError(f"gamma < 0 required (gamma = {g:.6g})")
    C = spec.C
    if C is None or not math.isclose(C, -g, rel_tol=C_MATCH_RTOL):
        raise RegimeError(f"C = |gamma| required (C = {C}, |gamma| = {-g:.6g})")
    if not 1 < spec.nu / spec.delta < 2:
        raise RegimeError(f"1 < nu/delta < 2 required (nu/delta = {spec.nu / spec.delta:.6g})")


def _vectorize(fn, s):
    sa = np.asarray(s)
    flat = sa.reshape(-1)
    out = np.array([fn(x) for x in flat], dtype=complex if np.iscomplexobj(flat) else float)
    return out.reshape(sa.shape) if sa.ndim else out[0]


def log_w(spec: ProcessSpec, s):
    _require_recurrent(spec)

    def one(x):
        if x == 1:
            return 0.0
        return -power_integral(spec.Lhat, spec.gamma, 1.0 / (1.0 - x), math.inf)

    return _vectorize(one, s)


def w_gf(spec: ProcessSpec, s):
    """Limit GF of ``P(t;s)`` for ``gamma > 0``; ``w(1) = 1``."""
    return np.exp(log_w(spec, s))


def theorem3_approx(spec: ProcessSpec, s):
    """Leading-order form ``exp((1/gamma) g(s) / Lambda(1-s))`` of ``w`` as ``s -> 1``.

    ``Lambda(y) = y**nu L(1/y)``. Since ``g < 0`` the exponent is negative,
    matching ``w <= 1``.
    """
    _require_recurrent(spec)
    s = np.asarray(s, dtype=float)
    y = 1.0 - s
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = y**spec.nu * spec.L(1.0 / y)
        expo = np.where(y == 0, 0.0, spec.g(s) / lam / spec.gamma)
    out = np.exp(expo)
    return float(out) if out.ndim == 0 else out


def log_B(spec: ProcessSpec, s):
    require_theorem4(spec)
    a = -spec.gamma
    rho = spec.Lhat_remainder_exponent

    deficit = spec.Lhat_deficit

    def one(x):
        if x == 1:
            return 0.0
        ys = 1.0 / (1.0 - x)
        if rho == math.inf:
            return _zero_deficit(deficit, ys)
        if not rho > a:
            raise RegimeError("bracket is not integrable: remainder exponent of ell/L must exceed |gamma|")
        # y**(a-1) (C - Lhat) = y**-(1+sigma) * y**rho (C - Lhat), sigma = rho - a > 0
        return power_integral(lambda y: deficit(y) * y**rho, rho - a, ys, math.inf)

    return _vectorize(one, s)


def _zero_deficit(deficit, ys):
    probe = np.abs(deficit(np.asarray(ys) * np.logspace(0, 12, 25)))
    if np.all(probe == 0):
        return 0j if np.iscomplexobj(ys) else 0.0
    raise RegimeError("ell/L is constant but differs from C")


def B_gf(spec: ProcessSpec, s):
    """Bounded factor of ``pi``; ``B(1) = 1``."""
    return np.exp(log_B(spec, s))


def log_pi(spec: ProcessSpec, s):
    if np.any(np.asarray(s) == 1):
        raise ArgumentError("pi(s) is unbounded as s -> 1")
    s_arr = np.asarray(s)
    return (1.0 - s_arr) ** spec.gamma + log_B(spec, s)


def pi_gf(spec: ProcessSpec, s):
    """Limit of ``exp(T(t)) P(t;s)`` for the transient regime."""
    return np.exp(log_pi(spec, s))


def check_schroder(spec: ProcessSpec, tau: float, s):
    """Residual ``m(F(tau;s)) P(tau;s) - m(s)`` with ``m = w`` (gamma > 0) or ``pi`` (gamma < 0)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if tau == 0:
        out = np.zeros_like(s_arr)
        return out if np.ndim(s) else float(out[0])
    F = 1.0 - flow_R(spec, [tau], s_arr)[0]
    logP = log_transition_gf(spec, 0, tau, s_arr)
    if spec.gamma > 0:
        res = np.exp(log_w(spec, F) + logP) - np.exp(log_w(spec, s_arr))
    else:
        res = np.exp(log_pi(spec, F) + logP) - np.exp(log_pi(spec, s_arr))
    return res if np.ndim(s) else float(res[0])


@dataclass
class InvariantMeasure:
    """Coefficients of an invariant GF together with an evaluator for it."""

    kind: str
    coeffs: SeriesCoefficients
    evaluator: object = field(repr=False, default=None)
    spec: ProcessSpec | None = None
    normalization: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.coeffs.coeffs

    @property
    def negative_indices(self):
        """Indices whose coefficient is negative beyond its extraction error bound."""
        sc = self.coeffs
        return np.nonzero(sc.coeffs < -sc.error_bound)[0]

    def to_csv(self, header_lines=()):
        buf = io.StringIO()
        sc = self.coeffs
        gamma = self.spec.gamma if self.spec is not None else math.nan
        buf.write(f"# kind={self.kind} gamma={gamma!r} N={sc.N} radius={sc.radius!r} M={sc.M}\n")
        buf.write(f"# aliasing_bound={float(np.max(sc.aliasing_bound))!r} roundoff_bound={float(np.max(sc.roundoff_bound))!r}\n")
        buf.write(f"# negative_indices={self.negative_indices.tolist()}\n")
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "m_j"])
        for j, v in enumerate(sc.coeffs):
            w.writerow([j, repr(float(v))])
        return buf.getvalue()


def invariant_measure(spec: ProcessSpec, N: int = 64, radius=None, M=None) -> InvariantMeasure:
    """Extract ``w_j`` (gamma > 0) or ``pi_j`` (gamma < 0) for ``j <= N``."""
    if spec.gamma > 0:
        radius = W_RADIUS if radius is None else radius
        ev = lambda z: w_gf(spec, z)  # noqa: E731
        sc = extract_coefficients(ev, N, radius, M)
        norm = {"at_0": float(w_gf(spec, 0.0)), "at_1": 1.0}
        return InvariantMeasure("w_measure", sc, ev, spec, norm)
    require_theorem4(spec)
    radius = PI_RADIUS if radius is None else radius
    ev = lambda z: pi_gf(spec, z)  # noqa: E731
    sc = extract_coefficients(ev, N, radius, M)
    norm = {"at_0": float(pi_gf(spec, 0.0)), "at_1": math.inf}
    return InvariantMeasure("pi_measure", sc, ev, spec, norm)


def point_mass(N: int) -> InvariantMeasure:
    """Unit mass at state 0, useful as a trivial check at ``t = 0``."""
    c = np.zeros(N + 1)
    c[0] = 1.0
    z = np.zeros(N + 1)
    return InvariantMeasure("point_mass", SeriesCoefficients(c, 0.5, 4 * N, z, z, 1.0), lambda x: np.ones_like(np.asarray(x, dtype=float)))


@dataclass
class InvarianceResult:
    residuals: np.ndarray
    bounds: np.ndarray
    truncation: np.ndarray
    tol: float
    t: float

    @property
    def max_residual(self):
        return float(np.max(np.abs(self.residuals)))

    @property
    def passed(self):
        return bool(np.all(np.abs(self.residuals) <= self.bounds + self.tol))

    @property
    def inconclusive(self):
        """Some indices have an error bound larger than the tolerance itself."""
        return bool(np.any(self.bounds > self.tol))

    @property
    def conclusive_indices(self):
        return np.nonzero(self.bounds <= self.tol)[0]


def check_invariance(measure: InvariantMeasure, spec: ProcessSpec, t: float, N: int | None = None,
                     *, tol=1e-4, radius_p=0.7, r_grid=None) -> InvarianceResult:
    """Residuals ``r_j = sum_{i<=N} m_i p_ij(t) - m_j`` for ``j <= N/2``.

    The reported bound for each ``j`` adds the extraction errors of ``m`` and
    ``p`` to a truncation bound for the discarded rows ``i > N``. Since all
    coefficients are nonnegative, for any ``0 < r < 1``::

        sum_{i>N} m_i p_ij(t) <= P(t;r) r**-j [m(F(t;r)) - sum_{i<=N} m_i F(t;r)**i]
    """
    m_sc = measure.coeffs
    N = m_sc.N if N is None else N
    if N > m_sc.N:
        raise ArgumentError("measure has fewer coefficients than requested")
    if t < 0:
        raise ArgumentError("need t >= 0")
    jmax = N // 2
    m = m_sc.coeffs[: N + 1]
    m_err = m_sc.error_bound[: N + 1]
    p, p_err = transition_coefficients(spec, t, N, jmax, radius=radius_p)
    r = m @ p - m[: jmax + 1]
    extraction = np.abs(m) @ p_err + m_err @ np.abs(p) + m_err[: jmax + 1]

    if r_grid is None:
        r_grid = np.linspace(0.02, 0.98, 49)
    r_grid = np.asarray(r_grid, dtype=float)
    if t == 0:
        F = r_grid
        P = np.ones_like(r_grid)
    else:
        F = 1.0 - flow_R(spec, [t], r_grid)[0]
        P = np.exp(log_transition_gf(spec, 0, t, r_grid))
    powers = F[:, None] ** np.arange(N + 1)[None, :]
    partial = powers @ m
    full = np.asarray(measure.evaluator(F), dtype=float)
    slack = np.abs(powers) @ m_err + 1e-14 * np.abs(full)
    tail = np.maximum(full - partial, 0.0) + slack
    j = np.arange(jmax + 1)
    cand = P[:, None] * r_grid[:, None] ** (-j[None, :].astype(float)) * tail[:, None]
    truncation = np.min(cand, axis=0)
    return InvarianceResult(r, truncation + extraction, truncation, tol, float(t))
