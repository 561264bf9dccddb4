"""Backward Kolmogorov flow ``dF/dt = f(F)`` and the immigration transition GF.

The survival tail ``R = 1 - F`` solves ``dR/dt = -R**(1+nu) L(1/R)``. The
solver integrates the equivalent equation for ``u = R**-nu``::

    du/dt = nu * L(u**(1/nu)),     u(0) = (1-s)**-nu

which has a bounded, slowly varying right-hand side, so no cancellation
arises as ``F -> 1`` and stiffness near the fixed point never appears. The
equation is solved for real or complex ``s`` (principal branch), which is
what coefficient extraction on circles needs.

The transition GF of the immigration process started from ``i`` individuals
is ``F(t;s)**i * P(t;s)`` with::

    log P(t;s) = int_s^{F(t;s)} g(x)/f(x) dx
               = -int_{1/(1-s)}^{1/R(t;s)} y**-(1+gamma) Lhat(y) dy
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ArgumentError, NumericalError
from .laws import ProcessSpec
from .slowvar import power_integral

RTOL = 1e-12
DEFAULT_RADIUS = 0.7


@dataclass(frozen=True)
class FlowPoint:
    t: float
    s: float
    F: float
    R: float


@dataclass(frozen=True)
class NormingFunctions:
    """Norming quantities at time ``t``: ``calN(t)``, ``tau(t)`` and ``M(t;s)``."""

    t: float
    s: float
    calN: float
    tau: float
    M: float


@dataclass
class SeriesCoefficients:
    """Truncated power-series coefficients with extraction metadata.

    ``aliasing_bound[j]`` and ``roundoff_bound[j]`` bound the two error
    sources of coefficient ``j``; ``error_bound`` is their sum.
    """

    coeffs: np.ndarray
    radius: float
    M: int
    aliasing_bound: np.ndarray
    roundoff_bound: np.ndarray
    sup_abs: float = math.nan

    @property
    def N(self):
        return len(self.coeffs) - 1

    @property
    def error_bound(self):
        return self.aliasing_bound + self.roundoff_bound

    def check_probability(self, tol=1e-10):
        """True when coefficients look like a (sub)probability vector."""
        c = self.coeffs
        return bool(np.all(c >= -tol) and np.all(np.cumsum(c) <= 1 + tol))

    def __getitem__(self, j):
        return self.coeffs[j]

    def __len__(self):
        return len(self.coeffs)


def _as_1d(x):
    x = np.asarray(x)
    return x.reshape(-1), x.shape


def _rhs_u(spec: ProcessSpec, with_time_integral):
    nu, delta = spec.nu, spec.delta

    def rhs(t, y):
        if with_time_integral:
            n = y.size // 2
            u = y[:n]
        else:
            u = y
        x = u ** (1.0 / nu)
        du = nu * spec.L(x)
        if not with_time_integral:
            return du
        # g(1 - R) with R = u**(-1/nu):  -R**delta * ell(1/R)
        dE = -(u ** (-delta / nu)) * spec.ell(x)
        return np.concatenate([du, dE])

    return rhs


def flow_u(spec: ProcessSpec, t, s, *, rtol=RTOL, with_time_integral=False):
    """Integrate ``u = R**-nu`` on a time grid for many starting points at once.

    Parameters
    ----------
    t : array_like
        Nondecreasing nonnegative times.
    s : array_like
        Starting points with ``|s| < 1`` (real or complex); ``s == 1`` is not
        allowed here.

    Returns
    -------
    u : ndarray, shape (len(t), len(s))
    E : ndarray or None
        Time integral ``int_0^t g(F(v;s)) dv`` when requested.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.atleast_1d(np.asarray(s))
    if np.any(np.diff(t) < 0) or np.any(t < 0):
        raise ArgumentError("time grid must be nonnegative and nondecreasing")
    cplx = np.iscomplexobj(s)
    u0 = (1.0 - s) ** (-spec.nu)
    nt, ns = t.size, s.size
    dtype = complex if cplx else float
    u = np.empty((nt, ns), dtype=dtype)
    E = np.zeros((nt, ns), dtype=dtype) if with_time_integral else None
    zero = t == 0
    u[zero] = u0
    pos = ~zero
    if not np.any(pos):
        return u, E
    y0 = np.concatenate([u0, np.zeros(ns, dtype=dtype)]) if with_time_integral else u0.astype(dtype)
    atol = np.concatenate([np.full(ns, 1e-300), np.full(ns, 1e-15)]) if with_time_integral else 1e-300
    sol = integrate.solve_ivp(
        _rhs_u(spec, with_time_integral),
        (0.0, float(t[-1])),
        y0,
        method="DOP853",
        t_eval=t[pos],
        rtol=rtol,
        atol=atol,
    )
    if sol.status != 0:
        raise NumericalError(f"flow integration failed: {sol.message}", error_estimate=rtol)
    u[pos] = sol.y[:ns].T
    if with_time_integral:
        E[pos] = sol.y[ns:].T
    return u, E


def flow_R(spec: ProcessSpec, t, s, *, rtol=RTOL):
    """``R(t;s)`` on a grid, shape ``(len(t), len(s))``; ``s == 1`` gives ``R = 0``."""
    s1, _ = _as_1d(s)
    out_dtype = complex if np.iscomplexobj(s1) else float
    t = np.atleast_1d(np.asarray(t, dtype=float))
    R = np.zeros((t.size, s1.size), dtype=out_dtype)
    interior = s1 != 1
    if np.any(interior):
        u, _ = flow_u(spec, t, s1[interior], rtol=rtol)
        R[:, interior] = u ** (-1.0 / spec.nu)
        R[t == 0] = 1.0 - s1
    return R


def flow_R_direct(spec: ProcessSpec, t, s, *, rtol=1e-11):
    """Cross-check: integrate ``dR/dt = -f(1-R)`` in the ``R`` variable itself."""
    s1, _ = _as_1d(np.asarray(s, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))

    def rhs(_, R):
        return -spec.f(1.0 - R)

    sol = integrate.solve_ivp(
        rhs, (0.0, float(t[-1])), 1.0 - s1, method="DOP853", t_eval=t, rtol=rtol, atol=1e-300
    )
    if sol.status != 0:
        raise NumericalError(f"flow integration failed: {sol.message}", error_estimate=rtol)
    return sol.y.T


def solve_F(spec: ProcessSpec, t: float, s: float, *, rtol=RTOL) -> FlowPoint:
    """Solve the backward equation for one ``(t, s)`` pair."""
    if not 0 <= s <= 1:
        raise ArgumentError("need 0 <= s <= 1")
    if t < 0:
        raise ArgumentError("need t >= 0")
    if s == 1:
        return FlowPoint(float(t), 1.0, 1.0, 0.0)
    R = float(flow_R(spec, [t], [s], rtol=rtol)[0, 0])
    return FlowPoint(float(t), float(s), 1.0 - R, R)


def norming(spec: ProcessSpec, t: float, s: float = 0.0) -> NormingFunctions:
    if not t > 0:
        raise ArgumentError("need t > 0")
    if not 0 <= s < 1:
        raise ArgumentError("need 0 <= s < 1")
    R0, Rs = flow_R(spec, [t], [0.0, s])[0]
    nt = spec.nu * t
    return NormingFunctions(
        t=float(t),
        s=float(s),
        calN=nt ** (1.0 / spec.nu) * R0,
        tau=1.0 / R0,
        M=nt * (1.0 - Rs / R0),
    )


def calM(spec: ProcessSpec, s: float) -> float:
    """GF of the invariant measure of the process without immigration."""
    if not 0 <= s < 1:
        raise ArgumentError("need 0 <= s < 1")
    if s == 0:
        return 0.0
    return power_integral(lambda x: 1.0 / spec.L(x), -spec.nu, 1.0, 1.0 / (1.0 - s))


def _log_P_space(spec: ProcessSpec, s, u):
    """``log P`` for each starting point ``s`` given ``u = R(t;s)**-nu``."""
    ys = 1.0 / (1.0 - s)
    yF = u ** (1.0 / spec.nu)
    out = np.empty(s.shape, dtype=complex if np.iscomplexobj(s) else float)
    for k in range(s.size):
        out[k] = -power_integral(spec.Lhat, spec.gamma, ys[k], yF[k])
    return out


def log_transition_gf_grid(spec: ProcessSpec, i: int, t, s, *, method="space", rtol=RTOL):
    """``log P_i(t;s)`` on a grid of times and starting points, shape ``(len(t), len(s))``."""
    if i < 0:
        raise ArgumentError("initial state must be nonnegative")
    s1, _ = _as_1d(s)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.iscomplexobj(s1):
        if np.any(np.abs(s1) >= 1):
            raise ArgumentError("need |s| < 1")
    elif np.any((s1 < 0) | (s1 >= 1)):
        raise ArgumentError("need 0 <= s < 1")
    if method == "space":
        u, _ = flow_u(spec, t, s1, rtol=rtol)
        logP = np.vstack([_log_P_space(spec, s1, u[k]) for k in range(t.size)])
    elif method == "time":
        u, logP = flow_u(spec, t, s1, rtol=rtol, with_time_integral=True)
    else:
        raise ArgumentError(f"unknown method {method!r}")
    if i == 0:
        return logP
    F = 1.0 - u ** (-1.0 / spec.nu)
    F[t == 0] = s1
    return i * np.log(F) + logP


def log_transition_gf(spec: ProcessSpec, i: int, t: float, s, *, method="space"):
    """``log P_i(t;s)`` at a single time; ``s`` scalar or array."""
    sa = np.asarray(s)
    out = log_transition_gf_grid(spec, i, [t], sa.reshape(-1), method=method)[0]
    return out.reshape(sa.shape) if sa.ndim else out[0]


def transition_gf(spec: ProcessSpec, i: int, t: float, s, *, method="space"):
    """``P_i(t;s) = F(t;s)**i * exp(int_s^F g/f dx)``."""
    return np.exp(log_transition_gf(spec, i, t, s, method=method))


def extract_coefficients(evaluator, N: int, radius: float = DEFAULT_RADIUS, M: int | None = None,
                         *, eval_tol: float = 1e-13) -> SeriesCoefficients:
    """Taylor coefficients ``c_0..c_N`` of a real-coefficient GF from samples on a circle.

    The evaluator is called once with the complex array of sample points
    ``radius * exp(2i*pi*k/M)`` for ``k = 0..M/2``; the other half follows by
    conjugate symmetry. ``eval_tol`` is the absolute accuracy of the
    evaluator and feeds the roundoff part of the error bound.
    """
    if N < 1:
        raise ArgumentError("need N >= 1")
    if not 0 < radius < 1:
        raise ArgumentError("need 0 < radius < 1")
    M = 4 * N if M is None else int(M)
    if M < 2 * N:
        raise ArgumentError("need M >= 2N samples")
    M += M % 2
    k = np.arange(M // 2 + 1)
    z = radius * np.exp(2j * np.pi * k / M)
    try:
        vals_half = np.asarray(evaluator(z), dtype=complex)
    except Exception as exc:  # noqa: BLE001 - re-raised with context
        raise NumericalError(f"evaluator failed on the extraction circle: {exc}") from exc
    if vals_half.shape != z.shape or not np.all(np.isfinite(vals_half)):
        raise NumericalError("evaluator returned non-finite values on the extraction circle")
    vals = np.empty(M, dtype=complex)
    vals[: M // 2 + 1] = vals_half
    vals[M // 2 + 1 :] = np.conj(vals_half[1 : M // 2][::-1])
    c = np.fft.fft(vals)[: N + 1] / M
    j = np.arange(N + 1)
    scale = radius ** (-j.astype(float))
    coeffs = c.real * scale
    sup = float(np.max(np.abs(vals)))
    aliasing = sup * radius ** (M - j.astype(float)) / (1.0 - radius**M)
    roundoff = (eval_tol + 4 * np.finfo(float).eps * sup) * scale
    return SeriesCoefficients(coeffs, float(radius), M, aliasing, roundoff, sup)


def transition_coefficients(spec: ProcessSpec, t: float, i_max: int, N: int, radius=DEFAULT_RADIUS, M=None):
    """Matrix ``p[i, j] = p_ij(t)`` for ``i <= i_max``, ``j <= N`` plus a per-entry error bound."""
    M = 4 * N if M is None else M
    M += M % 2
    k = np.arange(M // 2 + 1)
    z = radius * np.exp(2j * np.pi * k / M)
    if t == 0:
        F = z
        logP = np.zeros_like(z)
    else:
        u, _ = flow_u(spec, [t], z)
        F = 1.0 - u[0] ** (-1.0 / spec.nu)
        logP = _log_P_space(spec, z, u[0])
    P0 = np.exp(logP)
    rows, errs = [], []
    for i in range(i_max + 1):
        vals = F**i * P0
        sc = extract_coefficients(lambda _z, v=vals: v, N, radius, M)
        rows.append(sc.coeffs)
        errs.append(sc.error_bound)
    return np.array(rows), np.array(errs)


def flow_grid(spec: ProcessSpec, t_grid, s_grid):
    """Rows ``(t, s, F, R, M, tau)`` for every grid pair (``M`` and ``tau`` need ``t > 0``)."""
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    s_grid = np.asarray(s_grid, dtype=float)
    s_all = np.concatenate([[0.0], s_grid])
    R = flow_R(spec, t_grid, s_all)
    rows = []
    for a, t in enumerate(t_grid):
        R0 = R[a, 0]
        for b, s in enumerate(s_grid):
            Rs = R[a, b + 1]
            if t > 0:
                M = spec.nu * t * (1.0 - Rs / R0)
                tau = 1.0 / R0
            else:
                M, tau = math.nan, 1.0
            rows.append((float(t), float(s), float(1.0 - Rs), float(Rs), float(M), float(tau)))
    return rows


def flow_grid_csv(spec: ProcessSpec, t_grid, s_grid, header_lines=()):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "s", "F", "R", "M", "tau"])
    for row in flow_grid(spec, t_grid, s_grid):
        w.writerow([repr(x) for x in row])
    return buf.getvalue()
