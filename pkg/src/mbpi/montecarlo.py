"""Event-driven simulation of the branching process with immigration.

From state ``k`` the chain waits an exponential time with rate
``k*alpha + beta`` (``alpha = -a_1``, ``beta = -b_0``). The event is a
transformation of one individual into ``j`` individuals (``j != 1``, weight
``a_j``) with probability ``k*alpha / (k*alpha + beta)``, otherwise a batch of
``j >= 1`` immigrants (weight ``b_j``).

Jump sizes come from inverse-CDF tables over the truncated intensity tables.
Mass beyond the table is folded into the renormalization, and the probability
that a path would have drawn from it is carried as a bias bound.

Replications are grouped into fixed-size chunks. Chunk ``c`` draws from the
``c``-th child of ``SeedSequence(seed)``, so results do not depend on the
number of worker threads.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ArgumentError
from .laws import DEFAULT_J_MC, IntensityTable, ProcessSpec, build_intensities

DEFAULT_CAP = 10**7
CHUNK = 1000
MIN_REPS = 1000


@dataclass(frozen=True)
class SimConfig:
    intensities: IntensityTable
    i: int = 0
    t: float = 1.0
    replications: int = 10**6
    seed: int = 0
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.replications < 1:
            raise ArgumentError("need replications >= 1")
        if self.t < 0:
            raise ArgumentError("need t >= 0")
        if self.i < 0:
            raise ArgumentError("initial state must be nonnegative")
        if self.cap <= self.i:
            raise ArgumentError("population cap must exceed the initial state")
        if self.seed < 0:
            raise ArgumentError("seed must be nonnegative")


@dataclass(frozen=True)
class McEstimate:
    i: int
    j: int
    t: float
    estimate: float
    stderr: float
    replications: int
    bias: float
    censored_fraction: float
    seed: int = 0

    @property
    def degenerate(self):
        return self.estimate in (0.0, 1.0)

    def interval(self, z=3.0):
        """Two-sided ``estimate +- z*stderr + bias``, or one-sided 95% (rule of three) when degenerate."""
        n = self.replications
        if self.estimate == 0.0:
            return 0.0, min(1.0, 1.0 - 0.05 ** (1.0 / n) + self.bias)
        if self.estimate == 1.0:
            return max(0.0, 0.05 ** (1.0 / n) - self.bias), 1.0
        half = z * self.stderr + self.bias
        return max(0.0, self.estimate - half), min(1.0, self.estimate + half)

    def covers(self, value, z=3.0):
        lo, hi = self.interval(z)
        return lo <= value <= hi


def _inverse_cdf(weights):
    w = np.asarray(weights, dtype=float)
    total = math.fsum(w.tolist())
    if not total > 0:
        return np.ones(1)
    cdf = np.cumsum(w) / total
    cdf[-1] = 1.0
    return cdf


@dataclass(frozen=True)
class _Sampler:
    alpha: float
    beta: float
    cdf_a: np.ndarray
    cdf_b: np.ndarray
    # probability that one event would have drawn beyond the table
    tail_a: float
    tail_b: float

    @classmethod
    def from_table(cls, table: IntensityTable):
        a, b = np.asarray(table.a, dtype=float), np.asarray(table.b, dtype=float)
        alpha, beta = -float(a[1]), -float(b[0])
        if alpha < 0 or beta < 0:
            raise ArgumentError("need a_1 <= 0 and b_0 <= 0")
        # offspring values 0, 2, 3, ..., J map to table positions 0, 1, ..., J-1
        cdf_a = _inverse_cdf(np.concatenate(([a[0]], a[2:])))
        cdf_b = _inverse_cdf(b[1:])
        tail_a = max(table.tail_mass_a, 0.0) / alpha if alpha > 0 else 0.0
        tail_b = max(table.tail_mass_b, 0.0) / beta if beta > 0 else 0.0
        return cls(alpha, beta, cdf_a, cdf_b, tail_a, tail_b)


@numba.njit(nogil=True, cache=True)
def _run_chunk(rng, n, i0, t, alpha, beta, cdf_a, cdf_b, cap, state, censored, n_branch, n_imm):
    for r in range(n):
        k = i0
        nb = 0
        ni = 0
        cens = False
        if t > 0:
            clock = 0.0
            while True:
                lam = k * alpha + beta
                if lam <= 0.0:
                    break
                clock += rng.exponential(1.0 / lam)
                if clock > t:
                    break
                if rng.random() * lam < k * alpha:
                    idx = np.searchsorted(cdf_a, rng.random(), side="right")
                    k += idx if idx > 0 else -1
                    nb += 1
                else:
                    idx = np.searchsorted(cdf_b, rng.random(), side="right")
                    k += idx + 1
                    ni += 1
                if k > cap:
                    cens = True
                    break
        state[r] = k
        censored[r] = cens
        n_branch[r] = nb
        n_imm[r] = ni


@dataclass
class SimResult:
    """Terminal states of all replications with per-path event counts."""

    config: SimConfig
    states: np.ndarray
    censored: np.ndarray
    n_branch: np.ndarray
    n_imm: np.ndarray
    tail_a: float = 0.0
    tail_b: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def censored_fraction(self):
        return float(np.mean(self.censored))

    @property
    def bias_bound(self):
        """Censored fraction plus a bound on the chance of any draw beyond the table."""
        tail = float(np.mean(self.n_branch)) * self.tail_a + float(np.mean(self.n_imm)) * self.tail_b
        return min(1.0, self.censored_fraction + tail)

    def estimate(self, j: int) -> McEstimate:
        cfg = self.config
        n = self.states.size
        hits = int(np.count_nonzero((self.states == j) & ~self.censored))
        p = hits / n
        return McEstimate(cfg.i, int(j), float(cfg.t), p, math.sqrt(p * (1.0 - p) / n), n,
                          self.bias_bound, self.censored_fraction, cfg.seed)


def simulate(config: SimConfig, jobs: int = 1) -> SimResult:
    """Run all replications; ``jobs`` threads share the fixed chunk schedule."""
    smp = _Sampler.from_table(config.intensities)
    n = config.replications
    states = np.empty(n, dtype=np.int64)
    censored = np.empty(n, dtype=np.bool_)
    n_branch = np.empty(n, dtype=np.int64)
    n_imm = np.empty(n, dtype=np.int64)
    n_chunks = -(-n // CHUNK)
    seeds = np.random.SeedSequence(config.seed).spawn(n_chunks)

    def work(c):
        lo, hi = c * CHUNK, min(n, (c + 1) * CHUNK)
        rng = np.random.Generator(np.random.PCG64(seeds[c]))
        _run_chunk(rng, hi - lo, config.i, float(config.t), smp.alpha, smp.beta, smp.cdf_a, smp.cdf_b,
                   config.cap, states[lo:hi], censored[lo:hi], n_branch[lo:hi], n_imm[lo:hi])

    if jobs <= 1:
        for c in range(n_chunks):
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            list(ex.map(work, range(n_chunks)))
    return SimResult(config, states, censored, n_branch, n_imm, smp.tail_a, smp.tail_b)


def simulate_path(config: SimConfig) -> tuple[int, bool]:
    """Terminal state and censored flag of the first replication of ``config``."""
    one = SimConfig(config.intensities, config.i, config.t, 1, config.seed, config.cap)
    res = simulate(one)
    return int(res.states[0]), bool(res.censored[0])


def estimate_pij(config: SimConfig, j: int, jobs: int = 1) -> McEstimate:
    """Monte Carlo frequency of ``X(t) = j`` with binomial standard error."""
    if config.replications < MIN_REPS:
        raise ArgumentError(f"need at least {MIN_REPS} replications")
    return simulate(config, jobs).estimate(j)


def mc_config(spec: ProcessSpec, i=0, t=1.0, replications=10**6, seed=0, cap=DEFAULT_CAP, J=DEFAULT_J_MC):
    """Convenience constructor building the intensity table from ``spec``."""
    return SimConfig(build_intensities(spec, J), i, t, replications, seed, cap)


def compound_poisson_pmf(table: IntensityTable, t: float, K: int):
    """``P(X(t) = k)``, ``k <= K``, for pure immigration via the Panjer recursion."""
    beta = -float(table.b[0])
    q = np.zeros(K + 1)
    m = min(K, len(table.b) - 1)
    q[1 : m + 1] = np.asarray(table.b[1 : m + 1]) / beta
    lam = beta * t
    p = np.zeros(K + 1)
    p[0] = math.exp(-lam)
    k = np.arange(K + 1)
    for n in range(1, K + 1):
        p[n] = lam / n * np.dot(k[1 : n + 1] * q[1 : n + 1], p[n - 1 :: -1][: n])
    return p


def estimates_csv(estimates, header_lines=()):
    """CSV with columns ``i, j, t, estimate, stderr, bias, censored_fraction``."""
    buf = io.StringIO()
    seeds = sorted({e.seed for e in estimates})
    buf.write(f"# seed={','.join(str(s) for s in seeds)}\n")
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "t", "estimate", "stderr", "bias", "censored_fraction", "replications"])
    for e in estimates:
        w.writerow([e.i, e.j, repr(e.t), repr(e.estimate), repr(e.stderr), repr(e.bias),
                    repr(e.censored_fraction), e.replications])
    return buf.getvalue()
