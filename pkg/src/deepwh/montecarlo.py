"""Monte Carlo simulation of stable paths for two-sided exit problems.

Paths are random-walk skeletons with stable increments generated by the
Chambers-Mallows-Stuck construction.  Far from the barrier the step has the
nominal size ``h`` in process time; within reach of the barrier the spatial
scale of a step is capped at ``refine`` times the distance to it (a smaller
time step, chosen from the current position only).  This keeps the skeleton
from stepping over short excursions beyond the barrier, which otherwise bias
the overshoot law for ``alpha > 1``.  ``refine=0`` gives the plain skeleton.

Work is split into fixed-size chunks of paths; chunk ``k`` draws from
``rng_stream(seed, k)``.  Results therefore depend on ``(seed, n_paths,
time_step, refine, chunk_size)`` but not on the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numba
import numpy as np
from scipy import stats

from .errors import BudgetError, DomainError, RegimeError
from .stable_params import StableParams

ENV_WORKERS = "DEEPWH_WORKERS"
_BLOCK = 256

# Taylor coefficients of sin on [-pi/2, pi/2]; truncation error below 1e-17.
_SIN_COEF = tuple((-1) ** k / math.factorial(2 * k + 1) for k in range(11))
_S0, _S1, _S2, _S3, _S4, _S5, _S6, _S7, _S8, _S9, _S10 = _SIN_COEF
_HALF_PI = 0.5 * math.pi


def default_workers() -> int:
    """Worker count from ``DEEPWH_WORKERS``, else the number of usable CPUs."""
    env = os.environ.get(ENV_WORKERS)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"{ENV_WORKERS}={env!r} is not an integer") from None
        if n < 1:
            raise DomainError(f"{ENV_WORKERS} must be >= 1")
        return n
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo settings.

    Attributes
    ----------
    n_paths : int
        Number of simulated paths.
    time_step : float
        Nominal step ``h`` in process time.
    seed : int
        Root seed (non-negative, below 2**64).
    n_workers : int
        Worker threads; does not change results.
    refine : float
        Cap on the step's spatial scale as a fraction of the distance to the
        barrier; 0 disables refinement.
    chunk_size : int
        Paths per independent random stream.
    max_steps : int
        Per-path step budget.
    """

    n_paths: int
    time_step: float = 1e-4
    seed: int = 20240601
    n_workers: int = 1
    refine: float = 0.1
    chunk_size: int = 4096
    max_steps: int = 10**8

    def __post_init__(self) -> None:
        if int(self.n_paths) < 1:
            raise DomainError("n_paths must be >= 1")
        if not (self.time_step > 0 and math.isfinite(self.time_step)):
            raise DomainError("time_step must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if int(self.n_workers) < 1:
            raise DomainError("n_workers must be >= 1")
        if not 0.0 <= self.refine < 1.0:
            raise DomainError("refine must lie in [0, 1)")
        if int(self.chunk_size) < 1 or int(self.max_steps) < 1:
            raise DomainError("chunk_size and max_steps must be >= 1")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MCEstimate:
    """Point estimate with its standard error and the number of contributing samples."""

    value: float
    std_error: float
    n_effective: int

    def z_score(self, target: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.value == target else math.inf
        return (self.value - target) / self.std_error

    def within(self, target: float, n_sigma: float = 3.0) -> bool:
        return abs(self.z_score(target)) <= n_sigma


def proportion_estimate(hits: int, n: int) -> MCEstimate:
    """Binomial proportion with its plug-in standard error."""
    if n < 1:
        raise DomainError("need at least one sample")
    p = hits / n
    return MCEstimate(value=p, std_error=math.sqrt(p * (1.0 - p) / n), n_effective=n)


def rng_stream(seed: int, worker_index: int) -> np.random.Generator:
    """Generator for substream ``worker_index`` of ``seed``.

    Substreams are PCG64 states advanced by ``worker_index`` jumps of about
    ``2^127`` draws, so they cannot overlap in practice.
    """
    if worker_index < 0:
        raise DomainError("worker_index must be >= 0")
    bitgen = np.random.PCG64(seed)
    if worker_index:
        bitgen = bitgen.jumped(worker_index)
    return np.random.Generator(bitgen)


# ----------------------------------------------------------------------------
# Increments
# ----------------------------------------------------------------------------


def _skew_shift(params: StableParams) -> float:
    """Angle offset ``B`` with ``alpha (V + B)`` ranging over ``(-pi alpha rho_hat, pi alpha rho)``."""
    return math.pi * (params.rho - 0.5)


def standard_from_uniforms(params: StableParams, u, e):
    """Unit-time stable variates from uniforms ``u`` on (0, 1) and standard exponentials ``e``.

    With ``V = pi (u - 1/2)``::

        X = sin(alpha (V + B)) / cos(V)^{1/alpha} * (cos(V - alpha (V + B)) / e)^{(1 - alpha)/alpha}

    This is the reference implementation used by :func:`sample_stable_increment`.
    """
    al = params.alpha
    v = np.pi * (np.asarray(u, dtype=float) - 0.5)
    av = al * (v + _skew_shift(params))
    cos_v = np.sin(np.pi * np.minimum(u, 1.0 - np.asarray(u)))
    out = np.sin(av) / cos_v ** (1.0 / al)
    if al != 1.0:
        out = out * (np.cos(v - av) / np.asarray(e, dtype=float)) ** ((1.0 - al) / al)
    return out


def sample_stable_increment(params: StableParams, h: float, rng: np.random.Generator, size=None):
    """Increment of the stable process over time ``h``: ``h^{1/alpha} X_1``.

    The characteristic function is ``exp(-h Psi(theta))`` with
    ``Psi(theta) = |theta|^alpha exp(+-i pi alpha (1/2 - rho))``; in
    particular ``P(X_1 >= 0) = rho``.
    """
    if not h > 0:
        raise DomainError("h must be positive")
    u = rng.random(size)
    e = rng.standard_exponential(size)
    return h ** (1.0 / params.alpha) * standard_from_uniforms(params, u, e)


@numba.njit(fastmath=True, inline="always")
def _psin(y):
    """sin(y) for |y| <= pi."""
    ay = abs(y)
    r = min(ay, math.pi - ay)
    r = math.copysign(r, y)
    z = r * r
    return r * (_S0 + z * (_S1 + z * (_S2 + z * (_S3 + z * (_S4 + z * (_S5 + z * (_S6 + z * (_S7 + z * (_S8 + z * (_S9 + z * _S10))))))))))


@numba.njit(fastmath=True, nogil=True, cache=True)
def _trig_stage(u, alpha, shift, sin_av, cos_v, cos_psi):
    # cos(V) is taken as sin(pi min(u, 1-u)) to keep relative accuracy in the tails.
    for i in range(u.size):
        ui = u[i]
        v = math.pi * (ui - 0.5)
        av = alpha * (v + shift)
        sin_av[i] = _psin(av)
        cos_v[i] = _psin(math.pi * min(ui, 1.0 - ui))
        cos_psi[i] = _psin(_HALF_PI - abs(v - av))


def _standard_block(params: StableParams, u: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Fast in-place evaluation of :func:`standard_from_uniforms`; overwrites ``e``."""
    al = params.alpha
    sin_av = np.empty_like(u)
    cos_v = np.empty_like(u)
    flat = (u.reshape(-1), sin_av.reshape(-1), cos_v.reshape(-1), (e if al == 1.0 else u).reshape(-1))
    _trig_stage(flat[0], al, _skew_shift(params), *flat[1:])
    np.log(cos_v, out=cos_v)
    cos_v *= -1.0 / al
    if al != 1.0:
        # u now holds cos(psi); e still holds the exponentials.
        np.divide(u, e, out=u)
        np.log(u, out=u)
        u *= (1.0 - al) / al
        cos_v += u
    np.exp(cos_v, out=cos_v)
    cos_v *= sin_av
    return cos_v


@numba.njit(nogil=True, cache=True)
def _walk(steps_std, scale, refine, barrier, pos, side, overshoot, n_steps):
    n, m = steps_std.shape
    for p in range(n):
        x = pos[p]
        for k in range(m):
            sc = scale
            if refine > 0.0:
                sc = min(scale, refine * (barrier - abs(x)))
            x += sc * steps_std[p, k]
            if x >= barrier or x <= -barrier:
                side[p] = 1 if x > 0 else -1
                overshoot[p] = abs(x) - barrier
                n_steps[p] += k + 1
                break
        else:
            n_steps[p] += m
        pos[p] = x


# ----------------------------------------------------------------------------
# Exit simulation
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ExitRecords:
    """Per-path results of a two-sided exit simulation.

    Attributes
    ----------
    side : ndarray of int8
        +1 for exit above the interval, -1 for exit below.
    overshoot : ndarray of float
        Distance beyond the barrier at exit, ``|X| - b``.
    n_steps : ndarray of int64
        Skeleton steps until exit.
    """

    side: np.ndarray
    overshoot: np.ndarray
    n_steps: np.ndarray

    @property
    def n_paths(self) -> int:
        return int(self.side.size)

    def up_probability(self) -> MCEstimate:
        return proportion_estimate(int(np.count_nonzero(self.side == 1)), self.n_paths)

    def overshoots(self, side: int) -> np.ndarray:
        """Overshoots of the paths leaving through ``side`` (+1 or -1)."""
        return self.overshoot[self.side == side]


def _simulate_chunk(params, x, barrier, cfg: MCConfig, index: int, n: int):
    rng = rng_stream(int(cfg.seed), index)
    scale = cfg.time_step ** (1.0 / params.alpha)
    pos = np.full(n, float(x))
    side = np.zeros(n, dtype=np.int8)
    over = np.zeros(n)
    steps = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    while active.size:
        k = active.size
        u = rng.random((k, _BLOCK))
        e = rng.standard_exponential((k, _BLOCK))
        block = _standard_block(params, u, e)
        p, s, o, st = pos[active], side[active], over[active], steps[active]
        _walk(block, scale, cfg.refine, barrier, p, s, o, st)
        pos[active], side[active], over[active], steps[active] = p, s, o, st
        active = active[s == 0]
        if active.size and steps[active].max() > cfg.max_steps:
            raise BudgetError(f"a path exceeded the step budget of {cfg.max_steps} steps without exiting")
    return side, over, steps


def simulate_two_sided_exit(params: StableParams, x: float, cfg: MCConfig, *, half_width: float = 1.0) -> ExitRecords:
    """Run skeleton paths from ``x`` until they leave ``(-half_width, half_width)``.

    Raises
    ------
    DomainError
        If ``x`` is outside the interval or the time step is too coarse for
        a path to need about 100 steps on average before leaving.
    BudgetError
        If some path exceeds ``cfg.max_steps``.
    """
    b = float(half_width)
    if not b > 0:
        raise DomainError("half_width must be positive")
    if not -b < x < b:
        raise DomainError(f"start point {x} must lie in (-{b}, {b})")
    if cfg.time_step > 1e-2 * (b - abs(x)) ** params.alpha:
        raise DomainError(
            f"time_step {cfg.time_step} is too coarse: it must be at most 1e-2 * (distance to barrier)^alpha "
            f"= {1e-2 * (b - abs(x)) ** params.alpha:.3g}"
        )
    n, size = int(cfg.n_paths), int(cfg.chunk_size)
    bounds = [(k, min(size, n - k * size)) for k in range((n + size - 1) // size)]
    # Compile outside the worker threads.
    _warm_up()
    if cfg.n_workers == 1 or len(bounds) == 1:
        parts = [_simulate_chunk(params, x, b, cfg, k, m) for k, m in bounds]
    else:
        with ThreadPoolExecutor(max_workers=int(cfg.n_workers)) as pool:
            parts = list(pool.map(lambda km: _simulate_chunk(params, x, b, cfg, *km), bounds))
    side, over, steps = (np.concatenate(col) for col in zip(*parts))
    return ExitRecords(side=side, overshoot=over, n_steps=steps)


_WARM = []


def _warm_up() -> None:
    if _WARM:
        return
    u = np.full(2, 0.3)
    _trig_stage(u, 0.5, 0.0, np.empty_like(u), np.empty_like(u), np.empty_like(u))
    _walk(np.zeros((1, 1)), 0.1, 0.1, 1.0, np.zeros(1), np.zeros(1, np.int8), np.zeros(1), np.zeros(1, np.int64))
    _WARM.append(True)


@dataclass(frozen=True)
class LadderOvershootSample:
    """Log-scale overshoots ``u = log |X_exit|`` with the exit state ``j`` (1 above, 2 below)."""

    u: np.ndarray
    j: np.ndarray
    records: ExitRecords

    def branch(self, j: int) -> np.ndarray:
        return self.u[self.j == j]

    def branch_probability(self, j: int) -> MCEstimate:
        return proportion_estimate(int(np.count_nonzero(self.j == j)), int(self.j.size))


def estimate_ladder_overshoot(params: StableParams, a: float, cfg: MCConfig) -> LadderOvershootSample:
    """Sample ``(H^+(T_a) - a, J^+(T_a))`` through exit of (-1, 1) from ``e^{-a}``.

    Raises
    ------
    RegimeError
        For ``alpha > 1``, where paths may hit the origin first and the
        skeleton cannot detect it.
    """
    if params.alpha > 1.0:
        raise RegimeError("ladder overshoot simulation needs alpha in (0, 1]")
    if not a > 0:
        raise DomainError("level a must be positive")
    rec = simulate_two_sided_exit(params, math.exp(-a), cfg)
    u = np.log1p(rec.overshoot)
    j = np.where(rec.side == 1, 1, 2).astype(np.int8)
    return LadderOvershootSample(u=u, j=j, records=rec)


# ----------------------------------------------------------------------------
# Summaries
# ----------------------------------------------------------------------------


def ks_statistic(sample, cdf) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov distance and p-value against a vectorised CDF."""
    res = stats.kstest(np.asarray(sample, dtype=float), cdf)
    return float(res.statistic), float(res.pvalue)


HISTOGRAM_COLUMNS = ("bin_left", "bin_right", "count", "density", "analytic_density")


def histogram(values, edges, n_total: int, analytic_cdf=None, analytic_mass: float = 1.0) -> np.ndarray:
    """Histogram rows ``(bin_left, bin_right, count, density, analytic_density)``.

    ``density`` is ``count / (n_total * width)``, so a branch of a joint law
    is shown on the scale of its sub-probability density.  The analytic
    column is the bin average of ``analytic_mass * d(analytic_cdf)``, or NaN.
    """
    edges = np.asarray(edges, dtype=float)
    counts, _ = np.histogram(np.asarray(values, dtype=float), bins=edges)
    width = np.diff(edges)
    dens = counts / (n_total * width)
    if analytic_cdf is None:
        ana = np.full(width.shape, np.nan)
    else:
        cdf_vals = np.asarray(analytic_cdf(edges), dtype=float)
        ana = analytic_mass * np.diff(cdf_vals) / width
    return np.column_stack([edges[:-1], edges[1:], counts.astype(float), dens, ana])
