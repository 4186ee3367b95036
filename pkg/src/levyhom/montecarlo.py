"""Monte Carlo simulation of the jump process with drift.

Scheme, per particle and between observation times:

* jumps longer than ``delta`` form a compound Poisson process with rate
  Lambda_delta = nu(|z| > delta); radii are drawn by inverse transform and
  directions uniformly;
* jumps up to ``delta`` are replaced by a Brownian increment with covariance
  Sigma_delta = int_{|z|<=delta} z z^T nu(dz) per unit time;
* the drift is integrated with the explicit midpoint rule on steps no longer
  than ``dt``, cut at jump epochs and observation times.

Particles are split into batches, each with its own Philox stream spawned
from the master seed.  Batch means give the standard errors.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .environment import DriftField, eval_drift
from .kernels import LevyKernel, Truncated, sphere_area

__all__ = ["SimConfig", "PathStats", "RadialSampler", "simulate", "rescaled_paths",
           "effective_diffusivity_mc"]

log = logging.getLogger(__name__)


class RadialSampler:
    """Inverse-transform sampler for |z| under nu restricted to |z| > delta."""

    def __init__(self, kernel: LevyKernel, delta: float, table_tol: float = 1e-8):
        if not 0 < delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        self.kernel, self.delta = kernel, delta
        d, a = kernel.d, kernel.alpha
        S = sphere_area(d)
        self.small_rate = S * (delta ** (-a) - 1.0) / a
        tail = kernel.tail
        self.tail_rate = 0.0 if isinstance(tail, Truncated) else S * tail.moment_tail(1.0, d - 1, d)
        self.rate = self.small_rate + self.tail_rate
        self._inv = None
        if self.tail_rate > 0:
            self._inv = self._build_tail_table(table_tol)

    def _survival(self, r):
        t, d = self.kernel.tail, self.kernel.d
        w0 = t.moment_tail(1.0, d - 1, d)
        return np.array([t.moment_tail(float(x), d - 1, d) / w0 for x in np.atleast_1d(r)])

    def _build_tail_table(self, tol):
        # log r as a function of -log survival, refined until midpoints agree to tol
        hi = 2.0
        while self._survival(hi)[0] > 1e-15:
            hi *= 2.0
        n = 64
        while True:
            r = np.geomspace(1.0, hi, n)
            s = np.maximum(self._survival(r), 1e-300)
            y = -np.log(s)
            inv = PchipInterpolator(y, np.log(r))
            mid = np.sqrt(r[:-1] * r[1:])
            ym = -np.log(np.maximum(self._survival(mid), 1e-300))
            err = np.max(np.abs(np.exp(inv(ym)) - mid) / mid)
            if err < tol or n > 1 << 15:
                self.table_error = float(err)
                return inv
            n *= 2

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` jump vectors."""
        d, a = self.kernel.d, self.kernel.alpha
        u = rng.random(n)
        radius = np.empty(n)
        from_tail = u * self.rate >= self.small_rate
        # small part: density ~ r^{-1-a} on (delta, 1)
        us = u[~from_tail] * self.rate / self.small_rate
        lo = self.delta ** (-a)
        radius[~from_tail] = (lo - us * (lo - 1.0)) ** (-1.0 / a)
        if np.any(from_tail):
            ut = (u[from_tail] * self.rate - self.small_rate) / self.tail_rate
            y = -np.log1p(-np.minimum(ut, 1 - 1e-16))
            radius[from_tail] = np.exp(self._inv(y))
        direction = rng.standard_normal((n, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        return radius[:, None] * direction


@dataclass
class SimConfig:
    """Simulation settings.

    Parameters
    ----------
    kernel : LevyKernel
    drift : DriftField, optional
        Environment drift; ``None`` means no drift.
    delta : float
        Small-jump threshold in (0, 1].
    dt : float, optional
        Maximal drift step; defaults to min(1e-2, 0.1 L / (8 K sup|b|)) with
        K the mode cutoff of the environment.
    T : float
        Horizon (in the time of the simulated, possibly rescaled, process).
    M : int
        Number of particles.
    seed : int
    times : sequence of float, optional
        Observation times in (0, T]; default 16 equally spaced points.
    n_batches : int
    start : {"uniform", "origin"}
        Initial positions: uniform over one environment period, or all at 0.
    jumps : bool
        Disable both jump parts (for transport-only tests).
    constant_drift : sequence of float, optional
        Replace the environment drift by a constant vector.
    """

    kernel: LevyKernel
    drift: Optional[DriftField] = None
    delta: float = 0.1
    dt: Optional[float] = None
    T: float = 4.0
    M: int = 10000
    seed: int = 0
    times: Optional[Sequence[float]] = None
    n_batches: int = 32
    start: str = "uniform"
    jumps: bool = True
    constant_drift: Optional[Sequence[float]] = None

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.M < 1 or self.n_batches < 1:
            raise ValueError("M and n_batches must be positive")
        if self.M < self.n_batches:
            self.n_batches = self.M
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.times is None:
            self.times = list(np.linspace(self.T / 16, self.T, 16))
        self.times = [float(t) for t in self.times]
        if any(t <= 0 or t > self.T * (1 + 1e-12) for t in self.times) or \
                any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("observation times must be increasing in (0, T]")
        if self.start not in ("uniform", "origin"):
            raise ValueError("start must be 'uniform' or 'origin'")
        if self.dt is None:
            self.dt = 1e-2
            if self.drift is not None and self.drift.stream.n_modes:
                s = self.drift.stream
                sup_b = float(np.sum(np.linalg.norm(self.drift.coefficients, axis=1)))
                if sup_b > 0:
                    self.dt = min(self.dt, 0.1 * s.L / (8 * s.cutoff * sup_b))
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass
class PathStats:
    """Displacement statistics at the observation times."""

    times: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    mean_se: np.ndarray
    cov_se: np.ndarray
    excess_kurtosis: np.ndarray
    batch_mean: np.ndarray
    batch_cov: np.ndarray
    M: int
    jump_count: int
    expected_jumps: float
    epsilon: float = 1.0
    warnings: list = field(default_factory=list)

    @property
    def jump_z(self) -> float:
        return (self.jump_count - self.expected_jumps) / math.sqrt(max(self.expected_jumps, 1e-300))


def _batch_sizes(M, B):
    base, extra = divmod(M, B)
    return [base + (1 if i < extra else 0) for i in range(B)]


def _run_batch(cfg: SimConfig, sampler, chol, rng, n, obs_times, period):
    d = cfg.kernel.d
    if cfg.start == "uniform" and period is not None:
        x = rng.random((n, d)) * period
    else:
        x = np.zeros((n, d))
    x0 = x.copy()
    t = np.zeros(n)
    rate = sampler.rate if (cfg.jumps and sampler is not None) else 0.0
    next_jump = rng.exponential(1.0 / rate, n) if rate > 0 else np.full(n, np.inf)
    n_obs = len(obs_times)
    out = np.empty((n_obs, n, d))
    oi = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    jumps = 0
    const = None if cfg.constant_drift is None else np.asarray(cfg.constant_drift, dtype=float)
    field = cfg.drift if (cfg.drift is not None and cfg.drift.stream.n_modes) else None
    while active.size:
        xa, ta = x[active], t[active]
        to = obs_times[oi[active]] - ta
        tj = next_jump[active] - ta
        h = np.minimum(cfg.dt, np.minimum(to, tj))
        if const is not None:
            xa = xa + h[:, None] * const
        elif field is not None:
            xm = xa + 0.5 * h[:, None] * eval_drift(field, xa)
            xa = xa + h[:, None] * eval_drift(field, xm)
        if chol is not None:
            xa = xa + np.sqrt(h)[:, None] * (rng.standard_normal(xa.shape) @ chol.T)
        jump_now = tj <= h
        obs_now = to <= h
        ta = np.where(jump_now, next_jump[active], ta + h)
        ta = np.where(obs_now, obs_times[oi[active]], ta)
        if np.any(jump_now):
            idx = np.flatnonzero(jump_now)
            xa[idx] += sampler.sample(rng, idx.size)
            jumps += idx.size
            next_jump[active[idx]] += rng.exponential(1.0 / rate, idx.size)
        if np.any(obs_now):
            idx = np.flatnonzero(obs_now)
            out[oi[active[idx]], active[idx]] = xa[idx] - x0[active[idx]]
            oi[active[idx]] += 1
        x[active], t[active] = xa, ta
        active = active[oi[active] < n_obs]
    return out, jumps


def simulate(cfg: SimConfig, epsilon: float = 1.0) -> PathStats:
    """Simulate and collect displacement statistics of eps X_{t / eps^2}.

    With ``epsilon`` = 1 this is the process itself; ``cfg.T``, ``cfg.times``
    are in rescaled time and ``cfg.dt`` is in the time of X.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    k = cfg.kernel
    d = k.d
    sampler = RadialSampler(k, cfg.delta) if cfg.jumps else None
    chol = np.linalg.cholesky(k.small_jump_covariance(cfg.delta)) if cfg.jumps else None
    obs_times = np.asarray(cfg.times) / epsilon ** 2
    horizon = cfg.T / epsilon ** 2
    warn = []
    period = cfg.drift.stream.L if cfg.drift is not None else 1.0
    if cfg.drift is not None and cfg.drift.stream.n_modes:
        sup_b = float(np.sum(np.linalg.norm(cfg.drift.coefficients, axis=1)))
        h_env = cfg.drift.stream.L / (8 * cfg.drift.stream.cutoff)
        if sup_b * cfg.dt > h_env / 2:
            warn.append(f"|b| dt = {sup_b * cfg.dt:.3g} exceeds half the environment scale")
            warnings.warn(warn[-1])
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_batches)
    sizes = _batch_sizes(cfg.M, cfg.n_batches)
    n_obs = obs_times.size
    b_mean = np.zeros((cfg.n_batches, n_obs, d))
    b_cov = np.zeros((cfg.n_batches, n_obs, d, d))
    s1 = np.zeros((n_obs, d))
    s2 = np.zeros((n_obs, d, d))
    s3 = np.zeros((n_obs, d))
    s4 = np.zeros((n_obs, d))
    jumps = 0
    for b, (ss, n) in enumerate(zip(seeds, sizes)):
        rng = np.random.Generator(np.random.Philox(ss))
        disp, nj = _run_batch(cfg, sampler, chol, rng, n, obs_times, period)
        disp = epsilon * disp
        jumps += nj
        b_mean[b] = disp.mean(axis=1)
        cen = disp - b_mean[b][:, None, :]
        b_cov[b] = np.einsum("tni,tnj->tij", cen, cen) / max(n - 1, 1)
        s1 += disp.sum(axis=1)
        s2 += np.einsum("tni,tnj->tij", disp, disp)
        s3 += np.sum(disp ** 3, axis=1)
        s4 += np.sum(disp ** 4, axis=1)
        log.debug("batch %d done (%d jumps)", b, nj)
    M = cfg.M
    mean = s1 / M
    cov = (s2 - M * np.einsum("ti,tj->tij", mean, mean)) / (M - 1)
    B = cfg.n_batches
    mean_se = b_mean.std(axis=0, ddof=1) / math.sqrt(B) if B > 1 else np.full_like(mean, np.nan)
    cov_se = b_cov.std(axis=0, ddof=1) / math.sqrt(B) if B > 1 else np.full_like(cov, np.nan)
    var = np.einsum("tii->ti", cov)
    e2 = np.einsum("tii->ti", s2) / M
    e3, e4 = s3 / M, s4 / M
    c4 = e4 - 4 * mean * e3 + 6 * mean ** 2 * e2 - 3 * mean ** 4
    with np.errstate(invalid="ignore", divide="ignore"):
        kurt = np.where(var > 0, c4 / np.where(var > 0, var, 1.0) ** 2 - 3.0, np.nan)
    rate = sampler.rate if sampler is not None else 0.0
    expected = rate * horizon * M
    return PathStats(np.asarray(cfg.times), mean, cov, mean_se, cov_se, kurt, b_mean, b_cov,
                     M, jumps, expected, epsilon, warn)


def rescaled_paths(cfg: SimConfig, epsilon: float) -> PathStats:
    """Statistics of eps X_{t/eps^2}; see :func:`simulate`."""
    return simulate(cfg, epsilon)


def effective_diffusivity_mc(stats: PathStats, t_window=(1.0, 4.0), min_batches: int = 8):
    """Least-squares slope of Cov(X_t) against t over ``t_window``.

    Returns
    -------
    D : ndarray (d, d)
        Symmetrized slope of the pooled covariance.
    se : ndarray (d, d)
        Standard error from the spread of per-batch slopes.
    """
    t = stats.times
    sel = (t >= t_window[0] - 1e-12) & (t <= t_window[1] + 1e-12)
    if np.count_nonzero(sel) < 2:
        raise ValueError("fewer than two observation times inside the window")
    B = stats.batch_cov.shape[0]
    if B < min_batches:
        raise ValueError(f"need at least {min_batches} batches for standard errors, got {B}")
    ts = t[sel]
    tc = ts - ts.mean()
    denom = float(np.sum(tc * tc))

    def slope(c):
        return np.tensordot(tc, c[sel] - c[sel].mean(axis=0), axes=(0, 0)) / denom

    D = slope(stats.cov)
    D = 0.5 * (D + D.T)
    bs = np.stack([slope(stats.batch_cov[b]) for b in range(B)])
    bs = 0.5 * (bs + np.swapaxes(bs, 1, 2))
    se = bs.std(axis=0, ddof=1) / math.sqrt(B)
    return D, se
