"""Scaled resolvent problems on a large periodic box and their homogenized limit.

For a scale eps the equation

    lam u + psi_eps(D) u - eps^{-1} b(x/eps) . grad u = h,   psi_eps(xi) = eps^{-2} psi(eps xi),

is solved on the box [-L_box/2, L_box/2)^d, which must hold an integer number
of periods of the rescaled environment.  The homogenized solution solves
lam u + (1/2) <a_bar D, D> u = h and is a single spectral division.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .environment import StreamField, drift, sample_drift
from .errors import ConvergenceError
from .grid import GridOperator, TorusGrid, krylov_solve
from .kernels import LevyKernel

__all__ = [
    "GaussianSource",
    "PlaneWaveSource",
    "ResolventProblem",
    "ScaledSolution",
    "ConvergenceRow",
    "ConvergenceTable",
    "solve_scaled",
    "solve_homogenized",
    "ball_error",
    "convergence_sweep",
    "symbol_comparison_error",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianSource:
    """h(x) = amplitude exp(-|x|^2 / (2 width^2))."""

    amplitude: float = 1.0
    width: float = 1.0

    def sample(self, grid: TorusGrid) -> np.ndarray:
        x = grid.points()
        return self.amplitude * np.exp(-np.sum(x * x, axis=0) / (2.0 * self.width ** 2))

    def bandwidth(self, rel: float = 1e-13) -> float:
        """|xi| beyond which the Fourier transform is below ``rel`` of its peak."""
        return math.sqrt(2.0 * math.log(1.0 / rel)) / self.width


@dataclass(frozen=True)
class PlaneWaveSource:
    """h(x) = amplitude cos(<wavevector, x>); the wavevector must fit the box."""

    wavevector: tuple
    amplitude: float = 1.0

    def sample(self, grid: TorusGrid) -> np.ndarray:
        x = grid.points()
        k = np.asarray(self.wavevector, dtype=float)
        return self.amplitude * np.cos(np.tensordot(k, x, axes=1))

    def bandwidth(self, rel: float = 1e-13) -> float:
        return float(np.linalg.norm(self.wavevector))


@dataclass(eq=False)
class ResolventProblem:
    """Scaled resolvent equation on a periodic box.

    Parameters
    ----------
    kernel : LevyKernel
    stream : StreamField
        Environment; a field with no modes gives the drift-free problem.
    epsilon : float
        Scale in (0, 1].
    lam : float
        Resolvent parameter, > 0.
    source : GaussianSource or PlaneWaveSource
    box_length : float
        Box period; must be a multiple of ``epsilon * stream.L``.
    tol : float
        Relative residual tolerance.
    """

    kernel: LevyKernel
    stream: StreamField
    epsilon: float
    lam: float = 1.0
    source: object = field(default_factory=GaussianSource)
    box_length: float = 16 * math.pi
    tol: float = 1e-10
    maxit: int = 300
    restart: int = 40
    symbol_tol: float = 1e-10

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        ratio = self.box_length / (self.epsilon * self.stream.L)
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ValueError("box length must be a multiple of epsilon times the environment period")
        self.periods = int(round(ratio))

    @property
    def d(self) -> int:
        return self.stream.d

    def min_grid(self) -> int:
        """Smallest power-of-two N whose dealiased band holds the drift and the source."""
        env_index = self.stream.cutoff * self.periods
        src_index = self.source.bandwidth() * self.box_length / (2.0 * math.pi)
        need = max(env_index, src_index)
        N = 16
        while 3 * need >= N:
            N *= 2
        return N

    def grid(self, N: int) -> TorusGrid:
        return TorusGrid(self.d, N, self.box_length, origin=-0.5 * self.box_length)


@dataclass
class ScaledSolution:
    """Solution of the scaled problem on one grid with its diagnostics."""

    grid: TorusGrid
    u: np.ndarray
    residual: float
    iterations: int
    sup_norm: float
    l2_norm: float
    h_sup: float
    h_l2: float
    energy: float
    drift_pairing: float
    wrap_ratio: float

    def max_principle_ok(self, lam: float, tol: float) -> bool:
        return self.sup_norm <= self.h_sup / lam + 10 * tol

    def l2_bound_ok(self, lam: float, tol: float) -> bool:
        return self.l2_norm <= self.h_l2 / lam + 10 * tol


def _norms(grid: TorusGrid, f: np.ndarray):
    cell = grid.h ** grid.d
    return float(np.max(np.abs(f))), math.sqrt(float(np.sum(f * f)) * cell)


def solve_scaled(problem: ResolventProblem, N: Optional[int] = None,
                 x0: Optional[np.ndarray] = None) -> ScaledSolution:
    """Solve the scaled resolvent equation on an N^d box grid.

    Raises
    ------
    ConvergenceError
        If the Krylov solve misses the tolerance.
    """
    N = problem.min_grid() if N is None else N
    g = problem.grid(N)
    eps, lam = problem.epsilon, problem.lam
    psi_eps = g.symbol(problem.kernel, scale=eps, tol=problem.symbol_tol)[0]
    band = g.dealias_mask
    h = problem.source.sample(g)
    hh = g.transform(h)
    rhs = g.inverse_transform(np.where(band, hh, 0.0))
    diag = lam + psi_eps
    kd = [g.derivative_multiplier(j) for j in range(g.d)]
    has_drift = problem.stream.n_modes > 0
    if has_drift:
        b = sample_drift(drift(problem.stream), N, box_length=problem.box_length, scale=eps,
                         origin=g.origin) / eps

    if has_drift:
        def apply(u):
            uh = g.transform(u)
            adv = sum(b[j] * g.inverse_transform(1j * kd[j] * uh) for j in range(g.d))
            return g.inverse_transform(np.where(band, diag * uh - g.transform(adv), uh))

        op = GridOperator(g, apply, name=f"resolvent(eps={eps:g}, N={N})",
                          preconditioner=np.where(band, 1.0 / diag, 1.0))
        u, hist = krylov_solve(op, rhs, tol=problem.tol, maxit=problem.maxit, x0=x0,
                               restart=problem.restart)
        residual, iterations = hist[-1], len(hist) - 1
        grad = [g.inverse_transform(1j * kd[j] * g.transform(u)) for j in range(g.d)]
        pairing = float(np.mean(u * sum(b[j] * grad[j] for j in range(g.d))))
        scale = float(np.mean(u * u)) * max(float(np.max(np.abs(b))), 1e-300) * float(np.max(g.kmag))
        pairing = abs(pairing) / scale if scale > 0 else 0.0
    else:
        u = g.inverse_transform(np.where(band, hh / diag, 0.0))
        residual, iterations, pairing = 0.0, 0, 0.0

    cell = g.h ** g.d
    uh = g.transform(u)
    energy = g.spectral_inner(uh, uh, weight=psi_eps) * g.volume
    x = g.points()
    r = np.sqrt(np.sum(x * x, axis=0))
    total = float(np.sum(np.abs(u)))
    wrap = float(np.sum(np.abs(u)[r > problem.box_length / 3.0])) / total if total > 0 else 0.0
    us, ul2 = _norms(g, u)
    hs, hl2 = _norms(g, h)
    return ScaledSolution(g, u, residual, iterations, us, ul2, hs, hl2, energy, pairing, wrap)


def solve_homogenized(lam: float, h: np.ndarray, a_bar, grid: TorusGrid) -> np.ndarray:
    """Solve lam u + (1/2) <a_bar D, D> u = h spectrally on ``grid``."""
    a_bar = np.asarray(a_bar, dtype=float)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if np.min(np.linalg.eigvalsh(0.5 * (a_bar + a_bar.T))) <= 0:
        raise ValueError("a_bar must be positive definite")
    q = 0.5 * sum(a_bar[i, j] * grid.k[i] * grid.k[j]
                  for i in range(grid.d) for j in range(grid.d))
    return grid.inverse_transform(grid.transform(h) / (lam + q))


def ball_error(grid: TorusGrid, u: np.ndarray, v: np.ndarray, R: float, p: float = 2.0) -> float:
    """int_{B(0,R)} |u - v|^p dx by the grid rectangle rule."""
    x = grid.points()
    inside = np.sum(x * x, axis=0) <= R * R
    return float(np.sum(np.abs(u - v)[inside] ** p)) * grid.h ** grid.d


def symbol_comparison_error(problem: ResolventProblem, N: int, second_moment: float,
                            R: float, p: float = 2.0) -> float:
    """Drift-free error predicted mode by mode from the two symbols.

    u_eps - u_bar has coefficients h^(xi) (1/(lam + eps^{-2} psi(eps xi)) - 1/(lam + m |xi|^2 / 2)),
    with psi evaluated directly from the kernel on the full spectrum.
    """
    g = problem.grid(N)
    h = problem.source.sample(g)
    hh = np.fft.fftn(h)
    m1 = np.fft.fftfreq(N, 1.0 / N)
    kk = np.meshgrid(*([2.0 * math.pi / problem.box_length * m1] * g.d), indexing="ij")
    mag = np.sqrt(sum(k * k for k in kk))
    eps = problem.epsilon
    psi, _ = problem.kernel.radial_symbol(eps * mag, problem.symbol_tol)
    psi = psi / eps ** 2
    band = np.ones(mag.shape, dtype=bool)
    for k in kk:
        band &= 3 * np.abs(np.rint(k * problem.box_length / (2 * math.pi))) < N
    diff = hh * (1.0 / (problem.lam + psi) - 1.0 / (problem.lam + 0.5 * second_moment * mag ** 2))
    w = np.fft.ifftn(np.where(band, diff, 0.0)).real
    return ball_error(g, w, np.zeros_like(w), R, p)


@dataclass
class ConvergenceRow:
    epsilon: float
    p: float
    R: float
    error: float
    residual: float
    N: int
    discretization: float
    resolved: bool
    max_principle: bool
    l2_bound: bool
    sup_norm: float
    l2_norm: float
    energy: float
    drift_pairing: float
    wrap_ratio: float


@dataclass
class ConvergenceTable:
    """Rows sorted by decreasing epsilon."""

    rows: list
    lam: float
    warnings: list = field(default_factory=list)

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    @property
    def strictly_decreasing(self) -> bool:
        e = self.errors
        return bool(np.all(np.diff(e) < 0))

    @property
    def final_ratio(self) -> float:
        e = self.errors
        return float(e[-1] / e[0]) if e[0] > 0 else math.nan

    def columns(self):
        return ["epsilon", "p", "R", "error", "residual", "N", "discretization", "resolved",
                "max_principle", "l2_bound", "sup_norm", "l2_norm", "energy", "drift_pairing",
                "wrap_ratio"]

    def as_rows(self):
        return [[getattr(r, c) for c in self.columns()] for r in self.rows]


def convergence_sweep(kernel: LevyKernel, stream: StreamField, a_bar,
                      epsilons: Sequence[float] = (0.5, 0.25, 0.125, 0.0625),
                      p: float = 2.0, R: float = 4.0, lam: float = 1.0,
                      source=None, box_length: float = 16 * math.pi, tol: float = 1e-10,
                      max_N: int = 1024, safety: float = 0.1) -> ConvergenceTable:
    """Errors int_{B(0,R)} |u_eps - u_bar|^p dx along decreasing eps.

    For each eps the grid is doubled from the smallest admissible size until
    the L^p(B) distance between consecutive grids is below ``safety`` times
    the L^p(B) homogenization error; the finer grid is kept.  Rows that hit
    ``max_N`` first are marked unresolved.
    """
    if source is None:
        source = GaussianSource()
    if not p >= 1:
        raise ValueError("p must be >= 1")
    warnings = []
    d = stream.d
    if not d > 4 * (kernel.alpha - 1):
        warnings.append(f"d={d} does not exceed 4(alpha-1)")
    if R > box_length / 4:
        raise ValueError("R must not exceed a quarter of the box")
    rows = []
    for eps in sorted(epsilons, reverse=True):
        pb = ResolventProblem(kernel, stream, eps, lam, source, box_length, tol)
        N = pb.min_grid()
        if N > max_N:
            raise ValueError(f"eps={eps} needs N >= {N} > max_N={max_N}")
        coarse = solve_scaled(pb, N)
        while True:
            fine_N = 2 * N
            if fine_N > max_N:
                sol, disc, resolved = coarse, math.nan, False
                warnings.append(f"eps={eps}: refinement stopped at N={N}")
                break
            fine = solve_scaled(pb, fine_N)
            coarse_up = _refine(coarse.grid, coarse.u, fine.grid)
            ubar = solve_homogenized(lam, source.sample(fine.grid), a_bar, fine.grid)
            err = ball_error(fine.grid, fine.u, ubar, R, p)
            disc = ball_error(fine.grid, fine.u, coarse_up, R, p)
            if disc ** (1 / p) <= safety * err ** (1 / p):
                sol, resolved = fine, True
                break
            coarse, N = fine, fine_N
        ubar = solve_homogenized(lam, source.sample(sol.grid), a_bar, sol.grid)
        err = ball_error(sol.grid, sol.u, ubar, R, p)
        rows.append(ConvergenceRow(
            eps, p, R, err, sol.residual, sol.grid.N, disc, resolved,
            sol.max_principle_ok(lam, tol), sol.l2_bound_ok(lam, tol), sol.sup_norm,
            sol.l2_norm, sol.energy, sol.drift_pairing, sol.wrap_ratio))
        log.info("eps=%g N=%d error=%.4e disc=%.2e", eps, sol.grid.N, err, disc)
        if sol.wrap_ratio > 1e-3:
            warnings.append(f"eps={eps}: wrap-around mass ratio {sol.wrap_ratio:.2e}")
    return ConvergenceTable(rows, lam, warnings)


def _refine(coarse: TorusGrid, u: np.ndarray, fine: TorusGrid) -> np.ndarray:
    """Spectral interpolation of a coarse-grid field onto a grid with twice the points."""
    d, Nc, Nf = coarse.d, coarse.N, fine.N
    uh = coarse.transform(u)
    big = np.zeros(fine.spectral_shape, dtype=complex)
    idx = tuple(np.r_[0:Nc // 2, Nf - Nc // 2:Nf] for _ in range(d - 1))
    big[np.ix_(*idx, np.arange(Nc // 2 + 1))] = uh * (fine.size / coarse.size)
    return fine.inverse_transform(big)
