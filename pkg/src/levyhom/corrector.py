"""Periodic corrector for the nonlocal operator with divergence-free drift.

For each coordinate k the corrector phi_k solves, on the torus,

    theta phi - theta Lap phi + psi(D) phi + b^R . grad phi = -b_k,

where psi(D) = -L0 is the Fourier multiplier of the jump kernel and b^R is
the drift of the clipped stream field rho_R(H).  At theta = 0 this is
L0 phi_k - b . grad phi_k = b_k on the mean-zero subspace.

The discretization is a Galerkin-type pseudo-spectral scheme: unknowns and
equations live in the dealiased band |m_i| < N/3 (zero mode excluded), all
other Fourier modes are held at zero by an identity block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .environment import StreamField, drift, sample_drift, sample_stream
from .errors import ConvergenceError
from .grid import GridOperator, TorusGrid, krylov_solve
from .kernels import LevyKernel

__all__ = [
    "clip_stream",
    "CorrectorProblem",
    "CorrectorSolution",
    "EnergyIdentityReport",
    "solve_regularized",
    "continuation_solve",
    "weak_residual",
    "energy_identity_check",
    "sublinearity_scan",
    "dense_reference_solve",
    "DEFAULT_SCHEDULE",
]

DEFAULT_SCHEDULE = (1.0, 1e-1, 1e-2, 1e-3, 0.0)


def clip_stream(s, R: float):
    """Odd C^1 cut-off: s on |s| <= R, zero on |s| >= 2R.

    On R < |s| < 2R the value is sign(s) R g(|s|/R - 1) with the cubic
    g(t) = 3t^3 - 5t^2 + t + 1, which matches value and slope at both ends.
    The slope stays within 16/9; the value peaks at about 1.054 R just past
    |s| = R (a C^1 cut-off cannot stay inside [-R, R] there).
    """
    s = np.asarray(s, dtype=float)
    if not math.isfinite(R):
        return s.copy()
    a = np.abs(s)
    t = a / R - 1.0
    g = ((3.0 * t - 5.0) * t + 1.0) * t + 1.0
    mid = np.sign(s) * R * g
    return np.where(a <= R, s, np.where(a >= 2.0 * R, 0.0, mid))


@dataclass(eq=False)
class CorrectorProblem:
    """Discrete corrector problem on a torus grid.

    Parameters
    ----------
    grid : TorusGrid
        Must span one period of the environment.
    kernel : LevyKernel
    stream : StreamField
    theta : float
        Regularization (mass plus Laplacian), >= 0.
    R : float, optional
        Clipping level for the stream values; default twice the sampled
        sup of |H|, where clipping is inactive.  ``math.inf`` disables it.
    tol : float
        Relative residual tolerance of the linear solves.
    symbol_tol : float
        Absolute quadrature tolerance of the symbol table.
    """

    grid: TorusGrid
    kernel: LevyKernel
    stream: StreamField
    theta: float = 0.0
    R: Optional[float] = None
    tol: float = 1e-11
    maxit: int = 300
    restart: int = 40
    symbol_tol: float = 1e-10

    def __post_init__(self):
        g = self.grid
        if g.d != self.stream.d or g.d != self.kernel.d:
            raise ValueError("grid, kernel and stream dimensions differ")
        if abs(g.L - self.stream.L) > 1e-12 * g.L:
            raise ValueError("the grid must span exactly one period of the environment")
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")
        H = sample_stream(self.stream, g.N, origin=g.origin)
        self.sup_stream = float(np.max(np.abs(H))) if H.size else 0.0
        if self.R is None:
            self.R = 2.0 * self.sup_stream if self.sup_stream > 0 else math.inf
        if not self.R > 0:
            raise ValueError("R must be positive")
        self.H = H
        self.drift_field = drift(self.stream)
        self.b = sample_drift(self.drift_field, g.N, origin=g.origin)
        HR = clip_stream(H, self.R)
        # b^R_j = -sum_l d_l rho_R(H_jl), differentiated spectrally
        HRh = g.transform(HR)
        self.bR = np.stack([
            g.inverse_transform(-sum(1j * g.derivative_multiplier(l) * HRh[j, l] for l in range(g.d)))
            for j in range(g.d)])
        self.psi, self.dpsi, self.psi_err = g.symbol(self.kernel, tol=self.symbol_tol)
        band = g.dealias_mask.copy()
        band.flat[0] = False
        self.band = band
        self.trivial = not np.any(self.b)

    def operator(self, theta: Optional[float] = None) -> GridOperator:
        """Matrix-free operator for the regularization level ``theta``."""
        theta = self.theta if theta is None else theta
        g, band, bR = self.grid, self.band, self.bR
        diag = theta + theta * g.k2 + self.psi
        kd = [g.derivative_multiplier(j) for j in range(g.d)]

        def apply(phi):
            ph = g.transform(phi)
            adv = sum(bR[j] * g.inverse_transform(1j * kd[j] * ph) for j in range(g.d))
            out = np.where(band, diag * ph + g.transform(adv), ph)
            return g.inverse_transform(out)

        safe = np.where(band, diag, 1.0)
        return GridOperator(g, apply, name=f"corrector(theta={theta:g})",
                            preconditioner=np.where(band, 1.0 / safe, 1.0))

    def rhs(self, k: int) -> np.ndarray:
        g = self.grid
        return g.inverse_transform(np.where(self.band, -g.transform(self.b[k]), 0.0))

    def energy(self, phi: np.ndarray) -> float:
        """(1/2) avg_x int (phi(x+z) - phi(x))^2 nu(dz), by Parseval."""
        g = self.grid
        ph = g.transform(phi)
        return g.spectral_inner(ph, ph, weight=self.psi)


@dataclass
class CorrectorSolution:
    """Corrector fields phi (d,) + grid.shape with their diagnostics."""

    problem: CorrectorProblem
    phi: np.ndarray
    theta: float
    residuals: np.ndarray
    energy: np.ndarray
    histories: list
    theta_path: list = field(default_factory=list)

    @property
    def grid(self) -> TorusGrid:
        return self.problem.grid


def solve_regularized(problem: CorrectorProblem, theta: Optional[float] = None,
                      x0: Optional[np.ndarray] = None) -> CorrectorSolution:
    """Solve for all d corrector components at one regularization level.

    Raises
    ------
    ConvergenceError
        When a component fails to reach ``problem.tol``; at theta = 0 the
        message suggests continuation.
    """
    theta = problem.theta if theta is None else float(theta)
    g, d = problem.grid, problem.grid.d
    phi = np.zeros((d,) + g.shape)
    res = np.zeros(d)
    hist = [[0.0] for _ in range(d)]
    if not problem.trivial:
        op = problem.operator(theta)
        for k in range(d):
            rhs = problem.rhs(k)
            try:
                phi[k], hist[k] = krylov_solve(op, rhs, tol=problem.tol, maxit=problem.maxit,
                                               x0=None if x0 is None else x0[k],
                                               restart=problem.restart)
            except ConvergenceError as exc:
                hint = " (try a continuation schedule)" if theta == 0 else ""
                raise ConvergenceError(f"component {k + 1}: {exc}{hint}", best=exc.best,
                                       residuals=exc.residuals, stage=theta) from exc
            res[k] = hist[k][-1]
            phi[k] -= np.mean(phi[k])
    energy = np.array([problem.energy(p) for p in phi])
    return CorrectorSolution(problem, phi, theta, res, energy, hist)


def continuation_solve(problem: CorrectorProblem,
                       schedule: Sequence[float] = DEFAULT_SCHEDULE) -> CorrectorSolution:
    """Solve along a strictly decreasing theta schedule, warm-starting each stage."""
    schedule = [float(t) for t in schedule]
    if not schedule:
        raise ValueError("empty schedule")
    if any(b >= a for a, b in zip(schedule, schedule[1:])) or schedule[-1] < 0:
        raise ValueError("schedule must be strictly decreasing and nonnegative")
    h_norm = float(sum(np.mean(problem.H[j, l] ** 2) + np.mean(problem.b[j] ** 2)
                       for j in range(problem.grid.d) for l in range(problem.grid.d)))
    path = []
    prev = None
    for stage, theta in enumerate(schedule):
        try:
            sol = solve_regularized(problem, theta, x0=None if prev is None else prev.phi)
        except ConvergenceError as exc:
            exc.stage = stage
            raise
        path.append({
            "stage": stage, "theta": theta,
            "iterations": [len(h) - 1 for h in sol.histories],
            "residual": float(np.max(sol.residuals)),
            "energy": sol.energy.tolist(),
            "energy_ratio": float(np.sum(sol.energy) / h_norm) if h_norm > 0 else 0.0,
        })
        prev = sol
    prev.theta_path = path
    return prev


def weak_residual(solution: CorrectorSolution, f: np.ndarray, k: int) -> float:
    """Weak-form defect of component ``k`` against the test field ``f``.

    Returns |sum psi Re(phi^ f^*) - avg(phi b . grad f) + avg(b_k f)| with the
    regularization terms added when theta > 0.  Zero for an exact solution
    and band-limited ``f``.
    """
    pb, g = solution.problem, solution.grid
    phi = solution.phi[k]
    ph, fh = g.transform(phi), g.transform(f)
    val = g.spectral_inner(ph, fh, weight=pb.psi)
    grad_f = g.gradient(f)
    val -= float(np.mean(phi * np.sum(pb.bR * grad_f, axis=0)))
    val += float(np.mean(pb.b[k] * f))
    if solution.theta > 0:
        val += solution.theta * g.spectral_inner(ph, fh, weight=1.0 + g.k2)
    return abs(val)


@dataclass
class EnergyIdentityReport:
    """Energy identity per component and its polarized form per pair."""

    lhs: np.ndarray
    rhs: np.ndarray
    gap: np.ndarray
    polarized_lhs: np.ndarray
    polarized_rhs: np.ndarray
    polarized_gap: np.ndarray

    @property
    def max_gap(self) -> float:
        return float(max(np.max(self.gap), np.max(self.polarized_gap)))


def _relative_gap(a, b):
    scale = np.maximum(np.abs(a), np.abs(b))
    return np.where(scale > 0, np.abs(a - b) / np.where(scale > 0, scale, 1.0), 0.0)


def energy_identity_check(solution: CorrectorSolution) -> EnergyIdentityReport:
    """Compare avg sum_j d_j phi_k H_kj with -(1/2) avg int |delta phi_k|^2 nu.

    The polarized version uses phi_k + phi_l and H_k. + H_l. .
    """
    pb, g = solution.problem, solution.grid
    d = g.d
    grads = np.stack([g.gradient(p) for p in solution.phi])  # (k, j, ...)
    phat = g.transform(solution.phi)
    # cross[k, l] = avg sum_j d_j phi_k H_lj
    cross = np.einsum("kjn,ljn->kl", grads.reshape(d, d, -1), pb.H.reshape(d, d, -1)) / g.size
    dir_form = np.array([[g.spectral_inner(phat[k], phat[l], weight=pb.psi) for l in range(d)]
                         for k in range(d)])
    lhs = np.diag(cross).copy()
    rhs = -np.diag(dir_form).copy()
    plhs = cross + cross.T + np.diag(cross)[:, None] + np.diag(cross)[None, :]
    prhs = -(np.diag(dir_form)[:, None] + np.diag(dir_form)[None, :] + 2.0 * dir_form)
    return EnergyIdentityReport(lhs, rhs, _relative_gap(lhs, rhs), plhs, prhs,
                                _relative_gap(plhs, prhs))


def _ball_transform(kmag: np.ndarray, radius: float, d: int) -> np.ndarray:
    """int_{B(0, radius)} exp(i <xi, x>) dx as a function of |xi|."""
    vol = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * radius ** d
    s = kmag * radius
    out = np.full(s.shape, vol)
    nz = s > 0
    nu = d / 2.0
    # vol * Gamma(nu+1) (2/s)^nu J_nu(s)
    out[nz] = vol * math.gamma(nu + 1.0) * (2.0 / s[nz]) ** nu * special.jv(nu, s[nz])
    return out


def sublinearity_scan(solution: CorrectorSolution, epsilons: Optional[Sequence[float]] = None,
                      r: float = 1.0, p0: Optional[float] = None):
    """Scaled local norms of the rescaled corrector.

    For each component k and scale eps, returns
    eps^2 int_{B(0,r)} |phi_k(x/eps)|^2 dx and eps^p0 int_{B(0,r)} |phi_k(x/eps)|^p0 dx,
    evaluated from the Fourier coefficients of |phi_k|^2 and |phi_k|^p0 on a
    twice-refined grid with the exact Fourier transform of the ball.

    Returns
    -------
    dict with keys ``epsilons``, ``l2`` (d, n), ``lp`` (d, n) and
    ``slope_l2`` / ``slope_lp`` (d,) from least-squares fits in log-log.
    """
    if epsilons is None:
        epsilons = [2.0 ** -j for j in range(2, 8)]
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps <= 0) or np.any(eps > 1):
        raise ValueError("epsilons must lie in (0, 1]")
    g = solution.grid
    d = g.d
    if p0 is None:
        p0 = d * 1.2 / (d - 1.2)
    fine = TorusGrid(d, 2 * g.N, g.L, g.origin)
    l2 = np.zeros((d, eps.size))
    lp = np.zeros((d, eps.size))
    for k in range(d):
        ph = g.transform(solution.phi[k])
        # zero-pad to the refined grid
        big = np.zeros(fine.spectral_shape, dtype=complex)
        sl = tuple(np.r_[0:g.N // 2, fine.N - g.N // 2:fine.N] for _ in range(d - 1))
        big[np.ix_(*sl, np.arange(g.N // 2 + 1))] = ph * (fine.size / g.size)
        fphi = fine.inverse_transform(big)
        for arr, power in ((l2, 2.0), (lp, p0)):
            ch = fine.transform(np.abs(fphi) ** power) / fine.size
            for i, e in enumerate(eps):
                # int_B g(x/eps) dx = sum_m c_m B^(k_m / eps); the real part of the half spectrum doubled
                vals = fine.parseval_weight * (ch * _ball_transform(fine.kmag / e, r, d)).real
                arr[k, i] = e ** power * float(np.sum(vals))
    logs = np.log(eps)

    def fit(row):
        # a slope needs two distinct scales and positive values
        if np.unique(eps).size < 2 or not np.all(row > 0):
            return math.nan
        return np.polyfit(logs, np.log(row), 1)[0]

    slope2 = np.array([fit(row) for row in l2])
    slopep = np.array([fit(row) for row in lp])
    return {"epsilons": eps, "r": r, "p0": p0, "l2": l2, "lp": lp,
            "slope_l2": slope2, "slope_lp": slopep}


def dense_reference_solve(problem: CorrectorProblem, theta: Optional[float] = None) -> np.ndarray:
    """Assemble the corrector system as a dense real-space matrix and solve by LU.

    Uses full complex DFT matrices and a symbol evaluated directly from the
    kernel, independently of the matrix-free path.  Only for small grids.
    """
    theta = problem.theta if theta is None else float(theta)
    g = problem.grid
    d, N = g.d, g.N
    n = N ** d
    if n > 4096:
        raise ValueError("dense reference solve is limited to 4096 unknowns")
    F1 = np.exp(-2j * np.pi * np.outer(np.arange(N), np.arange(N)) / N)
    F = F1
    for _ in range(d - 1):
        F = np.kron(F, F1)
    Finv = np.conj(F).T / n
    m1 = np.fft.fftfreq(N, 1.0 / N)
    grids = np.meshgrid(*([m1] * d), indexing="ij")
    m = np.stack([gg.ravel() for gg in grids], axis=1)
    kvec = 2 * np.pi / g.L * m
    kmag = np.linalg.norm(kvec, axis=1)
    psi, _ = problem.kernel.radial_symbol(kmag, problem.symbol_tol)
    band = np.all(3 * np.abs(m) < N, axis=1) & np.any(m != 0, axis=1)
    nyq = np.abs(m) == N // 2
    D = [Finv @ np.diag(1j * np.where(nyq[:, j], 0.0, kvec[:, j])) @ F for j in range(d)]
    P = Finv @ np.diag(band.astype(float)) @ F
    core = (theta * np.eye(n) - theta * sum(Dj @ Dj for Dj in D)
            + Finv @ np.diag(psi) @ F
            + sum(np.diag(problem.bR[j].ravel()) @ D[j] for j in range(d)))
    A = (P @ core @ P + (np.eye(n) - P)).real
    out = np.zeros((d,) + g.shape)
    for k in range(d):
        rhs = (P @ (-problem.b[k].ravel())).real
        out[k] = np.linalg.solve(A, rhs).reshape(g.shape)
    return out
