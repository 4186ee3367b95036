"""Uniform periodic grids, spectral operators and a Krylov solver.

Fields are plain real ``ndarray`` objects of shape ``grid.shape``; spectral
coefficients are the ``rfftn`` half spectrum of shape ``grid.spectral_shape``
with the unnormalized numpy convention (the zero mode equals N^d times the
mean).
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ConvergenceError

__all__ = ["TorusGrid", "GridOperator", "krylov_solve", "write_field", "read_field", "field_bytes",
           "write_field_csv"]

_MAGIC = b"LVHF"


class TorusGrid:
    """Uniform grid with N points per axis on the torus [origin, origin + L)^d.

    Parameters
    ----------
    d : int
    N : int
        Points per axis; an even number >= 4.
    L : float
        Period.
    origin : float
        Coordinate of the first grid point along every axis.
    workers : int, optional
        Threads for the FFT backend.
    """

    def __init__(self, d: int, N: int, L: float = 2 * math.pi, origin: float = 0.0,
                 workers: Optional[int] = None):
        if N < 4 or N % 2:
            raise ValueError(f"N must be an even integer >= 4, got {N}")
        if d < 1:
            raise ValueError("dimension must be positive")
        self.d, self.N, self.L, self.origin = int(d), int(N), float(L), float(origin)
        self.workers = workers
        self.h = self.L / self.N
        self.shape = (self.N,) * self.d
        self.spectral_shape = (self.N,) * (self.d - 1) + (self.N // 2 + 1,)
        full = np.fft.fftfreq(self.N, 1.0 / self.N).astype(np.int64)
        half = np.arange(self.N // 2 + 1, dtype=np.int64)
        axes = [full] * (self.d - 1) + [half]
        self.mode_index = np.meshgrid(*axes, indexing="ij", sparse=True)
        scale = 2.0 * math.pi / self.L
        self.k = [scale * m for m in self.mode_index]
        self.k2 = sum(kk ** 2 for kk in self.k)
        self.kmag = np.sqrt(self.k2)
        # Parseval weights: modes with last index 0 or N/2 are their own conjugate pair
        w = np.full(self.N // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self.parseval_weight = np.broadcast_to(w, self.spectral_shape)
        band = np.ones(self.spectral_shape, dtype=bool)
        for m in self.mode_index:
            band = band & (3 * np.abs(m) < self.N)
        self.dealias_mask = band
        self._symbols = {}

    def __repr__(self):
        return f"TorusGrid(d={self.d}, N={self.N}, L={self.L!r}, origin={self.origin!r})"

    @property
    def size(self) -> int:
        return self.N ** self.d

    @property
    def volume(self) -> float:
        return self.L ** self.d

    def points(self) -> np.ndarray:
        """Coordinates of shape (d,) + shape."""
        x = self.origin + self.h * np.arange(self.N)
        return np.stack(np.meshgrid(*([x] * self.d), indexing="ij"))

    def wavevectors(self) -> np.ndarray:
        """Half-spectrum wavevectors as an (n, d) array in C order."""
        return np.stack([np.broadcast_to(kk, self.spectral_shape).ravel() for kk in self.k], axis=1)

    # ------------------------------------------------------------ transforms

    def _check(self, f):
        if f.shape[-self.d:] != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")

    def transform(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        self._check(f)
        axes = tuple(range(f.ndim - self.d, f.ndim))
        return sfft.rfftn(f, axes=axes, workers=self.workers)

    def inverse_transform(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c)
        if c.shape[-self.d:] != self.spectral_shape:
            raise ValueError(f"coefficient shape {c.shape} does not match {self.spectral_shape}")
        axes = tuple(range(c.ndim - self.d, c.ndim))
        return sfft.irfftn(c, s=self.shape, axes=axes, workers=self.workers)

    def mean(self, f: np.ndarray) -> float:
        return float(np.mean(f))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Torus average of f g."""
        return float(np.mean(f * g))

    def spectral_inner(self, fh: np.ndarray, gh: np.ndarray, weight=None) -> float:
        """Torus average of f g from half-spectrum coefficients (optionally weighted)."""
        prod = self.parseval_weight * (fh * np.conj(gh)).real
        if weight is not None:
            prod = prod * weight
        return float(np.sum(prod)) / self.size ** 2

    # ------------------------------------------------------------ operators

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Spectral gradient; the Nyquist modes are differentiated to zero."""
        fh = self.transform(f)
        return np.stack([self.inverse_transform(1j * self._kd(j) * fh) for j in range(self.d)])

    def _kd(self, j):
        # derivative multiplier with the unpaired Nyquist mode removed
        k = self.k[j].copy()
        m = self.mode_index[j]
        return np.where(np.abs(m) == self.N // 2, 0.0, k)

    def derivative_multiplier(self, j: int) -> np.ndarray:
        return self._kd(j)

    def divergence(self, v: np.ndarray) -> np.ndarray:
        vh = self.transform(v)
        return self.inverse_transform(sum(1j * self._kd(j) * vh[j] for j in range(self.d)))

    def dealias(self, f: np.ndarray) -> np.ndarray:
        """Remove modes outside the band |m_i| < N/3."""
        return self.inverse_transform(self.transform(f) * self.dealias_mask)

    def symbol(self, kernel, scale: float = 1.0, tol: float = 1e-10):
        """psi on the half spectrum, rescaled as scale^{-2} psi(scale xi).

        Returns (psi, dpsi_radial, err) arrays of ``spectral_shape``; the
        radial derivative is of the rescaled symbol.  Cached per grid.
        """
        key = (kernel, float(scale), float(tol))
        if key not in self._symbols:
            rho = scale * self.kmag
            psi, err = kernel.radial_symbol(rho, tol)
            dpsi, _ = kernel.radial_symbol(rho, tol, derivative=True)
            self._symbols[key] = (psi / scale ** 2, dpsi / scale, err / scale ** 2)
        return self._symbols[key]

    def apply_nonlocal(self, psi: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Apply the Fourier multiplier ``psi`` (half spectrum) to ``f``.

        With psi the kernel symbol this is -L0 f, a nonnegative operator.
        """
        psi = np.asarray(psi)
        if psi.shape != self.spectral_shape:
            raise ValueError("symbol array does not cover the grid wavevectors")
        return self.inverse_transform(psi * self.transform(f))

    def advect(self, b: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Dealiased b . grad f for a drift sampled on the grid."""
        fh = self.transform(f)
        prod = sum(b[j] * self.inverse_transform(1j * self._kd(j) * fh) for j in range(self.d))
        return self.inverse_transform(self.transform(prod) * self.dealias_mask)


@dataclass
class GridOperator:
    """Linear map on real grid fields.

    Parameters
    ----------
    grid : TorusGrid
    apply : callable
        Field -> field.
    name : str
    preconditioner : ndarray, optional
        Half-spectrum multiplier approximating the inverse operator.
    """

    grid: TorusGrid
    apply: Callable[[np.ndarray], np.ndarray]
    name: str = "operator"
    preconditioner: Optional[np.ndarray] = None

    def __call__(self, f):
        return self.apply(f)

    def as_linear_operator(self) -> LinearOperator:
        n, shape = self.grid.size, self.grid.shape
        return LinearOperator((n, n), matvec=lambda v: self.apply(v.reshape(shape)).ravel(),
                              dtype=float)

    def preconditioner_operator(self) -> Optional[LinearOperator]:
        if self.preconditioner is None:
            return None
        g, P = self.grid, self.preconditioner
        n = g.size
        return LinearOperator(
            (n, n), dtype=float,
            matvec=lambda v: g.inverse_transform(P * g.transform(v.reshape(g.shape))).ravel())


def krylov_solve(op: GridOperator, rhs: np.ndarray, tol: float = 1e-10, maxit: int = 400,
                 x0: Optional[np.ndarray] = None, restart: int = 40, rounds: int = 4):
    """Solve ``op(x) = rhs`` with restarted, preconditioned GMRES.

    Convergence is judged on the true relative residual
    ||rhs - op(x)|| / ||rhs|| recomputed after each GMRES call.

    Returns
    -------
    x : ndarray
    history : list of float
        Residual norms reported by the iteration, followed by the true
        relative residual of the returned solution.

    Raises
    ------
    ConvergenceError
        With the best iterate and history attached.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != op.grid.shape:
        raise ValueError("right-hand side does not match the grid")
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return np.zeros_like(rhs), [0.0]
    A = op.as_linear_operator()
    M = op.preconditioner_operator()
    history = []
    x = None if x0 is None else np.asarray(x0, dtype=float).ravel()
    b = rhs.ravel()
    best, best_res = x, math.inf
    target = tol
    for _ in range(rounds):
        x, info = gmres(A, b, x0=x, rtol=target, atol=0.0, restart=restart, maxiter=maxit,
                        M=M, callback=history.append, callback_type="pr_norm")
        res = float(np.linalg.norm(b - A.matvec(x))) / bnorm
        if res < best_res:
            best, best_res = x, res
        if res <= tol:
            history.append(res)
            return x.reshape(rhs.shape), history
        # the preconditioned residual undershoots the true one: tighten and restart
        target = max(target * tol / res * 0.5, 1e-15)
    history.append(best_res)
    raise ConvergenceError(
        f"{op.name}: relative residual {best_res:.3e} above tolerance {tol:.1e}",
        best=None if best is None else best.reshape(rhs.shape), residuals=history)


# ---------------------------------------------------------------- field files


def field_bytes(grid: TorusGrid, values: np.ndarray) -> bytes:
    """Flat binary: magic ``LVHF``, uint32 d, uint32 N, float64 L, float64 origin,
    then N^d little-endian float64 values in C order."""
    values = np.asarray(values, dtype="<f8")
    if values.shape != grid.shape:
        raise ValueError("field does not match grid")
    return _MAGIC + struct.pack("<IIdd", grid.d, grid.N, grid.L, grid.origin) + values.tobytes(order="C")


def write_field(path, grid: TorusGrid, values: np.ndarray) -> None:
    """Write :func:`field_bytes` to ``path``."""
    with open(path, "wb") as fh:
        fh.write(field_bytes(grid, values))


def read_field(path):
    """Return (TorusGrid, values) from a file written by :func:`write_field`."""
    with open(path, "rb") as fh:
        head = fh.read(4 + struct.calcsize("<IIdd"))
        if head[:4] != _MAGIC:
            raise ValueError(f"{path}: not a field file")
        d, N, L, origin = struct.unpack("<IIdd", head[4:])
        data = np.frombuffer(fh.read(), dtype="<f8")
    grid = TorusGrid(d, N, L, origin)
    if data.size != grid.size:
        raise ValueError(f"{path}: truncated field data")
    return grid, data.reshape(grid.shape).astype(float)


def write_field_csv(path, grid: TorusGrid, values: np.ndarray, max_points: int = 1 << 16) -> None:
    """CSV with columns x1..xd, value; refuses grids above ``max_points``."""
    if grid.size > max_points:
        raise ValueError("grid too large for CSV export")
    pts = grid.points().reshape(grid.d, -1).T
    cols = ",".join([f"x{i + 1}" for i in range(grid.d)] + ["value"])
    data = np.column_stack([pts, np.asarray(values).ravel()])
    np.savetxt(path, data, delimiter=",", header=cols, comments="", fmt="%.17g")
