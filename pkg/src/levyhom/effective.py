"""Homogenized coefficient matrix from a periodic corrector.

The matrix is the torus average of

    int (z_j + phi_j(x+z) - phi_j(x)) (z_k + phi_k(x+z) - phi_k(x)) nu(dz)

split into three parts:

* the kernel second moment M2,
* cross terms avg_x int z_j (phi_k(x+z) - phi_k(x)) nu(dz) plus its transpose,
* the corrector Dirichlet form avg_x int delta phi_j delta phi_k nu(dz)
  = sum_xi 2 psi(xi) Re(phi_j^ conj(phi_k^)).

For a fixed base point x the cross integrand is
sum_xi i grad psi(xi) phi_k^(xi) e^{i<xi,x>} (using the gradient table of the
symbol); its torus average only sees xi = 0, where grad psi vanishes, so the
cross part is zero up to rounding for a stationary corrector.  It is
evaluated rather than dropped and reported as part of the decomposition.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corrector import CorrectorSolution
from .errors import CertificationError

__all__ = ["EffectiveMatrix", "compute_effective", "limit_generator_symbol", "SYMMETRY_TOL"]

SYMMETRY_TOL = 1e-10


@dataclass
class EffectiveMatrix:
    """Homogenized matrix with its decomposition and certificates."""

    a_bar: np.ndarray
    second_moment: np.ndarray
    cross: np.ndarray
    dirichlet: np.ndarray
    eigenvalues: np.ndarray
    asymmetry: float
    provenance: dict = field(default_factory=dict)
    problems: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return not self.problems

    def certify(self) -> "EffectiveMatrix":
        """Raise :class:`CertificationError` unless symmetric and positive definite."""
        if self.problems:
            raise CertificationError("; ".join(self.problems))
        return self


def compute_effective(solution: CorrectorSolution, strict: bool = False) -> EffectiveMatrix:
    """Homogenized matrix for a converged corrector.

    Parameters
    ----------
    solution : CorrectorSolution
    strict : bool
        Raise on a failed certificate instead of recording it.
    """
    pb, g = solution.problem, solution.grid
    d = g.d
    M2 = pb.kernel.second_moment()
    phat = g.transform(solution.phi)

    # grad psi(xi) = psi'(|xi|) xi/|xi| on the half spectrum
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = [np.where(g.kmag > 0, kk / np.where(g.kmag > 0, g.kmag, 1.0), 0.0) for kk in g.k]
    grad_psi = [pb.dpsi * u for u in unit]
    cross = np.zeros((d, d))
    for j in range(d):
        for k in range(d):
            # field x -> int z_j (phi_k(x+z) - phi_k(x)) nu(dz), then its torus average
            c_field = g.inverse_transform(1j * grad_psi[j] * phat[k])
            cross[j, k] = float(np.mean(c_field))
    cross = cross + cross.T

    dirichlet = np.array([[2.0 * g.spectral_inner(phat[j], phat[k], weight=pb.psi)
                           for k in range(d)] for j in range(d)])
    a_bar = M2 + cross + dirichlet
    asym = float(np.max(np.abs(a_bar - a_bar.T)))
    eig = np.linalg.eigvalsh(0.5 * (a_bar + a_bar.T))
    problems = []
    scale = max(1.0, float(np.max(np.abs(a_bar))))
    if asym > SYMMETRY_TOL * scale:
        problems.append(f"asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:g}")
    if not eig[0] > 0:
        problems.append(f"smallest eigenvalue {eig[0]:.3e} is not positive")
    prov = {
        "grid_N": g.N, "grid_L": g.L, "kernel": pb.kernel.to_dict(),
        "environment": pb.stream.to_dict(), "theta": solution.theta,
        "solver_tol": pb.tol, "symbol_tol": pb.symbol_tol,
        "max_residual": float(np.max(solution.residuals)),
    }
    out = EffectiveMatrix(a_bar, M2, cross, dirichlet, eig, asym, prov, problems)
    if strict:
        out.certify()
    return out


def limit_generator_symbol(a_bar, xi) -> float:
    """(1/2) <a_bar xi, xi>, the Fourier symbol of the limit generator's negative."""
    a_bar = np.asarray(a_bar, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return 0.5 * float(xi @ a_bar @ xi)
