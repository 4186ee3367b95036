"""Independent reference computations used by the tests.

Nothing here imports the package: symbols come from plain adaptive
quadrature of the radial integral, corrector references from closed forms.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special


def radial_kernel(alpha, tail=("truncated",), d=2):
    """Radial profile r -> nu(r) for the three tail families."""
    kind = tail[0]

    def nu(r):
        if r <= 1.0:
            return r ** (-d - alpha)
        if kind == "truncated":
            return 0.0
        if kind == "powerlog":
            b1, b2 = tail[1], tail[2] if len(tail) > 2 else 0.0
            return r ** (-d - b1) / math.log(2.0 + r) ** b2
        if kind == "exponential":
            a, beta = tail[1], tail[2]
            return math.exp(-a * r ** beta)
        raise ValueError(kind)

    return nu


def _angular(d):
    # average of 1 - cos(s w_1) over the unit sphere
    # short Taylor series below 1e-2 avoids cancellation in 1 - J0 and 1 - sinc
    if d == 2:
        return lambda s: (s * s / 4 - s ** 4 / 64 + s ** 6 / 2304 if s < 1e-2
                          else 1.0 - special.j0(s))
    if d == 3:
        return lambda s: (s * s / 6 - s ** 4 / 120 + s ** 6 / 5040 if s < 1e-2
                          else 1.0 - math.sin(s) / s)
    raise ValueError("oracle covers d = 2, 3")


def symbol_quad(rho, alpha, tail=("truncated",), d=2, rmax=400.0):
    """psi at |xi| = rho by direct quadrature in polar coordinates."""
    nu = radial_kernel(alpha, tail, d)
    ang = _angular(d)
    S = 2 * math.pi if d == 2 else 4 * math.pi

    def panels(a, b):
        # panels of a quarter oscillation period keep quad away from aliasing
        n = max(1, int(math.ceil((b - a) * rho / (0.5 * math.pi))))
        edges = np.linspace(a, b, n + 1)
        return sum(integrate.quad(lambda r: ang(rho * r) * r ** (d - 1) * nu(r), lo, hi,
                                  epsabs=1e-16, epsrel=1e-13)[0]
                   for lo, hi in zip(edges[:-1], edges[1:]))

    # singular part in log r up to the first oscillation, then linear panels to r = 1
    split = min(1.0, 1.0 / rho)
    total, _ = integrate.quad(lambda u: ang(rho * math.exp(u)) * math.exp(u * d) * nu(math.exp(u)),
                              -60.0, math.log(split), limit=400, epsabs=1e-16, epsrel=1e-13)
    if split < 1.0:
        total += panels(split, 1.0)
    if tail[0] != "truncated":
        total += panels(1.0, rmax)
        # beyond rmax the oscillating part is below the tolerance; keep the mass
        far, _ = integrate.quad(lambda r: r ** (d - 1) * nu(r), rmax, math.inf, epsabs=1e-16)
        total += far
    return S * total


def second_moment_quad(alpha, tail=("truncated",), d=2):
    nu = radial_kernel(alpha, tail, d)
    S = 2 * math.pi if d == 2 else 4 * math.pi
    a, _ = integrate.quad(lambda r: r ** (d + 1) * nu(r), 0.0, 1.0, epsrel=1e-13)
    b, _ = integrate.quad(lambda r: r ** (d + 1) * nu(r), 1.0, math.inf, epsrel=1e-13, limit=400)
    return S / d * (a + b)


def jump_rate_quad(alpha, delta, tail=("truncated",), d=2):
    nu = radial_kernel(alpha, tail, d)
    S = 2 * math.pi if d == 2 else 4 * math.pi
    a, _ = integrate.quad(lambda r: r ** (d - 1) * nu(r), delta, 1.0, epsrel=1e-13)
    b, _ = integrate.quad(lambda r: r ** (d - 1) * nu(r), 1.0, math.inf, epsrel=1e-13, limit=400)
    return S * (a + b)


def shear_corrector(x1, amplitude, psi_k, k=1.0):
    """Second corrector component for H_12 = A cos(k x_1): A k sin(k x_1) / psi(k) up to sign.

    The first component vanishes identically.
    """
    return amplitude * k * np.sin(k * x1) / psi_k


def symbol_mpmath(rho, alpha, beta1=None, dps=25):
    """psi in d = 2 for the truncated kernel (or a pure power tail |z|^{-2-beta1}).

    Uses the closed-form full-line integral of (1 - J0(s)) s^{-1-alpha} minus an
    oscillatory tail integral, so it is accurate for large |xi| as well.
    """
    import mpmath as mp

    with mp.workdps(dps):
        a, rho = mp.mpf(alpha), mp.mpf(rho)
        if rho <= 1:
            # termwise integration of the power series of 1 - J0 over the unit ball
            inner = mp.nsum(lambda n: (-1) ** (n + 1) * (rho / 2) ** (2 * n)
                            / (mp.factorial(n) ** 2 * (2 * n - a)), [1, mp.inf])
        else:
            full = mp.gamma(1 - a / 2) / (a * 2 ** a * mp.gamma(1 + a / 2))
            tail_j = mp.quadosc(lambda s: mp.besselj(0, s) * s ** (-1 - a), [rho, mp.inf], omega=1)
            inner = rho ** a * (full - (rho ** (-a) / a - tail_j))
        outer = 0
        if beta1 is not None:
            b = mp.mpf(beta1)
            outer = 1 / b - mp.quadosc(lambda r: mp.besselj(0, rho * r) * r ** (-1 - b),
                                       [1, mp.inf], omega=rho)
        return float(2 * mp.pi * (inner + outer))
