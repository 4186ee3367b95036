"""Symmetric Lévy jump densities, their symbols and admissibility checks.

A kernel is the radial density

    nu(z) = |z|^{-d-alpha}            for 0 < |z| <= 1
    nu(z) = tail(|z|)                 for |z| > 1

with one of three tail families (power-log, stretched exponential, none).
The symbol psi(xi) = int (1 - cos<xi,z>) nu(z) dz is evaluated by a radial
reduction: the angular average of cos over the unit sphere is a Bessel-type
function of |xi| r, so only one-dimensional radial integrals remain.  The
small-jump part is scale invariant and is obtained from a single cumulative
integral shared by all requested |xi|; the tail part is integrated per |xi|
with an explicit truncation bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError

__all__ = [
    "PowerLog",
    "Exponential",
    "Truncated",
    "LevyKernel",
    "SymbolTable",
    "TailConditionReport",
    "check_tail_condition",
    "example_candidate",
    "sphere_area",
    "ball_symbol",
    "one_minus_cos_average",
    "sin_average",
]

_GL_LOW = np.polynomial.legendre.leggauss(12)
_GL_HIGH = np.polynomial.legendre.leggauss(24)
_GL_TAIL = (np.polynomial.legendre.leggauss(20), np.polynomial.legendre.leggauss(32))
_EPS = np.finfo(float).eps


_MAX_TAIL_PANELS = 200_000


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@lru_cache(maxsize=None)
def _cos_series(d: int, nterms: int = 14) -> np.ndarray:
    # signed coefficients a_n of 1 - Lambda_d(s) = sum_n a_n s^{2n}
    n = np.arange(1, nterms + 1)
    log_c = (special.gammaln(d / 2.0) - n * math.log(4.0)
             - special.gammaln(n + 1.0) - special.gammaln(n + d / 2.0))
    return np.exp(log_c) * (-1.0) ** (n + 1)


def one_minus_cos_average(s, d: int) -> np.ndarray:
    """Return 1 - Lambda_d(s), Lambda_d(s) = mean of cos(s u_1) over the sphere.

    A power series is used for |s| < 0.5 to avoid cancellation.
    """
    s = np.abs(np.asarray(s, dtype=float))
    out = np.empty_like(s)
    small = s < 0.5
    if np.any(small):
        a = _cos_series(d)
        s2 = s[small] ** 2
        out[small] = s2 * np.polynomial.polynomial.polyval(s2, a)
    big = ~small
    if np.any(big):
        sb = s[big]
        if d == 2:
            out[big] = 1.0 - special.j0(sb)
        elif d == 3:
            out[big] = 1.0 - np.sin(sb) / sb
        else:
            nu = d / 2.0 - 1.0
            out[big] = 1.0 - math.gamma(d / 2.0) * (2.0 / sb) ** nu * special.jv(nu, sb)
    return out


def sin_average(s, d: int) -> np.ndarray:
    """Return -Lambda_d'(s), the mean of u_1 sin(s u_1) over the unit sphere."""
    s = np.asarray(s, dtype=float)
    sign = np.sign(s)
    s = np.abs(s)
    out = np.empty_like(s)
    small = s < 0.5
    if np.any(small):
        a = _cos_series(d)
        n = np.arange(1, a.size + 1)
        ss = s[small]
        out[small] = ss * np.polynomial.polynomial.polyval(ss ** 2, 2 * n * a)
    big = ~small
    if np.any(big):
        sb = s[big]
        if d == 2:
            out[big] = special.j1(sb)
        elif d == 3:
            out[big] = (np.sin(sb) - sb * np.cos(sb)) / sb ** 2
        else:
            nu = d / 2.0 - 1.0
            out[big] = math.gamma(d / 2.0) * 2.0 ** nu * sb ** (-nu) * special.jv(nu + 1.0, sb)
    return sign * out


@lru_cache(maxsize=None)
def _oscillation_constant(d: int) -> float:
    # 2 * sup_x |int_0^x Lambda_d|; bounds int_a^b Lambda_d(rho r) g(r) dr for monotone g
    x = np.linspace(0.0, 80.0, 160001)
    lam = 1.0 - one_minus_cos_average(x, d)
    F = integrate.cumulative_trapezoid(lam, x, initial=0.0)
    return 2.0 * float(np.max(np.abs(F))) * 1.001


# --------------------------------------------------------------------------
# tail families


@dataclass(frozen=True)
class PowerLog:
    """Tail density 1 / (|z|^{d+beta1} log^{beta2}(2+|z|))."""

    beta1: float
    beta2: float = 0.0
    kind = "powerlog"

    def validate(self):
        if not self.beta1 > 2.0:
            raise ValueError(f"PowerLog requires beta1 > 2, got {self.beta1}")

    def params(self) -> dict:
        return {"beta1": self.beta1, "beta2": self.beta2}

    def log_density(self, r, d):
        r = np.asarray(r, dtype=float)
        return -(d + self.beta1) * np.log(r) - self.beta2 * np.log(np.log(2.0 + r))

    def moment_tail(self, R: float, p: float, d: int) -> float:
        """Return int_R^inf r^p tail(r) dr (inf when divergent)."""
        expo = p + 1.0 - d - self.beta1
        if expo > 0 or (expo == 0 and self.beta2 <= 1.0):
            return math.inf
        if self.beta2 == 0.0:
            return R ** expo / (-expo)

        def f(u):
            # log(2 + e^u) written to avoid overflow for large u
            log2r = u + math.log1p(2.0 * math.exp(-u)) if u > 0 else math.log(2.0 + math.exp(u))
            return math.exp(expo * u - self.beta2 * math.log(log2r))

        val, _ = integrate.quad(f, math.log(R), math.inf, limit=200, epsabs=0.0, epsrel=1e-13)
        return val

    def monotone_from(self, p: float, d: int) -> float:
        # r^p * tail(r) is nonincreasing beyond this radius
        decay = d + self.beta1 - p
        if self.beta2 >= 0:
            return 1.0
        return max(1.0, math.exp(-self.beta2 / decay) - 2.0)


@dataclass(frozen=True)
class Exponential:
    """Tail density exp(-a |z|^beta)."""

    a: float
    beta: float
    kind = "exponential"

    def validate(self):
        if not (self.a > 0 and self.beta > 0):
            raise ValueError("Exponential tail requires a > 0 and beta > 0")

    def params(self) -> dict:
        return {"a": self.a, "beta": self.beta}

    def log_density(self, r, d):
        return -self.a * np.asarray(r, dtype=float) ** self.beta

    def moment_tail(self, R: float, p: float, d: int) -> float:
        s = (p + 1.0) / self.beta
        return float(self.a ** (-s) / self.beta * special.gamma(s)
                     * special.gammaincc(s, self.a * R ** self.beta))

    def monotone_from(self, p: float, d: int) -> float:
        return max(1.0, (max(p, 0.0) / (self.a * self.beta)) ** (1.0 / self.beta))


@dataclass(frozen=True)
class Truncated:
    """No jumps longer than one."""

    kind = "truncated"

    def validate(self):
        pass

    def params(self) -> dict:
        return {}

    def log_density(self, r, d):
        return np.full(np.shape(r), -np.inf)

    def moment_tail(self, R: float, p: float, d: int) -> float:
        return 0.0

    def monotone_from(self, p: float, d: int) -> float:
        return 1.0


TailSpec = Union[PowerLog, Exponential, Truncated]

_TAILS = {"powerlog": PowerLog, "exponential": Exponential, "truncated": Truncated}


def tail_from_dict(spec: dict) -> TailSpec:
    """Build a tail from ``{"kind": ..., <params>}``."""
    spec = dict(spec)
    kind = str(spec.pop("kind", "truncated")).lower()
    if kind not in _TAILS:
        raise ValueError(f"unknown tail kind {kind!r}; expected one of {sorted(_TAILS)}")
    return _TAILS[kind](**spec)


# --------------------------------------------------------------------------


def ball_symbol(rho: np.ndarray, a: float, d: int):
    """Integral of (1 - cos<xi,z>) |z|^{-d-a} over the unit ball, 0 < a < 2.

    ``rho`` = |xi| must be sorted, unique and nonnegative.  Returns the
    values, their rho-derivatives and error bounds for both.
    """
    S = sphere_area(d)
    coef = _cos_series(d)
    n = np.arange(1, coef.size + 1)
    series = coef / (2 * n - a)

    psi = np.zeros_like(rho)
    dpsi = np.zeros_like(rho)
    err = np.zeros_like(rho)
    derr = np.zeros_like(rho)

    low = rho <= 1.0
    if np.any(low):
        r = rho[low]
        psi[low] = S * r ** 2 * np.polynomial.polynomial.polyval(r ** 2, series)
        dpsi[low] = S * r * np.polynomial.polynomial.polyval(r ** 2, 2 * n * series)
        # alternating series with fast decay; the last kept term bounds the rest
        err[low] = S * (abs(series[-1]) * r ** (2 * n[-1]) + 8 * _EPS * psi[low] / S)
        derr[low] = S * (abs(2 * n[-1] * series[-1]) * r ** (2 * n[-1] - 1)
                         + 8 * _EPS * dpsi[low] / S)

    high = ~low
    if np.any(high):
        g1 = float(np.sum(series))
        r = rho[high]
        edges = np.concatenate([[1.0], r])
        widths = np.diff(edges)
        counts = np.maximum(np.ceil(widths / 0.5).astype(np.int64), 1)
        idx = np.repeat(np.arange(widths.size), counts)
        first = np.cumsum(counts) - counts
        local = np.arange(idx.size) - np.repeat(first, counts)
        h = (widths / counts)[idx]
        lo = edges[:-1][idx] + local * h

        def rule(gl):
            x, w = gl
            s = lo[:, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)
            f = one_minus_cos_average(s, d) * s ** (-1.0 - a)
            return 0.5 * h * (f @ w)

        q_hi = rule(_GL_HIGH)
        q_lo = rule(_GL_LOW)
        per_interval = np.add.reduceat(q_hi, first)
        per_err = np.add.reduceat(np.abs(q_hi - q_lo) + 4 * _EPS * np.abs(q_hi), first)
        G = g1 + np.cumsum(per_interval)
        Gerr = abs(series[-1]) + 4 * _EPS * g1 + np.cumsum(per_err) + 4 * _EPS * np.abs(G)
        psi[high] = S * r ** a * G
        dpsi[high] = S * (a * r ** (a - 1.0) * G + one_minus_cos_average(r, d) / r)
        err[high] = S * r ** a * Gerr
        derr[high] = S * a * r ** (a - 1.0) * Gerr + S * 4 * _EPS / r
    return psi, dpsi, err, derr


@dataclass(frozen=True)
class SymbolTable:
    """Symbol values and gradients at a list of wavevectors.

    ``psi`` holds psi(xi) >= 0 and ``grad_psi`` the gradient; the error
    arrays are per-entry quadrature bounds.
    """

    wavevectors: np.ndarray
    psi: np.ndarray
    grad_psi: np.ndarray
    quadrature_error: np.ndarray
    grad_error: np.ndarray


@dataclass(frozen=True)
class LevyKernel:
    """Symmetric jump density with a stable-like small-jump part.

    Parameters
    ----------
    d : int
        Space dimension, at least 2.
    alpha : float
        Small-jump index in the open interval (1, 2).
    tail : PowerLog, Exponential or Truncated
        Density for |z| > 1.
    check : bool
        Validate the tail parameters and the finiteness of the second
        moment.  Disable only to study deliberately inadmissible kernels.
    """

    d: int
    alpha: float
    tail: TailSpec = field(default_factory=Truncated)
    check: bool = field(default=True, compare=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d}")
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (1, 2), got {self.alpha}")
        if self.check:
            self.tail.validate()
            if not math.isfinite(self.tail.moment_tail(1.0, self.d + 1, self.d)):
                raise ValueError("second moment of the tail is infinite")

    @classmethod
    def from_dict(cls, spec: dict) -> "LevyKernel":
        tail = spec.get("tail", {"kind": "truncated"})
        return cls(int(spec["dim"]), float(spec["alpha"]), tail_from_dict(tail))

    def to_dict(self) -> dict:
        return {"dim": self.d, "alpha": self.alpha,
                "tail": {"kind": self.tail.kind, **self.tail.params()}}

    # ---------------------------------------------------------------- density

    def log_radial_density(self, r):
        r = np.asarray(r, dtype=float)
        inner = -(self.d + self.alpha) * np.log(np.where(r > 0, r, 1.0))
        with np.errstate(divide="ignore"):
            outer = self.tail.log_density(np.maximum(r, 1.0), self.d)
        return np.where(r <= 1.0, inner, outer)

    def radial_density(self, r):
        return np.exp(self.log_radial_density(r))

    def evaluate(self, z):
        """Density nu(z); ``z`` has trailing dimension d.

        Raises
        ------
        DomainError
            If any point is the origin.
        """
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.d:
            raise ValueError(f"expected points of dimension {self.d}")
        r = np.sqrt(np.sum(z * z, axis=-1))
        if np.any(r == 0):
            raise DomainError("the jump density is singular at the origin")
        out = self.radial_density(r)
        return float(out) if out.ndim == 0 else out

    # ---------------------------------------------------------------- moments

    def second_moment_scalar(self) -> tuple[float, float]:
        """Return (m, error) with int z z^T nu(z) dz = m I."""
        S = sphere_area(self.d)
        tail = self.tail.moment_tail(1.0, self.d + 1, self.d)
        if not math.isfinite(tail):
            raise QuadratureError("second moment diverges", bound=math.inf)
        m = S / self.d * (1.0 / (2.0 - self.alpha) + tail)
        return m, 1e-13 * abs(m)

    def second_moment(self) -> np.ndarray:
        """Second-moment matrix int z z^T nu(z) dz (a multiple of the identity)."""
        m, _ = self.second_moment_scalar()
        return m * np.eye(self.d)

    def jump_rate(self, delta: float) -> float:
        """Total mass of nu outside the ball of radius ``delta`` (delta <= 1)."""
        S = sphere_area(self.d)
        small = (delta ** (-self.alpha) - 1.0) / self.alpha
        return S * (small + self.tail.moment_tail(1.0, self.d - 1, self.d))

    def small_jump_covariance(self, delta: float) -> np.ndarray:
        """int_{|z|<=delta} z z^T nu(z) dz for delta <= 1."""
        S = sphere_area(self.d)
        return S / self.d * delta ** (2.0 - self.alpha) / (2.0 - self.alpha) * np.eye(self.d)

    # ---------------------------------------------------------------- symbol

    def _small_jump_symbol(self, rho: np.ndarray):
        return ball_symbol(rho, self.alpha, self.d)

    def _tail_symbol(self, rho: float, tol: float, derivative: bool):
        t = self.tail
        if isinstance(t, Truncated) or rho == 0.0:
            return 0.0, 0.0
        d = self.d
        S = sphere_area(d)
        budget = tol / (4.0 * S)
        p = d if derivative else d - 1
        start = t.monotone_from(p, d)
        osc = 2.0 if derivative else _oscillation_constant(d)

        R1 = 2.0
        while True:
            m2 = t.moment_tail(R1, d + 1, d)
            bound_b = (rho / d if derivative else rho ** 2 / (2.0 * d)) * m2
            bound_a = math.inf
            if R1 >= start:
                g = math.exp(p * math.log(R1) + float(t.log_density(R1, d)))
                bound_a = osc * g / rho
            if min(bound_a, bound_b) <= budget:
                break
            R1 *= 2.0
            if R1 > 2.0 ** 50:
                raise QuadratureError("tail truncation radius did not converge",
                                      bound=S * min(bound_a, bound_b))
        use_a = bound_a <= bound_b
        extra = 0.0
        if use_a and not derivative:
            extra = t.moment_tail(R1, d - 1, d)
        trunc = min(bound_a, bound_b)

        # geometric levels [2^i, 2^{i+1}] split into panels spanning at most
        # about one oscillation of the angular average
        levels = 2.0 ** np.arange(0, int(round(math.log2(R1))))
        widths = np.minimum(levels / 4.0, 6.0 / rho)
        counts = np.ceil(levels / widths).astype(np.int64)
        if counts.sum() > _MAX_TAIL_PANELS:
            raise QuadratureError(
                f"tail quadrature at |xi|={rho:.3g} needs {int(counts.sum())} panels to reach "
                f"tol {tol:.1e}", bound=S * trunc)
        idx = np.repeat(np.arange(levels.size), counts)
        first = np.cumsum(counts) - counts
        local = np.arange(idx.size) - np.repeat(first, counts)
        h = (levels / counts)[idx]
        lo = levels[idx] + local * h

        def rule(gl):
            x, w = gl
            r = lo[:, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)
            logw = p * np.log(r) + t.log_density(r, d)
            if derivative:
                f = np.exp(logw) * sin_average(rho * r, d)
            else:
                f = np.exp(logw) * one_minus_cos_average(rho * r, d)
            return 0.5 * h * (f @ w)

        q_lo = rule(_GL_TAIL[0])
        q_hi = rule(_GL_TAIL[1])
        val = float(np.sum(q_hi)) + extra
        qerr = float(np.sum(np.abs(q_hi - q_lo))) + 8 * _EPS * float(np.sum(np.abs(q_hi)))
        return S * val, S * (trunc + qerr)

    def radial_symbol(self, rho, tol: float = 1e-10, derivative: bool = False,
                      strict: bool = True):
        """Symbol psi (or d psi / d rho) as a function of rho = |xi|.

        Returns
        -------
        values, errors : ndarray
            Arrays with the shape of ``rho``.

        Raises
        ------
        QuadratureError
            If ``strict`` and some error bound exceeds ``tol``.
        """
        if not tol > 0:
            raise ValueError("tol must be positive")
        rho = np.abs(np.asarray(rho, dtype=float))
        uniq, inverse = np.unique(rho, return_inverse=True)
        psi, dpsi, err, derr = self._small_jump_symbol(uniq)
        vals, errs = (dpsi, derr) if derivative else (psi, err)
        if not isinstance(self.tail, Truncated):
            for i, r in enumerate(uniq):
                v, e = self._tail_symbol(float(r), tol, derivative)
                vals[i] += v
                errs[i] += e
        worst = float(np.max(errs)) if errs.size else 0.0
        if strict and worst > tol:
            raise QuadratureError(f"symbol quadrature bound {worst:.3e} exceeds tol {tol:.1e}",
                                  bound=worst)
        return vals[inverse].reshape(rho.shape), errs[inverse].reshape(rho.shape)

    def symbol(self, xi, tol: float = 1e-10) -> tuple[float, float]:
        """psi(xi) and its error bound for a single wavevector."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.d,):
            raise ValueError(f"expected a wavevector of dimension {self.d}")
        v, e = self.radial_symbol(np.linalg.norm(xi), tol)
        return float(v), float(e)

    def symbol_gradient(self, xi, tol: float = 1e-10) -> tuple[np.ndarray, float]:
        """grad psi(xi) = int z sin<xi,z> nu(z) dz and a component-wise bound."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.d,):
            raise ValueError(f"expected a wavevector of dimension {self.d}")
        rho = float(np.linalg.norm(xi))
        if rho == 0.0:
            return np.zeros(self.d), 0.0
        v, e = self.radial_symbol(rho, tol, derivative=True)
        return float(v) * xi / rho, float(e)

    def symbol_table(self, wavevectors, tol: float = 1e-10) -> SymbolTable:
        """Tabulate psi and grad psi on an (n, d) array of wavevectors."""
        k = np.asarray(wavevectors, dtype=float).reshape(-1, self.d)
        rho = np.linalg.norm(k, axis=1)
        psi, err = self.radial_symbol(rho, tol)
        dpsi, derr = self.radial_symbol(rho, tol, derivative=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(rho[:, None] > 0, k / np.where(rho > 0, rho, 1.0)[:, None], 0.0)
        return SymbolTable(k, psi, dpsi[:, None] * unit, err, derr)


# --------------------------------------------------------------------------
# Assumption checks on the tail


@dataclass
class TailConditionReport:
    """Outcome of :func:`check_tail_condition`."""

    r: float
    K0: float
    magnitudes: np.ndarray
    ratios: np.ndarray
    c0: float
    moment: float
    moment_converged: bool
    partial_sums: list
    passed: bool
    notes: list = field(default_factory=list)

    def rows(self):
        """Flat (name, value) pairs for tabular output."""
        return [
            ("r", self.r), ("K0", self.K0), ("c0_empirical", self.c0),
            ("ratio_min", float(np.min(self.ratios))),
            ("ratio_max", float(np.max(self.ratios))),
            ("moment", self.moment), ("moment_converged", self.moment_converged),
            ("shells", len(self.partial_sums)), ("status", "PASS" if self.passed else "FAIL"),
        ]


def _log_ball_integral(kernel: LevyKernel, rx: float, r: float) -> float:
    """log of int_{B(x,r)} nu(z)^2 dz for |x| = rx >= 2r >= 2."""
    d = kernel.d
    lo, hi = rx - r, rx + r
    ref = float(kernel.log_radial_density(max(lo, 1.0 + 1e-15)))
    if not math.isfinite(ref):
        return -math.inf
    s_dm2 = sphere_area(d - 1) if d > 2 else 2.0
    full_beta = special.beta((d - 1) / 2.0, 0.5)

    def integrand(rho):
        c = (rho * rho + rx * rx - r * r) / (2.0 * rho * rx)
        c = min(1.0, max(-1.0, c))
        th = math.acos(c)
        if d == 2:
            ang = th
        else:
            ang = 0.5 * full_beta * special.betainc((d - 1) / 2.0, 0.5, math.sin(th) ** 2)
        lg = float(kernel.log_radial_density(rho))
        return math.exp(2.0 * (lg - ref)) * s_dm2 * rho ** (d - 1) * ang

    val, _ = integrate.quad(integrand, lo, hi, limit=200, epsrel=1e-10)
    if val <= 0:
        return -math.inf
    return math.log(val) + 2.0 * ref


def check_tail_condition(kernel: LevyKernel, r: float, K0: float,
                         gamma: Optional[Callable] = None,
                         log_gamma: Optional[Callable] = None,
                         n_magnitudes: int = 24, n_directions: int = 16,
                         seed: int = 0) -> TailConditionReport:
    """Empirically check the large-jump regularity condition on ``kernel``.

    For |x| on a geometric grid in [K0 r, 1e3 K0 r] and random directions,
    computes the ratio

        int_{B(x,r)} nu^2 / (r^d gamma(x)^2 nu(x)^2)

    and integrates int_{|x|>=K0} |x|^2 gamma^2 nu over doubling shells.

    ``gamma`` (or ``log_gamma``, preferred when gamma overflows) maps an
    (n, d) array of points to positive values; default gamma = 1.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if K0 < 2:
        raise ValueError("K0 must be >= 2")
    d = kernel.d
    if log_gamma is None:
        if gamma is None:
            def log_gamma(x):
                return np.zeros(np.shape(x)[:-1])
        else:
            def log_gamma(x):
                return np.log(gamma(x))

    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_directions, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    mags = np.geomspace(K0 * r, 1e3 * K0 * r, n_magnitudes)
    notes = []

    ratios = np.zeros((n_magnitudes, n_directions))
    for i, m in enumerate(mags):
        log_ball = _log_ball_integral(kernel, float(m), float(r))
        pts = m * dirs
        denom = d * math.log(r) + 2.0 * log_gamma(pts) + 2.0 * float(kernel.log_radial_density(m))
        if log_ball == -math.inf:
            ratios[i] = 0.0
        else:
            with np.errstate(over="ignore"):
                ratios[i] = np.exp(log_ball - denom)
    finite = bool(np.all(np.isfinite(ratios)))
    if not finite:
        notes.append("non-finite ratio")
    c0 = max(1.0, float(np.max(ratios))) if finite else math.inf
    if np.all(ratios == 0):
        notes.append("density vanishes beyond K0 r; ratios trivial")

    # moment over doubling shells with Gauss-Legendre in log radius
    x, w = _GL_HIGH
    S = sphere_area(d)
    partial = []
    total = 0.0
    incs = []
    converged = False
    for j in range(80):
        a, b = math.log(K0) + j * math.log(2.0), math.log(K0) + (j + 1) * math.log(2.0)
        u = a + 0.5 * (b - a) * (x + 1.0)
        rad = np.exp(u)
        lg = np.array([np.log(np.mean(np.exp(2.0 * log_gamma(rr * dirs) - 2.0 * log_gamma(rr * dirs).max())))
                       + 2.0 * log_gamma(rr * dirs).max() for rr in rad])
        with np.errstate(over="ignore", invalid="ignore"):
            logf = (d + 2.0) * u + kernel.log_radial_density(rad) + lg
            inc = S * 0.5 * (b - a) * float(np.sum(w * np.exp(logf)))
        if not math.isfinite(inc):
            notes.append("moment integrand overflowed")
            break
        incs.append(inc)
        total += inc
        partial.append(total)
        if inc == 0.0 and total == 0.0 and j >= 3:
            converged = True
            break
        if j >= 4:
            q = max(incs[-1] / incs[-2] if incs[-2] > 0 else 0.0,
                    incs[-2] / incs[-3] if incs[-3] > 0 else 0.0)
            if q < 0.95:
                remainder = incs[-1] * q / (1.0 - q)
                if remainder <= 1e-10 * total:
                    converged = True
                    break
    if not converged:
        notes.append("moment integral did not converge (partial sums growing or stagnating)")
    moment = total if converged else math.inf
    passed = finite and converged
    return TailConditionReport(float(r), float(K0), mags, ratios, c0, moment, converged,
                               partial, passed, notes)


def example_candidate(kernel: LevyKernel):
    """Constants (K0, log_gamma) under which the tail families are admissible."""
    t = kernel.tail
    if isinstance(t, Exponential):
        K0 = 1.0 / (1.0 - 2.0 ** (-1.0 / t.beta)) + 1.0
        c = t.a * (1.0 - (1.0 - 1.0 / K0) ** t.beta)

        def log_gamma(x):
            return c * np.linalg.norm(x, axis=-1) ** t.beta
        return K0, log_gamma
    return 2.0, None
