"""Periodic random stream functions and the divergence-free drifts they generate.

A stream field is a finite trigonometric sum

    H_jl(x) = sum_m A_jl(m) cos(<k_m, x> + theta_m),   k_m = 2 pi m / L,

with A(m) antisymmetric, over a half lattice of integer modes (first
nonzero coordinate positive) so that no two modes are conjugate.  The drift is
b_j = -sum_l d_l H_jl, which per mode equals

    b_j(x) = sum_m c_j(m) sin(<k_m, x> + theta_m),   c(m) = A(m) k_m.

Since k^T A k = 0 for antisymmetric A, b is divergence-free mode by mode.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernels import ball_symbol

__all__ = [
    "StreamField",
    "DriftField",
    "MomentReport",
    "synthesize",
    "shear",
    "drift",
    "eval_stream",
    "eval_drift",
    "sample_stream",
    "sample_drift",
    "moment_report",
    "assumption_exponents",
    "write_modes_csv",
    "modes_csv_text",
    "read_modes_csv",
]


@dataclass(frozen=True, eq=False)
class StreamField:
    """Antisymmetric matrix of periodic stream functions.

    Parameters
    ----------
    d : int
        Dimension.
    L : float
        Period in every coordinate.
    modes : ndarray of int, shape (n, d)
        Integer lattice indices; wavevectors are ``2*pi*modes/L``.
    amplitudes : ndarray, shape (n, d, d)
        Antisymmetric amplitude matrices.
    phases : ndarray, shape (n,)
    seed : int or None
        Seed used by :func:`synthesize`, kept for provenance.
    spectrum_exponent : float or None
    """

    d: int
    L: float
    modes: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    seed: Optional[int] = None
    spectrum_exponent: Optional[float] = None

    def __post_init__(self):
        d = self.d
        modes = np.asarray(self.modes, dtype=np.int64).reshape(-1, d)
        amps = np.asarray(self.amplitudes, dtype=float).reshape(-1, d, d)
        phases = np.asarray(self.phases, dtype=float).reshape(-1)
        if not (modes.shape[0] == amps.shape[0] == phases.shape[0]):
            raise ValueError("modes, amplitudes and phases must have matching length")
        if not self.L > 0:
            raise ValueError("period must be positive")
        if np.any(amps + np.swapaxes(amps, 1, 2) != 0):
            raise ValueError("amplitude matrices must be antisymmetric")
        if np.any(np.all(modes == 0, axis=1)):
            raise ValueError("the zero mode is not allowed (stream functions are mean zero)")
        # reject conjugate duplicates: they would make the mode list ambiguous
        canon = np.where(_first_nonzero_sign(modes)[:, None] < 0, -modes, modes)
        if len({tuple(m) for m in canon}) != len(canon):
            raise ValueError("duplicate or conjugate modes in the mode list")
        for name, val in (("modes", modes), ("amplitudes", amps), ("phases", phases)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    @property
    def wavevectors(self) -> np.ndarray:
        return 2.0 * math.pi / self.L * self.modes

    @property
    def cutoff(self) -> int:
        """Largest |m|_inf among the modes (0 for an empty field)."""
        return int(np.max(np.abs(self.modes))) if self.n_modes else 0

    def to_dict(self) -> dict:
        return {"d": self.d, "L": self.L, "n_modes": self.n_modes, "seed": self.seed,
                "spectrum_exponent": self.spectrum_exponent}


@dataclass(frozen=True, eq=False)
class DriftField:
    """Drift b = -div H stored as per-mode sine coefficients ``c`` (n, d)."""

    stream: StreamField
    coefficients: np.ndarray

    def spectral_divergence(self) -> np.ndarray:
        """Per-mode values of <k, c(k)>; zero up to rounding."""
        return np.einsum("nj,nj->n", self.stream.wavevectors, self.coefficients)


def _first_nonzero_sign(modes: np.ndarray) -> np.ndarray:
    sign = np.zeros(modes.shape[0], dtype=np.int64)
    for j in range(modes.shape[1] - 1, -1, -1):
        col = modes[:, j]
        sign = np.where(col != 0, np.sign(col), sign)
    return sign


def half_lattice(d: int, cutoff: int) -> np.ndarray:
    """Integer modes with |m|_inf <= cutoff, one from each pair {m, -m}, m != 0."""
    if cutoff <= 0:
        return np.zeros((0, d), dtype=np.int64)
    rng = range(-cutoff, cutoff + 1)
    pts = np.array(list(itertools.product(rng, repeat=d)), dtype=np.int64)
    return pts[_first_nonzero_sign(pts) > 0]


def synthesize(d: int, L: float = 2 * math.pi, modes: int = 12,
               spectrum_exponent: float = 2.0, amplitude_scale: float = 0.5,
               seed: int = 0) -> StreamField:
    """Random stream field with amplitudes ~ amplitude_scale |m|^{-s} N(0, 1).

    ``modes`` is the lattice cutoff |m|_inf; every mode in the half lattice
    below it is populated.  Phases are uniform on [0, 2 pi).  The result
    depends only on the arguments.
    """
    if modes < 0:
        raise ValueError("mode cutoff must be nonnegative")
    if spectrum_exponent <= d / 2.0 and modes > 0:
        # amplitudes must be square summable for the infinite-cutoff limit to exist
        raise ValueError(f"spectrum exponent must exceed d/2 = {d / 2}")
    lattice = half_lattice(d, modes)
    n = lattice.shape[0]
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(d, 1)
    raw = rng.standard_normal((n, len(iu[0])))
    phases = rng.uniform(0.0, 2.0 * math.pi, n)
    mag = amplitude_scale * np.linalg.norm(lattice, axis=1) ** (-spectrum_exponent) if n else np.zeros(0)
    amps = np.zeros((n, d, d))
    amps[:, iu[0], iu[1]] = raw * mag[:, None]
    amps[:, iu[1], iu[0]] = -amps[:, iu[0], iu[1]]
    return StreamField(d, float(L), lattice, amps, phases, seed, spectrum_exponent)


def shear(d: int = 2, L: float = 2 * math.pi, amplitude: float = 1.0, mode: int = 1) -> StreamField:
    """Single-mode field H_12 = amplitude cos(2 pi mode x_1 / L)."""
    m = np.zeros((1, d), dtype=np.int64)
    m[0, 0] = mode
    A = np.zeros((1, d, d))
    A[0, 0, 1], A[0, 1, 0] = amplitude, -amplitude
    return StreamField(d, float(L), m, A, np.zeros(1))


def drift(stream: StreamField) -> DriftField:
    """Drift b_j = -sum_l d_l H_jl of a stream field."""
    c = np.einsum("njl,nl->nj", stream.amplitudes, stream.wavevectors)
    c.setflags(write=False)
    return DriftField(stream, c)


# ---------------------------------------------------------------- evaluation


def eval_stream(stream: StreamField, x) -> np.ndarray:
    """H(x) at points ``x`` of shape (..., d); returns (..., d, d)."""
    x = np.asarray(x, dtype=float)
    phase = x @ stream.wavevectors.T + stream.phases
    return np.einsum("...n,njl->...jl", np.cos(phase), stream.amplitudes)


def eval_drift(field: DriftField, x) -> np.ndarray:
    """b(x) at points ``x`` of shape (..., d)."""
    x = np.asarray(x, dtype=float)
    s = field.stream
    phase = x @ s.wavevectors.T + s.phases
    return np.sin(phase) @ field.coefficients


def _spectral_sample(d, N, modes, amp, phase, L, box_length, origin):
    """Real field sum_m amp cos(<2 pi m / L, x> + phase) on an N^d grid.

    The grid spans ``box_length`` per axis from ``origin``; ``box_length``
    must be an integer multiple of ``L`` and all placed modes must lie
    strictly inside the Nyquist band.  Several fields may be passed at once
    along the leading axis of ``amp``.
    """
    ratio = box_length / L
    rep = int(round(ratio))
    if rep < 1 or abs(ratio - rep) > 1e-9 * ratio:
        raise ValueError("box length must be an integer multiple of the period")
    idx = modes * rep
    if idx.size and np.max(np.abs(idx)) >= N // 2:
        raise ValueError(f"grid with N={N} cannot represent lattice modes up to {np.max(np.abs(idx))}")
    amp = np.atleast_2d(amp)
    k = 2.0 * math.pi / L * modes
    shift = np.exp(1j * (phase + k @ np.broadcast_to(np.asarray(origin, float), (d,))))
    spec = np.zeros((amp.shape[0],) + (N,) * d, dtype=complex)
    scale = 0.5 * N ** d
    pos = tuple(np.mod(idx, N).T)
    neg = tuple(np.mod(-idx, N).T)
    for f in range(amp.shape[0]):
        c = scale * amp[f] * shift
        np.add.at(spec[f], pos, c)
        np.add.at(spec[f], neg, np.conj(c))
    axes = tuple(range(1, d + 1))
    return np.fft.ifftn(spec, axes=axes).real


def sample_stream(stream: StreamField, N: int, box_length: Optional[float] = None,
                  scale: float = 1.0, origin=0.0) -> np.ndarray:
    """H(x / scale) on an N^d grid over [origin, origin + box_length)^d.

    Returns an array of shape (d, d) + (N,)*d.  The default box is one
    period of the rescaled field.
    """
    d = stream.d
    period = stream.L * scale
    box_length = period if box_length is None else box_length
    out = np.zeros((d, d) + (N,) * d)
    if stream.n_modes == 0:
        return out
    iu = np.triu_indices(d, 1)
    amp = stream.amplitudes[:, iu[0], iu[1]].T
    vals = _spectral_sample(d, N, stream.modes, amp, stream.phases, period, box_length, origin)
    for p, (j, l) in enumerate(zip(*iu)):
        out[j, l] = vals[p]
        out[l, j] = -vals[p]
    return out


def sample_drift(field: DriftField, N: int, box_length: Optional[float] = None,
                 scale: float = 1.0, origin=0.0) -> np.ndarray:
    """b(x / scale) on an N^d grid; shape (d,) + (N,)*d.

    The values are exact samples of the trigonometric sum (no
    differentiation error), so the discrete drift is divergence-free to
    rounding when differentiated spectrally.
    """
    s = field.stream
    d = s.d
    period = s.L * scale
    box_length = period if box_length is None else box_length
    if s.n_modes == 0:
        return np.zeros((d,) + (N,) * d)
    # sin(t) = cos(t - pi/2)
    return _spectral_sample(d, N, s.modes, field.coefficients.T, s.phases - 0.5 * math.pi,
                            period, box_length, origin)


# ---------------------------------------------------------------- moments


@dataclass
class MomentReport:
    """Moment diagnostics of a stream field against the environment conditions."""

    q: float
    r: float
    alpha: float
    p0: float
    p0_prime: float
    sup_exponent: float
    sup_divergence: float
    power_moments: np.ndarray
    fractional_moments: np.ndarray
    dimension_ok: bool
    q_ok: bool
    p0_prime_ok: bool
    r_ok: bool
    grid_points: int
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        finite = (math.isfinite(self.sup_divergence)
                  and np.all(np.isfinite(self.power_moments))
                  and np.all(np.isfinite(self.fractional_moments)))
        return bool(finite and self.dimension_ok and self.q_ok and self.p0_prime_ok and self.r_ok)

    def rows(self):
        rows = [("q", self.q), ("r", self.r), ("alpha", self.alpha), ("p0", self.p0),
                ("p0_prime", self.p0_prime), ("sup_exponent", self.sup_exponent),
                ("sup_divergence", self.sup_divergence)]
        d = self.power_moments.shape[0]
        for j in range(d):
            for l in range(j + 1, d):
                rows.append((f"power_moment_{j + 1}{l + 1}", self.power_moments[j, l]))
                rows.append((f"fractional_moment_{j + 1}{l + 1}", self.fractional_moments[j, l]))
        rows += [("dimension_ok", self.dimension_ok), ("q_ok", self.q_ok),
                 ("p0_prime_ok", self.p0_prime_ok), ("r_ok", self.r_ok),
                 ("status", "PASS" if self.passed else "FAIL")]
        return rows


def assumption_exponents(d: int, q: float, alpha: float) -> tuple[float, float]:
    """Return (p0, p0') = (dq/(d-q), 2 p0 alpha / (4(alpha-1) + p0(2-alpha)))."""
    p0 = d * q / (d - q)
    p0p = 2.0 * p0 * alpha / (4.0 * (alpha - 1.0) + p0 * (2.0 - alpha))
    return p0, p0p


def _default_r(q: float, p0p: float) -> int:
    lower = max(q / (q - 1.0), 2.0 * p0p / (p0p - 2.0)) if p0p > 2 else math.inf
    if not math.isfinite(lower):
        return 2
    r = math.floor(lower) + 1
    return r + (r % 2)  # even powers keep the grid average exact


def _grid_size(d: int, degree: int) -> int:
    n = 8
    while n < 2 * degree + 2:
        n *= 2
    return n


def _fractional_integrand_field(stream: StreamField, pair, alpha: float, N: int) -> np.ndarray:
    """x -> int_{|z|<=1} |H(x+z) - H(x)|^2 |z|^{-d-2+alpha} dz on an N^d grid.

    With H = sum_p a_p e^{i<k_p,x>} over +-modes, the integral equals
    sum_{p,q} a_p conj(a_q) [g(k_p) + g(k_q) - g(k_p - k_q)] e^{i<k_p-k_q,x>}
    where g is the unit-ball symbol of index 2 - alpha.
    """
    d = stream.d
    j, l = pair
    A = stream.amplitudes[:, j, l]
    m = np.concatenate([stream.modes, -stream.modes])
    a = 0.5 * np.concatenate([A * np.exp(1j * stream.phases), A * np.exp(-1j * stream.phases)])
    dm = (m[:, None, :] - m[None, :, :]).reshape(-1, d)
    two_pi_L = 2.0 * math.pi / stream.L
    rho_all = np.concatenate([np.linalg.norm(m, axis=1), np.linalg.norm(dm, axis=1)]) * two_pi_L
    uniq, inv = np.unique(rho_all, return_inverse=True)
    g = ball_symbol(uniq, 2.0 - alpha, d)[0][inv]
    g_single = g[: m.shape[0]]
    g_diff = g[m.shape[0]:].reshape(m.shape[0], m.shape[0])
    W = g_single[:, None] + g_single[None, :] - g_diff
    coef = (a[:, None] * np.conj(a)[None, :] * W).reshape(-1)
    spec = np.zeros((N,) * d, dtype=complex)
    np.add.at(spec, tuple(np.mod(dm, N).T), coef * N ** d)
    return np.fft.ifftn(spec).real


def moment_report(stream: StreamField, r0: float = 1.0, q: float = 1.2, alpha: float = 1.4,
                  r: Optional[float] = None) -> MomentReport:
    """Moment diagnostics of ``stream`` with spatial averages as expectations.

    Parameters
    ----------
    r0 : float
        Radius in the sup statistic; the torus sup is reported since it
        bounds the sup over any ball.
    q : float
        Integrability index in (2d/(d+2), 2).
    alpha : float
        Kernel index.
    r : float, optional
        Power for the moments of H; defaults to the smallest even integer
        above the required threshold.
    """
    d = stream.d
    warnings = []
    dimension_ok = d > 4.0 * (alpha - 1.0)
    q_ok = 2.0 * d / (d + 2.0) < q < 2.0
    if not dimension_ok:
        warnings.append(f"d={d} does not exceed 4(alpha-1)={4 * (alpha - 1):.3g}")
    if not q_ok:
        warnings.append(f"q={q} outside ({2 * d / (d + 2):.3g}, 2)")
    p0, p0p = assumption_exponents(d, q, alpha) if q < d else (math.inf, math.nan)
    p0_prime_ok = bool(2.0 < p0p < p0) if math.isfinite(p0) else False
    if r is None:
        r = _default_r(q, p0p) if p0_prime_ok else 2
    threshold = max(q / (q - 1.0), 2.0 * p0p / (p0p - 2.0)) if p0_prime_ok else math.inf
    r_ok = r > threshold
    if not r_ok:
        warnings.append(f"r={r} does not exceed {threshold:.4g}")
    sup_exponent = max(4, d) / (2.0 * (alpha - 1.0) * (2.0 - q)) if q < 2 else math.inf

    pm = np.zeros((d, d))
    fm = np.zeros((d, d))
    K = stream.cutoff
    if stream.n_modes == 0:
        return MomentReport(q, r, alpha, p0, p0p, sup_exponent, 0.0, pm, fm, dimension_ok,
                            q_ok, p0_prime_ok, r_ok, 0, warnings)

    # sup of |d_l H_jl| on a fine grid (torus sup bounds the ball sup)
    N_sup = _grid_size(d, 4 * K)
    dH = _spectral_sample(
        d, N_sup, stream.modes,
        np.stack([-stream.amplitudes[:, j, l] * stream.wavevectors[:, l]
                  for j in range(d) for l in range(d)]),
        stream.phases - 0.5 * math.pi, stream.L, stream.L, 0.0)
    sup_div = float(np.max(np.abs(dH)))

    deg = int(math.ceil(r)) * K
    N_pow = _grid_size(d, deg)
    if N_pow ** d > 2 ** 24:
        N_pow = int(2 ** (24 // d))
        warnings.append("power moment grid capped; average is approximate")
    H = sample_stream(stream, N_pow)
    N_frac = _grid_size(d, 4 * K)
    expo = p0 / (p0 - 2.0) if p0_prime_ok else 1.0
    for j in range(d):
        for l in range(j + 1, d):
            pm[j, l] = pm[l, j] = float(np.mean(np.abs(H[j, l]) ** r))
            I = _fractional_integrand_field(stream, (j, l), alpha, N_frac)
            fm[j, l] = fm[l, j] = float(np.mean(np.maximum(I, 0.0) ** expo))
    if not (r == int(r) and int(r) % 2 == 0):
        warnings.append("odd or fractional r: grid average is not exact")
    return MomentReport(q, r, alpha, p0, p0p, sup_exponent, sup_div, pm, fm, dimension_ok,
                        q_ok, p0_prime_ok, r_ok, N_pow, warnings)


# ---------------------------------------------------------------- file format


def modes_csv_text(stream: StreamField, config_hash: Optional[str] = None) -> str:
    """Mode list as CSV text: ``m1..md, j, l, amplitude, phase`` (j < l, 1-based).

    An optional ``# config_hash=...`` line precedes the field header.
    """
    d = stream.d
    lines = [f"# config_hash={config_hash}"] if config_hash else []
    lines += [f"# levyhom stream field d={d} L={stream.L!r} seed={stream.seed} "
             f"spectrum_exponent={stream.spectrum_exponent}",
             ",".join([f"m{i + 1}" for i in range(d)] + ["j", "l", "amplitude", "phase"])]
    for n in range(stream.n_modes):
        for j in range(d):
            for l in range(j + 1, d):
                lines.append(",".join([str(int(v)) for v in stream.modes[n]]
                                      + [str(j + 1), str(l + 1),
                                         f"{stream.amplitudes[n, j, l]:.17g}",
                                         f"{stream.phases[n]:.17g}"]))
    return "\n".join(lines) + "\n"


def write_modes_csv(stream: StreamField, path, config_hash: Optional[str] = None) -> None:
    """Write :func:`modes_csv_text` to ``path``."""
    with open(path, "w", newline="\n") as fh:
        fh.write(modes_csv_text(stream, config_hash))


def read_modes_csv(path) -> StreamField:
    """Inverse of :func:`write_modes_csv`."""
    with open(path) as fh:
        header = fh.readline()
        if header.startswith("# config_hash="):
            header = fh.readline()
        if not header.startswith("# levyhom stream field"):
            raise ValueError(f"{path}: not a stream field file")
        meta = dict(tok.split("=", 1) for tok in header.split()[4:])
        d = int(meta["d"])
        L = float(meta["L"])
        seed = None if meta.get("seed", "None") == "None" else int(meta["seed"])
        s = meta.get("spectrum_exponent", "None")
        s = None if s == "None" else float(s)
        fh.readline()
        rows = [line.strip().split(",") for line in fh if line.strip()]
    order, amps, phases = {}, [], []
    for row in rows:
        m = tuple(int(v) for v in row[:d])
        j, l = int(row[d]) - 1, int(row[d + 1]) - 1
        if m not in order:
            order[m] = len(order)
            amps.append(np.zeros((d, d)))
            phases.append(float(row[d + 3]))
        A = amps[order[m]]
        A[j, l] = float(row[d + 2])
        A[l, j] = -A[j, l]
    modes = np.array(list(order), dtype=np.int64).reshape(-1, d)
    return StreamField(d, L, modes, np.array(amps).reshape(-1, d, d), np.array(phases), seed, s)
