"""Stage orchestration for experiment runs and the quick validation suite.

Stages run in a fixed dependency order.  A stage that needs an upstream
product (corrector, homogenized matrix) takes it from an earlier stage of the
same run, from a file named in the config, or computes it on the fly without
writing the upstream files.
"""
from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import environment as env
from .config import STAGES, ExperimentConfig
from .corrector import (CorrectorProblem, dense_reference_solve, energy_identity_check,
                        solve_regularized, sublinearity_scan)
from .effective import EffectiveMatrix, compute_effective
from .errors import ConfigError, ConvergenceError, LevyHomError, QuadratureError
from .grid import TorusGrid, field_bytes
from .io import RunManifest, StageRecord, atomic_write, read_table, write_table
from .kernels import (Exponential, LevyKernel, PowerLog, Truncated, check_tail_condition,
                      example_candidate)
from .montecarlo import SimConfig, effective_diffusivity_mc, simulate
from .resolvent import (GaussianSource, ResolventProblem, ball_error, convergence_sweep,
                        solve_homogenized, solve_scaled, symbol_comparison_error)

__all__ = ["run", "run_stage", "validate", "read_a_bar", "envelope_scan", "RunContext"]

log = logging.getLogger(__name__)


@dataclass
class RunContext:
    """Products shared between the stages of one run."""

    config: ExperimentConfig
    out: str
    kernel: Optional[LevyKernel] = None
    stream: Optional[env.StreamField] = None
    corrector: object = None
    effective: Optional[EffectiveMatrix] = None
    failed: set = field(default_factory=set)

    @property
    def hash(self) -> str:
        return self.config.hash

    def path(self, name: str) -> str:
        return os.path.join(self.out, name)

    def table(self, name: str, columns, rows) -> str:
        p = self.path(name)
        write_table(p, columns, rows, self.hash)
        return p


# ---------------------------------------------------------------- builders

def _kernel(ctx: RunContext) -> LevyKernel:
    if ctx.kernel is None:
        try:
            ctx.kernel = LevyKernel.from_dict(ctx.config["kernel"])
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"kernel: {exc}") from exc
    return ctx.kernel


def _stream(ctx: RunContext) -> env.StreamField:
    if ctx.stream is not None:
        return ctx.stream
    e = ctx.config["environment"]
    d = ctx.config["kernel"]["dim"]
    try:
        if e["file"]:
            s = env.read_modes_csv(e["file"])
        elif e["kind"] == "shear":
            s = env.shear(d, e["period"], e["amplitude"], e["mode"])
        else:
            s = env.synthesize(d, e["period"], e["modes"], e["spectrum_exponent"],
                               e["amplitude_scale"], ctx.config.environment_seed)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"environment: {exc}") from exc
    if s.d != d:
        raise ConfigError(f"environment dimension {s.d} differs from kernel.dim={d}")
    ctx.stream = s
    return s


def _solve_corrector(ctx: RunContext, record_rows: Optional[list] = None):
    """Continuation in theta with the energy identity evaluated at each stage."""
    if ctx.corrector is not None and record_rows is None:
        return ctx.corrector
    c = ctx.config["corrector"]
    stream = _stream(ctx)
    grid = TorusGrid(stream.d, c["N"], stream.L)
    pb = CorrectorProblem(grid, _kernel(ctx), stream, R=c["R"], tol=c["tol"],
                          symbol_tol=c["symbol_tol"])
    sol = None
    for stage, theta in enumerate(c["schedule"]):
        try:
            sol = solve_regularized(pb, theta, x0=None if sol is None else sol.phi)
        except ConvergenceError as exc:
            exc.stage = stage
            raise
        if record_rows is not None:
            rep = energy_identity_check(sol)
            record_rows.append([stage, theta, int(sum(len(h) - 1 for h in sol.histories)),
                                float(np.max(sol.residuals))]
                               + [float(v) for v in sol.energy]
                               + [float(np.max(rep.gap)), float(np.max(rep.polarized_gap))])
    ctx.corrector = sol
    return sol


def read_a_bar(path: str) -> np.ndarray:
    """Homogenized matrix from an ``effective.csv`` written by the effective stage."""
    try:
        _, cols, rows = read_table(path)
    except (OSError, StopIteration, IndexError) as exc:
        raise ConfigError(f"cannot read matrix file {path}: {exc}") from exc
    if cols[:4] != ["part", "i", "j", "value"]:
        raise ConfigError(f"{path}: expected columns part,i,j,value")
    entries = {(int(r[1]), int(r[2])): float(r[3]) for r in rows if r[0] == "a_bar"}
    if not entries:
        raise ConfigError(f"{path}: no a_bar rows")
    d = max(i for i, _ in entries)
    A = np.zeros((d, d))
    for (i, j), v in entries.items():
        A[i - 1, j - 1] = v
    return A


def _a_bar(ctx: RunContext, file_key: str) -> np.ndarray:
    if ctx.effective is not None:
        return ctx.effective.a_bar
    path = ctx.config[file_key]["a_bar_file"]
    if path:
        return read_a_bar(path)
    if "corrector" in ctx.failed or "effective" in ctx.failed:
        raise _Skip("no homogenized matrix: upstream stage failed")
    ctx.effective = compute_effective(_solve_corrector(ctx))
    return ctx.effective.a_bar


class _Skip(Exception):
    pass


# ---------------------------------------------------------------- stages

def envelope_scan(kernel: LevyKernel, n_xi: int = 200, n_directions: int = 8,
                  xi_min: float = 1e-2, xi_max: float = 1e2, tol: float = 1e-10):
    """psi(xi) / (|xi|^2 1{|xi|<=1} + |xi|^alpha 1{|xi|>1}) over a log grid of magnitudes.

    Directions are equally spaced angles in the first two coordinates.

    Returns
    -------
    (lower, upper, small_xi_ratio)
        Envelope constants and psi / (m |xi|^2 / 2) at |xi| = 1e-3.
    """
    d = kernel.d
    mags = np.geomspace(xi_min, xi_max, n_xi)
    ang = np.pi * np.arange(n_directions) / n_directions
    dirs = np.zeros((n_directions, d))
    dirs[:, 0], dirs[:, 1] = np.cos(ang), np.sin(ang)
    xi = (mags[:, None, None] * dirs[None]).reshape(-1, d)
    table = kernel.symbol_table(xi, tol)
    r = np.linalg.norm(xi, axis=1)
    ref = np.where(r <= 1, r ** 2, r ** kernel.alpha)
    ratio = table.psi / ref
    small = np.zeros(d)
    small[0] = 1e-3
    psi_s, _ = kernel.symbol(small, tol)
    m, _ = kernel.second_moment_scalar()
    return float(ratio.min()), float(ratio.max()), float(psi_s / (0.5 * m * 1e-6))


def _stage_kernel_check(ctx: RunContext):
    kc = ctx.config["kernel_check"]
    k = _kernel(ctx)
    lo, hi, small = envelope_scan(k, kc["n_xi"], kc["n_directions"], kc["xi_min"], kc["xi_max"],
                                  kc["tol"])
    K0, log_gamma = example_candidate(k)
    rep = check_tail_condition(k, kc["r"], K0, log_gamma=log_gamma)
    m, m_err = k.second_moment_scalar()
    rows = [("dim", k.d), ("alpha", k.alpha), ("tail", k.tail.kind), ("second_moment", m),
            ("second_moment_error", m_err), ("envelope_lower", lo), ("envelope_upper", hi),
            ("envelope_ratio", hi / lo), ("small_xi_ratio", small)]
    rows += [(f"tail_{n}", v) for n, v in rep.rows()]
    files = [ctx.table("kernel_check.csv", ["quantity", "value"], rows)]
    checks = [("symbol_envelope", hi / lo < 50, f"max/min={hi / lo:.4g}"),
              ("small_xi_ratio", 0.99 <= small <= 1.01, f"ratio={small:.6f}"),
              ("tail_condition", rep.passed, "; ".join(rep.notes) or "ok")]
    return checks, files


def _stage_env_gen(ctx: RunContext):
    s = _stream(ctx)
    mc = ctx.config["moments"]
    p = ctx.path("environment_modes.csv")
    atomic_write(p, env.modes_csv_text(s, ctx.hash).encode())
    rep = env.moment_report(s, mc["r0"], mc["q"], ctx.config["kernel"]["alpha"], mc["r"])
    files = [p, ctx.table("moments.csv", ["quantity", "value"], rep.rows())]
    div = float(np.max(np.abs(env.drift(s).spectral_divergence()))) if s.n_modes else 0.0
    checks = [("drift_divergence_free", div <= 1e-12, f"max |div b|^={div:.3e}"),
              ("moment_conditions", rep.passed, "see moments.csv")]
    return checks, files


def _stage_corrector(ctx: RunContext):
    c = ctx.config["corrector"]
    rows: list = []
    sol = _solve_corrector(ctx, rows)
    d = sol.grid.d
    cols = (["stage", "theta", "iterations", "residual"] + [f"energy_{k + 1}" for k in range(d)]
            + ["identity_gap", "polarized_gap"])
    files = [ctx.table("corrector_diagnostics.csv", cols, rows)]
    for k in range(d):
        p = ctx.path(f"phi_{k + 1}.bin")
        atomic_write(p, field_bytes(sol.grid, sol.phi[k]))
        files.append(p)
    final = rows[-1]
    res, gap, pgap = final[3], final[-2], final[-1]
    checks = [("corrector_residual", res <= 10 * c["tol"], f"{res:.3e}"),
              ("energy_identity", gap <= c["identity_tol"], f"gap={gap:.3e}"),
              ("polarization_identity", pgap <= c["identity_tol"], f"gap={pgap:.3e}")]
    return checks, files


def _stage_effective(ctx: RunContext):
    if "corrector" in ctx.failed:
        raise _Skip("corrector stage failed")
    eff = compute_effective(_solve_corrector(ctx))
    ctx.effective = eff
    d = eff.a_bar.shape[0]
    rows = []
    for name in ("a_bar", "second_moment", "cross", "dirichlet"):
        M = getattr(eff, name)
        rows += [(name, i + 1, j + 1, M[i, j]) for i in range(d) for j in range(d)]
    rows += [("eigenvalue", i + 1, 0, v) for i, v in enumerate(eff.eigenvalues)]
    rows.append(("asymmetry", 0, 0, eff.asymmetry))
    files = [ctx.table("effective.csv", ["part", "i", "j", "value"], rows)]
    checks = [("effective_symmetric", eff.asymmetry <= 1e-10 * max(1.0, np.abs(eff.a_bar).max()),
               f"asymmetry={eff.asymmetry:.3e}"),
              ("effective_positive_definite", bool(eff.eigenvalues[0] > 0),
               f"min eigenvalue={eff.eigenvalues[0]:.6g}")]
    return checks, files


def _stage_resolvent(ctx: RunContext):
    r = ctx.config["resolvent"]
    a_bar = _a_bar(ctx, "effective")
    table = convergence_sweep(_kernel(ctx), _stream(ctx), a_bar, r["epsilons"], r["p"], r["R"],
                              r["lambda"], GaussianSource(1.0, r["source_width"]),
                              r["box_length"], r["tol"], r["max_N"])
    files = [ctx.table("resolvent_sweep.csv", table.columns(), table.as_rows())]
    plot = [(row.epsilon, row.error, math.log10(row.epsilon),
             math.log10(row.error) if row.error > 0 else -math.inf) for row in table.rows]
    files.append(ctx.table("resolvent_plot.csv", ["epsilon", "error", "log10_epsilon",
                                                  "log10_error"], plot))
    rows = table.rows
    checks = [("max_principle", all(x.max_principle for x in rows), ""),
              ("l2_bound", all(x.l2_bound for x in rows), ""),
              ("grids_resolved", all(x.resolved for x in rows), "; ".join(table.warnings))]
    if len(rows) > 1:
        checks += [("error_strictly_decreasing", table.strictly_decreasing,
                    " ".join(f"{e:.3e}" for e in table.errors)),
                   ("final_error_ratio", table.final_ratio <= 0.25,
                    f"{table.final_ratio:.4f}")]
    return checks, files


def _stage_simulate(ctx: RunContext):
    m = ctx.config["montecarlo"]
    s = _stream(ctx)
    cfg = SimConfig(_kernel(ctx), env.drift(s) if s.n_modes else None, m["delta"], m["dt"],
                    m["T"], m["M"], ctx.config["seed"], m["times"], m["n_batches"])
    stats = simulate(cfg, m["epsilon"])
    d = s.d
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    cols = (["t"] + [f"mean_{i + 1}" for i in range(d)]
            + [f"cov_{i + 1}{j + 1}" for i, j in pairs]
            + [f"mean_se_{i + 1}" for i in range(d)]
            + [f"cov_se_{i + 1}{j + 1}" for i, j in pairs]
            + [f"excess_kurtosis_{i + 1}" for i in range(d)])
    rows = []
    for n, t in enumerate(stats.times):
        rows.append([t] + list(stats.mean[n]) + [stats.cov[n, i, j] for i, j in pairs]
                    + list(stats.mean_se[n]) + [stats.cov_se[n, i, j] for i, j in pairs]
                    + list(stats.excess_kurtosis[n]))
    files = [ctx.table("mc_stats.csv", cols, rows)]
    D, se = effective_diffusivity_mc(stats, tuple(m["window"]))
    summary = [("D_hat", i + 1, j + 1, D[i, j]) for i, j in pairs]
    summary += [("D_hat_se", i + 1, j + 1, se[i, j]) for i, j in pairs]
    checks = []
    try:
        a_bar = _a_bar(ctx, "montecarlo")
    except _Skip as exc:
        a_bar = None
        checks.append(("mc_z_scores", False, str(exc)))
    if a_bar is not None:
        z = np.abs(D - a_bar) / se
        summary += [("a_bar", i + 1, j + 1, a_bar[i, j]) for i, j in pairs]
        summary += [("z_score", i + 1, j + 1, z[i, j]) for i, j in pairs]
        checks.append(("mc_z_scores", bool(np.all(z <= 3)), f"max z={z.max():.3f}"))
    summary += [("jump_count", 0, 0, stats.jump_count),
                ("expected_jumps", 0, 0, stats.expected_jumps),
                ("jump_z", 0, 0, stats.jump_z)]
    files.append(ctx.table("mc_summary.csv", ["quantity", "i", "j", "value"], summary))
    checks.append(("jump_count", abs(stats.jump_z) <= 5, f"z={stats.jump_z:.3f}"))
    return checks, files


_STAGE_FUNCS: dict = {
    "kernel-check": _stage_kernel_check,
    "env-gen": _stage_env_gen,
    "corrector": _stage_corrector,
    "effective": _stage_effective,
    "resolvent-sweep": _stage_resolvent,
    "simulate": _stage_simulate,
}


def run_stage(name: str, ctx: RunContext) -> StageRecord:
    """Run one stage, turning exceptions into a record with an exit code."""
    t0 = time.perf_counter()
    rec = StageRecord(name, "PASS")
    try:
        checks, files = _STAGE_FUNCS[name](ctx)
        rec.checks = [[c, bool(p), d] for c, p, d in checks]
        rec.files = [os.path.relpath(f, ctx.out) for f in files]
        if not all(p for _, p, _ in checks):
            rec.status, rec.exit_code = "FAIL", 1
    except _Skip as exc:
        rec.status, rec.exit_code, rec.message = "SKIPPED", 1, str(exc)
    except ConfigError as exc:
        rec.status, rec.exit_code, rec.message = "ERROR", 2, str(exc)
    except (ConvergenceError, QuadratureError) as exc:
        rec.status, rec.exit_code, rec.message = "ERROR", 3, str(exc)
    except LevyHomError as exc:
        rec.status, rec.exit_code, rec.message = "ERROR", 1, str(exc)
    rec.seconds = time.perf_counter() - t0
    if not rec.passed:
        ctx.failed.add(name)
    log.info("stage %s: %s (%.2fs) %s", name, rec.status, rec.seconds, rec.message)
    return rec


def run(config: ExperimentConfig, write_manifest: bool = True) -> RunManifest:
    """Execute the configured stages in dependency order and write ``manifest.json``."""
    out = config["output"]
    os.makedirs(out, exist_ok=True)
    ctx = RunContext(config, out)
    manifest = RunManifest(config.hash, config["seed"], out)
    for name in STAGES:
        if name in config["stages"]:
            rec = run_stage(name, ctx)
            manifest.stages.append(rec)
            manifest.inventory(os.path.join(out, f) for f in rec.files)
    if write_manifest:
        manifest.write()
    return manifest


# ---------------------------------------------------------------- validate

def _check(rows, name, fn):
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crash is a failed entry, not a crashed suite
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    rows.append((name, bool(passed), f"{detail} [{time.perf_counter() - t0:.2f}s]"))


def validate(hooks: Optional[dict] = None) -> list:
    """Run the fast invariant suites.

    Parameters
    ----------
    hooks : dict, optional
        Test hooks.  ``"corrupt_symbol_table"`` is called with the symbol
        table used by the evenness check before it is compared.

    Returns
    -------
    list of (name, passed, detail)
    """
    hooks = hooks or {}
    rows: list = []
    k14 = LevyKernel(2, 1.4)
    m14 = math.pi / 0.6

    def evenness():
        rng = np.random.default_rng(1)
        xi = rng.normal(size=(64, 2)) * np.geomspace(1e-2, 1e2, 64)[:, None]
        table = k14.symbol_table(np.vstack([xi, -xi]))
        if "corrupt_symbol_table" in hooks:
            hooks["corrupt_symbol_table"](table)
        gap = float(np.max(np.abs(table.psi[:64] - table.psi[64:])))
        grad = float(np.max(np.abs(table.grad_psi[:64] + table.grad_psi[64:])))
        return gap <= 1e-12 * table.psi.max() and grad <= 1e-12 * np.abs(table.grad_psi).max(), \
            f"max |psi(xi)-psi(-xi)|={gap:.2e}"

    def envelope():
        lo, hi, small = envelope_scan(k14)
        return hi / lo < 50 and 0.99 <= small <= 1.01, f"max/min={hi / lo:.3f} small={small:.6f}"

    def symbol_value():
        psi, _ = k14.symbol(np.array([1.0, 0.0]))
        return abs(psi - 2.5808207900) < 1e-8, f"psi(1)={psi:.10f}"

    def second_moment():
        m, _ = k14.second_moment_scalar()
        return abs(m - m14) < 1e-12, f"m={m:.15f}"

    def tails():
        out = []
        for t in (Truncated(), PowerLog(3.0), Exponential(1.0, 1.0)):
            k = LevyKernel(2, 1.4, t)
            K0, lg = example_candidate(k)
            out.append(check_tail_condition(k, 1.0, K0, log_gamma=lg).passed)
        bad = LevyKernel(2, 1.4, PowerLog(1.5), check=False)
        rejected = not check_tail_condition(bad, 1.0, 2.0).passed
        return all(out) and rejected, f"families={out} inadmissible rejected={rejected}"

    rand = env.synthesize(2, modes=6, seed=3)

    def divergence():
        div = float(np.max(np.abs(env.drift(rand).spectral_divergence())))
        return div <= 1e-12, f"{div:.2e}"

    def neutrality():
        g = TorusGrid(2, 32)
        b = env.sample_drift(env.drift(rand), 32)
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(10):
            f = g.dealias(rng.normal(size=g.shape))
            grad = g.gradient(f)
            scale = math.sqrt(g.inner(b, b) * g.inner(grad, grad) * g.inner(f, f))
            val = abs(g.inner(g.advect(b, f), f)) / scale
            worst = max(worst, val)
        return worst <= 1e-12, f"max relative pairing={worst:.2e}"

    def dense_oracle():
        worst = 0.0
        for N in (8, 12):
            pb = CorrectorProblem(TorusGrid(2, N), k14, env.shear(2, amplitude=2.0), tol=1e-13)
            for theta in (0.1, 0.0):
                sol = solve_regularized(pb, theta)
                worst = max(worst, float(np.max(np.abs(sol.phi - dense_reference_solve(pb, theta)))))
        return worst <= 1e-9, f"max diff={worst:.2e}"

    def identity():
        pb = CorrectorProblem(TorusGrid(2, 32), k14, rand)
        sol = solve_regularized(pb, 0.0)
        rep = energy_identity_check(sol)
        return rep.max_gap <= 1e-6, f"gap={rep.max_gap:.2e}"

    def zero_drift():
        s0 = env.StreamField(2, 2 * math.pi, np.zeros((0, 2), dtype=np.int64),
                             np.zeros((0, 2, 2)), np.zeros(0))
        eff = compute_effective(solve_regularized(CorrectorProblem(TorusGrid(2, 16), k14, s0)))
        err = float(np.max(np.abs(eff.a_bar - m14 * np.eye(2))))
        return err <= 1e-8, f"max |A - pi/(2-alpha) I|={err:.2e}"

    def shear_closed_form():
        pb = CorrectorProblem(TorusGrid(2, 16), k14, env.shear(2, amplitude=2.0))
        eff = compute_effective(solve_regularized(pb, 0.0))
        psi1, _ = k14.symbol(np.array([1.0, 0.0]))
        want = np.diag([m14, m14 + 4.0 / psi1])
        err = float(np.max(np.abs(eff.a_bar - want)))
        return err <= 1e-9 and eff.certified, f"err={err:.2e}"

    def random_effective():
        pb = CorrectorProblem(TorusGrid(2, 32), k14, rand)
        eff = compute_effective(solve_regularized(pb, 0.0))
        return eff.certified, f"eigenvalues={eff.eigenvalues.round(6).tolist()}"

    def sublinear():
        pb = CorrectorProblem(TorusGrid(2, 32), k14, rand)
        scan = sublinearity_scan(solve_regularized(pb, 0.0))
        slopes = np.atleast_1d(scan["slope_l2"])
        return bool(np.all(np.abs(slopes - 2.0) <= 0.1)), f"slopes={np.round(slopes, 4).tolist()}"

    def resolvent_bounds():
        pb = ResolventProblem(k14, env.shear(2, amplitude=2.0), 0.5)
        sol = solve_scaled(pb)
        ok = sol.max_principle_ok(pb.lam, pb.tol) and sol.l2_bound_ok(pb.lam, pb.tol)
        return ok, f"sup={sol.sup_norm:.4f} l2={sol.l2_norm:.4f}"

    def zero_drift_resolvent():
        s0 = env.StreamField(2, 2 * math.pi, np.zeros((0, 2), dtype=np.int64),
                             np.zeros((0, 2, 2)), np.zeros(0))
        pb = ResolventProblem(k14, s0, 0.5)
        N = pb.min_grid()
        sol = solve_scaled(pb, N)
        g = sol.grid
        err = ball_error(g, sol.u, solve_homogenized(1.0, pb.source.sample(g), m14 * np.eye(2), g),
                         4.0)
        ref = symbol_comparison_error(pb, N, m14, 4.0)
        rel = abs(err - ref) / ref
        return rel <= 1e-8, f"relative diff={rel:.2e}"

    def transport_only():
        cfg = SimConfig(k14, None, M=64, T=1.0, jumps=False, constant_drift=[0.3, -0.2],
                        start="origin", n_batches=8)
        st = simulate(cfg)
        err = float(np.max(np.abs(st.mean - np.outer(st.times, [0.3, -0.2]))))
        return err <= 1e-12, f"max mean error={err:.2e}"

    def mc_pure_jump():
        cfg = SimConfig(k14, None, M=4000, T=1.0, seed=5, n_batches=16)
        st = simulate(cfg)
        D, se = effective_diffusivity_mc(st, (0.25, 1.0))
        z = np.abs(D - m14 * np.eye(2)) / se
        return bool(np.all(z <= 4)) and abs(st.jump_z) <= 5, f"max z={z.max():.2f}"

    def config_hash():
        from .config import reference_config
        a, b = reference_config(), reference_config()
        return a.hash == b.hash and a.with_overrides(seed=1).hash != a.hash, a.hash[:12]

    for name, fn in [("symbol_evenness", evenness), ("symbol_envelope", envelope),
                     ("symbol_reference_value", symbol_value),
                     ("second_moment_closed_form", second_moment),
                     ("tail_families", tails), ("drift_divergence_free", divergence),
                     ("drift_neutrality", neutrality), ("dense_oracle_N8_N12", dense_oracle),
                     ("energy_identity", identity), ("effective_zero_drift", zero_drift),
                     ("effective_shear_closed_form", shear_closed_form),
                     ("effective_random_certified", random_effective),
                     ("corrector_sublinearity", sublinear),
                     ("resolvent_bounds", resolvent_bounds),
                     ("resolvent_zero_drift_oracle", zero_drift_resolvent),
                     ("mc_transport_only", transport_only), ("mc_pure_jump", mc_pure_jump),
                     ("config_hash_stable", config_hash)]:
        _check(rows, name, fn)
    return rows
