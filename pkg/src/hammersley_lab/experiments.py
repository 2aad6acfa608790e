"""Monte-Carlo harnesses for the perturbation-of-equilibrium scaling laws.

Every experiment builds, per seed, an initial particle configuration from
local-equilibrium sticks anchored at ``z(0,0) = 0`` and a :class:`PointStore`
keyed by the same seed. The point store does not depend on ``n``, so an n-sweep
runs all scales on one realization of the space-time points, as the
almost-sure statements are formulated. The limit theorems are almost-sure;
what is tested here is convergence of means and per-seed residuals along an
n-sweep.

Tagged-particle quantities use the variational construction restricted to the
index window of :class:`WindowPolicy`. The test-function statistic needs
every particle in a macroscopic window and uses the event-driven
construction by default; both constructions agree exactly on the finite
model.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats

from . import burgers
from .burgers import PiecewisePoly
from .hammersley import (ParticleConfig, WindowPolicy, evolve_event_driven,
                         evolve_variational, tagged_position)
from .poisson_plane import PointStore
from .sticks import PerturbationProfile, sample_local_equilibrium, sticks_to_particles

CSV_VERSION_LINE = "# hammersley-lab v1"
RESULT_COLUMNS = ["experiment", "n", "nu", "beta", "q", "t", "x", "y", "seed",
                  "statistic", "target", "residual", "normalized_residual"]
SUMMARY_COLUMNS = ["experiment", "n", "count", "mean_statistic", "target",
                   "mean_residual", "se_residual", "mean_abs_residual", "se_abs_residual",
                   "mean_normalized", "se_normalized", "max_widenings"]
SURROGATE_NOTE = ("almost-sure limits tested as convergence of means and per-seed "
                  "residuals along an n sweep")

DEFAULT_DELTA = 0.05
EXPERIMENTS = ("thm1", "thm2", "thm3", "thm4", "benchmark")


class CaseMismatch(ValueError):
    """Requested theorem case is inconsistent with (nu, beta)."""


def _floor(v: float) -> int:
    # guard against 15.999999... from pow() on exactly representable products
    return math.floor(v + 1e-9 * max(1.0, abs(v)))


def translation(n: int, nu: float, q: float, t: float) -> int:
    """Lattice shift ``[2 n^nu q t]`` that centers the variational minimizer."""
    return _floor(2.0 * n ** nu * q * t)


def error_exponent(nu: float, beta: float) -> float:
    return max(nu - 2.0 * beta, nu / 3.0)


@dataclass(frozen=True)
class ScalingParams:
    n: int
    nu: float
    beta: float
    q: float
    t: float
    x: float = 0.0
    y: float = 1.0
    seeds: tuple = (0,)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.nu < 1:
            raise ValueError("nu must be >= 1")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.q <= 0:
            raise ValueError("q must be > 0")
        if self.t < 0:
            raise ValueError("t must be >= 0")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def time(self) -> float:
        return self.n ** self.nu * self.t

    @property
    def shift(self) -> int:
        return translation(self.n, self.nu, self.q, self.t)

    @property
    def case_flags(self) -> dict:
        return {
            "nu_vs_1_plus_beta": _cmp(self.nu, 1.0 + self.beta),
            "nu_vs_3beta": _cmp(self.nu, 3.0 * self.beta),
        }

    def profile(self, v0: PiecewisePoly) -> PerturbationProfile:
        return PerturbationProfile(self.q, self.beta, self.n, v0)

    def with_n(self, n: int) -> ScalingParams:
        return replace(self, n=n)


def _cmp(a, b, tol=1e-12):
    if abs(a - b) <= tol:
        return "="
    return ">" if a > b else "<"


@dataclass
class ExperimentRow:
    experiment: str
    n: int
    nu: float
    beta: float
    q: float
    t: float
    x: float
    y: float
    seed: int
    statistic: float
    target: float
    residual: float
    normalized_residual: float
    widenings: int = 0


@dataclass
class ExperimentResult:
    experiment: str
    rows: list = field(default_factory=list)
    fitted_exponent: tuple | None = None
    metadata: dict = field(default_factory=lambda: {"surrogate": SURROGATE_NOTE})

    def ns(self) -> list[int]:
        return sorted({r.n for r in self.rows})

    def column(self, name: str, n: int | None = None) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows if n is None or r.n == n], dtype=float)

    def summary(self) -> list[dict]:
        out = []
        for n in self.ns():
            res = self.column("residual", n)
            norm = self.column("normalized_residual", n)
            out.append({
                "experiment": self.experiment,
                "n": n,
                "count": res.size,
                "mean_statistic": float(self.column("statistic", n).mean()),
                "target": float(self.column("target", n).mean()),
                "mean_residual": float(res.mean()),
                "se_residual": _se(res),
                "mean_abs_residual": float(np.abs(res).mean()),
                "se_abs_residual": _se(np.abs(res)),
                "mean_normalized": float(norm.mean()),
                "se_normalized": _se(norm),
                "max_widenings": int(max(r.widenings for r in self.rows if r.n == n)),
            })
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(CSV_VERSION_LINE + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_COLUMNS)
            for r in self.rows:
                d = asdict(r)
                w.writerow([_fmt(d[c]) for c in RESULT_COLUMNS])

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(CSV_VERSION_LINE + "\n")
            fh.write(f"# {SURROGATE_NOTE}\n")
            if self.fitted_exponent is not None:
                fh.write(f"# fitted_exponent={_fmt(self.fitted_exponent[0])} "
                         f"se={_fmt(self.fitted_exponent[1])}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            for s in self.summary():
                w.writerow([_fmt(s[c]) for c in SUMMARY_COLUMNS])


def _se(a: np.ndarray) -> float:
    return float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else math.nan


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# instance construction -------------------------------------------------------

def _seed_sequence(seed: int, n: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, n, 0x5EED])


def initial_particles(profile: PerturbationProfile, lo: int, hi: int, seed: int) -> ParticleConfig:
    """Particles on labels ``lo..hi`` (extended to contain 0) with ``z(0,0) = 0``."""
    lo, hi = min(lo, 0), max(hi, 0)
    if hi == lo:
        hi = lo + 1
    eta = sample_local_equilibrium(profile, range(lo + 1, hi + 1), _seed_sequence(seed, profile.n))
    return sticks_to_particles(eta, 0, 0.0)


def point_store(seed: int) -> PointStore:
    return PointStore(seed)


def _variational_positions(params: ScalingParams, profile: PerturbationProfile, seed: int,
                           labels: Sequence[int], policy: WindowPolicy,
                           store=None) -> tuple[dict, ParticleConfig, int]:
    K = params.shift
    W = policy.max_half_width(params.n)
    z0 = initial_particles(profile, min(labels) - K - W - 1, max(labels), seed)
    store = point_store(seed) if store is None else store
    res = evolve_variational(z0, store, params.time, labels, policy, params.n, shift=K)
    widen = max(res.widenings.values()) if res.widenings else 0
    return res.positions, z0, widen


def default_policy(params: ScalingParams) -> WindowPolicy:
    return WindowPolicy(params.nu, params.beta)


def _row(name, params, seed, statistic, target, residual, scale, widenings=0):
    return ExperimentRow(name, params.n, params.nu, params.beta, params.q, params.t,
                         params.x, params.y, seed, float(statistic), float(target),
                         float(residual), float(residual / scale), int(widenings))


def _check_profile(params: ScalingParams, profile: PerturbationProfile):
    if (profile.n, profile.q, profile.beta) != (params.n, params.q, params.beta):
        raise ValueError("profile (n, q, beta) must match the scaling parameters")


# the theorems -----------------------------------------------------------------

def thm1_residual(params: ScalingParams, profile: PerturbationProfile,
                  policy: WindowPolicy | None = None, delta: float = DEFAULT_DELTA,
                  seeds=None) -> list[ExperimentRow]:
    """Translated window stick sum minus the initial window stick sum, per seed."""
    _check_profile(params, profile)
    policy = policy or default_policy(params)
    K = params.shift
    nx, ny = _floor(params.n * params.x), _floor(params.n * params.y)
    scale = params.n ** (error_exponent(params.nu, params.beta) + delta)
    rows = []
    for seed in (params.seeds if seeds is None else seeds):
        pos, z0, widen = _variational_positions(params, profile, seed, [K + nx, K + ny], policy)
        stat = pos[K + ny] - pos[K + nx]
        target = tagged_position(z0, ny) - tagged_position(z0, nx)
        rows.append(_row("thm1", params, seed, stat, target, stat - target, scale, widen))
    return rows


def benchmark_residual(params: ScalingParams, profile: PerturbationProfile,
                       K: int | None = None, policy: WindowPolicy | None = None,
                       delta: float = DEFAULT_DELTA, seeds=None) -> list[ExperimentRow]:
    """Window stick sum translated by ``K`` (default the natural shift) minus ``nq(y-x)``."""
    _check_profile(params, profile)
    policy = policy or default_policy(params)
    K = params.shift if K is None else int(K)
    nx, ny = _floor(params.n * params.x), _floor(params.n * params.y)
    scale = params.n ** (max(0.5, 1.0 - params.beta) + delta)
    target = params.n * params.q * (params.y - params.x)
    rows = []
    for seed in (params.seeds if seeds is None else seeds):
        pos, _, widen = _variational_positions(params, profile, seed, [K + nx, K + ny], policy)
        stat = pos[K + ny] - pos[K + nx]
        rows.append(_row("benchmark", params, seed, stat, target, stat - target, scale, widen))
    return rows


def _support_labels(phi: PiecewisePoly, n: int) -> tuple[int, int]:
    c = phi.coeffs
    if np.any(c[0] != 0) or np.any(c[-1] != 0):
        raise ValueError("test function must be compactly supported")
    lo, hi = phi.breakpoints[0], phi.breakpoints[-1]
    return math.ceil(n * lo), math.floor(n * hi)


def thm2_target(v0: PiecewisePoly, phi: PiecewisePoly, t: float) -> float:
    """``int phi(x) v(x,t) dx`` for the Burgers solution started from ``v0``."""
    return burgers.integrate_against(phi, v0.antiderivative(0.0), t)


def thm2_statistic(params: ScalingParams, profile: PerturbationProfile, phi: PiecewisePoly,
                   policy: WindowPolicy | None = None, method: str = "event",
                   seeds=None, buffer_factor: float = 1.0) -> list[ExperimentRow]:
    """``n^{beta-1} sum_i (eta(K+i, T) - q) phi(i/n)`` per seed, with its Burgers target.

    Forces ``nu = 1 + beta``. ``method`` selects the construction used to reach
    time ``T``: ``"event"`` replays every point once, ``"variational"`` runs the
    windowed minimization for each label in the test function's support.
    """
    _check_profile(params, profile)
    params = replace(params, nu=1.0 + params.beta)
    policy = policy or default_policy(params)
    if not 0.0 < params.beta < 0.5:
        warnings.warn(f"beta={params.beta} is outside (0, 1/2); no Burgers limit is expected")
    n, q, K = params.n, params.q, params.shift
    i_lo, i_hi = _support_labels(phi, n)
    idx = np.arange(i_lo, i_hi + 1)
    weights = phi(idx / n)
    target = thm2_target(profile.v0, phi, params.t)
    rows = []
    for seed in (params.seeds if seeds is None else seeds):
        widen = 0
        if method == "event":
            buffer = math.ceil(buffer_factor * policy.half_width(n))
            z0 = initial_particles(profile, i_lo - 1 - buffer, K + i_hi, seed)
            zt = evolve_event_driven(z0, point_store(seed), params.time)
            pos = zt.positions
            base = K + i_lo - 1 - zt.i_min
            z_win = pos[base: base + idx.size + 1]
        elif method == "variational":
            labels = list(range(K + i_lo - 1, K + i_hi + 1))
            res, _, widen = _variational_positions(params, profile, seed, labels, policy)
            z_win = np.array([res[k] for k in labels])
        else:
            raise ValueError(f"unknown method {method!r}")
        eta = np.diff(z_win)
        stat = n ** (params.beta - 1.0) * float(np.dot(eta - q, weights))
        rows.append(_row("thm2", params, seed, stat, target, stat - target, 1.0, widen))
    return rows


def thm3_residual(params: ScalingParams, profile: PerturbationProfile,
                  policy: WindowPolicy | None = None, delta: float = DEFAULT_DELTA,
                  seeds=None) -> list[ExperimentRow]:
    """``z([nx]+K, T) - T q^2 - z([nx], 0)`` per seed."""
    _check_profile(params, profile)
    policy = policy or default_policy(params)
    K = params.shift
    nx = _floor(params.n * params.x)
    scale = params.n ** (error_exponent(params.nu, params.beta) + delta)
    rows = []
    for seed in (params.seeds if seeds is None else seeds):
        pos, z0, widen = _variational_positions(params, profile, seed, [nx + K], policy)
        stat = pos[nx + K]
        target = params.time * params.q ** 2 + tagged_position(z0, nx)
        rows.append(_row("thm3", params, seed, stat, target, stat - target, scale, widen))
    return rows


def thm4_prediction(params: ScalingParams, profile: PerturbationProfile, case: int) -> tuple[float, float]:
    """Deterministic correction ``P_n`` and the error scale of the chosen case."""
    n, nu, beta, t, x = params.n, params.nu, params.beta, params.t, params.x
    flags = params.case_flags
    if flags["nu_vs_3beta"] != ">":
        raise CaseMismatch(f"need nu > 3 beta, got nu={nu}, beta={beta}")
    want = {1: ">", 2: "=", 3: "<"}
    if case not in want:
        raise CaseMismatch(f"case must be 1, 2 or 3, got {case}")
    if flags["nu_vs_1_plus_beta"] != want[case]:
        raise CaseMismatch(f"case {case} needs nu {want[case]} 1+beta, got nu={nu}, beta={beta}")
    V0 = profile.V0
    if case == 1:
        vm, vp = burgers.slopes_at_infinity(V0)
        return n ** (nu - 2 * beta) * burgers.asymptotic_profile_value(vm, vp, 0.0, t), n ** (nu - 2 * beta)
    if case == 2:
        return n ** (1 - beta) * burgers.V(V0, x, t), n ** (1 - beta)
    return n ** (1 - beta) * V0(x), n ** (max(0.5, nu - 2 * beta) + DEFAULT_DELTA)


def thm4_residual(params: ScalingParams, profile: PerturbationProfile, case: int,
                  policy: WindowPolicy | None = None, seeds=None) -> list[ExperimentRow]:
    """``z([nx]+K, T) - T q^2 - n x q - P_n`` per seed, normalized by the case's scale."""
    _check_profile(params, profile)
    P_n, scale = thm4_prediction(params, profile, case)
    policy = policy or default_policy(params)
    K = params.shift
    nx = _floor(params.n * params.x)
    rows = []
    for seed in (params.seeds if seeds is None else seeds):
        pos, z0, widen = _variational_positions(params, profile, seed, [nx + K], policy)
        stat = pos[nx + K]
        target = params.time * params.q ** 2 + params.n * params.x * params.q + P_n
        rows.append(_row(f"thm4_case{case}", params, seed, stat, target, stat - target, scale, widen))
    return rows


# sweeps -------------------------------------------------------------------------

def fit_error_exponent(pairs: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope of ``log|r|`` against ``log n`` and its standard error."""
    ns = np.array([p[0] for p in pairs], dtype=float)
    rs = np.abs(np.array([p[1] for p in pairs], dtype=float))
    if np.unique(ns).size < 3:
        raise ValueError("need at least three distinct n")
    if np.any(rs <= 0):
        raise ValueError("residual summaries must be nonzero")
    fit = stats.linregress(np.log(ns), np.log(rs))
    return float(fit.slope), float(fit.stderr)


def _run_cell(args):
    name, params, v0, kwargs, seeds = args
    profile = params.profile(v0)
    fn = {"thm1": thm1_residual, "thm2": thm2_statistic, "thm3": thm3_residual,
          "thm4": thm4_residual, "benchmark": benchmark_residual}[name]
    return fn(params, profile, seeds=seeds, **kwargs)


def run_sweep(name: str, base: ScalingParams, ns: Sequence[int], v0: PiecewisePoly,
              workers: int = 1, fit: bool = False, **kwargs) -> ExperimentResult:
    """Run one experiment across ``ns`` and every seed of ``base``.

    Work is split into (n, seed) cells; results are reassembled in (n, seed)
    order, so the rows do not depend on ``workers``.
    """
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
    cells = [(name, base.with_n(n), v0, kwargs, [s]) for n in ns for s in base.seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_run_cell, cells))
    else:
        parts = [_run_cell(c) for c in cells]
    result = ExperimentResult(name, [r for part in parts for r in part])
    if name == "thm4":
        result.experiment = f"thm4_case{kwargs.get('case')}"
    if fit:
        result.fitted_exponent = fit_error_exponent(
            [(s["n"], s["mean_abs_residual"]) for s in result.summary()])
    return result
