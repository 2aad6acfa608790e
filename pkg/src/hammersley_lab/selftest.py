"""Quick oracle checks run by ``hammersley-lab selftest``.

Each check compares a fast code path against an independent slow one on a
few hundred small random instances. The full statistical acceptance suite
lives in the test directory; this is the smoke test a user can run after
installing.
"""

from __future__ import annotations

import math

import numpy as np

from . import burgers, hammersley, increasing_seq
from .poisson_plane import PlanarPoint, PointSet, PointStore


def _lis_oracle(rng) -> bool:
    for _ in range(500):
        k = int(rng.integers(0, 11))
        # coarse grid so ties in x or t actually occur
        pts = [PlanarPoint(float(x), float(t)) for x, t in rng.integers(0, 6, size=(k, 2))]
        if increasing_seq.lis_length(pts) != increasing_seq.lis_length_bruteforce(pts):
            return False
    return True


def _gamma_inverse(rng) -> bool:
    for _ in range(100):
        store = PointStore(int(rng.integers(0, 2 ** 31)))
        a, s = float(rng.uniform(-20, 20)), float(rng.uniform(0, 5))
        tau, m = float(rng.uniform(1, 8)), int(rng.integers(1, 8))
        h = increasing_seq.gamma(store, (a, s), m, tau, 200.0)
        if not math.isfinite(h):
            continue
        if increasing_seq.L(store, a, s, a + h, s + tau) < m:
            return False
        if increasing_seq.L(store, a, s, a + math.nextafter(h, -math.inf), s + tau) >= m:
            return False
    return True


def _dual_construction(rng) -> bool:
    for _ in range(10):
        store = PointStore(int(rng.integers(0, 2 ** 31)))
        z0 = hammersley.ParticleConfig(0, np.concatenate([[0.0], np.cumsum(rng.exponential(1.0, 59))]))
        a = hammersley.evolve_event_driven(z0, store, 3.0)
        b = hammersley.evolve_variational_config(z0, store, 3.0)
        if not np.array_equal(a.positions, b.positions):
            return False
    return True


def _covariance(rng) -> bool:
    for _ in range(10):
        pts = PointSet(rng.uniform(0, 30, 200), rng.uniform(0, 5, 200))
        z0 = hammersley.ParticleConfig(0, np.concatenate([[0.0], np.cumsum(rng.exponential(1.0, 29))]))
        if not hammersley.scaling_covariance_check(z0, pts, 5.0, 2.0):
            return False
    return True


def _hopf_lax_grid(rng) -> bool:
    for _ in range(50):
        xs = np.sort(rng.uniform(-3, 3, 4))
        v0 = burgers.linear_interp(xs, rng.uniform(-1, 1, 4))
        V0 = v0.antiderivative(0.0)
        x, t = float(rng.uniform(-3, 3)), float(rng.uniform(0.1, 2))
        grid = np.linspace(-15, 15, 300001)
        brute = float(np.min(V0(grid) + (x - grid) ** 2 / (4 * t)))
        # the grid minimum sits above the true one by at most spacing^2 scale
        if not -1e-12 <= brute - burgers.V(V0, x, t) <= 1e-6:
            return False
    return True


def _riemann(rng) -> bool:
    V0 = burgers.step([0.0], [1.0, 0.0]).antiderivative(0.0)
    t = 1.0
    for x in rng.uniform(-3, 3, 50):
        want = 1.0 if x < t else 0.0
        if abs(burgers.entropy_solution(V0, float(x), t) - want) > 1e-10:
            return False
    V0 = burgers.step([0.0], [0.0, 1.0]).antiderivative(0.0)
    for x in rng.uniform(-3, 3, 50):
        want = min(max(x / (2 * t), 0.0), 1.0)
        if abs(burgers.entropy_solution(V0, float(x), t) - want) > 1e-10:
            return False
    return True


def _rate_identities(rng) -> bool:
    return (increasing_seq.rate_I(2.0).value == 0.0
            and abs(increasing_seq.rate_I(2 * math.cosh(1.0)).value - 4 / math.e) <= 1e-12)


CHECKS = {
    "lis_oracle": _lis_oracle,
    "gamma_inverse": _gamma_inverse,
    "dual_construction": _dual_construction,
    "scaling_covariance": _covariance,
    "hopf_lax_grid": _hopf_lax_grid,
    "riemann_problems": _riemann,
    "rate_identities": _rate_identities,
}


def run_all(seed: int = 0, echo=None) -> list[str]:
    """Run every check; returns the names of the ones that failed."""
    failed = []
    for index, (name, check) in enumerate(CHECKS.items()):
        ok = check(np.random.default_rng([seed, index]))
        if echo is not None:
            echo(f"{'PASS' if ok else 'FAIL'} {name}")
        if not ok:
            failed.append(name)
    return failed
