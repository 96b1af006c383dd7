"""Self-check suites: closed forms against enumeration oracles, and the
shape properties of the complexity envelopes that the planner relies on.

Each suite returns a :class:`SuiteResult` listing every offending tuple, so
a failure pinpoints the (n, tau, q) combination that broke.  The ``*_fn``
parameters exist so tests can inject a perturbed implementation and assert
that the suite actually catches it; production callers leave them at None.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import complexity, planner, sketch_oracle
from .numerics import SeededRng
from .problem import SmoothnessProfile

DEFAULT_Q_GRID = tuple(i / 20 for i in range(21))


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: int
    failures: list = field(default_factory=list)
    elapsed: float = 0.0

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        line = f"{status} {self.name}: {self.checks} checks in {self.elapsed:.2f}s"
        if self.failures:
            line += f", {len(self.failures)} failures"
        return line


def check_constants_against_oracles(
    n_max=8,
    q_grid=DEFAULT_Q_GRID,
    levels_per_pair=20,
    seed=20240801,
    rho_fn=None,
    smoothness_fn=None,
    theta_fn=None,
):
    """Compare every closed-form sampling constant with its enumeration.

    Grid: n in {2..n_max}, tau in {1..n}, q over ``q_grid``.  Tolerances:
    bias correction and projector mean to 1e-12, sketch residual to
    1e-9 * max(1, oracle), expected smoothness to 1e-9 relative over
    ``levels_per_pair`` random smoothness vectors per (n, tau).
    """
    rho_fn = rho_fn or (lambda cfg: complexity.sketch_residual(cfg)[0])
    smoothness_fn = smoothness_fn or complexity.expected_smoothness
    theta_fn = theta_fn or complexity.theta
    rng = SeededRng(seed)
    failures = []
    checks = 0
    start = time.perf_counter()
    for n in range(2, n_max + 1):
        for tau in range(1, n + 1):
            level_sets = [
                np.array([0.5 + rng.uniform() for _ in range(n)])
                for _ in range(levels_per_pair)
            ]
            for q in q_grid:
                cfg = complexity.InterpolationConfig(q=q, tau=tau, n=n)
                checks += 1
                th = theta_fn(cfg)
                th_oracle = sketch_oracle.oracle_bias_correction(n, tau, q)
                if abs(th - th_oracle) > 1e-12 * max(1.0, th_oracle):
                    failures.append(f"theta(n={n},tau={tau},q={q:.2f})")
                mean = sketch_oracle.oracle_expected_projection(n, tau, q)
                expected = np.eye(n) / th_oracle
                if np.max(np.abs(mean - expected)) > 1e-12:
                    failures.append(f"projector-mean(n={n},tau={tau},q={q:.2f})")
                rho = rho_fn(cfg)
                rho_oracle = sketch_oracle.oracle_sketch_residual(n, tau, q)
                if abs(rho - rho_oracle) > 1e-9 * max(1.0, rho_oracle):
                    failures.append(f"residual(n={n},tau={tau},q={q:.2f})")
                for k, levels in enumerate(level_sets):
                    profile = SmoothnessProfile(
                        levels, float(levels.max()), float(levels.mean()), 1e-3, "lambda-lower-bound"
                    )
                    l1 = smoothness_fn(cfg, profile)
                    l1_oracle = sketch_oracle.oracle_expected_smoothness(n, tau, q, levels)
                    if abs(l1 - l1_oracle) > 1e-9 * max(1.0, abs(l1_oracle)):
                        failures.append(
                            f"smoothness(n={n},tau={tau},q={q:.2f},levels={k})"
                        )
    return SuiteResult(
        name="constants-vs-oracles",
        passed=not failures,
        checks=checks,
        failures=failures,
        elapsed=time.perf_counter() - start,
    )


def _envelopes(n, tau, profile):
    """Both complexity envelope values at every grid q, as arrays."""
    qs = np.arange(0.0, 1.0 + 1e-12, 1e-3)
    qs[-1] = 1.0
    g_smooth = np.empty(qs.size)
    g_resid = np.empty(qs.size)
    for i, q in enumerate(qs):
        mc = complexity.total_complexity(
            complexity.InterpolationConfig(q=float(q), tau=tau, n=n), profile
        )
        g_smooth[i] = mc.smoothness_term
        g_resid[i] = mc.residual_term
    return qs, g_smooth, g_resid


def check_envelope_shapes(
    n_values=(10, 100, 1000),
    cond_values=(0.5, 2.0),
    taus_per_n=12,
    rho_fn=None,
):
    """Shape properties of the complexity envelopes on dense q grids.

    For each n and condition setting (4 L_max / mu = cond * (n - 1)):
    the smoothness envelope is nondecreasing in q; the residual envelope is
    nonincreasing outside the branch window [q-, q+] and concave strictly
    inside it; the branch roots solve their defining equation to 1e-9
    relative; each intersection candidate equates the envelopes to 1e-6
    relative; and q-/q+ obey the closed-form bound chain for tau >= 4.
    Slacks are relative to the local envelope magnitude.
    """
    failures = []
    checks = 0
    start = time.perf_counter()
    use_perturbed = rho_fn is not None
    for n in n_values:
        taus = sorted(
            {4, 5, 6, 8}
            | {min(n, max(4, round(n ** (k / (taus_per_n - 1.0)))) ) for k in range(taus_per_n)}
            | {n}
        )
        taus = [t for t in taus if 4 <= t <= n]
        for cond_scale in cond_values:
            l_max = 1.0
            mu = 4.0 * l_max / (cond_scale * (n - 1))
            profile = SmoothnessProfile.uniform(n, l_max, mu)
            for tau in taus:
                checks += 1
                roots = planner.branch_roots(tau, n)
                if roots is None:
                    failures.append(f"missing-roots(n={n},tau={tau})")
                    continue
                q_minus, q_plus = roots
                threshold = (n / tau) * ((n - 1) / (tau - 1))
                for root in roots:
                    th = n / (root * (tau - 1) + 1.0)
                    if abs(root * th * th - threshold) > 1e-9 * threshold:
                        failures.append(f"root-residual(n={n},tau={tau},q={root:.4f})")
                low = 1.0 / (n - 1) ** 2
                cap = (n + 1 - 2 * math.sqrt(n)) / (3 * (n - 1))
                cap_plus = (n + 1 + 2 * math.sqrt(n)) / (3 * (n - 1))
                chain = (
                    low <= q_minus + 1e-9
                    and q_minus <= cap + 1e-9
                    and cap <= 1.0 / 3.0 + 1e-9
                    and 1.0 / 3.0 <= cap_plus + 1e-9
                    and cap_plus <= q_plus + 1e-9
                    and q_plus <= 1.0 + 1e-9
                )
                if not chain:
                    failures.append(f"root-bounds(n={n},tau={tau})")

                qs, g_smooth, g_resid = _envelopes(n, tau, profile)
                if use_perturbed:
                    for i, q in enumerate(qs):
                        cfg = complexity.InterpolationConfig(q=float(q), tau=tau, n=n)
                        rho = rho_fn(cfg)
                        cost = cfg.cost_per_iter
                        g_resid[i] = (n / cost + 4.0 * rho * l_max / (mu * n)) * cost
                scale = max(1.0, float(np.max(np.abs(g_resid))))
                d_smooth = np.diff(g_smooth)
                if np.min(d_smooth) < -1e-9 * max(1.0, float(np.max(np.abs(g_smooth)))):
                    failures.append(f"smoothness-envelope-decreasing(n={n},tau={tau})")
                outside = (qs[1:] <= q_minus) | (qs[:-1] >= q_plus)
                d_resid = np.diff(g_resid)
                if np.any(d_resid[outside] > 1e-9 * scale):
                    failures.append(f"residual-envelope-increasing(n={n},tau={tau})")
                # strict interior: the residual has a derivative kink exactly
                # at the branch roots, so skip one grid step at each end
                h = qs[1] - qs[0]
                inner = (qs[1:-1] > q_minus + h) & (qs[1:-1] < q_plus - h)
                second = g_resid[2:] - 2.0 * g_resid[1:-1] + g_resid[:-2]
                if np.any(second[inner] > 1e-9 * scale):
                    failures.append(f"residual-envelope-not-concave(n={n},tau={tau})")
            # intersection candidates across the whole tau range
            for tau in range(2, n + 1, max(1, (n - 2) // 40 or 1)):
                hit = planner.q_intersections(tau, n, l_max, mu)
                if hit is None:
                    continue
                checks += 1
                cfg = complexity.InterpolationConfig(q=hit[1], tau=tau, n=n)
                mc = complexity.total_complexity(cfg, profile)
                gap = abs(mc.smoothness_term - mc.residual_term)
                if gap > 1e-6 * max(mc.smoothness_term, mc.residual_term):
                    failures.append(f"intersection-gap(n={n},tau={tau},q={hit[1]:.4f})")
    return SuiteResult(
        name="envelope-shapes",
        passed=not failures,
        checks=checks,
        failures=failures,
        elapsed=time.perf_counter() - start,
    )


def run_all(n_max=8):
    """Run every suite at its default grid."""
    return [
        check_constants_against_oracles(n_max=n_max),
        check_envelope_shapes(),
    ]
