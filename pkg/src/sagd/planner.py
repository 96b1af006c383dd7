"""Search for the (q, tau) pair with the smallest total complexity.

The complexity surface, evaluated with the uniform estimate L_i = L_max, is
the max of two envelopes in q: one monotonically increasing (driven by
expected smoothness), one decreasing-concave-decreasing (driven by the
sketch residual).  Its minimizer over q for a fixed tau therefore lies at
q = 1, at the lower branch-crossing root of the residual, or where the two
envelopes intersect.  The planner enumerates exactly those candidates for
every tau, plus the single-sample baseline, and picks the cheapest.
"""

import math
from dataclasses import dataclass

from .complexity import InterpolationConfig, stepsize, total_complexity
from .exceptions import InvalidInputError
from .problem import SmoothnessProfile

KIND_ONE = "ONE"
KIND_Q_MINUS = "Q_MINUS"
KIND_Q_I1 = "Q_I1"
KIND_Q_I2 = "Q_I2"
KIND_SAGA_BASELINE = "SAGA_BASELINE"


@dataclass(frozen=True)
class PlanCandidate:
    """One (q, tau) candidate with its complexity coefficient and stepsize.

    ``covered`` is False only for branch-root candidates at tau in {2, 3},
    where the root exists but the monotonicity bounds backing the candidate
    family are only established for tau >= 4.
    """

    tau: int
    q_kind: str
    q: float
    omega_coef: float
    alpha: float
    covered: bool = True


@dataclass
class Plan:
    """Planner output: chosen candidate, the whole slate, and the profile."""

    best: PlanCandidate
    all_candidates: list
    saga_omega: float
    n: int
    l_max: float
    l_bar: float
    mu: float


def branch_roots(tau, n):
    """The two q values where the sketch residual switches branch, i.e. the
    roots of q theta(q)^2 = (n / tau)((n - 1) / (tau - 1)).

    Returns ``(q_minus, q_plus)``, or None when tau = 1 (no crossing) or the
    discriminant n tau + 4 (1 - n) is negative (roots are complex).
    """
    if n < 2:
        raise InvalidInputError("need n >= 2")
    if not 1 <= tau <= n:
        raise InvalidInputError(f"need 1 <= tau <= n, got tau={tau}, n={n}")
    if tau == 1:
        return None
    disc = n * tau + 4.0 * (1.0 - n)
    if disc < 0.0:
        return None
    root = math.sqrt(n * tau) * math.sqrt(disc)
    den = 2.0 * (n - 1) * (tau - 1)
    base = n * tau + 2.0 * (1.0 - n)
    return (base - root) / den, (base + root) / den


def tau_window(n, l_max, mu):
    """Validity window endpoints for the envelope intersection points.

    ``tau_min`` is where the low-branch intersection hits q = 1; above
    ``tau_max`` the intersection moves to the high branch.  Both are real
    valued.  When n <= 4 L_max / mu the high-branch window is empty and
    tau_max = n (including the n = 4 L_max / mu boundary, by continuity).
    """
    if mu <= 0.0 or l_max < mu:
        raise InvalidInputError("need mu > 0 and L_max >= mu")
    cond = 4.0 * l_max / mu
    tau_min = n / cond + 1.0 - mu / (4.0 * l_max)
    if n > cond:
        tau_max = min(n * (n - 1) * mu / ((n - cond) * 4.0 * l_max), float(n))
    else:
        tau_max = float(n)
    return tau_min, tau_max


def q_intersections(tau, n, l_max, mu):
    """Intersection of the two complexity envelopes at a given tau.

    Returns ``(kind, q)`` with kind "Q_I1" for tau in [tau_min, tau_max]
    (low-branch residual) or "Q_I2" for tau in (tau_max, n] (high branch);
    None outside both windows, when the defining denominator vanishes, or
    when the value is not a probability.
    """
    if not 2 <= tau <= n:
        raise InvalidInputError(f"need 2 <= tau <= n, got tau={tau}, n={n}")
    tau_min, tau_max = tau_window(n, l_max, mu)
    cond = 4.0 * l_max / mu
    if tau_min <= tau <= tau_max:
        den = (tau - 1) * (tau * cond + 1.0 - n)
        if den == 0.0:
            return None
        q = (n - 1) / den
        kind = KIND_Q_I1
    elif tau_max < tau <= n:
        q = (n - cond) / (cond * (tau - 1))
        kind = KIND_Q_I2
    else:
        return None
    if not 0.0 <= q <= 1.0:
        return None
    return kind, q


def optimal_minibatch_tau(n, mu, l_max):
    """Best minibatch size for the pure-minibatch method (q = 1):
    round(1 + mu (n - 1) / (4 L_max)), half away from zero, clamped to [1, n]."""
    if mu <= 0.0:
        raise InvalidInputError("need mu > 0")
    t = 1.0 + mu * (n - 1) / (4.0 * l_max)
    return min(max(int(math.floor(t + 0.5)), 1), n)


def optimal_plan(profile, n):
    """Enumerate the candidate (q, tau) slate and return the cheapest.

    Complexity coefficients are evaluated with the uniform estimate
    L_i = L_max; the reported stepsize of each candidate uses the true
    profile, so an executed plan is always covered by the convergence
    guarantee.  Ties break toward larger tau (more parallelizable), then
    smaller q.
    """
    if n < 2:
        raise InvalidInputError("planning needs n >= 2")
    l_max = profile.L_max
    mu = profile.mu
    uniform = SmoothnessProfile.uniform(n, l_max, mu, profile.mu_source)

    def make(tau, kind, q, covered=True):
        cfg = InterpolationConfig(q=q, tau=tau, n=n)
        omega = total_complexity(cfg, uniform).omega_coef
        alpha = stepsize(cfg, profile)
        return PlanCandidate(tau, kind, q, omega, alpha, covered)

    candidates = [make(1, KIND_SAGA_BASELINE, 0.0)]

    # q = 1 family: the rounded closed-form tau plus the argmin of an
    # exhaustive scan (they can differ by one when rounding picks the
    # worse neighbor).
    t_round = optimal_minibatch_tau(n, mu, l_max)
    t_scan = min(
        range(1, n + 1),
        key=lambda t: (total_complexity(InterpolationConfig(1.0, t, n), uniform).omega_coef, -t),
    )
    candidates.append(make(t_round, KIND_ONE, 1.0))
    if t_scan != t_round:
        candidates.append(make(t_scan, KIND_ONE, 1.0))

    for tau in range(2, n + 1):
        roots = branch_roots(tau, n)
        if roots is not None and 0.0 <= roots[0] <= 1.0:
            candidates.append(make(tau, KIND_Q_MINUS, roots[0], covered=tau >= 4))
        hit = q_intersections(tau, n, l_max, mu)
        if hit is not None:
            candidates.append(make(tau, hit[0], hit[1]))

    best = min(candidates, key=lambda c: (c.omega_coef, -c.tau, c.q))
    saga = next(c for c in candidates if c.q_kind == KIND_SAGA_BASELINE)
    return Plan(
        best=best,
        all_candidates=candidates,
        saga_omega=saga.omega_coef,
        n=n,
        l_max=l_max,
        l_bar=profile.L_bar,
        mu=mu,
    )
