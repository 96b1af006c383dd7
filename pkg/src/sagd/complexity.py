"""Closed-form complexity calculus for the SAGA/minibatch-SAGA interpolation.

Every quantity here is a function of the sampling law alone (probability q
of taking a tau-minibatch step instead of a single-sample step) and of the
smoothness profile (L_i, L_max, L_bar, mu).  The enumeration oracles in
:mod:`sagd.sketch_oracle` recompute the sampling-dependent quantities by
brute force; the two routes are compared in the verification suites.
"""

from dataclasses import dataclass

from .exceptions import InvalidInputError

BRANCH_LOW = "low"
BRANCH_HIGH = "high"
BRANCH_BOUNDARY = "boundary"

REGIME_WELL = "well"
REGIME_BAD = "bad"


@dataclass(frozen=True)
class InterpolationConfig:
    """Sampling law: minibatches of size tau with probability q, single
    uniformly chosen samples otherwise, over n samples."""

    q: float
    tau: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("need n >= 1")
        if not 0.0 <= self.q <= 1.0:
            raise InvalidInputError(f"q must be in [0, 1], got {self.q}")
        if not 1 <= self.tau <= self.n:
            raise InvalidInputError(f"need 1 <= tau <= n, got tau={self.tau}, n={self.n}")

    @property
    def cost_per_iter(self):
        """Expected gradient evaluations per step: q (tau - 1) + 1."""
        return self.q * (self.tau - 1) + 1.0


@dataclass(frozen=True)
class MethodConstants:
    """Everything the stepsize and complexity of one (q, tau) depend on."""

    theta: float                 # bias-correction factor n / (q (tau - 1) + 1)
    cost_per_iter: float         # expected gradient evaluations per step
    expected_smoothness: float   # second-moment bound for the gradient estimator
    jacobian_smoothness: float   # second-moment bound for the table update
    stochastic_condition: float  # smallest eigenvalue of the sampling projector mean
    sketch_residual: float       # excess variance of the corrected sampling
    residual_branch: str         # "low" | "high" | "boundary"
    stepsize: float
    smoothness_term: float       # complexity branch driven by expected smoothness
    residual_term: float         # complexity branch driven by the sketch residual
    omega_coef: float            # max of the two branches; total cost / log(1/eps)


def theta(cfg):
    """Bias-correction factor making the gradient estimator unbiased."""
    return cfg.n / cfg.cost_per_iter


def expected_smoothness(cfg, profile):
    """Smoothness constant bounding the estimator's second moment.

    Equals L_max exactly in the single-sample limits (q = 0 or tau = 1) and
    interpolates toward the full-gradient value as q tau grows.
    """
    n, tau, q = cfg.n, cfg.tau, cfg.q
    if n == 1:
        return profile.L_max
    cost = cfg.cost_per_iter
    lead = (q * (tau * (n - tau) / (n - 1) - 1.0) + 1.0) * profile.L_max
    mix = n * q * tau * (tau - 1) / (n - 1) * profile.L_bar
    return (lead + mix) / (cost * cost)


def sketch_residual(cfg):
    """Excess variance of the bias-corrected sampling, with its branch.

    The residual is the largest eigenvalue of a two-eigenvalue circulant
    matrix; which eigenvalue wins flips where q theta^2 crosses
    (n / tau)((n - 1) / (tau - 1)).  For tau = 1 the threshold is infinite
    and the low branch always applies.  Within a 1e-12 relative band of the
    crossing both expressions agree and the branch reports "boundary".
    """
    n, tau, q = cfg.n, cfg.tau, cfg.q
    if n == 1:
        return 0.0, BRANCH_BOUNDARY
    th = theta(cfg)
    low = th * th * ((1.0 - q) / n + q * (tau / n) * ((n - tau) / (n - 1)))
    if tau == 1:
        return low, BRANCH_LOW
    t = q * th * th
    threshold = (n / tau) * ((n - 1) / (tau - 1))
    if abs(t - threshold) <= 1e-12 * max(1.0, threshold):
        return low, BRANCH_BOUNDARY
    if t < threshold:
        return low, BRANCH_LOW
    high = low + n * (th * th * q * (tau / n) * ((tau - 1) / (n - 1)) - 1.0)
    return high, BRANCH_HIGH


def jacobian_smoothness(cfg, l_max):
    """Smoothness constant for the sketched table update: L_max (q (tau-1) + 1)."""
    return l_max * cfg.cost_per_iter


def stepsize(cfg, profile):
    """Largest stepsize covered by the convergence guarantee."""
    l1 = expected_smoothness(cfg, profile)
    rho, _ = sketch_residual(cfg)
    th = theta(cfg)
    n = cfg.n
    return min(
        1.0 / (4.0 * l1),
        n / (4.0 * profile.L_max * rho + profile.mu * th * n),
    )


def total_complexity(cfg, profile):
    """All method constants for one (q, tau), including the complexity
    coefficient omega_coef = expected gradient evaluations / log(1/eps)."""
    n = cfg.n
    mu = profile.mu
    l_max = profile.L_max
    cost = cfg.cost_per_iter
    th = theta(cfg)
    l1 = expected_smoothness(cfg, profile)
    rho, branch = sketch_residual(cfg)
    g_smooth = (4.0 * l1 / mu) * cost
    g_resid = (th + 4.0 * rho * l_max / (mu * n)) * cost
    alpha = min(1.0 / (4.0 * l1), n / (4.0 * l_max * rho + mu * th * n))
    return MethodConstants(
        theta=th,
        cost_per_iter=cost,
        expected_smoothness=l1,
        jacobian_smoothness=jacobian_smoothness(cfg, l_max),
        stochastic_condition=1.0 / th,
        sketch_residual=rho,
        residual_branch=branch,
        stepsize=alpha,
        smoothness_term=g_smooth,
        residual_term=g_resid,
        omega_coef=max(g_smooth, g_resid),
    )


@dataclass(frozen=True)
class FullBatchInterpolation:
    """Closed-form (q, stepsize, complexity) for the tau = n special case,
    where the minibatch step is a full gradient step."""

    q: float
    alpha: float
    omega_coef: float
    regime: str


def full_batch_interpolation(profile, n):
    """Closed-form interpolation parameters for tau = n.

    Two conditioning regimes, split at 4 L_bar / mu = n - 1.  Well
    conditioned picks q = 1/(n-1)^2; badly conditioned picks
    q = mu / (4 n L_bar).  Both choices give a strictly better complexity
    coefficient than the single-sample baseline n + 4 L_max / mu.
    """
    if n <= 2:
        raise InvalidInputError("closed forms need n >= 3")
    mu = profile.mu
    l_max = profile.L_max
    l_bar = profile.L_bar
    cond = 4.0 * l_bar / mu
    if cond <= n - 1:
        q = 1.0 / (n - 1) ** 2
        alpha = 1.0 / (4.0 * (1.0 - 2.0 / n) * l_max + mu * (n - 1))
        omega = n + (n - 2) / (n - 1) * (4.0 * l_max / mu)
        return FullBatchInterpolation(q, alpha, omega, REGIME_WELL)
    q = mu / (4.0 * n * l_bar)
    inner = n * (4.0 * l_bar + mu) - mu
    alpha = inner * inner / (
        4.0 * n * l_bar * (mu * n * inner + 4.0 * l_max * (4.0 * n * l_bar - mu))
    )
    omega = n + (4.0 * l_max / mu) * (1.0 - 1.0 / (cond + 1.0 - 1.0 / n))
    return FullBatchInterpolation(q, alpha, omega, REGIME_BAD)
