"""Benchmark problem generators, oracle verification, and smoothness probes.

All randomized generators draw from numpy's Philox counter-based generator,
so identical (generator, parameters, seed) tuples produce bitwise-identical
instances on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from scipy.special import gamma, logsumexp

from .errors import NotPositiveDefinite
from .metric import Metric
from .subproblem import CompositePart


def rng_for(seed) -> np.random.Generator:
    """The library-wide random source: Philox (4x64, 10 rounds)."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class SmoothOracle:
    """Callables for the smooth part: value, gradient, and Hessian."""

    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]


@dataclass
class ProblemInstance:
    """A ready-to-solve instance: oracle, optional composite part, metric, start.

    ``fstar`` and ``known_mq`` (a map from smoothness degree q to a valid
    constant bound) are stored when the construction provides them.
    ``kink_distance`` reports the distance from a point to the nearest
    higher-derivative kink so finite-difference probes can resample.
    """

    name: str
    oracle: SmoothOracle
    metric: Metric
    x0: np.ndarray
    composite: Optional[CompositePart] = None
    fstar: Optional[float] = None
    known_mq: Optional[dict] = None
    kink_distance: Optional[Callable[[np.ndarray], float]] = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.x0)

    def objective(self, x) -> float:
        value = float(self.oracle.f(x))
        if self.composite is not None:
            value += float(self.composite.value(x))
        return value

    def metadata(self) -> dict:
        """JSON-serializable description stored alongside traces."""
        out = {"name": self.name, "n": self.n}
        out.update(self.meta)
        out["fstar"] = self.fstar
        if self.known_mq is not None:
            out["known_mq"] = {str(q): v for q, v in self.known_mq.items()}
        return out


def _check_start(instance: ProblemInstance):
    if not math.isfinite(instance.oracle.f(instance.x0)):
        raise ValueError(f"{instance.name}: objective not finite at x0")
    if not np.all(np.isfinite(instance.oracle.grad(instance.x0))):
        raise ValueError(f"{instance.name}: gradient not finite at x0")
    return instance


# ---------------------------------------------------------------------------
# generators


def make_polytope(n, m, p, seed) -> ProblemInstance:
    """Feasibility-style objective  sum_i (<a_i, x> - b_i)_+^p  with p >= 2.

    Data is uniform on [-1, 1]; the start is the all-ones vector and the
    metric is the identity.
    """
    if p < 2:
        raise ValueError(f"power p must be >= 2 for a twice differentiable objective, got {p}")
    rng = rng_for(seed)
    a = rng.uniform(-1.0, 1.0, size=(m, n))
    b = rng.uniform(-1.0, 1.0, size=m)
    row_norms = np.linalg.norm(a, axis=1)

    def slack_plus(x):
        return np.maximum(a @ x - b, 0.0)

    def f(x):
        return float(np.sum(slack_plus(x) ** p))

    def grad(x):
        s = slack_plus(x)
        return a.T @ (p * s ** (p - 1))

    def hess(x):
        s = slack_plus(x)
        w = np.where(s > 0.0, p * (p - 1) * s ** max(p - 2, 0), 0.0)
        return a.T @ (a * w[:, None])

    def kink_distance(x):
        return float(np.min(np.abs(a @ x - b) / np.maximum(row_norms, 1e-300)))

    instance = ProblemInstance(
        name=f"polytope_n{n}_m{m}_p{_fmt(p)}",
        oracle=SmoothOracle(f, grad, hess),
        metric=Metric.identity(n),
        x0=np.ones(n),
        kink_distance=kink_distance,
        meta={"generator": "polytope", "m": m, "p": p, "seed": int(seed)},
    )
    return _check_start(instance)


def make_softmax(n, m, mu, seed) -> ProblemInstance:
    """Smoothed maximum  mu * log sum_i exp((<a_i, x> - b_i) / mu).

    All rows are shifted by the gradient at the origin (computed before the
    shift), which places the optimum at zero; the metric is the Gram matrix
    of the shifted rows.  Requires m >= n so the rows can span the space.
    """
    if mu <= 0:
        raise ValueError(f"smoothing parameter must be positive, got {mu}")
    if m < n:
        raise ValueError(f"need m >= n rows to span the space, got m={m}, n={n}")
    rng = rng_for(seed)
    regularized = False
    a = b = b_mat = None
    for attempt in range(5):
        a = rng.uniform(-1.0, 1.0, size=(m, n))
        b = rng.uniform(-1.0, 1.0, size=m)
        weights = _softmax_weights(-b / mu)
        shift = a.T @ weights
        a = a - shift[None, :]
        gram = a.T @ a
        b_mat = (gram + gram.T) / 2.0
        try:
            metric = Metric(b_mat)
            break
        except NotPositiveDefinite:
            continue
    else:
        b_mat = b_mat + (1e-8 * np.trace(b_mat) / n) * np.eye(n)
        metric = Metric(b_mat)
        regularized = True

    def scores(x):
        return (a @ x - b) / mu

    def f(x):
        return float(mu * logsumexp(scores(x)))

    def grad(x):
        return a.T @ _softmax_weights(scores(x))

    def hess(x):
        w = _softmax_weights(scores(x))
        g = a.T @ w
        return (a.T @ (a * w[:, None]) - np.outer(g, g)) / mu

    instance = ProblemInstance(
        name=f"softmax_n{n}_m{m}_mu{_fmt(mu)}",
        oracle=SmoothOracle(f, grad, hess),
        metric=metric,
        x0=np.ones(n),
        fstar=float(mu * logsumexp(-b / mu)),
        known_mq={2: 1.0 / mu, 4: 4.0 / mu**3},
        meta={
            "generator": "softmax",
            "m": m,
            "mu": mu,
            "seed": int(seed),
            "regularized_metric": regularized,
        },
    )
    return _check_start(instance)


def _softmax_weights(z):
    w = np.exp(z - np.max(z))
    return w / np.sum(w)


def make_worst(n, q) -> ProblemInstance:
    """Chained-difference objective  (1/q) sum |x_i - x_{i+1}|^q + (1/q)|x_n|^q.

    The minimum is zero at the origin, the Hessian is tridiagonal, and a
    valid smoothness bound for degree q is 2^q * Gamma(q + 1).
    """
    if q < 2:
        raise ValueError(f"degree q must be >= 2, got {q}")
    diff = np.eye(n)
    for i in range(n - 1):
        diff[i, i + 1] = -1.0

    def d(x):
        return diff @ x

    def f(x):
        return float(np.sum(np.abs(d(x)) ** q) / q)

    def grad(x):
        t = d(x)
        return diff.T @ (np.abs(t) ** (q - 1) * np.sign(t))

    def hess(x):
        t = d(x)
        w = (q - 1) * np.abs(t) ** (q - 2)
        return diff.T @ (diff * w[:, None])

    def kink_distance(x):
        return float(np.min(np.abs(d(x))) / math.sqrt(2.0))

    instance = ProblemInstance(
        name=f"worst_n{n}_q{_fmt(q)}",
        oracle=SmoothOracle(f, grad, hess),
        metric=Metric.identity(n),
        x0=np.ones(n),
        fstar=0.0,
        known_mq={q: float(2.0**q * gamma(q + 1))},
        kink_distance=kink_distance if q != 2 else None,
        meta={"generator": "worst", "q": q},
    )
    return _check_start(instance)


def make_quadratic(matrix, linear=None, metric=None, x0=None, name="quadratic") -> ProblemInstance:
    """Convex quadratic  1/2 x'Gx + <c, x>  with its optimum value stored."""
    g_mat = np.asarray(matrix, dtype=float)
    n = g_mat.shape[0]
    c = np.zeros(n) if linear is None else np.asarray(linear, dtype=float)
    x_opt = np.linalg.lstsq(g_mat, -c, rcond=None)[0]

    def f(x):
        return float(0.5 * x @ (g_mat @ x) + c @ x)

    instance = ProblemInstance(
        name=name,
        oracle=SmoothOracle(f, lambda x: g_mat @ x + c, lambda x: g_mat.copy()),
        metric=metric if metric is not None else Metric.identity(n),
        x0=np.ones(n) if x0 is None else np.asarray(x0, dtype=float),
        fstar=f(x_opt),
        known_mq={2: 0.0},
        meta={"generator": "quadratic"},
    )
    return _check_start(instance)


def make_abs_cubic_1d() -> ProblemInstance:
    """Scalar fixture  f(x) = x^2/2 + |x|^3/6  with known smoothness constants.

    Its Hessian has Lipschitz constant exactly 1, while the third derivative
    jumps by 2 across the origin, which separates the degree-3 and degree-4
    smoothness classes.
    """

    def f(x):
        t = float(x[0])
        return 0.5 * t * t + abs(t) ** 3 / 6.0

    def grad(x):
        t = float(x[0])
        return np.array([t + 0.5 * abs(t) * t])

    def hess(x):
        t = float(x[0])
        return np.array([[1.0 + abs(t)]])

    return ProblemInstance(
        name="abs_cubic_1d",
        oracle=SmoothOracle(f, grad, hess),
        metric=Metric.identity(1),
        x0=np.array([1.0]),
        fstar=0.0,
        known_mq={3: 1.0, 4: 2.0},
        kink_distance=lambda x: abs(float(x[0])),
        meta={"generator": "abs_cubic_1d"},
    )


# ---------------------------------------------------------------------------
# composite parts and fixtures


def l1_part(weight) -> CompositePart:
    """weight * ||x||_1 with soft-threshold proximal map."""
    w = float(weight)

    def prox(z, step):
        t = w * step
        return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)

    def in_subdifferential(s, x, tol):
        s = np.asarray(s, dtype=float)
        x = np.asarray(x, dtype=float)
        at_zero = np.abs(x) <= tol
        ok_zero = np.abs(s[at_zero]) <= w + tol
        ok_rest = np.abs(s[~at_zero] - w * np.sign(x[~at_zero])) <= tol
        return bool(np.all(ok_zero) and np.all(ok_rest))

    return CompositePart(
        value=lambda x: w * float(np.sum(np.abs(x))),
        prox=prox,
        subgradient=lambda x: w * np.sign(np.asarray(x, dtype=float)),
        in_subdifferential=in_subdifferential,
    )


def box_part(lower=0.0, upper=np.inf) -> CompositePart:
    """Indicator of the box [lower, upper] (bounds may be infinite)."""
    lo, hi = float(lower), float(upper)
    if not lo < hi:
        raise ValueError(f"empty box [{lower}, {upper}]")

    def value(x):
        x = np.asarray(x, dtype=float)
        feasible = np.all(x >= lo - 1e-12) and np.all(x <= hi + 1e-12)
        return 0.0 if feasible else math.inf

    def in_subdifferential(s, x, tol):
        s = np.asarray(s, dtype=float)
        x = np.asarray(x, dtype=float)
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            return False
        at_lower = x <= lo + tol
        at_upper = x >= hi - tol
        interior = ~(at_lower | at_upper)
        if np.any(np.abs(s[interior]) > tol):
            return False
        if np.any(s[at_lower & ~at_upper] > tol):
            return False
        if np.any(s[at_upper & ~at_lower] < -tol):
            return False
        return True

    return CompositePart(
        value=value,
        prox=lambda z, step: np.clip(z, lo, hi),
        subgradient=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        in_subdifferential=in_subdifferential,
    )


def _random_convex_quadratic(n, rng):
    m = rng.uniform(-1.0, 1.0, size=(n, n))
    g_mat = m.T @ m / n + 0.1 * np.eye(n)
    g_mat = (g_mat + g_mat.T) / 2.0
    c = rng.uniform(-1.0, 1.0, size=n)
    return g_mat, c


def make_l1_quadratic(n, seed, weight=0.5) -> ProblemInstance:
    """Random strongly convex quadratic plus an l1 term (identity metric)."""
    rng = rng_for(seed)
    g_mat, c = _random_convex_quadratic(n, rng)

    def f(x):
        return float(0.5 * x @ (g_mat @ x) + c @ x)

    return _check_start(
        ProblemInstance(
            name=f"l1quad_n{n}_w{_fmt(weight)}",
            oracle=SmoothOracle(f, lambda x: g_mat @ x + c, lambda x: g_mat.copy()),
            metric=Metric.identity(n),
            x0=np.zeros(n),
            composite=l1_part(weight),
            meta={"generator": "l1_quadratic", "weight": weight, "seed": int(seed)},
        )
    )


def make_box_quadratic(n, seed, lower=0.0, upper=1.0) -> ProblemInstance:
    """Random strongly convex quadratic constrained to a box (identity metric)."""
    rng = rng_for(seed)
    g_mat, c = _random_convex_quadratic(n, rng)

    def f(x):
        return float(0.5 * x @ (g_mat @ x) + c @ x)

    start = np.full(n, 0.5 * (lower + min(upper, lower + 1.0)))
    return _check_start(
        ProblemInstance(
            name=f"boxquad_n{n}",
            oracle=SmoothOracle(f, lambda x: g_mat @ x + c, lambda x: g_mat.copy()),
            metric=Metric.identity(n),
            x0=start,
            composite=box_part(lower, upper),
            meta={"generator": "box_quadratic", "lower": lower, "upper": upper, "seed": int(seed)},
        )
    )


# ---------------------------------------------------------------------------
# oracle verification


@dataclass
class FdReport:
    """Worst-case relative finite-difference errors over the sampled points."""

    max_grad_error: float
    max_hess_error: float
    points: np.ndarray
    resampled: int


def fd_check(problem: ProblemInstance, points=20, seed=0, extra_points=None) -> FdReport:
    """Compare the oracle's gradient and Hessian against central differences.

    Points are drawn uniformly from [-1, 1]^n; a draw closer than 1e-7 to a
    derivative kink is discarded and replaced (counted in ``resampled``).
    Entries of ``extra_points`` pass through the same filter.
    """
    rng = rng_for(seed)
    n = problem.n
    oracle = problem.oracle

    def admissible(x):
        if problem.kink_distance is None:
            return True
        return problem.kink_distance(x) >= 1e-7

    samples = []
    resampled = 0
    queued = [np.asarray(p, dtype=float) for p in (extra_points or [])]
    target = points + len(queued)
    while len(samples) < target:
        if queued:
            candidate = queued.pop(0)
            if admissible(candidate):
                samples.append(candidate)
                continue
            resampled += 1
        for _ in range(100):
            candidate = rng.uniform(-1.0, 1.0, size=n)
            if admissible(candidate):
                samples.append(candidate)
                break
            resampled += 1
        else:
            raise RuntimeError("could not sample a kink-free point in 100 tries")

    max_g = 0.0
    max_h = 0.0
    for x in samples:
        h = 1e-5 * (1.0 + float(np.linalg.norm(x)))
        g = np.asarray(oracle.grad(x), dtype=float)
        hess = np.asarray(oracle.hess(x), dtype=float)
        fd_g = np.empty(n)
        fd_h = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            fd_g[i] = (oracle.f(x + e) - oracle.f(x - e)) / (2.0 * h)
            fd_h[:, i] = (
                np.asarray(oracle.grad(x + e), dtype=float)
                - np.asarray(oracle.grad(x - e), dtype=float)
            ) / (2.0 * h)
        max_g = max(max_g, float(np.max(np.abs(fd_g - g))) / (1.0 + float(np.max(np.abs(g)))))
        max_h = max(
            max_h, float(np.max(np.abs(fd_h - hess))) / (1.0 + float(np.max(np.abs(hess))))
        )
    return FdReport(
        max_grad_error=max_g,
        max_hess_error=max_h,
        points=np.array(samples),
        resampled=resampled,
    )


# ---------------------------------------------------------------------------
# empirical smoothness estimation


def operator_norm(matrix, metric: Metric) -> float:
    """Norm of a symmetric operator measured in the metric geometry."""
    matrix = np.asarray(matrix, dtype=float)
    matrix = (matrix + matrix.T) / 2.0
    if metric.is_identity:
        eigs = np.linalg.eigvalsh(matrix)
    else:
        eigs = scipy.linalg.eigh(matrix, metric.b, eigvals_only=True)
    return float(np.max(np.abs(eigs))) if len(eigs) else 0.0


def estimate_holder(
    problem: ProblemInstance,
    p,
    nu,
    pairs,
    seed,
    box=(-1.0, 1.0),
    fd_step=1e-4,
    probes=2,
) -> float:
    """Sampled lower bound on the degree-nu Hoelder constant of derivative p.

    Maximizes ``||D^p f(x) - D^p f(y)|| / ||x - y||^nu`` over random pairs
    drawn from the given box.  Third derivatives (p = 3) are probed through
    central differences of the Hessian along random unit directions with the
    given step.  The estimate is monotone in ``pairs`` for a fixed seed.
    """
    if p not in (2, 3):
        raise ValueError(f"derivative order must be 2 or 3, got {p}")
    if not 0.0 <= nu <= 1.0:
        raise ValueError(f"degree nu must lie in [0, 1], got {nu}")
    if pairs < 1:
        raise ValueError("need at least one pair")
    rng = rng_for(seed)
    n = problem.n
    oracle = problem.oracle
    metric = problem.metric
    lo, hi = box

    best = 0.0
    for _ in range(pairs):
        x = rng.uniform(lo, hi, size=n)
        y = rng.uniform(lo, hi, size=n)
        dist = metric.primal_norm(x - y)
        if dist == 0.0:
            continue
        if p == 2:
            num = operator_norm(
                np.asarray(oracle.hess(x), dtype=float) - np.asarray(oracle.hess(y), dtype=float),
                metric,
            )
        else:
            num = 0.0
            for _probe in range(probes):
                u = rng.standard_normal(n)
                norm_u = metric.primal_norm(u)
                if norm_u == 0.0:
                    continue
                u = u / norm_u
                num = max(num, operator_norm(_third_slice(oracle, x, u, fd_step)
                                             - _third_slice(oracle, y, u, fd_step), metric))
        best = max(best, num / dist**nu)
    return best


def _third_slice(oracle, x, u, step):
    """Directional third derivative D^3 f(x)[u] via Hessian differences."""
    plus = np.asarray(oracle.hess(x + step * u), dtype=float)
    minus = np.asarray(oracle.hess(x - step * u), dtype=float)
    return (plus - minus) / (2.0 * step)


def _fmt(value):
    """Compact parameter formatting for instance names (2.0 -> '2')."""
    if float(value) == int(value):
        return str(int(value))
    return str(value)
