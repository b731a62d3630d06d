"""Newton drivers with gradient-norm regularization.

``run_fixed`` uses the closed-form coefficient for a known smoothness class:
``lam_k = (6 M g_k^(q-2))^(1/(q-1))``.  ``run_super_universal`` needs no
class parameters: each iteration retries ``lam = 4^j * H * g^alpha`` for
j = 0, 1, ... until the step passes the acceptance test, then relaxes
``H <- 4^j H / 4``, so the regularization constant is learned on the fly at
an average cost of about two oracle calls per iteration.  ``init_h0``
performs the preliminary search for a starting constant.

Oracle-call accounting: every trial costs exactly one call (the gradient at
the trial point; the Hessian is evaluated once per iteration at the current
point, whose gradient is already known from the previous accepted trial).
Function values logged into the trace are not counted.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AdaptiveSearchStall, InitializationFailure, InnerSolveFailure, NumericalBreakdown
from .problems import ProblemInstance
from .subproblem import acceptance_check, step_composite, step_unconstrained
from .trace import Trace, TraceRecord


def _default_inner_tol(grad_norm):
    # relative floor so the inner solver does not block the superlinear tail
    return min(1e-8, 1e-3 * grad_norm)


@dataclass
class SolverConfig:
    """Knobs shared by the regularized Newton drivers.

    ``h0 = None`` triggers the preliminary search (:func:`init_h0`) from
    ``h0_search_start``.  ``tol_grad`` is relative: a run stops once the
    composite gradient norm falls below ``tol_grad * max(1, g_0)``.
    """

    alpha: float = 1.0
    h0: Optional[float] = None
    q: Optional[float] = None
    mq: Optional[float] = None
    max_iterations: int = 500
    max_oracle_calls: Optional[int] = None
    max_seconds: Optional[float] = None
    tol_grad: float = 1e-9
    inner_tol: Optional[Callable[[float], float]] = None
    inner_max_iterations: int = 20000
    j_cap: int = 60
    h0_search_start: float = 1.0

    def inner_tol_for(self, grad_norm):
        policy = self.inner_tol if self.inner_tol is not None else _default_inner_tol
        return policy(grad_norm)


class _TraceBuilder:
    """Accumulates trace rows with wall time measured around the solver loop."""

    def __init__(self, meta):
        self.records = []
        self.meta = dict(meta)
        self._start = time.perf_counter()

    def elapsed(self):
        return time.perf_counter() - self._start

    def row(self, k, j, lam, h, f, objective, grad_norm, step_norm, oracle_calls):
        self.records.append(
            TraceRecord(
                k=k,
                j=j,
                lam=float(lam),
                h=float(h),
                f=float(f),
                objective=float(objective),
                grad_norm=float(grad_norm),
                step_norm=float(step_norm),
                oracle_calls=int(oracle_calls),
                time_s=self.elapsed(),
            )
        )

    def finish(self, status):
        return Trace(records=self.records, status=status, meta=self.meta)


class _RunState:
    """Shared bookkeeping for the iteration loop of both drivers."""

    def __init__(self, problem: ProblemInstance, x0, cfg: SolverConfig, meta):
        self.problem = problem
        self.cfg = cfg
        self.metric = problem.metric
        self.psi = problem.composite
        self.x = np.array(problem.x0 if x0 is None else x0, dtype=float)
        self.psi_sub = (
            np.zeros_like(self.x)
            if self.psi is None
            else np.asarray(self.psi.subgradient(self.x), dtype=float)
        )
        self.grad = np.asarray(problem.oracle.grad(self.x), dtype=float)
        self.residual = self.grad + self.psi_sub
        self.grad_norm = self.metric.dual_norm(self.residual)
        self.g0 = self.grad_norm
        self.threshold = cfg.tol_grad * max(1.0, self.g0)
        self.calls = 0
        self.k = 0
        self.builder = _TraceBuilder(meta)

    def objective_parts(self):
        f_val = float(self.problem.oracle.f(self.x))
        total = f_val if self.psi is None else f_val + float(self.psi.value(self.x))
        return f_val, total

    def stop_reason(self):
        if self.grad_norm <= self.threshold:
            return "converged"
        cfg = self.cfg
        if self.k >= cfg.max_iterations:
            return "budget-exhausted"
        if cfg.max_oracle_calls is not None and self.calls >= cfg.max_oracle_calls:
            return "budget-exhausted"
        if cfg.max_seconds is not None and self.builder.elapsed() >= cfg.max_seconds:
            return "budget-exhausted"
        return None

    def trial_step(self, lam):
        oracle = self.problem.oracle
        if self.psi is None:
            return step_unconstrained(self.x, self.grad, self._hess, lam, self.metric, oracle.grad)
        return step_composite(
            self.x,
            self.grad,
            self._hess,
            self.psi,
            lam,
            self.metric,
            self.cfg.inner_tol_for(self.grad_norm),
            oracle.grad,
            self.cfg.inner_max_iterations,
        )

    def load_hessian(self):
        self._hess = np.asarray(self.problem.oracle.hess(self.x), dtype=float)

    def commit(self, step):
        self.x = step.point
        self.psi_sub = step.psi_sub
        self.residual = step.composite_grad
        self.grad = step.composite_grad - step.psi_sub
        self.grad_norm = self.metric.dual_norm(self.residual)
        self.k += 1

    def terminal_row(self, h, f_val, objective):
        self.builder.row(
            self.k, 0, 0.0, h, f_val, objective, self.grad_norm, 0.0, self.calls
        )


def run_fixed(problem: ProblemInstance, q, mq, x0=None, cfg: Optional[SolverConfig] = None) -> Trace:
    """Driver with fixed class parameters: ``lam_k = (6 mq g_k^(q-2))^(1/(q-1))``."""
    if not 2.0 <= q <= 4.0:
        raise ValueError(f"smoothness degree q must lie in [2, 4], got {q}")
    if mq <= 0:
        raise ValueError(f"smoothness constant must be positive, got {mq}")
    cfg = cfg or SolverConfig()
    h_const = (6.0 * mq) ** (1.0 / (q - 1.0))
    state = _RunState(
        problem,
        x0,
        cfg,
        meta={"solver": "fixed", "q": q, "mq": mq, "problem": problem.name},
    )
    try:
        while True:
            f_val, objective = state.objective_parts()
            reason = state.stop_reason()
            if reason is not None:
                state.terminal_row(h_const, f_val, objective)
                return state.builder.finish(reason)
            lam = (6.0 * mq * state.grad_norm ** (q - 2.0)) ** (1.0 / (q - 1.0))
            state.load_hessian()
            calls_before = state.calls
            step = state.trial_step(lam)
            state.calls += 1
            state.builder.row(
                state.k, 0, lam, h_const, f_val, objective,
                state.grad_norm, step.radius, calls_before,
            )
            state.commit(step)
    except (NumericalBreakdown, InnerSolveFailure) as exc:
        exc.trace = state.builder.finish("error")
        raise


def run_super_universal(problem: ProblemInstance, x0=None, cfg: Optional[SolverConfig] = None) -> Trace:
    """Adaptive driver: geometric search over the regularization constant.

    Each iteration tries ``lam = 4^j * H_k * g_k^alpha`` for j = 0, 1, ...,
    evaluating the gradient at every trial point, until the acceptance test
    passes; it then commits the step and sets ``H_{k+1} = 4^j H_k / 4``.
    """
    cfg = cfg or SolverConfig()
    if not 0.0 <= cfg.alpha <= 1.0:
        raise ValueError(f"gradient power alpha must lie in [0, 1], got {cfg.alpha}")
    if cfg.alpha < 2.0 / 3.0 - 1e-12:
        warnings.warn(
            f"alpha={cfg.alpha} is outside [2/3, 1]; the adaptive guarantees do not "
            "cover this choice, proceeding anyway",
            stacklevel=2,
        )
    state = _RunState(
        problem,
        x0,
        cfg,
        meta={"solver": "super_universal", "alpha": cfg.alpha, "problem": problem.name},
    )
    if cfg.h0 is not None:
        if cfg.h0 <= 0:
            raise ValueError(f"h0 must be positive, got {cfg.h0}")
        h = float(cfg.h0)
    else:
        h = init_h0(problem, state.x, cfg.h0_search_start, cfg.alpha, cfg=cfg).h0
    state.builder.meta["h0"] = h
    try:
        while True:
            f_val, objective = state.objective_parts()
            reason = state.stop_reason()
            if reason is not None:
                state.terminal_row(h, f_val, objective)
                return state.builder.finish(reason)
            state.load_hessian()
            calls_before = state.calls
            j = 0
            while True:
                lam = (4.0**j) * h * state.grad_norm**cfg.alpha
                step = state.trial_step(lam)
                state.calls += 1
                if acceptance_check(step.composite_grad, state.x, step.point, lam, state.metric):
                    break
                j += 1
                if j > cfg.j_cap:
                    raise AdaptiveSearchStall(
                        f"no acceptable regularization after {cfg.j_cap} trials "
                        f"at iteration {state.k}",
                        trace=state.builder.finish("error"),
                    )
            state.builder.row(
                state.k, j, lam, h, f_val, objective,
                state.grad_norm, step.radius, calls_before,
            )
            state.commit(step)
            h = (4.0**j) * h / 4.0
    except (NumericalBreakdown, InnerSolveFailure) as exc:
        exc.trace = state.builder.finish("error")
        raise


@dataclass
class H0Search:
    """Result of the preliminary search for a starting constant."""

    h0: float
    trials: int
    converged: bool = False


def init_h0(problem: ProblemInstance, x0=None, h_start=1.0, alpha=1.0, cap=100,
            cfg: Optional[SolverConfig] = None) -> H0Search:
    """Search the geometric grid ``h_start * 2^i`` for an accepted trial step.

    Returns the first constant whose step at ``lam = H * g_0^alpha`` passes
    the acceptance test.  A constant that fails the test is certified too
    small for the current point, so the search moves upward; on a convex
    oracle a sufficiently large constant always passes, which is why
    exhausting the cap signals a non-convex or ill-posed oracle.  When the
    start is already stationary there is nothing to calibrate and ``h_start``
    is returned with the ``converged`` flag set.
    """
    if h_start <= 0:
        raise ValueError(f"h_start must be positive, got {h_start}")
    cfg = cfg or SolverConfig(alpha=alpha)
    metric = problem.metric
    psi = problem.composite
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    psi_sub = (
        np.zeros_like(x) if psi is None else np.asarray(psi.subgradient(x), dtype=float)
    )
    grad = np.asarray(problem.oracle.grad(x), dtype=float)
    g = metric.dual_norm(grad + psi_sub)
    if g == 0.0:
        return H0Search(h0=float(h_start), trials=0, converged=True)
    hess = np.asarray(problem.oracle.hess(x), dtype=float)
    h = float(h_start)
    for trial in range(cap + 1):
        lam = h * g**alpha
        if psi is None:
            step = step_unconstrained(x, grad, hess, lam, metric, problem.oracle.grad)
        else:
            step = step_composite(
                x, grad, hess, psi, lam, metric,
                cfg.inner_tol_for(g), problem.oracle.grad, cfg.inner_max_iterations,
            )
        if acceptance_check(step.composite_grad, x, step.point, lam, metric):
            return H0Search(h0=h, trials=trial, converged=False)
        h *= 2.0
    raise InitializationFailure(
        f"no accepted trial step after {cap} doublings from h_start={h_start}; "
        "the oracle is likely non-convex or ill-posed"
    )
