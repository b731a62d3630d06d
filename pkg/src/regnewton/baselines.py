"""Comparison methods: adaptive cubic Newton and adaptive first-order schemes.

All three emit the same trace schema as the Newton drivers so runs are
directly comparable.  Constants adapt by doubling on a failed trial and
halving after a success; a trial costs one oracle call, matching the
accounting of the Newton drivers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AdaptiveSearchStall, ConfigError, NumericalBreakdown
from .metric import Metric
from .newton import _TraceBuilder
from .problems import ProblemInstance
from .trace import Trace

_VARIANTS = ("cubic-newton", "gradient", "fast-gradient")

_CONSTANT_FLOOR = 1e-12


@dataclass
class BaselineConfig:
    variant: str = "cubic-newton"
    initial_constant: float = 1.0
    increase: float = 2.0
    decrease: float = 0.5
    max_iterations: int = 500
    max_oracle_calls: Optional[int] = None
    max_seconds: Optional[float] = None
    tol_grad: float = 1e-9
    trial_cap: int = 60

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ConfigError(f"unknown baseline variant {self.variant!r}")
        if self.initial_constant <= 0:
            raise ConfigError("initial constant must be positive")
        if not self.increase > 1.0:
            raise ConfigError("increase factor must exceed 1")
        if not 0.0 < self.decrease < 1.0:
            raise ConfigError("decrease factor must lie in (0, 1)")


def cubic_subproblem(grad, hess, m_const, metric: Metric, tol=1e-10):
    """Minimize ``<g, h> + 1/2 <Hh, h> + M/6 ||h||^3`` over steps h.

    The minimizer satisfies ``(H + lam B) h = -g`` with ``lam = M ||h|| / 2``,
    so it reduces to a scalar root-finding problem in lam, solved here by
    safeguarded bisection with Newton refinement.  Returns ``(h, lam)``.
    """
    grad = np.asarray(grad, dtype=float)
    g_norm = metric.dual_norm(grad)
    if g_norm == 0.0:
        return np.zeros_like(grad), 0.0
    if m_const <= 0:
        raise ValueError(f"cubic constant must be positive, got {m_const}")

    def gap(lam):
        # positive when lam is below the fixed point M||h(lam)||/2;
        # one factorization per probe, shared with the Newton slope below
        solve = metric.shifted_solver(hess, lam)
        h = solve(-grad)
        return 0.5 * m_const * metric.primal_norm(h) - lam, h, solve

    # lam* <= sqrt(M g / 2) always (the step radius is at most g / lam)
    hi = math.sqrt(0.5 * m_const * g_norm) * (1.0 + 1e-12)
    gap_hi, h_hi, _ = gap(hi)
    if gap_hi > 0.0:  # numerical corner: push the bracket out
        for _ in range(200):
            hi *= 2.0
            gap_hi, h_hi, _ = gap(hi)
            if gap_hi <= 0.0:
                break
        else:
            raise NumericalBreakdown("cubic step bracket expansion failed")
    lo = hi
    for _ in range(200):
        lo *= 0.25
        try:
            gap_lo, _, _ = gap(lo)
        except NumericalBreakdown:
            # the shift got too small to factorize, which means the step
            # radius (hence the gap) blows up there: lo brackets from below
            break
        if gap_lo >= 0.0:
            break
    else:
        raise NumericalBreakdown("cubic step bracket shrinking failed")

    lam = 0.5 * (lo + hi)
    h = h_hi
    for _ in range(200):
        residual, h, solve = gap(lam)
        if abs(residual) <= tol * (1.0 + lam):
            break
        if residual > 0.0:
            lo = lam
        else:
            hi = lam
        # Newton step on lam -> M/2 ||h(lam)|| - lam, safeguarded by the bracket
        radius = metric.primal_norm(h)
        if radius > 0.0:
            b_h = metric.apply(h)
            slope = -0.5 * m_const * float(b_h @ solve(b_h)) / radius - 1.0
            candidate = lam - residual / slope
        else:
            candidate = 0.5 * (lo + hi)
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        lam = candidate
    return h, lam


def run_cubic_newton(problem: ProblemInstance, x0=None, cfg: Optional[BaselineConfig] = None) -> Trace:
    """Cubic-regularized Newton with doubling/halving adaptation of M.

    A trial step is accepted when the objective at the candidate does not
    exceed the cubic model value, the standard sufficient-decrease test.
    """
    cfg = cfg or BaselineConfig(variant="cubic-newton")
    if problem.composite is not None:
        raise ConfigError("the cubic Newton baseline supports smooth problems only")
    oracle = problem.oracle
    metric = problem.metric
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    m_const = cfg.initial_constant
    builder = _TraceBuilder({"solver": "cubic_newton", "problem": problem.name})
    calls = 0
    k = 0
    grad = np.asarray(oracle.grad(x), dtype=float)
    g = metric.dual_norm(grad)
    threshold = cfg.tol_grad * max(1.0, g)
    while True:
        f_val = float(oracle.f(x))
        if g <= threshold:
            builder.row(k, 0, 0.0, m_const, f_val, f_val, g, 0.0, calls)
            return builder.finish("converged")
        if (
            k >= cfg.max_iterations
            or (cfg.max_oracle_calls is not None and calls >= cfg.max_oracle_calls)
            or (cfg.max_seconds is not None and builder.elapsed() >= cfg.max_seconds)
        ):
            builder.row(k, 0, 0.0, m_const, f_val, f_val, g, 0.0, calls)
            return builder.finish("budget-exhausted")
        hess = np.asarray(oracle.hess(x), dtype=float)
        calls_before = calls
        j = 0
        while True:
            h, lam_eff = cubic_subproblem(grad, hess, m_const, metric)
            candidate = x + h
            radius = metric.primal_norm(h)
            model_decrement = -(
                float(grad @ h) + 0.5 * float(h @ (hess @ h)) + m_const / 6.0 * radius**3
            )
            f_cand = float(oracle.f(candidate))
            calls += 1
            # sufficient decrease against the model; the slack is relative to
            # the decrement itself so it cannot mask amplifying steps
            if f_val - f_cand >= model_decrement * (1.0 - 1e-12):
                break
            m_const *= cfg.increase
            j += 1
            if j > cfg.trial_cap:
                raise AdaptiveSearchStall(
                    f"cubic constant adaptation stalled after {cfg.trial_cap} increases",
                    trace=builder.finish("error"),
                )
        builder.row(k, j, lam_eff, m_const, f_val, f_val, g, radius, calls_before)
        x = candidate
        grad = np.asarray(oracle.grad(x), dtype=float)
        g = metric.dual_norm(grad)
        m_const = max(m_const * cfg.decrease, _CONSTANT_FLOOR)
        k += 1


def run_first_order(problem: ProblemInstance, x0=None, cfg: Optional[BaselineConfig] = None) -> Trace:
    """Proximal gradient descent or its Nesterov-accelerated variant.

    Steps use the metric geometry, ``x+ = prox(x - (1/L) B^-1 grad f(x))``,
    with backtracking on L against the descent condition measured in the
    metric norm.  The accelerated variant keeps the two-sequence scheme
    monotone by falling back to the previous iterate whenever the candidate
    would increase the objective.
    """
    cfg = cfg or BaselineConfig(variant="gradient")
    if cfg.variant not in ("gradient", "fast-gradient"):
        raise ConfigError(f"run_first_order got variant {cfg.variant!r}")
    accelerated = cfg.variant == "fast-gradient"
    oracle = problem.oracle
    metric = problem.metric
    psi = problem.composite
    if psi is not None and not metric.is_identity:
        raise ConfigError("composite first-order steps require the identity metric")

    def prox(z, step):
        return z if psi is None else psi.prox(z, step)

    def psi_value(z):
        return 0.0 if psi is None else float(psi.value(z))

    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    lip = cfg.initial_constant
    builder = _TraceBuilder({"solver": cfg.variant.replace("-", "_"), "problem": problem.name})
    calls = 0
    k = 0
    psi_sub = np.zeros_like(x) if psi is None else np.asarray(psi.subgradient(x), dtype=float)
    grad_x = np.asarray(oracle.grad(x), dtype=float)
    g = metric.dual_norm(grad_x + psi_sub)
    threshold = cfg.tol_grad * max(1.0, g)
    y = x.copy()
    momentum = 1.0
    x_prev = x.copy()
    while True:
        f_val = float(oracle.f(x))
        objective = f_val + psi_value(x)
        if g <= threshold:
            builder.row(k, 0, 0.0, lip, f_val, objective, g, 0.0, calls)
            return builder.finish("converged")
        if (
            k >= cfg.max_iterations
            or (cfg.max_oracle_calls is not None and calls >= cfg.max_oracle_calls)
            or (cfg.max_seconds is not None and builder.elapsed() >= cfg.max_seconds)
        ):
            builder.row(k, 0, 0.0, lip, f_val, objective, g, 0.0, calls)
            return builder.finish("budget-exhausted")
        calls_before = calls
        base = y if accelerated else x
        grad_base = grad_x if not accelerated else np.asarray(oracle.grad(base), dtype=float)
        f_base = f_val if not accelerated else float(oracle.f(base))
        if accelerated:
            calls += 1
        direction = metric.inv_apply(grad_base)
        j = 0
        while True:
            candidate = prox(base - direction / lip, 1.0 / lip)
            delta = candidate - base
            f_cand = float(oracle.f(candidate))
            calls += 1
            quad_term = 0.5 * lip * metric.primal_norm(delta) ** 2
            # slack relative to the quadratic term; an |f|-scaled slack would
            # admit amplifying steps once true decrements fall below it
            if f_cand <= f_base + float(grad_base @ delta) + quad_term * (1.0 + 1e-12):
                break
            lip *= cfg.increase
            j += 1
            if j > cfg.trial_cap:
                raise AdaptiveSearchStall(
                    f"stepsize adaptation stalled after {cfg.trial_cap} increases",
                    trace=builder.finish("error"),
                )
        if psi is None:
            cand_sub = np.zeros_like(x)
        else:
            # prox optimality certificate: an element of the subdifferential
            cand_sub = ((base - direction / lip) - candidate) * lip
        if accelerated:
            momentum_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * momentum**2))
            if f_cand + psi_value(candidate) <= objective:
                x_next = candidate
            else:  # monotone fallback; the momentum sequence still advances
                x_next = x
            y = x_next + (momentum / momentum_next) * (candidate - x_next) + (
                (momentum - 1.0) / momentum_next
            ) * (x_next - x_prev)
            momentum = momentum_next
            x_prev = x_next
            if x_next is candidate:
                new_grad = np.asarray(oracle.grad(x_next), dtype=float)
                calls += 1
                new_sub = cand_sub
            else:
                new_grad, new_sub = grad_x, psi_sub
            step_norm = metric.primal_norm(x_next - x)
            x = x_next
        else:
            new_grad = np.asarray(oracle.grad(candidate), dtype=float)
            new_sub = cand_sub
            step_norm = metric.primal_norm(candidate - x)
            x = candidate
        builder.row(k, j, lip, lip, f_val, objective, g, step_norm, calls_before)
        grad_x = new_grad
        psi_sub = new_sub
        g = metric.dual_norm(grad_x + psi_sub)
        lip = max(lip * cfg.decrease, _CONSTANT_FLOOR)
        k += 1
