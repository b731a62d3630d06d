"""One regularized Newton step and the acceptance test that gates it.

The step at a point x with regularization lam minimizes the model

    <grad f(x), y - x> + 1/2 <hess f(x)(y - x), y - x>
        + lam/2 ||y - x||^2 + psi(y).

Without a composite part this is a single shifted linear solve; with one it
is solved inexactly by an accelerated proximal-gradient loop on the model.
Either way the step recovers an implicit subgradient of psi at the new point
from the model's stationarity condition, which gives the composite gradient
used both for the acceptance test and as the next iteration's residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, InnerSolveFailure
from .metric import Metric

#: Absolute slack added to acceptance comparisons so machine-precision noise
#: cannot flip the outcome when both sides are essentially equal.
ACCEPTANCE_SLACK = 1e-15


@dataclass(frozen=True)
class CompositePart:
    """A proper closed convex function accessed through its proximal map.

    ``value(x)`` may return ``inf`` outside the domain.  ``prox(z, step)``
    returns ``argmin_y psi(y) + 1/(2*step) * ||y - z||^2`` in coordinates,
    so composite steps are only supported under the identity metric.
    ``subgradient(x)`` returns an arbitrary element of the subdifferential
    at a feasible point; ``in_subdifferential(s, x, tol)`` tests membership.
    """

    value: Callable[[np.ndarray], float]
    prox: Callable[[np.ndarray, float], np.ndarray]
    subgradient: Callable[[np.ndarray], np.ndarray]
    in_subdifferential: Callable[[np.ndarray, np.ndarray, float], bool]


@dataclass
class StepResult:
    """Outcome of one regularized Newton step from x.

    ``point`` is the new iterate T, ``psi_sub`` the implicit subgradient of
    psi at T, ``composite_grad`` the full residual ``grad f(T) + psi_sub``,
    and ``radius`` the primal norm of T - x.
    """

    point: np.ndarray
    psi_sub: np.ndarray
    composite_grad: np.ndarray
    radius: float
    inner_iterations: int


def implicit_subgradient(x, point, lam, grad, hess, metric: Metric):
    """Subgradient of psi at the step target implied by model stationarity.

    Returns ``-grad - hess (point - x) - lam * B (point - x)``, which lies in
    the subdifferential of psi at ``point`` whenever ``point`` solves the
    step model exactly (and within the inner tolerance otherwise).
    """
    d = np.asarray(point, dtype=float) - np.asarray(x, dtype=float)
    return -np.asarray(grad, dtype=float) - np.asarray(hess, dtype=float) @ d - lam * metric.apply(d)


def acceptance_check(composite_grad, x, point, lam, metric: Metric) -> bool:
    """Progress test ``<F'(T), x - T> >= ||F'(T)||_*^2 / (4 lam)``.

    A small absolute slack proportional to ``1 + ||F'(T)||_*^2`` keeps the
    comparison stable at machine precision.
    """
    if lam <= 0:
        raise ValueError(f"regularization must be positive, got {lam}")
    gplus_sq = metric.dual_norm(composite_grad) ** 2
    lhs = float(np.asarray(composite_grad) @ (np.asarray(x) - np.asarray(point)))
    return lhs + ACCEPTANCE_SLACK * (1.0 + gplus_sq) >= gplus_sq / (4.0 * lam)


def step_unconstrained(x, grad_x, hess_x, lam, metric: Metric, grad_f) -> StepResult:
    """Levenberg-Marquardt style step ``T = x - (hess + lam B)^-1 grad``.

    ``grad_f`` is called once at T to produce the fresh composite gradient
    (here simply the new gradient, since psi is absent).
    """
    x = np.asarray(x, dtype=float)
    grad_x = np.asarray(grad_x, dtype=float)
    direction = metric.solve_shifted(hess_x, lam, -grad_x)
    point = x + direction
    return StepResult(
        point=point,
        psi_sub=np.zeros_like(x),
        composite_grad=np.asarray(grad_f(point), dtype=float),
        radius=metric.primal_norm(direction),
        inner_iterations=0,
    )


def _model_operator_norm(hess, lam, iterations=20):
    """Power-iteration estimate of the largest eigenvalue of hess + lam*I."""
    n = hess.shape[0]
    v = np.full(n, 1.0 / math.sqrt(n))
    estimate = lam
    for _ in range(iterations):
        w = hess @ v + lam * v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return lam
        estimate = norm
        v = w / norm
    return estimate


def step_composite(
    x,
    grad_x,
    hess_x,
    psi: CompositePart,
    lam,
    metric: Metric,
    inner_tol,
    grad_f,
    max_inner: int = 20000,
) -> StepResult:
    """Inexact regularized Newton step with a composite part.

    Runs accelerated proximal gradient on the step model.  The smooth part is
    the lam-strongly-convex quadratic ``<g, y-x> + 1/2 (y-x)'(H + lam I)(y-x)``,
    so the momentum uses the known strong convexity; the stepsize constant
    comes from a 20-iteration power estimate of the largest model eigenvalue.
    Terminates once a model subgradient certificate has norm <= ``inner_tol``.
    """
    if not metric.is_identity:
        raise ConfigError(
            "composite steps require the identity metric: the proximal map is "
            "defined in coordinates and has no closed form under a general B"
        )
    if lam <= 0:
        raise ValueError(f"regularization must be positive, got {lam}")
    x = np.asarray(x, dtype=float)
    grad_x = np.asarray(grad_x, dtype=float)
    hess_x = np.asarray(hess_x, dtype=float)

    lip = 1.25 * _model_operator_norm(hess_x, lam)
    kappa = lip / lam
    beta = (math.sqrt(kappa) - 1.0) / (math.sqrt(kappa) + 1.0)

    def model_grad(y):
        d = y - x
        return grad_x + hess_x @ d + lam * d

    current = x.copy()
    extrapolated = x.copy()
    point = None
    iterations = 0
    residual = math.inf
    while iterations < max_inner:
        gy = model_grad(extrapolated)
        candidate = psi.prox(extrapolated - gy / lip, 1.0 / lip)
        iterations += 1
        # certificate: prox optimality supplies an element of the model's
        # subdifferential at the candidate whose norm bounds the residual
        gap = extrapolated - candidate
        certificate = lip * gap - (hess_x @ gap + lam * gap)
        residual = float(np.linalg.norm(certificate))
        if residual <= inner_tol:
            point = candidate
            break
        extrapolated = candidate + beta * (candidate - current)
        current = candidate
    if point is None:
        psi_sub = implicit_subgradient(x, current, lam, grad_x, hess_x, metric)
        best = StepResult(
            point=current,
            psi_sub=psi_sub,
            composite_grad=np.asarray(grad_f(current), dtype=float) + psi_sub,
            radius=metric.primal_norm(current - x),
            inner_iterations=iterations,
        )
        raise InnerSolveFailure(
            f"inner proximal solver did not reach tolerance {inner_tol} "
            f"within {max_inner} iterations (residual {residual:g})",
            best=best,
            residual=residual,
        )
    psi_sub = implicit_subgradient(x, point, lam, grad_x, hess_x, metric)
    return StepResult(
        point=point,
        psi_sub=psi_sub,
        composite_grad=np.asarray(grad_f(point), dtype=float) + psi_sub,
        radius=metric.primal_norm(point - x),
        inner_iterations=iterations,
    )
