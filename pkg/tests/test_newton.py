import math

import numpy as np
import pytest

from regnewton import (
    InitializationFailure,
    Metric,
    SmoothOracle,
    ProblemInstance,
    SolverConfig,
    acceptance_check,
    init_h0,
    make_l1_quadratic,
    make_softmax,
    make_worst,
    run_fixed,
    run_super_universal,
    step_unconstrained,
)


def scalar_problem(f, grad, hess, x0, name):
    return ProblemInstance(
        name=name,
        oracle=SmoothOracle(
            f=lambda x: f(float(x[0])),
            grad=lambda x: np.array([grad(float(x[0]))]),
            hess=lambda x: np.array([[hess(float(x[0]))]]),
        ),
        metric=Metric.identity(1),
        x0=np.array([x0]),
    )


def half_square():
    return scalar_problem(lambda t: 0.5 * t * t, lambda t: t, lambda t: 1.0, 1.0, "half_square")


def quartic():
    return scalar_problem(lambda t: 0.25 * t**4, lambda t: t**3, lambda t: 3 * t * t, 1.0, "quartic")


# --- run_fixed ---------------------------------------------------------------


def test_fixed_lambda_formula_values():
    # q=3, M=1, g=1 -> lam = sqrt(6); q=2 -> lam = 6M for any g
    assert (6.0 * 1.0 * 1.0 ** (3 - 2)) ** (1 / 2) == pytest.approx(math.sqrt(6.0))
    trace = run_fixed(half_square(), 3.0, 1.0, cfg=SolverConfig(max_iterations=40, tol_grad=1e-8))
    lams = trace.column("lambda")[:-1]
    gs = trace.column("grad_norm")[:-1]
    for lam, g in zip(lams, gs):
        assert lam == pytest.approx(math.sqrt(6.0 * g))

    trace2 = run_fixed(half_square(), 2.0, 0.5, cfg=SolverConfig(max_iterations=5))
    assert all(lam == pytest.approx(3.0) for lam in trace2.column("lambda")[:-1])


def test_fixed_scalar_recursion_matches_independent_loop():
    # independent recursion: x <- x * lam/(1 + lam) with lam = sqrt(6 |x|)
    x = 1.0
    expected = []
    for _ in range(100):
        expected.append(x)
        if abs(x) <= 1e-8:
            break
        lam = math.sqrt(6.0 * abs(x))
        x = x * lam / (1.0 + lam)
    trace = run_fixed(
        half_square(), 3.0, 1.0, cfg=SolverConfig(max_iterations=100, tol_grad=1e-8)
    )
    gs = trace.column("grad_norm")
    assert trace.status == "converged"
    np.testing.assert_allclose(gs, expected[: len(gs)], rtol=1e-12)
    # monotone gradient norms on this fixture
    assert all(gs[i + 1] < gs[i] for i in range(len(gs) - 1))
    assert gs[-1] <= 1e-8


def test_fixed_rejects_bad_class_parameters():
    with pytest.raises(ValueError):
        run_fixed(half_square(), 1.5, 1.0)
    with pytest.raises(ValueError):
        run_fixed(half_square(), 3.0, -1.0)


# --- run_super_universal -----------------------------------------------------


def test_super_universal_first_iteration_by_hand():
    # f = x^2/2, alpha=1, H0=1: first trial lam=1 accepted, H1 = 0.25
    trace = run_super_universal(half_square(), cfg=SolverConfig(alpha=1.0, h0=1.0))
    assert trace.status == "converged"
    first = trace.records[0]
    assert first.j == 0
    assert first.lam == pytest.approx(1.0)
    assert first.h == pytest.approx(1.0)
    assert trace.records[1].h == pytest.approx(0.25)


def test_super_universal_stationary_start():
    prob = scalar_problem(lambda t: 0.5 * t * t, lambda t: t, lambda t: 1.0, 0.0, "at_opt")
    trace = run_super_universal(prob, cfg=SolverConfig(h0=1.0))
    assert trace.status == "converged"
    assert trace.iterations == 0
    assert trace.final.oracle_calls == 0


def test_super_universal_descent_and_gradient_cap():
    prob = make_worst(10, 3)
    trace = run_super_universal(prob, cfg=SolverConfig(alpha=1.0, tol_grad=1e-10))
    assert trace.status == "converged"
    objectives = trace.column("F")
    gs = trace.column("grad_norm")
    lams = trace.column("lambda")
    for i in range(len(trace) - 1):
        # per-step descent bound
        assert objectives[i] - objectives[i + 1] >= gs[i + 1] ** 2 / (4 * lams[i]) - 1e-8
        # gradient growth cap
        assert gs[i + 1] <= 4 * gs[i] + 1e-8


def test_super_universal_oracle_ledger_identity():
    prob = make_worst(12, 4)
    cfg = SolverConfig(alpha=2.0 / 3.0, h0=8.0, tol_grad=1e-11)
    trace = run_super_universal(prob, cfg=cfg)
    js = trace.column("j")
    ns = trace.column("oracle_calls")
    hs = trace.column("H")
    total = 0
    for idx in range(len(trace)):
        assert ns[idx] == total
        assert total == pytest.approx(2 * idx + math.log(hs[idx] / 8.0, 4.0), abs=1e-9)
        if idx < len(trace) - 1:
            total += 1 + js[idx]


def test_alg1_equals_pinned_alg2():
    # Algorithm 2 with H pinned and j forced to 0 must reproduce Algorithm 1.
    prob = make_worst(8, 3)
    q, mq = 3.0, float(prob.known_mq[3])
    cfg = SolverConfig(max_iterations=25, tol_grad=1e-13)
    fixed = run_fixed(prob, q, mq, cfg=cfg)

    h_pin = (6.0 * mq) ** (1.0 / (q - 1.0))
    alpha = (q - 2.0) / (q - 1.0)
    metric = prob.metric
    x = prob.x0.copy()
    grad = prob.oracle.grad(x)
    manual_g = [metric.dual_norm(grad)]
    for _ in range(fixed.iterations):
        g = metric.dual_norm(grad)
        lam = h_pin * g**alpha
        step = step_unconstrained(x, grad, prob.oracle.hess(x), lam, metric, prob.oracle.grad)
        x = step.point
        grad = step.composite_grad
        manual_g.append(metric.dual_norm(grad))
    np.testing.assert_allclose(fixed.column("grad_norm"), manual_g, rtol=1e-12, atol=1e-15)


def test_super_universal_alpha_validation():
    with pytest.raises(ValueError):
        run_super_universal(half_square(), cfg=SolverConfig(alpha=1.5, h0=1.0))
    with pytest.warns(UserWarning):
        run_super_universal(half_square(), cfg=SolverConfig(alpha=0.5, h0=1.0))


def test_budget_exhaustion_status():
    prob = make_worst(10, 4)
    trace = run_super_universal(prob, cfg=SolverConfig(h0=1.0, max_iterations=3))
    assert trace.status == "budget-exhausted"
    assert trace.iterations == 3

    trace2 = run_super_universal(prob, cfg=SolverConfig(h0=1.0, max_oracle_calls=4))
    assert trace2.status == "budget-exhausted"
    assert trace2.final.oracle_calls >= 4


def test_composite_driver_monotone_and_member():
    prob = make_l1_quadratic(6, seed=23)
    trace = run_super_universal(prob, cfg=SolverConfig(alpha=1.0))
    assert trace.status == "converged"
    objectives = trace.column("F")
    assert all(objectives[i + 1] <= objectives[i] + 1e-12 for i in range(len(objectives) - 1))


def test_fixed_driver_supports_composite():
    # the smooth part is quadratic, so any positive constant is valid for q=3
    prob = make_l1_quadratic(5, seed=31)
    trace = run_fixed(prob, 3.0, 1.0, cfg=SolverConfig(max_iterations=200, tol_grad=1e-8))
    assert trace.status == "converged"
    objectives = trace.column("F")
    assert all(objectives[i + 1] <= objectives[i] + 1e-12 for i in range(len(objectives) - 1))


def test_adaptive_search_stall_carries_trace():
    from regnewton import AdaptiveSearchStall

    prob = scalar_problem(
        lambda t: abs(t - 1.0),
        lambda t: 1.0 if t >= 1.0 else -1.0,
        lambda t: 0.0,
        1.0,
        "kink_trap",
    )
    with pytest.raises(AdaptiveSearchStall) as info:
        run_super_universal(prob, cfg=SolverConfig(h0=1.0, j_cap=10))
    assert info.value.trace is not None
    assert info.value.trace.status == "error"


def test_wall_clock_budget_is_a_hard_stop():
    prob = make_worst(10, 3)
    trace = run_super_universal(prob, cfg=SolverConfig(h0=1.0, max_seconds=0.0))
    assert trace.status == "budget-exhausted"
    assert trace.iterations == 0


# --- init_h0 -----------------------------------------------------------------


def test_init_h0_quadratic_accepts_immediately():
    res = init_h0(half_square(), h_start=1e6, alpha=1.0)
    assert res.h0 == 1e6
    assert res.trials == 0
    assert not res.converged


def test_init_h0_quartic_searches_upward():
    # h=1e-4 fails the acceptance test at x0=1 (see the subproblem examples),
    # so the search must move before returning a passing value
    res = init_h0(quartic(), h_start=1e-4, alpha=1.0)
    assert res.trials > 0
    prob = quartic()
    g = 1.0
    lam = res.h0 * g
    step = step_unconstrained(
        prob.x0, prob.oracle.grad(prob.x0), prob.oracle.hess(prob.x0), lam,
        prob.metric, prob.oracle.grad,
    )
    assert acceptance_check(step.composite_grad, prob.x0, step.point, lam, prob.metric)
    # the value one search step earlier must fail, confirming the semantics
    lam_prev = (res.h0 / 2.0) * g
    step_prev = step_unconstrained(
        prob.x0, prob.oracle.grad(prob.x0), prob.oracle.hess(prob.x0), lam_prev,
        prob.metric, prob.oracle.grad,
    )
    assert not acceptance_check(step_prev.composite_grad, prob.x0, step_prev.point, lam_prev, prob.metric)


def test_init_h0_stationary_start():
    prob = scalar_problem(lambda t: 0.5 * t * t, lambda t: t, lambda t: 1.0, 0.0, "at_opt")
    res = init_h0(prob, h_start=2.0)
    assert res.converged
    assert res.h0 == 2.0


def test_init_h0_failure_on_ill_posed_oracle():
    # a lying gradient at a kink minimum: every trial step lands on the other
    # side with a reversed gradient, so no regularization can be accepted
    prob = scalar_problem(
        lambda t: abs(t - 1.0),
        lambda t: 1.0 if t >= 1.0 else -1.0,
        lambda t: 0.0,
        1.0,
        "kink_trap",
    )
    with pytest.raises(InitializationFailure):
        init_h0(prob, h_start=1e-3, cap=40)


# --- superlinear tail --------------------------------------------------------


def test_softmax_superlinear_tail():
    prob = make_softmax(20, 60, 0.1, seed=17)
    trace = run_super_universal(prob, cfg=SolverConfig(alpha=1.0, tol_grad=1e-13))
    gs = [g for g in trace.column("grad_norm") if g > 0]
    # find consecutive tail ratios log g_{k+1} / log g_k once g <= 1e-3
    ratios = []
    for i in range(len(gs) - 1):
        if gs[i] <= 1e-3 and gs[i + 1] > 0:
            ratios.append(math.log(gs[i + 1]) / math.log(gs[i]))
    assert sum(1 for r in ratios if r >= 1.2) >= 2
