from types import SimpleNamespace
from unittest.mock import patch

import numpy as np
import pytest
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from src.basis import ModelDomain
from src.basis import grid_points
from src.basis import synthesize
from src.functional import PairField
from src.functional import gradient
from src.functional import lagrangian
from src.functional import problem_basis
from src.indefinite import eigen_coordinates
from src.indefinite import star_norm
from src.operators import PreconditionError
from src.solver import _newton_direction
from src.solver import admissibility
from src.solver import continuation
from src.solver import fixed_point_solve
from src.solver import gate
from src.solver import initial_guess
from src.solver import lane_emden_critical_exponent
from src.solver import newton_solve
from src.solver import problem_split
from src.solver import ray_maximizer
from src.solver import solve_problem
from tests.conftest import make_problem


@pytest.fixture(scope="module")
def reference_solution():
    return solve_problem(make_problem())


def test_gate_subcritical_line():
    """n=1, s=0.4, p=q=2: margin 2/3 - 0.2 > 0."""
    report = admissibility(1, 0.4, 2.0, 2.0)
    assert report.margin == pytest.approx(2.0 / 3.0 - 0.2)
    assert report.hyperbola_ok


def test_gate_half_order_on_line_admits_everything():
    """n = 2s: every p, q > 1 is admissible and the window is the clipped interval."""
    report = admissibility(1, 0.5, 3.0, 3.0)
    assert report.hyperbola_ok
    assert report.alpha_window == pytest.approx((0.25, 0.75))
    assert report.suggested_alpha == pytest.approx(0.5)
    assert report.theorem_applicable
    assert report.lane_emden_critical == float("inf")


def test_gate_critical_hyperbola_rejected():
    """n=2, s=0.5, p=q=3 sits exactly on the critical hyperbola."""
    report = admissibility(2, 0.5, 3.0, 3.0)
    assert report.margin == 0.0
    assert not report.hyperbola_ok
    assert report.alpha_window is None
    assert report.suggested_alpha == 0.5
    assert not report.theorem_applicable


def test_gate_window_consistent_on_grid():
    """Window nonempty exactly when the margin is positive; the margin is the hyperbola formula."""
    exponents = np.linspace(1.1, 6.0, 100)
    for p in exponents:
        for q in exponents:
            report = admissibility(2, 0.5, p, q)
            assert report.margin == pytest.approx(1 / (p + 1) + 1 / (q + 1) - 0.5, abs=1e-14)
            assert (report.alpha_window is not None) == (report.margin > 0)
            if report.alpha_window:
                low, high = report.alpha_window
                assert low < report.suggested_alpha < high


def test_gate_alpha_outside_window_not_applicable():
    report = admissibility(1, 0.5, 3.0, 3.0, alpha=0.1)
    assert report.hyperbola_ok
    assert not report.theorem_applicable


def test_gate_logs_inadmissible(caplog):
    """n=2, s=1/4, p=q=5 is supercritical; the gate warns instead of raising."""
    prob = make_problem(p=5.0, q=5.0, s=0.25, alpha=None, domain=ModelDomain.rectangle(grid_size=33))
    report = gate(prob)
    assert not report.hyperbola_ok
    assert "outside the existence range" in caplog.text


def test_lane_emden_exponent():
    assert lane_emden_critical_exponent(2, 0.5) == pytest.approx(3.0)


def test_initial_guess_along_first_mode(reference_problem):
    """With lam = mu = 0 the start direction is (1, 1)/sqrt(2) in the mode frame, of unit star norm."""
    split = problem_split(reference_problem)
    w = initial_guess(reference_problem, split, 2.0)
    assert w.u.coefficients[0] == pytest.approx(w.v.coefficients[0])
    assert np.all(w.u.coefficients[1:] == 0)
    coords = eigen_coordinates(w.u.coefficients, w.v.coefficients, split)
    assert star_norm(coords, split) == pytest.approx(2.0)
    assert initial_guess(reference_problem, split, 0.0).is_zero()


def test_ray_maximizer_has_positive_energy(reference_problem):
    split = problem_split(reference_problem)
    t_star = ray_maximizer(reference_problem, split)
    assert t_star > 0
    assert lagrangian(initial_guess(reference_problem, split, t_star), reference_problem) > 0


def test_zero_seed_converges_to_trivial(reference_problem):
    sol = newton_solve(reference_problem, PairField.zeros(problem_basis(reference_problem)))
    assert sol.converged
    assert sol.trivial
    assert sol.iterations == 0
    assert not sol.u_positive


def test_reference_problem_converges(reference_solution):
    """s = 1/2, p = q = 3: a nontrivial positive symmetric solution with positive energy."""
    sol = reference_solution
    assert sol.converged
    assert sol.residual <= 1e-10
    assert not sol.trivial
    assert sol.energy > 0
    assert sol.u_positive and sol.v_positive
    assert np.linalg.norm(sol.w.u.coefficients - sol.w.v.coefficients) <= 1e-8
    assert sol.seed.startswith("ray t*=")


def test_reference_solution_is_weak_solution(reference_solution):
    grad = gradient(reference_solution.w, reference_solution.problem)
    assert np.abs(grad.vector()).max() <= 1e-8


def test_fixed_point_agrees_with_newton(reference_solution):
    """Normalised iteration at K = 64 reproduces the Newton solution to 1% in sup norm."""
    result = fixed_point_solve(make_problem(truncation=64))
    assert result.converged
    points, _ = grid_points(reference_solution.w.basis.domain)
    newton = synthesize(reference_solution.w.u)
    fixed = synthesize(result.w.u, points)
    assert np.abs(fixed - newton).max() <= 0.01 * np.abs(newton).max()


def test_fixed_point_requires_symmetric_problem():
    with pytest.raises(PreconditionError):
        fixed_point_solve(make_problem(lam=1.0))


def test_doubling_truncation_keeps_energy(reference_solution):
    refined = reference_solution.problem.with_truncation(64)
    basis = problem_basis(refined)
    w0 = PairField.from_coefficients(
        basis,
        np.pad(reference_solution.w.u.coefficients, (0, 32)),
        np.pad(reference_solution.w.v.coefficients, (0, 32)),
    )
    sol = solve_problem(refined, w0)
    assert sol.converged
    assert sol.seed == "warm-start"
    assert abs(sol.energy - reference_solution.energy) < 0.01 * reference_solution.energy


def _classical_oracle(length: float, intervals: int) -> np.ndarray:
    """Second-order finite-difference Newton for -u'' = u^3 on (0, length), zero at both ends."""
    h = length / intervals
    x = np.linspace(0.0, length, intervals + 1)[1:-1]
    laplacian = sparse.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(x.size, x.size)) / h**2
    # one-mode Galerkin amplitude of -u'' = u^3 on (0, pi): a^2 = 4/3
    u = np.sqrt(4.0 / 3.0) * np.sin(np.pi * x / length) * (np.pi / length)
    for _ in range(50):
        residual = laplacian @ u - u**3
        if np.abs(residual).max() < 1e-12:
            break
        u = u - sparse_linalg.spsolve((laplacian - sparse.diags(3.0 * u**2)).tocsc(), residual)
    return np.concatenate([[0.0], u, [0.0]])


def test_order_near_one_approaches_classical_solution():
    """s = 0.95 on (0, pi) stays within 5% of the classical solution in sup norm."""
    domain = ModelDomain.interval(np.pi, grid_size=129)
    sol = solve_problem(make_problem(s=0.95, alpha=0.95, domain=domain))
    assert sol.converged
    fractional = synthesize(sol.w.u)
    classical = _classical_oracle(np.pi, 128)
    assert np.abs(fractional - classical).max() < 0.05 * np.abs(classical).max()


def test_newton_reports_nonconvergence(reference_problem):
    split = problem_split(reference_problem)
    w0 = initial_guess(reference_problem, split, ray_maximizer(reference_problem, split))
    sol = newton_solve(reference_problem, w0, max_iter=1)
    assert not sol.converged
    assert sol.reason == "max iterations"
    assert len(sol.residual_trace) == 2


def test_singular_newton_matrix_falls_back_to_tikhonov():
    step, regularized = _newton_direction(np.ones((2, 2)), np.array([1.0, 1.0]))
    assert regularized
    assert np.all(np.isfinite(step))
    np.testing.assert_allclose(step, [0.5, 0.5], rtol=1e-6)


def test_single_step_path_equals_direct_solve(reference_problem, reference_solution):
    path = continuation(reference_problem, "lam", [0.0])
    assert not path.stopped
    assert path.solutions[0].energy == reference_solution.energy
    np.testing.assert_array_equal(path.solutions[0].w.vector(), reference_solution.w.vector())


def test_lambda_path_is_continuous(reference_problem):
    path = continuation(reference_problem, "lam", [0.0, 0.25, 0.5])
    assert not path.stopped
    assert all(sol.converged and not sol.trivial for sol in path.solutions)
    assert path.dim_zero == [0, 0, 0]
    assert path.crossings == []
    jumps = [np.linalg.norm(b.w.vector() - a.w.vector()) for a, b in zip(path.solutions, path.solutions[1:])]
    assert max(jumps) < 0.5 * np.linalg.norm(path.solutions[0].w.vector())


def test_lam_mu_path_shrinks_with_step(reference_problem):
    """lam = mu = t below lambda_1^s: halving t roughly halves the distance to the t = 0 solution."""
    path = continuation(reference_problem, "lam_mu", [0.0, 0.05, 0.1, 0.2])
    assert not path.stopped
    assert all(sol.converged and not sol.trivial for sol in path.solutions)
    origin = path.solutions[0].w.vector()
    distances = [np.linalg.norm(sol.w.vector() - origin) for sol in path.solutions[1:]]
    assert distances[0] < distances[1] < distances[2]
    assert 0.35 < distances[0] / distances[1] < 0.65
    assert 0.35 < distances[1] / distances[2] < 0.65


def _stub_solution(prob, w0=None, converged=True):
    return SimpleNamespace(converged=converged, alpha=0.5, w=PairField.zeros(problem_basis(prob)))


def test_resonance_crossing_located(reference_problem):
    """lam = mu = t crosses lambda_1^(2s) at t = pi."""
    with patch("src.solver.solve_problem", side_effect=_stub_solution):
        path = continuation(reference_problem, "lam_mu", [3.0, 3.3])
    assert len(path.crossings) == 1
    assert path.crossings[0].mode == 1
    assert path.crossings[0].value == pytest.approx(np.pi, abs=1e-6)


def test_dim_zero_reported_at_resonance(reference_problem):
    with patch("src.solver.solve_problem", side_effect=_stub_solution):
        path = continuation(reference_problem, "lam_mu", [np.pi])
    assert path.dim_zero == [1]


def test_failed_steps_bisect_then_stop(reference_problem):
    outcomes = iter([True, False, False, False])

    def flaky(prob, w0=None):
        return _stub_solution(prob, converged=next(outcomes))

    with patch("src.solver.solve_problem", side_effect=flaky) as mock_solve:
        path = continuation(reference_problem, "lam", [0.0, 1.0], max_bisections=2)
    assert path.stopped
    assert path.values == [0.0]
    assert "after 2 bisections" in path.reason
    assert mock_solve.call_count == 4


def test_first_failure_stops_without_bisection(reference_problem):
    def failing(prob, w0=None):
        return _stub_solution(prob, converged=False)

    with patch("src.solver.solve_problem", side_effect=failing):
        path = continuation(reference_problem, "mu", [0.0, 1.0])
    assert path.stopped
    assert path.values == []


def test_unknown_parameter_rejected(reference_problem):
    with pytest.raises(PreconditionError):
        continuation(reference_problem, "p", [1.0])
