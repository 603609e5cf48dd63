import numpy as np
import pytest

from src.basis import ModelDomain
from src.diagnostics import finite_difference_error
from src.functional import PairField
from src.functional import SystemProblem
from src.functional import bilinear_form
from src.functional import default_grid_size
from src.functional import gradient
from src.functional import hamiltonian
from src.functional import hessian
from src.functional import lagrangian
from src.functional import problem_basis
from src.functional import product_split
from src.functional import quadratic_part
from src.operators import PreconditionError
from src.solver import problem_split
from tests.conftest import make_problem


def first_mode(basis, u: float = 1.0, v: float = 1.0) -> PairField:
    cu = np.zeros(basis.count)
    cv = np.zeros(basis.count)
    cu[0], cv[0] = u, v
    return PairField.from_coefficients(basis, cu, cv)


def random_pair(basis, rng, scale: float = 1.0) -> PairField:
    return PairField.from_vector(basis, scale * rng.standard_normal(2 * basis.count))


def test_zero_field_has_zero_energy_and_gradient(reference_problem):
    w = PairField.zeros(problem_basis(reference_problem))
    assert hamiltonian(w, reference_problem) == 0.0
    assert lagrangian(w, reference_problem) == 0.0
    assert gradient(w, reference_problem).is_zero()


def test_hamiltonian_of_first_mode(reference_problem):
    """u = phi_1, v = 0, q = 3: integral of phi_1^4 / 4 = 0.375."""
    w = first_mode(problem_basis(reference_problem), u=1.0, v=0.0)
    assert hamiltonian(w, reference_problem) == pytest.approx(0.375, rel=1e-12)


def test_hamiltonian_homogeneity(reference_problem):
    w = first_mode(problem_basis(reference_problem), u=1.0, v=0.0)
    assert hamiltonian(w.scaled(2.0), reference_problem) == pytest.approx(16.0 * 0.375)


def test_quadratic_part_of_first_mode(reference_problem):
    """u = v = phi_1 with lam = mu = 0 gives A = lambda_1^s."""
    w = first_mode(problem_basis(reference_problem))
    assert quadratic_part(w, reference_problem) == pytest.approx(np.pi)


def test_quadratic_part_is_half_bilinear_form(rng):
    prob = make_problem(lam=2.0, mu=-1.5)
    w = random_pair(problem_basis(prob), rng)
    assert quadratic_part(w, prob) == pytest.approx(0.5 * bilinear_form(w, w, prob), rel=1e-12)


def test_positive_and_negative_parts_decouple(rng):
    """B(w+, w-) = 0, A(w+) > 0 and A(w-) < 0 outside resonance."""
    prob = make_problem(lam=2.0, mu=3.0)
    basis = problem_basis(prob)
    split = problem_split(prob)
    for _ in range(10):
        plus, minus, zero = product_split(random_pair(basis, rng), split)
        scale = abs(bilinear_form(plus, plus, prob)) + abs(bilinear_form(minus, minus, prob))
        assert abs(bilinear_form(plus, minus, prob)) < 1e-10 * scale
        assert quadratic_part(plus, prob) > 0
        assert quadratic_part(minus, prob) < 0
        assert zero.is_zero()


def test_lagrangian_nonpositive_on_negative_space(reference_problem, rng):
    split = problem_split(reference_problem)
    _, minus, _ = product_split(random_pair(problem_basis(reference_problem), rng), split)
    assert lagrangian(minus, reference_problem) <= 0.0


def test_gradient_pairs_lam_with_u_and_mu_with_v():
    """The L v equation carries lam u, the L u equation carries mu v."""
    prob = make_problem(lam=2.0, mu=3.0)
    eps = 1e-4
    grad_u_only = gradient(first_mode(problem_basis(prob), u=eps, v=0.0), prob)
    grad_v_only = gradient(first_mode(problem_basis(prob), u=0.0, v=eps), prob)
    assert grad_u_only.u.coefficients[0] == pytest.approx(-2.0 * eps, rel=1e-6)
    assert grad_u_only.v.coefficients[0] == pytest.approx(np.pi * eps, rel=1e-6)
    assert grad_v_only.v.coefficients[0] == pytest.approx(-3.0 * eps, rel=1e-6)
    assert grad_v_only.u.coefficients[0] == pytest.approx(np.pi * eps, rel=1e-6)


def test_gradient_matches_finite_differences(rng):
    """Analytic gradient agrees with central differences of J on random fields."""
    prob = make_problem(p=2.5, q=3.5, lam=1.0, mu=-0.5, truncation=12)
    basis = problem_basis(prob)
    for _ in range(100):
        assert finite_difference_error(prob, random_pair(basis, rng, scale=0.5)) < 1e-5


def test_hessian_is_symmetric_jacobian(rng):
    prob = make_problem(p=2.5, q=3.5, truncation=12)
    basis = problem_basis(prob)
    w = random_pair(basis, rng, scale=0.5)
    jac = hessian(w, prob)
    np.testing.assert_allclose(jac, jac.T, atol=1e-12)
    direction = rng.standard_normal(2 * basis.count)
    step = 1e-6
    forward = gradient(PairField.from_vector(basis, w.vector() + step * direction), prob).vector()
    backward = gradient(PairField.from_vector(basis, w.vector() - step * direction), prob).vector()
    np.testing.assert_allclose((forward - backward) / (2 * step), jac @ direction, rtol=1e-5, atol=1e-6)


def test_symmetric_ansatz_has_equal_gradient_parts(reference_problem, rng):
    basis = problem_basis(reference_problem)
    c = rng.standard_normal(basis.count)
    grad = gradient(PairField.from_coefficients(basis, c, c), reference_problem)
    np.testing.assert_allclose(grad.u.coefficients, grad.v.coefficients, atol=1e-12)


def test_lagrangian_even_for_odd_powers(reference_problem, rng):
    w = random_pair(problem_basis(reference_problem), rng)
    assert lagrangian(w.scaled(-1.0), reference_problem) == pytest.approx(lagrangian(w, reference_problem))


def test_hamiltonian_increases_along_rays(reference_problem, rng):
    w = random_pair(problem_basis(reference_problem), rng)
    values = [hamiltonian(w.scaled(t), reference_problem) for t in (0.5, 1.0, 1.5, 2.0)]
    assert np.all(np.diff(values) > 0)


@pytest.mark.parametrize(
    "overrides",
    [
        {"p": 1.0},
        {"q": 0.5},
        {"alpha": 1.0},
        {"truncation": 0},
    ],
)
def test_problem_rejects_invalid_data(overrides):
    with pytest.raises(PreconditionError):
        make_problem(**overrides)


def test_restricted_operator_needs_interval():
    with pytest.raises(PreconditionError):
        SystemProblem(domain=ModelDomain.rectangle(), operator="restricted", s=0.5, p=3, q=3)


def test_with_truncation_refines_grid(reference_problem):
    refined = reference_problem.with_truncation(64)
    assert refined.truncation == 64
    assert refined.domain.grid_size == default_grid_size(64) == 257
    assert problem_basis(refined).count == 64
