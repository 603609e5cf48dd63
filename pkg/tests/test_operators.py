import numpy as np
import pytest

from src.basis import ModelDomain
from src.basis import SpectralField
from src.operators import PreconditionError
from src.operators import apply_inverse
from src.operators import apply_restricted
from src.operators import apply_spectral
from src.operators import assemble_restricted
from src.operators import closed_form_constant
from src.operators import compare_pointwise
from src.operators import dual_norm
from src.operators import gagliardo_seminorm
from src.operators import normalizing_constant
from src.operators import operator_eigenvalues
from src.operators import reflection_kernel
from src.operators import restricted_basis
from src.operators import theta_norm
from src.operators import theta_space_label


@pytest.fixture(scope="module")
def fine_interval():
    return ModelDomain.interval(1.0, grid_size=257)


@pytest.mark.parametrize("k", [1, 5, 32])
def test_spectral_operator_scales_eigenfunctions(basis, k: int):
    """A^s phi_k = lambda_k^s phi_k."""
    result = apply_spectral(SpectralField.mode(basis, k), 0.3)
    expected = SpectralField.mode(basis, k, amplitude=basis.eigenvalues[k - 1] ** 0.3)
    np.testing.assert_allclose(result.coefficients, expected.coefficients)


def test_inverse_undoes_operator(basis, rng):
    field = SpectralField(basis, rng.standard_normal(32))
    restored = apply_inverse(apply_spectral(field, 0.7), "spectral", 0.7)
    np.testing.assert_allclose(restored.coefficients, field.coefficients, rtol=1e-12)


def test_negative_sigma_is_inverse(basis, rng):
    field = SpectralField(basis, rng.standard_normal(32))
    np.testing.assert_allclose(
        apply_spectral(field, 0.4, sigma=-1.0).coefficients,
        apply_inverse(field, "spectral", 0.4).coefficients,
    )


def test_theta_norm_of_mode(basis):
    """|phi_k|_alpha = lambda_k^(alpha/2); alpha = 0 is the L2 norm."""
    assert theta_norm(SpectralField.mode(basis, 3), 0.8, s=0.5).value == pytest.approx((3 * np.pi) ** 0.8)
    assert theta_norm(SpectralField.mode(basis, 3), 0.0).value == pytest.approx(1.0)


def test_theta_norm_rejects_alpha_above_2s(basis):
    with pytest.raises(PreconditionError):
        theta_norm(SpectralField.mode(basis, 1), 1.2, s=0.5)


def test_dual_norm_of_mode(basis):
    """|phi_k|_(Theta^s)' = lambda_k^(-s/2)."""
    assert dual_norm(SpectralField.mode(basis, 2), 0.5) == pytest.approx((2 * np.pi) ** -0.5)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_normalizing_constant_matches_closed_form(n: int, s: float):
    assert normalizing_constant(n, s) == pytest.approx(closed_form_constant(n, s), rel=1e-6)


def test_normalizing_constant_half_on_line():
    """C(1, 1/2) = 1/pi."""
    assert normalizing_constant(1, 0.5) == pytest.approx(1.0 / np.pi, rel=1e-8)


@pytest.mark.parametrize("s", [0.0, 1.0, 1.2, -0.1])
def test_order_outside_unit_interval_rejected(s: float):
    with pytest.raises(PreconditionError):
        normalizing_constant(1, s)


@pytest.mark.parametrize(
    "s,expected",
    [
        (0.0, "L2"),
        (0.25, "H^s = H^s_0"),
        (0.5, "H^1/2_00"),
        (0.75, "H^s_0"),
        (1.0, "H^s_0"),
        (1.5, "H^s cap H^1_0"),
    ],
)
def test_theta_space_label(s: float, expected: str):
    assert theta_space_label(s) == expected


def test_theta_space_label_out_of_range():
    with pytest.raises(PreconditionError):
        theta_space_label(2.5)


def test_restricted_matrix_symmetric_with_positive_row_sums(fine_interval):
    """Discrete operator is symmetric and maps the interior indicator to a positive function."""
    disc = assemble_restricted(fine_interval, 0.5)
    np.testing.assert_allclose(disc.matrix, disc.matrix.T)
    indicator = np.ones(fine_interval.grid_size)
    indicator[[0, -1]] = 0.0
    assert np.all(apply_restricted(disc, indicator) > 0)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_restricted_first_eigenvalue_below_spectral(fine_interval, s: float):
    """mu_1 < lambda_1^s."""
    disc = assemble_restricted(fine_interval, s)
    assert 0 < disc.eigenvalues[0] < np.pi ** (2 * s)


def test_restricted_eigenvectors_normalised(fine_interval):
    disc = assemble_restricted(fine_interval, 0.5)
    psi = disc.eigenfunction(1)
    assert disc.h * np.sum(psi**2) == pytest.approx(1.0)
    assert psi[0] == psi[-1] == 0.0
    assert np.all(psi[1:-1] > 0)


def test_restricted_basis_recovers_discrete_eigenvalues(fine_interval):
    """Basis stores mu_k^(1/s), so operator eigenvalues give back mu_k."""
    disc = assemble_restricted(fine_interval, 0.25)
    basis = restricted_basis(disc, 8)
    np.testing.assert_allclose(operator_eigenvalues(basis, 0.25), disc.eigenvalues[:8], rtol=1e-12)
    with pytest.raises(PreconditionError):
        operator_eigenvalues(basis, 0.5)


@pytest.mark.parametrize("s", [0.25, 0.5])
def test_gagliardo_seminorm_of_linear_function(s: float):
    """Double integral of |x - y|^(1-2s) over the unit square is 2 / ((2-2s)(3-2s))."""
    domain = ModelDomain.interval(1.0, grid_size=129)
    x = domain.axes()[0]
    expected = 2.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))
    assert gagliardo_seminorm(x, s, domain) == pytest.approx(expected, rel=2e-2)


def test_gagliardo_seminorm_quadratic_in_amplitude(interval):
    x = interval.axes()[0]
    u = np.sin(np.pi * x)
    expected = 4.0 * gagliardo_seminorm(u, 0.3, interval)
    assert gagliardo_seminorm(2.0 * u, 0.3, interval) == pytest.approx(expected)


def _nonnegative_profile(name: str, x: np.ndarray) -> np.ndarray:
    if name == "first_mode":
        return np.sin(np.pi * x)
    if name == "parabola":
        return x * (1.0 - x)
    return np.minimum(x, 1.0 - x)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("profile", ["first_mode", "parabola", "hat"])
def test_spectral_dominates_restricted(profile: str, s: float):
    """A^s u - (-Delta)^s u >= -5h on two grids, and the negative part does not grow under refinement."""
    slack = []
    for grid_size in (257, 513):
        domain = ModelDomain.interval(1.0, grid_size=grid_size)
        comparison = compare_pointwise(_nonnegative_profile(profile, domain.axes()[0]), s, domain)
        assert comparison.minimum >= -5.0 * comparison.h
        slack.append(max(-comparison.minimum, 0.0))
    assert slack[1] <= slack[0] + 1e-12


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_comparison_recovers_spectral_action_on_first_mode(fine_interval, s: float):
    """Restricted action plus the reflection difference gives lambda_1^s sin(pi x) away from the boundary."""
    x = fine_interval.axes()[0]
    comparison = compare_pointwise(np.sin(np.pi * x), s, fine_interval)
    inner = (comparison.nodes >= 0.25) & (comparison.nodes <= 0.75)
    expected = np.pi ** (2.0 * s) * np.sin(np.pi * comparison.nodes[inner])
    np.testing.assert_allclose(comparison.spectral[inner], expected, rtol=2e-2)


def test_reflection_kernel_is_nonnegative(interval):
    kernel = reflection_kernel(interval, 0.5)
    assert kernel.shape == (interval.grid_size - 2, interval.grid_size)
    assert np.all(np.isfinite(kernel))
    assert np.all(kernel >= 0.0)


def test_reflection_kernel_rejects_rectangle():
    with pytest.raises(PreconditionError):
        reflection_kernel(ModelDomain.rectangle(grid_size=33), 0.5)


@pytest.mark.parametrize("grid_size", [257, 513])
def test_restricted_near_one_approaches_laplacian(grid_size: int):
    """At s = 0.99 the restricted operator maps sin(pi x) to about pi^2 sin(pi x) in the interior."""
    domain = ModelDomain.interval(1.0, grid_size=grid_size)
    x = domain.axes()[0]
    disc = assemble_restricted(domain, 0.99)
    inner = (disc.interior_nodes >= 0.25) & (disc.interior_nodes <= 0.75)
    result = apply_restricted(disc, np.sin(np.pi * x))[inner]
    expected = np.pi**2 * np.sin(np.pi * disc.interior_nodes[inner])
    np.testing.assert_allclose(result, expected, rtol=5e-2)


def test_gagliardo_seminorm_self_converges():
    """sin(pi x) at s = 1/2: refinements settle monotonically, last change below 2%."""
    values = []
    for grid_size in (129, 257, 513):
        domain = ModelDomain.interval(1.0, grid_size=grid_size)
        values.append(gagliardo_seminorm(np.sin(np.pi * domain.axes()[0]), 0.5, domain))
    assert abs(values[2] - values[1]) < abs(values[1] - values[0])
    assert abs(values[2] - values[1]) / values[2] < 0.02


def test_compare_pointwise_requires_nonnegative(interval):
    x = interval.axes()[0]
    with pytest.raises(PreconditionError):
        compare_pointwise(np.sin(2 * np.pi * x), 0.5, interval)


def test_compare_pointwise_requires_boundary_zero(interval):
    with pytest.raises(PreconditionError):
        compare_pointwise(np.ones(interval.grid_size), 0.5, interval)
