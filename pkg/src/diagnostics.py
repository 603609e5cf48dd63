"""Probes of operator comparison, eigenvalue ordering, boundary behaviour and solution regularity.

Inequalities are reported with the grid tolerance they are judged against, never asserted here.
"""

import logging
from dataclasses import replace
from typing import Callable

import numpy as np
from joblib import Parallel
from joblib import delayed

from src.basis import EigenBasis
from src.basis import ModelDomain
from src.basis import SpectralField
from src.basis import synthesize
from src.datamodels import DiagnosticsReport
from src.datamodels import OperatorDiagnostics
from src.datamodels import SolutionDiagnostics
from src.functional import PairField
from src.functional import SystemProblem
from src.functional import gradient
from src.functional import lagrangian
from src.indefinite import isometry_defect
from src.operators import PreconditionError
from src.operators import apply_inverse
from src.operators import assemble_restricted
from src.operators import compare_pointwise
from src.operators import dual_norm
from src.operators import operator_eigenvalues
from src.solver import SaddleSolution
from src.solver import resolve_alpha

logger = logging.getLogger(__name__)

TEST_FAMILY_VERSION = "nonnegative-v2: phi_1, x(1-x), hat; reflection-kernel difference"
COMPARISON_TOLERANCE_FACTOR = 5.0  # tolerance = 5h


def _phi_1(x: np.ndarray, length: float) -> np.ndarray:
    return np.sqrt(2.0 / length) * np.sin(np.pi * x / length)


def _parabola(x: np.ndarray, length: float) -> np.ndarray:
    return (x / length) * (1.0 - x / length)


def _hat(x: np.ndarray, length: float) -> np.ndarray:
    return 1.0 - np.abs(2.0 * x / length - 1.0)


TEST_FUNCTIONS: dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "phi_1": _phi_1,
    "parabola": _parabola,
    "hat": _hat,
}


def fit_boundary_exponent(
    values: np.ndarray,
    domain: ModelDomain,
    window: tuple[float, float] | None = None,
    order: float | None = None,
) -> tuple[float, float]:
    """Least-squares slope beta of log|u| against log dist(x, boundary), with the RMS fit residual.

    The default window is 2h <= d <= 0.1 * length, both ends of the interval pooled. Given the
    operator order s, log u is fitted as log c + beta log d + a d^(2s) + b d, which absorbs the
    next terms of the expansion u = d^s (c + c' d^(2s) + c'' d + ...) of restricted eigenfunctions
    (d log d replaces d^(2s) at s = 1/2).
    """
    if domain.dimension != 1:
        raise PreconditionError("Boundary exponents are fitted on intervals")
    u = np.abs(np.asarray(values, dtype=float))
    x = domain.axes()[0]
    length = domain.extents[0]
    distance = np.minimum(x, length - x)
    low, high = window or (2.0 * domain.spacing[0], 0.1 * length)
    mask = (distance >= low) & (distance <= high) & (u > 0.0)
    columns = 2 if order is None else 4
    if mask.sum() < columns + 1:
        raise PreconditionError(f"Only {int(mask.sum())} points in the fitting window {low:.3g}..{high:.3g}")
    d = distance[mask] / length
    log_d, log_u = np.log(distance[mask]), np.log(u[mask])
    design = [np.ones_like(log_d), log_d]
    if order is not None:
        design.append(d * np.log(d) if np.isclose(2.0 * order, 1.0) else d ** (2.0 * order))
        design.append(d)
    matrix = np.column_stack(design)
    coefficients, *_ = np.linalg.lstsq(matrix, log_u, rcond=None)
    residual = float(np.sqrt(np.mean((log_u - matrix @ coefficients) ** 2)))
    return float(coefficients[1]), residual


def fit_decay_rate(field: SpectralField, threshold: float = 1e-12) -> tuple[float, float] | None:
    """sigma in |xi_k| ~ C lambda_k^-sigma fitted over coefficients above threshold * max|xi|."""
    magnitude = np.abs(field.coefficients)
    if magnitude.max() == 0.0:
        return None
    mask = magnitude > threshold * magnitude.max()
    if mask.sum() < 2:
        return None
    log_lam = np.log(field.basis.eigenvalues[mask])
    log_xi = np.log(magnitude[mask])
    slope, intercept = np.polyfit(log_lam, log_xi, 1)
    residual = float(np.sqrt(np.mean((log_xi - (slope * log_lam + intercept)) ** 2)))
    return float(-slope), residual


def richardson(values: list[float]) -> tuple[float, float | None]:
    """Extrapolated limit and observed order from values on grids h, h/2, h/4."""
    if len(values) != 3:
        raise ValueError(f"richardson needs three refinement levels, got {len(values)}")
    coarse, middle, fine = values
    first, second = coarse - middle, middle - fine
    if second == 0.0 or first / second <= 1.0:
        return fine, None
    order = float(np.log2(first / second))
    return fine - second / (2.0**order - 1.0), order


def _refined(domain: ModelDomain, level: int) -> ModelDomain:
    return replace(domain, grid_size=domain.intervals * 2**level + 1)


def _operator_entry(domain: ModelDomain, s: float, levels: int) -> OperatorDiagnostics:
    length = domain.extents[0]
    lambda_1_s = (np.pi / length) ** (2.0 * s)
    grids = [_refined(domain, level) for level in range(levels)]
    discs = [assemble_restricted(grid, s) for grid in grids]
    gaps = [lambda_1_s - disc.eigenvalues[0] for disc in discs]
    extrapolated, order = richardson(gaps[:3]) if levels >= 3 else (gaps[-1], None)

    comparisons: list[dict[str, float]] = []
    for grid, disc in zip(grids[:2], discs[:2]):
        x = grid.axes()[0]
        comparisons.append(
            {
                name: compare_pointwise(f(x, length), s, grid, disc).minimum
                for name, f in TEST_FUNCTIONS.items()
            }
        )

    # boundary fits on the finest grid; the change is against the next coarser one
    beta_psi, res_psi = fit_boundary_exponent(discs[-1].eigenfunction(1), grids[-1], order=s)
    beta_psi_coarse, _ = fit_boundary_exponent(discs[-2].eigenfunction(1), grids[-2], order=s)
    beta_phi, res_phi = fit_boundary_exponent(_phi_1(grids[-1].axes()[0], length), grids[-1])
    entry = OperatorDiagnostics(
        s=s,
        intervals=domain.intervals,
        mu_1=float(discs[0].eigenvalues[0]),
        lambda_1_s=float(lambda_1_s),
        eigenvalue_gap=float(gaps[0]),
        eigenvalue_gap_refined=float(gaps[1]),
        gap_extrapolated=float(extrapolated),
        gap_order=order,
        comparison_min=comparisons[0],
        comparison_min_refined=comparisons[1],
        comparison_tolerance=COMPARISON_TOLERANCE_FACTOR * discs[0].h,
        boundary_exponent_restricted=beta_psi,
        boundary_residual_restricted=res_psi,
        boundary_exponent_spectral=beta_phi,
        boundary_residual_spectral=res_phi,
        boundary_refit_change=abs(beta_psi - beta_psi_coarse),
    )
    status = "✅" if entry.eigenvalue_gap > 0 else "⚠️"
    logger.info(f"{status} s={s}: mu_1={entry.mu_1:.10g}, lambda_1^s={lambda_1_s:.10g}, gap {gaps[0]:.4g}")
    return entry


def run_operator_diagnostics(
    domain: ModelDomain, s_values: list[float], levels: int = 3, n_jobs: int = -1
) -> DiagnosticsReport:
    """Spectral vs restricted comparison on m, 2m (and 4m for extrapolation) intervals, per s in parallel."""
    if domain.dimension != 1:
        raise PreconditionError("Operator diagnostics compare against the restricted operator on intervals")
    if levels < 2:
        raise ValueError(f"At least two refinement levels are needed, got {levels}")
    tasks = (delayed(_operator_entry)(domain, s, levels) for s in s_values)
    entries = Parallel(n_jobs=n_jobs, prefer="threads")(tasks)
    return DiagnosticsReport(test_family=TEST_FAMILY_VERSION, operator=list(entries))


def run_solution_diagnostics(sol: SaddleSolution) -> DiagnosticsReport:
    """Sup norms, coefficient decay and (on intervals) boundary exponent of a computed solution."""
    if not sol.converged:
        logger.warning("⚠️ Diagnosing a solution that did not converge")
    u_values = synthesize(sol.w.u)
    v_values = synthesize(sol.w.v)
    decay_u = fit_decay_rate(sol.w.u)
    decay_v = fit_decay_rate(sol.w.v)
    boundary = None
    domain = sol.w.basis.domain
    if domain.dimension == 1 and not sol.trivial:
        try:
            order = sol.problem.s if sol.problem.operator == "restricted" else None
            boundary = fit_boundary_exponent(u_values, domain, order=order)
        except PreconditionError as exc:
            logger.warning(f"⚠️ Skipped boundary fit: {exc}")
    solution = SolutionDiagnostics(
        converged=sol.converged,
        sup_u=float(np.abs(u_values).max()),
        sup_v=float(np.abs(v_values).max()),
        decay_rate_u=decay_u[0] if decay_u else None,
        decay_residual_u=decay_u[1] if decay_u else None,
        decay_rate_v=decay_v[0] if decay_v else None,
        decay_residual_v=decay_v[1] if decay_v else None,
        boundary_exponent_u=boundary[0] if boundary else None,
        boundary_residual_u=boundary[1] if boundary else None,
    )
    return DiagnosticsReport(test_family=TEST_FAMILY_VERSION, solution=solution)


def finite_difference_error(prob: SystemProblem, w: PairField, step: float = 1e-6) -> float:
    """Largest deviation of the analytic gradient from central differences of J, over |gradient|_inf."""
    basis = w.basis
    z = w.vector()
    analytic = gradient(w, prob).vector()
    numeric = np.empty_like(z)
    for i in range(z.size):
        shift = np.zeros_like(z)
        shift[i] = step
        forward = lagrangian(PairField.from_vector(basis, z + shift), prob)
        backward = lagrangian(PairField.from_vector(basis, z - shift), prob)
        numeric[i] = (forward - backward) / (2.0 * step)
    return float(np.abs(numeric - analytic).max() / max(1.0, np.abs(analytic).max()))


def run_identity_checks(
    basis: EigenBasis, s: float, rng: np.random.Generator, prob: SystemProblem | None = None
) -> dict[str, float]:
    """Seeded spot checks: operator symmetry, inversion, dual norm and, given a problem, the gradient."""
    u = SpectralField(basis, rng.standard_normal(basis.count))
    v = SpectralField(basis, rng.standard_normal(basis.count))
    op = operator_eigenvalues(basis, s)
    weights = basis.weights
    half_u = synthesize(u.with_coefficients(np.sqrt(op) * u.coefficients)).ravel()
    half_v = synthesize(v.with_coefficients(np.sqrt(op) * v.coefficients)).ravel()
    full_v = synthesize(v.with_coefficients(op * v.coefficients)).ravel()
    lhs = float(weights @ (half_u * half_v))
    rhs = float(weights @ (synthesize(u).ravel() * full_v))

    inverse = apply_inverse(v.with_coefficients(op * v.coefficients), basis.kind, s)
    solved = synthesize(apply_inverse(u, basis.kind, s)).ravel()
    duality = float(weights @ (synthesize(u).ravel() * solved))

    checks = {
        "symmetry": abs(lhs - rhs) / max(1.0, abs(rhs)),
        "inverse": float(np.abs(inverse.coefficients - v.coefficients).max()),
        "dual_norm": abs(dual_norm(u, s) ** 2 - duality) / max(1.0, duality),
    }
    if prob is not None:
        w = PairField(u, v)
        checks["gradient_fd"] = finite_difference_error(prob, w)
        checks["isometry"] = isometry_defect(basis, resolve_alpha(prob), s, rng)
    worst = max(checks.values())
    logger.info(f"{'✅' if worst < 1e-5 else '⚠️'} Identity checks: worst deviation {worst:.3e}")
    return checks
