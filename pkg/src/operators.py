"""Spectral and restricted fractional Laplacians, their inverses and the associated norms.

The spectral operator scales eigenbasis coefficients by lambda_k^s. The restricted operator is the
singular-integral fractional Laplacian of the zero extension, discretised on the uniform 1D grid:
the near field |y| <= h by second-difference singularity subtraction, the far field by exact
integration of the piecewise-linear interpolant against |y|^(-1-2s), and the zero exterior in
closed form. Their pointwise difference is taken through the Dirichlet heat kernel images, where
the common singular kernel cancels.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import integrate
from scipy import linalg
from scipy.special import gamma
from scipy.special import zeta

from src.basis import EigenBasis
from src.basis import ModelDomain
from src.basis import ResolutionError
from src.basis import SpectralField
from src.basis import grid_points

logger = logging.getLogger(__name__)

OperatorKind = Literal["spectral", "restricted"]
OPERATOR_KINDS: tuple[str, ...] = ("spectral", "restricted")
CONSTANT_RTOL = 1e-6
MIN_INTERVALS = 16


class AccuracyError(RuntimeError):
    """A quadrature did not reach its tolerance; `estimate` holds the achieved value."""

    def __init__(self, message: str, estimate: float) -> None:
        super().__init__(message)
        self.estimate = estimate


class PreconditionError(ValueError):
    """An input violates a mathematical precondition of the operation."""


def validate_order(s: float) -> float:
    if not 0.0 < s < 1.0:
        raise PreconditionError(f"s must satisfy 0 < s < 1, got {s}")
    return float(s)


def _radial_integral(s: float) -> tuple[float, float]:
    """Integral of (1 - cos t) t^(-1-2s) over (0, inf) and its error estimate."""
    # (1 - cos t) / t^2 = 0.5 sinc(t / 2pi)^2 stays smooth at 0; the t^(1-2s) factor is the 'alg' weight
    head, head_err = integrate.quad(
        lambda t: 0.5 * np.sinc(t / (2.0 * np.pi)) ** 2, 0.0, 1.0, weight="alg", wvar=(1.0 - 2.0 * s, 0.0)
    )
    oscillating, osc_err = integrate.quad(lambda t: t ** (-1.0 - 2.0 * s), 1.0, np.inf, weight="cos", wvar=1.0)
    return head + 1.0 / (2.0 * s) - oscillating, head_err + osc_err


def _angular_integral(n: int, s: float) -> tuple[float, float]:
    """Integral of |omega_1|^(2s) over the unit sphere S^(n-1)."""
    if n == 1:
        return 2.0, 0.0
    quarter, err = integrate.quad(lambda theta: np.cos(theta) ** (2.0 * s), 0.0, 0.5 * np.pi)
    return 4.0 * quarter, 4.0 * err


def normalizing_constant(n: int, s: float) -> float:
    """C(n, s) by quadrature of its defining integral over R^n, split into radial and angular parts."""
    validate_order(s)
    if n not in (1, 2):
        raise PreconditionError(f"Only dimensions 1 and 2 are supported, got n={n}")
    radial, radial_err = _radial_integral(s)
    angular, angular_err = _angular_integral(n, s)
    total = radial * angular
    rel_err = radial_err / abs(radial) + angular_err / abs(angular)
    if not np.isfinite(total) or rel_err > CONSTANT_RTOL:
        raise AccuracyError(f"C({n}, {s}) quadrature reached relative error {rel_err:.2e}", estimate=1.0 / total)
    return 1.0 / total


def closed_form_constant(n: int, s: float) -> float:
    """Closed form 2^(2s) s Gamma((n+2s)/2) / (pi^(n/2) Gamma(1-s)), the cross-check for C(n, s)."""
    return 2.0 ** (2.0 * s) * s * gamma(0.5 * (n + 2.0 * s)) / (np.pi ** (0.5 * n) * gamma(1.0 - s))


def theta_space_label(s: float) -> str:
    """Classical space identified with Theta^s(Omega), for 0 <= s <= 2."""
    if s == 0:
        return "L2"
    if 0 < s < 0.5:
        return "H^s = H^s_0"
    if s == 0.5:
        return "H^1/2_00"
    if 0.5 < s <= 1:
        return "H^s_0"
    if 1 < s <= 2:
        return "H^s cap H^1_0"
    raise PreconditionError(f"Theta^s is identified for 0 <= s <= 2 only, got {s}")


def apply_spectral(field: SpectralField, s: float, sigma: float = 1.0) -> SpectralField:
    """A^(sigma s): multiply coefficient k by lambda_k^(sigma s)."""
    validate_order(s)
    if field.basis.kind != "spectral":
        raise PreconditionError("apply_spectral needs a field in the Dirichlet sine basis")
    if not -1.0 <= sigma <= 1.0:
        raise PreconditionError(f"sigma must lie in [-1, 1], got {sigma}")
    return field.with_coefficients(field.coefficients * field.basis.powers(sigma * s))


def operator_eigenvalues(basis: EigenBasis, s: float) -> np.ndarray:
    """Eigenvalues of the order-s operator diagonalised by the basis: lambda_k^s or mu_k."""
    if basis.kind == "restricted" and not math.isclose(s, basis.order or -1.0):
        raise PreconditionError(f"Basis was assembled for s={basis.order}, not s={s}")
    return basis.powers(s)


def apply_inverse(rhs: SpectralField, kind: OperatorKind, s: float) -> SpectralField:
    """L^-1 rhs, the Green operator realised by dividing by the operator's eigenvalues."""
    validate_order(s)
    if rhs.basis.kind != kind:
        raise PreconditionError(f"rhs lives in a {rhs.basis.kind} basis, operator is {kind}")
    return rhs.with_coefficients(rhs.coefficients / operator_eigenvalues(rhs.basis, s))


@dataclass(frozen=True)
class ThetaNorm:
    order: float
    value: float


def theta_norm(field: SpectralField, alpha: float, s: float | None = None) -> ThetaNorm:
    """sqrt(sum lambda_k^alpha xi_k^2); alpha = 0 is the L2 norm."""
    upper = 2.0 * s if s is not None else 2.0
    if field.basis.kind == "restricted" and field.basis.order is not None:
        upper = min(upper, 2.0 * field.basis.order)
    if not 0.0 <= alpha <= upper:
        raise PreconditionError(f"alpha must lie in [0, {upper}], got {alpha}")
    weighted = field.basis.powers(alpha) * field.coefficients**2
    return ThetaNorm(order=alpha, value=float(np.sqrt(weighted.sum())))


def dual_norm(field: SpectralField, s: float) -> float:
    """Theta^s' norm: sqrt(sum mu_k^-1 c_k^2), i.e. sqrt of the integral of f L^-1 f."""
    return float(np.sqrt(np.sum(field.coefficients**2 / operator_eigenvalues(field.basis, s))))


@dataclass(frozen=True, eq=False)
class RestrictedDiscretization:
    domain: ModelDomain
    s: float
    h: float
    matrix: np.ndarray  # (m-1, m-1) action on interior nodes
    eigenvalues: np.ndarray  # mu_1 <= mu_2 <= ...
    eigenvectors: np.ndarray  # columns psi_k, h * sum(psi_k^2) = 1

    @property
    def nodes(self) -> np.ndarray:
        return self.domain.axes()[0]

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[1:-1]

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Restricted operator on grid values (boundary nodes included), returned on interior nodes."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.domain.grid_size,):
            raise ValueError(f"Expected {self.domain.grid_size} grid values, got {values.shape}")
        return self.matrix @ values[1:-1]

    def eigenfunction(self, k: int) -> np.ndarray:
        """psi_k on the full grid, zero at the boundary nodes."""
        return np.concatenate([[0.0], self.eigenvectors[:, k - 1], [0.0]])


def _far_field_weights(s: float, offsets: np.ndarray) -> np.ndarray:
    """Integrals of the unit-spaced hat centred at j against t^(-1-2s) over t >= 1."""

    def f0(t: np.ndarray) -> np.ndarray:
        return -(t ** (-2.0 * s)) / (2.0 * s)

    def f1(t: np.ndarray) -> np.ndarray:
        if math.isclose(s, 0.5):
            return np.log(t)
        return t ** (1.0 - 2.0 * s) / (1.0 - 2.0 * s)

    j = offsets.astype(float)
    falling = (j + 1.0) * (f0(j + 1.0) - f0(j)) - (f1(j + 1.0) - f1(j))
    left = np.maximum(j - 1.0, 1.0)
    rising = (f1(j) - f1(left)) - (j - 1.0) * (f0(j) - f0(left))
    return falling + np.where(j >= 2.0, rising, 0.0)


def assemble_restricted(domain: ModelDomain, s: float) -> RestrictedDiscretization:
    """Dense symmetric discretisation of (-Delta)^s on the interior nodes of a 1D domain."""
    validate_order(s)
    if domain.dimension != 1:
        raise PreconditionError("The restricted operator is discretised on intervals only")
    m = domain.intervals
    if m < MIN_INTERVALS:
        raise ResolutionError(f"Restricted assembly needs at least {MIN_INTERVALS} intervals, got {m}")
    h = domain.spacing[0]
    constant = normalizing_constant(1, s)
    scale = h ** (-2.0 * s)

    near = scale / (2.0 - 2.0 * s)
    offsets = np.arange(1, m - 1)
    far = scale * _far_field_weights(s, offsets)

    column = np.empty(m - 1)
    column[0] = constant * (2.0 * near + scale / s)
    column[1:] = -constant * far
    column[1] -= constant * near
    matrix = linalg.toeplitz(column)

    eigenvalues, vectors = linalg.eigh(matrix)
    vectors = vectors / np.sqrt(h)
    peaks = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])]
    vectors = vectors * np.sign(peaks)
    logger.debug(f"Assembled restricted operator s={s}, m={m}: mu_1={eigenvalues[0]:.8g}")
    return RestrictedDiscretization(
        domain=domain, s=s, h=h, matrix=matrix, eigenvalues=eigenvalues, eigenvectors=vectors
    )


def apply_restricted(disc: RestrictedDiscretization, values: np.ndarray) -> np.ndarray:
    return disc.apply(values)


def restricted_basis(disc: RestrictedDiscretization, count: int) -> EigenBasis:
    """First K discrete eigenpairs as a basis; eigenvalues stored as mu_k^(1/s)."""
    available = disc.eigenvalues.shape[0]
    if not 1 <= count <= available:
        raise ResolutionError(f"Restricted grid has {available} eigenpairs, requested {count}")
    _, weights = grid_points(disc.domain)
    modes = np.column_stack([disc.eigenfunction(k) for k in range(1, count + 1)])
    nodes = disc.nodes

    def evaluator(k: int, x: np.ndarray) -> np.ndarray:
        return np.interp(np.ravel(x), nodes, modes[:, k - 1])

    return EigenBasis(
        domain=disc.domain,
        eigenvalues=disc.eigenvalues[:count] ** (1.0 / disc.s),
        mode_indices=np.arange(1, count + 1)[:, None],
        modes=modes,
        weights=weights,
        evaluator=evaluator,
        kind="restricted",
        order=disc.s,
    )


def gagliardo_seminorm(values: np.ndarray, s: float, domain: ModelDomain) -> float:
    """Squared Gagliardo seminorm: double integral of |u(x)-u(y)|^2 / |x-y|^(1+2s) over the domain.

    Off-diagonal node pairs use the trapezoid product rule; each diagonal cell uses the closed-form
    integral of |x-y|^(1-2s) over a square of the node's weight, times the local slope squared.
    """
    validate_order(s)
    if domain.dimension != 1:
        raise PreconditionError("gagliardo_seminorm is implemented on intervals")
    u = np.asarray(values, dtype=float)
    x = domain.axes()[0]
    _, w = grid_points(domain)
    diff = u[:, None] - u[None, :]
    dist = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(dist, 1.0)
    kernel = diff**2 / dist ** (1.0 + 2.0 * s)
    np.fill_diagonal(kernel, 0.0)
    off_diagonal = float(w @ kernel @ w)
    slope = np.gradient(u, x)
    cell = 2.0 * w ** (3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))
    return off_diagonal + float(np.sum(slope**2 * cell))


def reflection_kernel(domain: ModelDomain, s: float) -> np.ndarray:
    """Kernel G >= 0 with (A^s u - (-Delta)^s u)(x_i) = integral of G(x_i, y) u(y) dy, on interior nodes.

    Both operators share the singular kernel C(1,s)|x-y|^(-1-2s); what remains of the Dirichlet
    heat kernel images after it cancels is, with t = |x-y| / 2l and r = (x+y) / 2l,
    C(1,s) (2l)^(-1-2s) [zeta(r) + zeta(1-r) - zeta(1+t) - zeta(1-t)] (Hurwitz zeta of order 1+2s).
    Rows are interior nodes, columns all grid nodes.
    """
    validate_order(s)
    if domain.dimension != 1:
        raise PreconditionError("The reflection kernel is available on intervals only")
    m = domain.intervals
    order = 1.0 + 2.0 * s
    steps = np.arange(2 * m + 1) / (2.0 * m)
    direct = zeta(order, 1.0 + steps[: m + 1]) + zeta(order, 1.0 - steps[: m + 1])
    mirrored = np.full(2 * m + 1, np.nan)
    mirrored[1:-1] = zeta(order, steps[1:-1]) + zeta(order, 1.0 - steps[1:-1])
    rows = np.arange(1, m)[:, None]
    columns = np.arange(m + 1)[None, :]
    scale = normalizing_constant(1, s) * (2.0 * domain.extents[0]) ** (-order)
    return scale * (mirrored[rows + columns] - direct[np.abs(rows - columns)])


@dataclass(frozen=True, eq=False)
class PointwiseComparison:
    s: float
    nodes: np.ndarray  # interior nodes
    difference: np.ndarray  # A^s u - (-Delta)^s u on interior nodes
    restricted: np.ndarray  # (-Delta)^s u on interior nodes
    h: float

    @property
    def minimum(self) -> float:
        return float(self.difference.min())

    @property
    def spectral(self) -> np.ndarray:
        return self.restricted + self.difference


def compare_pointwise(
    values: np.ndarray,
    s: float,
    domain: ModelDomain,
    disc: RestrictedDiscretization | None = None,
) -> PointwiseComparison:
    """A^s u - (-Delta)^s u for a nonnegative grid function vanishing on the boundary.

    The difference is integrated against the reflection kernel, so a kink in u (where both
    operators blow up for s >= 1/2) leaves it bounded. A^s u is reported as the restricted
    discretisation plus that difference.
    """
    validate_order(s)
    u = np.asarray(values, dtype=float)
    if domain.dimension != 1:
        raise PreconditionError("compare_pointwise is implemented on intervals")
    if np.any(u < 0.0):
        raise PreconditionError("compare_pointwise requires u >= 0")
    if max(abs(u[0]), abs(u[-1])) > 1e-12 * max(1.0, float(np.abs(u).max())):
        raise PreconditionError("u must vanish on the boundary (support in the closed domain)")
    disc = disc if disc is not None else assemble_restricted(domain, s)
    _, weights = grid_points(domain)
    difference = reflection_kernel(domain, s) @ (weights * u)
    return PointwiseComparison(
        s=s, nodes=disc.interior_nodes, difference=difference, restricted=apply_restricted(disc, u), h=disc.h
    )
