"""Truncated Lagrangian J = A - H of the system L u = mu v + |v|^(p-1) v, L v = lam u + |u|^(q-1) u.

Quadratic terms are evaluated exactly in coefficients; the power nonlinearities by collocation
quadrature on the basis grid.
"""

import logging
from dataclasses import dataclass
from dataclasses import replace
from functools import lru_cache

import numpy as np

from src.basis import EigenBasis
from src.basis import ModelDomain
from src.basis import SpectralField
from src.basis import build_basis
from src.config import DEFAULT_TRUNCATION_1D
from src.config import DEFAULT_TRUNCATION_2D
from src.config import GRID_FACTOR
from src.indefinite import CouplingParams
from src.indefinite import SpaceSplit
from src.indefinite import split_components
from src.operators import OPERATOR_KINDS
from src.operators import OperatorKind
from src.operators import PreconditionError
from src.operators import assemble_restricted
from src.operators import operator_eigenvalues
from src.operators import restricted_basis
from src.operators import validate_order

logger = logging.getLogger(__name__)


def default_truncation(domain: ModelDomain) -> int:
    return DEFAULT_TRUNCATION_1D if domain.dimension == 1 else DEFAULT_TRUNCATION_2D


def default_grid_size(truncation: int, dimension: int = 1) -> int:
    """Collocation points per axis keeping the nonlinear projections de-aliased."""
    if dimension == 1:
        return max(16, GRID_FACTOR * truncation + 1)
    # the lowest K tensor modes stay below per-axis index 2 sqrt(K) on moderate aspect ratios
    return max(16, GRID_FACTOR * int(np.ceil(2.0 * np.sqrt(truncation))) + 1)


@dataclass(frozen=True)
class SystemProblem:
    domain: ModelDomain
    operator: OperatorKind
    s: float
    p: float
    q: float
    lam: float = 0.0
    mu: float = 0.0
    alpha: float | None = None
    truncation: int = DEFAULT_TRUNCATION_1D

    def __post_init__(self) -> None:
        validate_order(self.s)
        if self.operator not in OPERATOR_KINDS:
            raise PreconditionError(f"operator must be one of {OPERATOR_KINDS}, got {self.operator!r}")
        if self.operator == "restricted" and self.domain.dimension != 1:
            raise PreconditionError("The restricted operator is available on intervals only")
        if self.p <= 1:
            raise PreconditionError(f"p must exceed 1, got {self.p}")
        if self.q <= 1:
            raise PreconditionError(f"q must exceed 1, got {self.q}")
        if self.alpha is not None and not 0.0 < self.alpha < 2.0 * self.s:
            raise PreconditionError(f"alpha must satisfy 0 < alpha < 2s = {2 * self.s}, got {self.alpha}")
        if self.truncation < 1:
            raise PreconditionError(f"truncation K must be positive, got {self.truncation}")

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    def coupling(self, alpha: float | None = None) -> CouplingParams:
        alpha = self.alpha if alpha is None else alpha
        if alpha is None:
            raise PreconditionError("alpha is unset; resolve it through the admissibility gate first")
        return CouplingParams(lam=self.lam, mu=self.mu, alpha=alpha, s=self.s)

    def with_truncation(self, truncation: int) -> "SystemProblem":
        domain = self.domain
        needed = default_grid_size(truncation, domain.dimension)
        if domain.grid_size < needed:
            domain = replace(domain, grid_size=needed)
        return replace(self, domain=domain, truncation=truncation)

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.to_dict(),
            "operator": self.operator,
            "s": self.s,
            "p": self.p,
            "q": self.q,
            "lam": self.lam,
            "mu": self.mu,
            "alpha": self.alpha,
            "truncation": self.truncation,
        }


@lru_cache(maxsize=32)
def _cached_basis(domain: ModelDomain, operator: str, s: float, truncation: int) -> EigenBasis:
    if operator == "restricted":
        return restricted_basis(assemble_restricted(domain, s), truncation)
    return build_basis(domain, truncation)


def problem_basis(prob: SystemProblem) -> EigenBasis:
    """Eigenbasis diagonalising the problem's operator: sine modes or discrete restricted eigenvectors."""
    return _cached_basis(prob.domain, prob.operator, prob.s, prob.truncation)


@dataclass(frozen=True, eq=False)
class PairField:
    u: SpectralField
    v: SpectralField

    def __post_init__(self) -> None:
        if self.u.basis is not self.v.basis:
            raise ValueError("u and v must share one basis")

    @property
    def basis(self) -> EigenBasis:
        return self.u.basis

    @classmethod
    def zeros(cls, basis: EigenBasis) -> "PairField":
        return cls(SpectralField.zeros(basis), SpectralField.zeros(basis))

    @classmethod
    def from_coefficients(cls, basis: EigenBasis, u: np.ndarray, v: np.ndarray) -> "PairField":
        return cls(SpectralField(basis, u), SpectralField(basis, v))

    @classmethod
    def from_vector(cls, basis: EigenBasis, z: np.ndarray) -> "PairField":
        return cls.from_coefficients(basis, z[: basis.count], z[basis.count :])

    def vector(self) -> np.ndarray:
        return np.concatenate([self.u.coefficients, self.v.coefficients])

    def scaled(self, factor: float) -> "PairField":
        return PairField.from_vector(self.basis, factor * self.vector())

    def is_zero(self, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.vector()) <= atol))


def _signed_power(z: np.ndarray, r: float) -> np.ndarray:
    return np.abs(z) ** (r - 1.0) * z


def _grid_values(w: PairField) -> tuple[np.ndarray, np.ndarray]:
    modes = w.basis.modes
    return modes @ w.u.coefficients, modes @ w.v.coefficients


def hamiltonian(w: PairField, prob: SystemProblem) -> float:
    u, v = _grid_values(w)
    weights = w.basis.weights
    v_term = weights @ np.abs(v) ** (prob.p + 1.0) / (prob.p + 1.0)
    u_term = weights @ np.abs(u) ** (prob.q + 1.0) / (prob.q + 1.0)
    return float(v_term + u_term)


def bilinear_form(w1: PairField, w2: PairField, prob: SystemProblem) -> float:
    """B(w1, w2) = <L w1, w2>: sum of lambda_k^s (u1 v2 + v1 u2) - lam u1 u2 - mu v1 v2."""
    op = operator_eigenvalues(w1.basis, prob.s)
    u1, v1 = w1.u.coefficients, w1.v.coefficients
    u2, v2 = w2.u.coefficients, w2.v.coefficients
    return float(np.sum(op * (u1 * v2 + v1 * u2)) - prob.lam * (u1 @ u2) - prob.mu * (v1 @ v2))


def quadratic_part(w: PairField, prob: SystemProblem) -> float:
    return 0.5 * bilinear_form(w, w, prob)


def lagrangian(w: PairField, prob: SystemProblem) -> float:
    return quadratic_part(w, prob) - hamiltonian(w, prob)


def gradient(w: PairField, prob: SystemProblem) -> PairField:
    """Euler-Lagrange residual in coefficients; zero exactly at weak solutions on the truncation."""
    basis = w.basis
    op = operator_eigenvalues(basis, prob.s)
    u, v = _grid_values(w)
    project = basis.modes.T * basis.weights
    grad_u = op * w.v.coefficients - prob.lam * w.u.coefficients - project @ _signed_power(u, prob.q)
    grad_v = op * w.u.coefficients - prob.mu * w.v.coefficients - project @ _signed_power(v, prob.p)
    return PairField.from_coefficients(basis, grad_u, grad_v)


def hessian(w: PairField, prob: SystemProblem) -> np.ndarray:
    """Symmetric (2K, 2K) Jacobian of `gradient`."""
    basis = w.basis
    k = basis.count
    op = np.diag(operator_eigenvalues(basis, prob.s))
    u, v = _grid_values(w)
    modes = basis.modes
    uu = modes.T @ ((basis.weights * prob.q * np.abs(u) ** (prob.q - 1.0))[:, None] * modes)
    vv = modes.T @ ((basis.weights * prob.p * np.abs(v) ** (prob.p - 1.0))[:, None] * modes)
    jac = np.empty((2 * k, 2 * k))
    jac[:k, :k] = -prob.lam * np.eye(k) - uu
    jac[:k, k:] = op
    jac[k:, :k] = op
    jac[k:, k:] = -prob.mu * np.eye(k) - vv
    return jac


def product_split(w: PairField, split: SpaceSplit) -> tuple[PairField, PairField, PairField]:
    """Projections (w+, w-, w0) of w along the eigendirections of L."""
    parts = split_components(w.u.coefficients, w.v.coefficients, split)
    basis = w.basis
    pad = basis.count - split.count
    fields = []
    for space in ("plus", "minus", "zero"):
        u, v = parts[space]
        fields.append(PairField.from_coefficients(basis, np.pad(u, (0, pad)), np.pad(v, (0, pad))))
    return fields[0], fields[1], fields[2]
