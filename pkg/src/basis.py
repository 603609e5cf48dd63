"""Model domains and their Dirichlet Laplacian eigenbases.

Fields live as coefficient vectors over the first K eigenfunctions. The collocation grid is the
uniform grid including the boundary nodes, integrated with the composite trapezoid rule, which is
exact for products of resolved sine modes.
"""

import logging
from dataclasses import dataclass
from typing import Callable
from typing import Literal

import numpy as np

logger = logging.getLogger(__name__)

DomainKind = Literal["interval", "rectangle"]
BasisKind = Literal["spectral", "restricted"]

MIN_GRID_SIZE = 16
_DIMENSIONS = {"interval": 1, "rectangle": 2}


class ResolutionError(ValueError):
    """The collocation grid is too coarse for the requested modes."""


@dataclass(frozen=True)
class ModelDomain:
    kind: DomainKind
    extents: tuple[float, ...]
    grid_size: int  # points per axis, boundary nodes included

    def __post_init__(self) -> None:
        object.__setattr__(self, "extents", tuple(float(e) for e in self.extents))
        if self.kind not in _DIMENSIONS:
            raise ValueError(f"Unknown domain kind {self.kind!r}, expected one of {sorted(_DIMENSIONS)}")
        if len(self.extents) != _DIMENSIONS[self.kind]:
            raise ValueError(f"A {self.kind} needs {_DIMENSIONS[self.kind]} extent(s), got {len(self.extents)}")
        if any(e <= 0 for e in self.extents):
            raise ValueError(f"Extents must be strictly positive, got {self.extents}")
        if self.grid_size < MIN_GRID_SIZE:
            raise ResolutionError(f"grid_size must be at least {MIN_GRID_SIZE}, got {self.grid_size}")

    @classmethod
    def interval(cls, length: float = 1.0, grid_size: int = 129) -> "ModelDomain":
        return cls(kind="interval", extents=(length,), grid_size=grid_size)

    @classmethod
    def rectangle(cls, width: float = 1.0, height: float = 1.0, grid_size: int = 65) -> "ModelDomain":
        return cls(kind="rectangle", extents=(width, height), grid_size=grid_size)

    @property
    def dimension(self) -> int:
        return len(self.extents)

    @property
    def intervals(self) -> int:
        return self.grid_size - 1

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / self.intervals for e in self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.grid_size,) * self.dimension

    @property
    def max_axis_mode(self) -> int:
        """Highest per-axis sine index the grid resolves without aliasing."""
        return self.grid_size - 2

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(0.0, e, self.grid_size) for e in self.extents]

    def to_dict(self) -> dict[str, str | list[float] | int]:
        return {"kind": self.kind, "extents": list(self.extents), "grid_size": self.grid_size}


def grid_points(domain: ModelDomain) -> tuple[np.ndarray, np.ndarray]:
    """Collocation nodes as an (N, n) array and their trapezoid weights, flattened in 'ij' order."""
    axes = domain.axes()
    axis_weights = []
    for h in domain.spacing:
        w = np.full(domain.grid_size, h)
        w[[0, -1]] = 0.5 * h
        axis_weights.append(w)
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    weights = axis_weights[0]
    for w in axis_weights[1:]:
        weights = np.outer(weights, w).ravel()
    return points, weights


def _sine_mode(extents: tuple[float, ...], mode: np.ndarray, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != len(extents):
        x = x.T
    values = np.ones(x.shape[0])
    for axis, length in enumerate(extents):
        values = values * np.sqrt(2.0 / length) * np.sin(mode[axis] * np.pi * x[:, axis] / length)
    return values


@dataclass(frozen=True, eq=False)
class EigenBasis:
    domain: ModelDomain
    eigenvalues: np.ndarray  # Laplacian eigenvalues lambda_k, ascending
    mode_indices: np.ndarray  # (K, n) sine indices, or (K, 1) discrete ranks
    modes: np.ndarray  # (N, K) eigenfunctions on the collocation nodes
    weights: np.ndarray  # (N,) quadrature weights
    evaluator: Callable[[int, np.ndarray], np.ndarray]
    kind: BasisKind = "spectral"
    order: float | None = None  # s of a restricted discretisation

    def __post_init__(self) -> None:
        for name in ("eigenvalues", "mode_indices", "modes", "weights"):
            getattr(self, name).setflags(write=False)
        if np.any(self.eigenvalues <= 0):
            raise ValueError("Eigenvalues must be strictly positive")

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def evaluate(self, k: int, x: np.ndarray) -> np.ndarray:
        """Value of the k-th eigenfunction (1-based) at the points x."""
        if not 1 <= k <= self.count:
            raise IndexError(f"Mode {k} outside 1..{self.count}")
        return self.evaluator(k, x)

    def gram(self) -> np.ndarray:
        return self.modes.T @ (self.weights[:, None] * self.modes)

    def powers(self, exponent: float) -> np.ndarray:
        return self.eigenvalues**exponent


def _interval_modes(domain: ModelDomain, count: int) -> tuple[np.ndarray, np.ndarray]:
    if count > domain.max_axis_mode:
        raise ResolutionError(
            f"Mode {count} is not resolved by {domain.grid_size} grid points (at most {domain.max_axis_mode})"
        )
    indices = np.arange(1, count + 1)[:, None]
    eigenvalues = (indices[:, 0] * np.pi / domain.extents[0]) ** 2
    return indices, eigenvalues


def _rectangle_modes(domain: ModelDomain, count: int) -> tuple[np.ndarray, np.ndarray]:
    top = domain.max_axis_mode
    if count > top**2:
        raise ResolutionError(f"Only {top ** 2} tensor modes are representable on a {domain.shape} grid")
    k1, k2 = np.meshgrid(np.arange(1, top + 1), np.arange(1, top + 1), indexing="ij")
    k1, k2 = k1.ravel(), k2.ravel()
    width, height = domain.extents
    eigenvalues = (k1 * np.pi / width) ** 2 + (k2 * np.pi / height) ** 2
    # rounded key so that symmetric ties fall back to lexicographic (k1, k2)
    key = np.round(eigenvalues / eigenvalues.min(), 9)
    order = np.lexsort((k2, k1, key))[:count]
    selected = eigenvalues[order]
    # tied modes share one value (the group minimum) so the sequence stays nondecreasing
    starts = np.flatnonzero(np.r_[True, np.diff(key[order]) != 0.0])
    selected = np.repeat(np.minimum.reduceat(selected, starts), np.diff(np.r_[starts, count]))
    first_unresolved = min((top + 1) * np.pi / width, (top + 1) * np.pi / height) ** 2
    if first_unresolved < selected[-1]:
        raise ResolutionError(f"Mode {count} needs a per-axis index above {top}; refine the grid")
    return np.stack([k1[order], k2[order]], axis=1), selected


def build_basis(domain: ModelDomain, count: int) -> EigenBasis:
    """Analytic Dirichlet eigenpairs of the domain, sorted ascending."""
    if count < 1:
        raise ValueError(f"Basis size must be positive, got {count}")
    if domain.kind == "interval":
        indices, eigenvalues = _interval_modes(domain, count)
    else:
        indices, eigenvalues = _rectangle_modes(domain, count)

    points, weights = grid_points(domain)
    modes = np.column_stack([_sine_mode(domain.extents, idx, points) for idx in indices])
    extents = domain.extents

    def evaluator(k: int, x: np.ndarray) -> np.ndarray:
        return _sine_mode(extents, indices[k - 1], x)

    logger.debug(f"Built {domain.kind} basis with K={count}, lambda_K={eigenvalues[-1]:.6g}")
    return EigenBasis(
        domain=domain,
        eigenvalues=np.asarray(eigenvalues, dtype=float),
        mode_indices=np.asarray(indices),
        modes=modes,
        weights=weights,
        evaluator=evaluator,
    )


@dataclass(frozen=True, eq=False)
class SpectralField:
    basis: EigenBasis
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coefficients = np.array(self.coefficients, dtype=float)
        if coefficients.shape != (self.basis.count,):
            raise ValueError(f"Expected {self.basis.count} coefficients, got shape {coefficients.shape}")
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def zeros(cls, basis: EigenBasis) -> "SpectralField":
        return cls(basis, np.zeros(basis.count))

    @classmethod
    def mode(cls, basis: EigenBasis, k: int, amplitude: float = 1.0) -> "SpectralField":
        coefficients = np.zeros(basis.count)
        coefficients[k - 1] = amplitude
        return cls(basis, coefficients)

    def with_coefficients(self, coefficients: np.ndarray) -> "SpectralField":
        return SpectralField(self.basis, coefficients)


def synthesize(field: SpectralField, grid: np.ndarray | None = None) -> np.ndarray:
    """Pointwise sum of xi_k phi_k, on the collocation grid (shaped like the domain) or on given points."""
    basis = field.basis
    if grid is None:
        return (basis.modes @ field.coefficients).reshape(basis.domain.shape)
    table = np.column_stack([basis.evaluate(k, grid) for k in range(1, basis.count + 1)])
    return table @ field.coefficients


def analyze(values: np.ndarray, basis: EigenBasis) -> SpectralField:
    """Quadrature projections xi_k = integral of u phi_k over the collocation grid."""
    flat = np.asarray(values, dtype=float).ravel()
    if flat.shape[0] != basis.weights.shape[0]:
        raise ValueError(f"Grid values have {flat.shape[0]} points, basis grid has {basis.weights.shape[0]}")
    return SpectralField(basis, basis.modes.T @ (basis.weights * flat))


def prolong(field: SpectralField, basis: EigenBasis) -> SpectralField:
    """Zero-pad or truncate the coefficients onto another basis of the same domain."""
    source = field.basis.domain
    target = basis.domain
    if source.kind != target.kind or source.extents != target.extents or field.basis.kind != basis.kind:
        raise ValueError("prolong needs two bases of the same domain and operator kind")
    coefficients = np.zeros(basis.count)
    keep = min(basis.count, field.basis.count)
    coefficients[:keep] = field.coefficients[:keep]
    return SpectralField(basis, coefficients)
