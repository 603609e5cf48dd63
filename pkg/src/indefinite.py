"""Per-mode analysis of the indefinite quadratic form on E^alpha = Theta^alpha x Theta^(2s-alpha).

Each eigenmode k spans a two-dimensional invariant subspace of L. In the E^alpha-orthonormal frame
(lambda_k^(-alpha/2) phi_k, 0), (0, lambda_k^(alpha/2-s) phi_k) the restriction of L is the
symmetric matrix L^k = [[-a, 1], [1, -b]] with a = lam lambda_k^-alpha and b = mu lambda_k^(alpha-2s).
Frame coordinates of (u, v) are x_k = lambda_k^(alpha/2) u_k and y_k = lambda_k^(s-alpha/2) v_k.
"""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.basis import EigenBasis
from src.basis import ModelDomain
from src.basis import build_basis
from src.config import RESONANCE_TOL
from src.operators import PreconditionError
from src.operators import validate_order

logger = logging.getLogger(__name__)

ModeClass = Literal["hyperbolic", "resonant_plus", "resonant_minus", "definite_pos", "definite_neg"]
Direction = tuple[int, Literal["+", "-"]]


@dataclass(frozen=True)
class CouplingParams:
    lam: float
    mu: float
    alpha: float
    s: float

    def __post_init__(self) -> None:
        validate_order(self.s)
        if not 0.0 < self.alpha < 2.0 * self.s:
            raise PreconditionError(f"alpha must satisfy 0 < alpha < 2s = {2 * self.s}, got {self.alpha}")


@dataclass(frozen=True)
class ModeAnalysis:
    k: int
    eigenvalue: float  # lambda_k of the Laplacian
    a: float
    b: float
    nu_plus: float
    nu_minus: float
    eigvec_plus: tuple[float, float]
    eigvec_minus: tuple[float, float]
    mode_class: ModeClass

    def matrix(self) -> np.ndarray:
        return np.array([[-self.a, 1.0], [1.0, -self.b]])

    def to_dict(self) -> dict[str, int | float | str]:
        return {
            "k": self.k,
            "eigenvalue": self.eigenvalue,
            "a": self.a,
            "b": self.b,
            "nu_plus": self.nu_plus,
            "nu_minus": self.nu_minus,
            "mode_class": self.mode_class,
        }


def _classify(lam: float, mu: float, eigenvalue: float, s: float, tol: float) -> ModeClass:
    critical = eigenvalue ** (2.0 * s)
    if abs(lam * mu - critical) <= tol * (1.0 + critical):
        return "resonant_plus" if lam + mu > 0 else "resonant_minus"
    if lam * mu < critical:
        return "hyperbolic"
    # lam and mu share a sign here; both eigenvalues take the sign of the trace -(a + b)
    return "definite_neg" if lam > 0 else "definite_pos"


def analyze_mode(
    k: int, eigenvalue: float, params: CouplingParams, tol: float = RESONANCE_TOL
) -> ModeAnalysis:
    """Eigenvalues nu_k^+- and unit eigenvectors of L^k, with the sign classification of the mode."""
    if eigenvalue <= 0:
        raise PreconditionError(f"lambda_k must be positive, got {eigenvalue}")
    a = params.lam * eigenvalue ** (-params.alpha)
    b = params.mu * eigenvalue ** (params.alpha - 2.0 * params.s)
    half_sum = 0.5 * (a + b)
    half_diff = 0.5 * (a - b)
    root = np.hypot(half_diff, 1.0)
    determinant = a * b - 1.0
    # the root of smaller magnitude comes from the determinant, avoiding cancellation
    if half_sum > 0:
        nu_minus = -half_sum - root
        nu_plus = determinant / nu_minus
    else:
        nu_plus = -half_sum + root
        nu_minus = determinant / nu_plus

    if half_diff >= 0:
        slope_plus = half_diff + root
        slope_minus = -1.0 / (half_diff + root)
    else:
        slope_plus = 1.0 / (root - half_diff)
        slope_minus = half_diff - root
    norm_plus = np.hypot(1.0, slope_plus)
    norm_minus = np.hypot(1.0, slope_minus)

    mode_class = _classify(params.lam, params.mu, eigenvalue, params.s, tol)
    if mode_class == "resonant_plus":
        nu_plus = 0.0
    elif mode_class == "resonant_minus":
        nu_minus = 0.0
    return ModeAnalysis(
        k=k,
        eigenvalue=float(eigenvalue),
        a=float(a),
        b=float(b),
        nu_plus=float(nu_plus),
        nu_minus=float(nu_minus),
        eigvec_plus=(float(1.0 / norm_plus), float(slope_plus / norm_plus)),
        eigvec_minus=(float(1.0 / norm_minus), float(slope_minus / norm_minus)),
        mode_class=mode_class,
    )


_ASSIGNMENT: dict[str, tuple[str, str]] = {
    # mode class -> (space of the '+' direction, space of the '-' direction)
    "hyperbolic": ("plus", "minus"),
    "resonant_plus": ("zero", "minus"),
    "resonant_minus": ("plus", "zero"),
    "definite_neg": ("minus", "minus"),
    "definite_pos": ("plus", "plus"),
}


@dataclass(frozen=True, eq=False)
class SpaceSplit:
    params: CouplingParams
    modes: tuple[ModeAnalysis, ...]
    plus: tuple[Direction, ...]
    minus: tuple[Direction, ...]
    zero: tuple[Direction, ...]

    @property
    def count(self) -> int:
        return len(self.modes)

    @property
    def dim_zero(self) -> int:
        return len(self.zero)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.eigenvalue for m in self.modes])

    @property
    def resonant_modes(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.zero)

    def space_of(self, k: int, sign: str) -> str:
        plus_space, minus_space = _ASSIGNMENT[self.modes[k - 1].mode_class]
        return plus_space if sign == "+" else minus_space

    def summary(self) -> dict[str, int | list[int]]:
        return {
            "modes": self.count,
            "dim_plus": len(self.plus),
            "dim_minus": len(self.minus),
            "dim_zero": self.dim_zero,
            "resonant_modes": list(self.resonant_modes),
        }


def build_split(basis: EigenBasis, params: CouplingParams, count: int | None = None) -> SpaceSplit:
    """Assign each of the 2K eigendirections of L to E^+, E^- or the nullspace E^0."""
    count = basis.count if count is None else count
    if not 1 <= count <= basis.count:
        raise PreconditionError(f"Cannot analyse {count} modes of a basis with {basis.count}")
    modes = tuple(analyze_mode(k, basis.eigenvalues[k - 1], params) for k in range(1, count + 1))
    spaces: dict[str, list[Direction]] = {"plus": [], "minus": [], "zero": []}
    for mode in modes:
        plus_space, minus_space = _ASSIGNMENT[mode.mode_class]
        spaces[plus_space].append((mode.k, "+"))
        spaces[minus_space].append((mode.k, "-"))
    split = SpaceSplit(
        params=params,
        modes=modes,
        plus=tuple(spaces["plus"]),
        minus=tuple(spaces["minus"]),
        zero=tuple(spaces["zero"]),
    )
    if split.dim_zero:
        logger.info(f"🔁 Resonance: dim E^0 = {split.dim_zero} at modes {split.resonant_modes}")
    return split


def to_mode_frame(u: np.ndarray, v: np.ndarray, split: SpaceSplit) -> tuple[np.ndarray, np.ndarray]:
    lam_k = split.eigenvalues
    alpha, s = split.params.alpha, split.params.s
    return lam_k ** (0.5 * alpha) * u[: split.count], lam_k ** (s - 0.5 * alpha) * v[: split.count]


def from_mode_frame(x: np.ndarray, y: np.ndarray, split: SpaceSplit) -> tuple[np.ndarray, np.ndarray]:
    lam_k = split.eigenvalues
    alpha, s = split.params.alpha, split.params.s
    return lam_k ** (-0.5 * alpha) * x, lam_k ** (0.5 * alpha - s) * y


def _eigvec_table(split: SpaceSplit) -> tuple[np.ndarray, np.ndarray]:
    plus = np.array([m.eigvec_plus for m in split.modes])
    minus = np.array([m.eigvec_minus for m in split.modes])
    return plus, minus


def eigen_coordinates(u: np.ndarray, v: np.ndarray, split: SpaceSplit) -> np.ndarray:
    """(K, 2) array of coordinates along the '+' and '-' eigendirections of each mode."""
    x, y = to_mode_frame(np.asarray(u), np.asarray(v), split)
    plus, minus = _eigvec_table(split)
    return np.column_stack([plus[:, 0] * x + plus[:, 1] * y, minus[:, 0] * x + minus[:, 1] * y])


def split_components(
    u: np.ndarray, v: np.ndarray, split: SpaceSplit
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Coefficient pairs (u, v) of the projections onto E^+, E^- and E^0."""
    coords = eigen_coordinates(u, v, split)
    plus, minus = _eigvec_table(split)
    components = {}
    for space in ("plus", "minus", "zero"):
        x = np.zeros(split.count)
        y = np.zeros(split.count)
        for k, sign in getattr(split, space):
            column, vec = (0, plus) if sign == "+" else (1, minus)
            x[k - 1] += coords[k - 1, column] * vec[k - 1, 0]
            y[k - 1] += coords[k - 1, column] * vec[k - 1, 1]
        components[space] = from_mode_frame(x, y, split)
    return components


def _l2_weights(split: SpaceSplit, k: int, sign: str) -> float:
    mode = split.modes[k - 1]
    ex, ey = mode.eigvec_plus if sign == "+" else mode.eigvec_minus
    alpha, s = split.params.alpha, split.params.s
    return ex**2 * mode.eigenvalue ** (-alpha) + ey**2 * mode.eigenvalue ** (alpha - 2.0 * s)


def star_norm(coords: np.ndarray, split: SpaceSplit) -> float:
    """Equivalent norm: <Lw+, w+> - <Lw-, w-> + |w0|^2 in L2 x L2, from eigen-coordinates."""
    coords = np.asarray(coords, dtype=float).reshape(split.count, 2)
    total = 0.0
    for k, sign in split.plus + split.minus:
        mode = split.modes[k - 1]
        nu = mode.nu_plus if sign == "+" else mode.nu_minus
        c = coords[k - 1, 0 if sign == "+" else 1]
        total += abs(nu) * c**2
    for k, sign in split.zero:
        c = coords[k - 1, 0 if sign == "+" else 1]
        total += _l2_weights(split, k, sign) * c**2
    return float(np.sqrt(total))


def product_norm(u: np.ndarray, v: np.ndarray, basis: EigenBasis, alpha: float, s: float) -> float:
    """E^alpha norm sqrt(sum lambda_k^alpha u_k^2 + lambda_k^(2s-alpha) v_k^2)."""
    return float(np.sqrt(np.sum(basis.powers(alpha) * u**2 + basis.powers(2.0 * s - alpha) * v**2)))


def isometry_defect(
    basis: EigenBasis, alpha: float, s: float, rng: np.random.Generator, samples: int = 8
) -> float:
    """Largest relative defect of (u, v) -> (A^s v, A^s u) as a map E^alpha -> E^alpha' on random pairs."""
    worst = 0.0
    op = basis.powers(s)
    for _ in range(samples):
        u, v = rng.standard_normal((2, basis.count))
        source = product_norm(u, v, basis, alpha, s)
        image = np.sqrt(
            np.sum(basis.powers(-alpha) * (op * v) ** 2 + basis.powers(alpha - 2.0 * s) * (op * u) ** 2)
        )
        worst = max(worst, abs(image - source) / source)
    return float(worst)


def condition_number(split: SpaceSplit) -> float:
    """max|nu| / min|nu| of L on the truncation; infinite at resonance."""
    nus = np.abs([nu for m in split.modes for nu in (m.nu_plus, m.nu_minus)])
    smallest = nus.min()
    return float(np.inf) if smallest == 0.0 else float(nus.max() / smallest)


@dataclass(frozen=True, eq=False)
class NuLimitReport:
    params: CouplingParams
    deviations: np.ndarray  # (K,) max(|nu_k^+ - 1|, |nu_k^- + 1|)
    tail_max: float  # max over k >= K/2
    last_special_mode: int  # last non-hyperbolic mode, 0 if none
    monotone: bool  # deviations decrease beyond last_special_mode

    def deviation(self, k: int) -> float:
        return float(self.deviations[k - 1])

    def to_dict(self) -> dict[str, float | int | bool]:
        return {
            "tail_max": self.tail_max,
            "last_special_mode": self.last_special_mode,
            "monotone": self.monotone,
        }


def nu_limit_check(params: CouplingParams, count: int, domain: ModelDomain | None = None) -> NuLimitReport:
    """Deviation of nu_k^+- from +-1 along the spectrum; it must shrink as k grows."""
    if count < 32:
        raise PreconditionError(f"nu_limit_check needs at least 32 modes, got {count}")
    domain = domain or ModelDomain.interval(1.0, grid_size=max(4 * count, 64))
    basis = build_basis(domain, count)
    modes = [analyze_mode(k, basis.eigenvalues[k - 1], params) for k in range(1, count + 1)]
    deviations = np.array([max(abs(m.nu_plus - 1.0), abs(m.nu_minus + 1.0)) for m in modes])
    special = [m.k for m in modes if m.mode_class != "hyperbolic"]
    last_special = special[-1] if special else 0
    tail = deviations[last_special:]
    monotone = bool(np.all(np.diff(tail) <= 1e-15))
    if not monotone:
        logger.warning(f"⚠️ nu_k deviation is not monotone beyond mode {last_special} for {params}")
    return NuLimitReport(
        params=params,
        deviations=deviations,
        tail_max=float(deviations[count // 2 :].max()),
        last_special_mode=last_special,
        monotone=monotone,
    )
