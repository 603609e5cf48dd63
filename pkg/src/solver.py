"""Admissibility gate and the Galerkin-Newton saddle solver.

Critical points of the strongly indefinite Lagrangian are found as zeros of its gradient: the
linking construction only supplies the starting ray t e+, Newton does the rest.
"""

import logging
import warnings
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import Literal

import numpy as np
from scipy import linalg
from scipy import optimize

from src.basis import SpectralField
from src.basis import prolong
from src.basis import synthesize
from src.config import ARMIJO_BACKTRACK
from src.config import ARMIJO_C
from src.config import CONTINUATION_MAX_BISECTIONS
from src.config import MIN_STEP
from src.config import NEWTON_MAX_ITER
from src.config import NEWTON_TOL
from src.config import TIKHONOV_DELTA
from src.datamodels import AdmissibilityReport
from src.functional import PairField
from src.functional import SystemProblem
from src.functional import gradient
from src.functional import hessian
from src.functional import lagrangian
from src.functional import problem_basis
from src.functional import product_split
from src.functional import quadratic_part
from src.indefinite import SpaceSplit
from src.indefinite import build_split
from src.indefinite import from_mode_frame
from src.operators import PreconditionError
from src.operators import operator_eigenvalues

logger = logging.getLogger(__name__)

ContinuationParameter = Literal["lam", "mu", "lam_mu", "s"]
CONTINUATION_PARAMETERS: tuple[str, ...] = ("lam", "mu", "lam_mu", "s")


def lane_emden_critical_exponent(n: int, s: float) -> float:
    """(n+2s)/(n-2s), the critical power of the scalar problem; infinite when n <= 2s."""
    return float("inf") if n <= 2.0 * s else (n + 2.0 * s) / (n - 2.0 * s)


def admissibility(n: int, s: float, p: float, q: float, alpha: float | None = None) -> AdmissibilityReport:
    """Critical hyperbola, alpha-window and embedding checks for (n, s, p, q), evaluated at alpha."""
    low = n * (0.5 - 1.0 / (q + 1.0))
    high = 2.0 * s - n * (0.5 - 1.0 / (p + 1.0))
    # high - low = n * margin; taking the margin from the window keeps both tests sign-consistent
    margin = (high - low) / n
    hyperbola_ok = margin > 0.0
    window = (max(low, 0.0), min(high, 2.0 * s)) if hyperbola_ok else None
    suggested = 0.5 * (window[0] + window[1]) if window else s
    alpha = alpha if alpha is not None else suggested

    q_denominator = n - 2.0 * alpha
    p_denominator = n + 2.0 * alpha - 4.0 * s
    embedding_q_ok = q_denominator <= 0 or q + 1.0 < 2.0 * n / q_denominator
    embedding_p_ok = p_denominator <= 0 or p + 1.0 < 2.0 * n / p_denominator
    in_window = window is not None and window[0] < alpha < window[1]

    return AdmissibilityReport(
        dimension=n,
        s=s,
        p=p,
        q=q,
        margin=margin,
        hyperbola_ok=hyperbola_ok,
        alpha_window=window,
        alpha=alpha,
        suggested_alpha=suggested,
        embedding_q_ok=embedding_q_ok,
        embedding_p_ok=embedding_p_ok,
        lane_emden_critical=lane_emden_critical_exponent(n, s),
        theorem_applicable=hyperbola_ok and in_window and embedding_q_ok and embedding_p_ok,
    )


def gate(prob: SystemProblem) -> AdmissibilityReport:
    """Admissibility of the problem at its alpha (the window midpoint when unset); failures are logged."""
    report = admissibility(prob.dimension, prob.s, prob.p, prob.q, prob.alpha)
    if not report.theorem_applicable:
        logger.warning(
            f"⚠️ (p, q) = ({prob.p}, {prob.q}) with alpha={report.alpha:.6g} is outside the existence range"
            f" (margin {report.margin:.3g})"
        )
    return report


def resolve_alpha(prob: SystemProblem) -> float:
    if prob.alpha is not None:
        return prob.alpha
    return admissibility(prob.dimension, prob.s, prob.p, prob.q).suggested_alpha


def problem_split(prob: SystemProblem) -> SpaceSplit:
    return build_split(problem_basis(prob), prob.coupling(resolve_alpha(prob)))


def initial_guess(prob: SystemProblem, split: SpaceSplit, amplitude: float) -> PairField:
    """t e+ along the lowest E+ direction, with e+ of unit star norm."""
    basis = problem_basis(prob)
    if amplitude == 0.0:
        return PairField.zeros(basis)
    if amplitude < 0.0:
        raise PreconditionError(f"amplitude must be nonnegative, got {amplitude}")
    for k, sign in split.plus:
        mode = split.modes[k - 1]
        nu = mode.nu_plus if sign == "+" else mode.nu_minus
        ex, ey = mode.eigvec_plus if sign == "+" else mode.eigvec_minus
        break
    else:
        raise PreconditionError("E+ is empty on this truncation; no linking direction to start from")
    x = np.zeros(split.count)
    y = np.zeros(split.count)
    x[k - 1] = amplitude * ex / np.sqrt(nu)
    y[k - 1] = amplitude * ey / np.sqrt(nu)
    u, v = from_mode_frame(x, y, split)
    pad = basis.count - split.count
    return PairField.from_coefficients(basis, np.pad(u, (0, pad)), np.pad(v, (0, pad)))


def ray_maximizer(prob: SystemProblem, split: SpaceSplit, max_doublings: int = 60) -> float:
    """Amplitude t* maximising J(t e+) over t > 0."""

    def energy(t: float) -> float:
        return lagrangian(initial_guess(prob, split, t), prob)

    upper = 1.0
    for _ in range(max_doublings):
        if energy(upper) < 0.0:
            break
        upper *= 2.0
    else:
        raise PreconditionError("J(t e+) stays nonnegative along the ray; the nonlinearity never dominates")
    result = optimize.minimize_scalar(
        lambda t: -energy(t), bounds=(0.0, upper), method="bounded", options={"xatol": 1e-10}
    )
    logger.debug(f"Ray maximum at t*={result.x:.8g}, J={-result.fun:.8g}")
    return float(result.x)


@dataclass(frozen=True, eq=False)
class SaddleSolution:
    problem: SystemProblem
    alpha: float
    w: PairField
    residual: float
    energy: float
    iterations: int
    converged: bool
    trivial: bool
    regularized: bool
    u_positive: bool
    v_positive: bool
    energy_split: dict[str, float]
    residual_trace: tuple[float, ...]
    reason: str
    seed: str

    def to_dict(self) -> dict:
        return {
            "problem": self.problem.to_dict(),
            "alpha": self.alpha,
            "u": self.w.u.coefficients.tolist(),
            "v": self.w.v.coefficients.tolist(),
            "residual": self.residual,
            "energy": self.energy,
            "iterations": self.iterations,
            "converged": self.converged,
            "trivial": self.trivial,
            "regularized": self.regularized,
            "u_positive": self.u_positive,
            "v_positive": self.v_positive,
            "energy_split": dict(self.energy_split),
            "residual_trace": list(self.residual_trace),
            "reason": self.reason,
            "seed": self.seed,
        }


def residual_norm(grad: PairField, alpha: float, s: float) -> float:
    """E^alpha dual norm of the gradient: sqrt(sum lambda_k^-alpha G_u^2 + lambda_k^(alpha-2s) G_v^2)."""
    basis = grad.basis
    u_part = basis.powers(-alpha) * grad.u.coefficients**2
    v_part = basis.powers(alpha - 2.0 * s) * grad.v.coefficients**2
    return float(np.sqrt(np.sum(u_part + v_part)))


def _newton_direction(jac: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, bool]:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", linalg.LinAlgWarning)
            step = linalg.solve(jac, rhs, assume_a="sym")
        if np.all(np.isfinite(step)):
            return step, False
    except (linalg.LinAlgError, linalg.LinAlgWarning):
        pass
    logger.warning(f"🔁 Singular Newton matrix, retrying with Tikhonov delta={TIKHONOV_DELTA}")
    normal = jac.T @ jac + TIKHONOV_DELTA * np.eye(jac.shape[0])
    return linalg.solve(normal, jac.T @ rhs, assume_a="pos"), True


def _positive(values: np.ndarray) -> bool:
    scale = float(np.abs(values).max())
    return scale > 0.0 and float(values.min()) >= -1e-8 * scale


def _energy_split(w: PairField, prob: SystemProblem, split: SpaceSplit) -> dict[str, float]:
    plus, minus, zero = product_split(w, split)
    return {
        "plus": quadratic_part(plus, prob),
        "minus": quadratic_part(minus, prob),
        "zero_l2": float(zero.vector() @ zero.vector()),
    }


def newton_solve(
    prob: SystemProblem,
    w0: PairField,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    seed: str = "user",
) -> SaddleSolution:
    """Damped Newton on gradient(w) = 0 with Armijo backtracking on 0.5 |gradient|^2."""
    basis = w0.basis
    alpha = resolve_alpha(prob)
    z = w0.vector()
    trace: list[float] = []
    regularized = False
    converged = False
    reason = "max iterations"
    iterations = 0

    def grad_at(vec: np.ndarray) -> PairField:
        return gradient(PairField.from_vector(basis, vec), prob)

    grad = grad_at(z)
    for iterations in range(max_iter + 1):
        res = residual_norm(grad, alpha, prob.s)
        trace.append(res)
        logger.debug(f"Newton {iterations}: residual {res:.3e}")
        if res <= tol:
            converged, reason = True, "converged"
            break
        if iterations == max_iter:
            break
        g = grad.vector()
        step, retried = _newton_direction(hessian(PairField.from_vector(basis, z), prob), -g)
        regularized |= retried
        merit = 0.5 * g @ g
        t = 1.0
        while True:
            trial = grad_at(z + t * step)
            trial_g = trial.vector()
            if 0.5 * trial_g @ trial_g <= (1.0 - 2.0 * ARMIJO_C * t) * merit:
                break
            t *= ARMIJO_BACKTRACK
            if t < MIN_STEP:
                break
        if t < MIN_STEP:
            reason = "line search stalled"
            break
        z = z + t * step
        grad = trial

    w = PairField.from_vector(basis, z)
    trivial = converged and w.is_zero()
    u_values = synthesize(w.u)
    v_values = synthesize(w.v)
    split = build_split(basis, prob.coupling(alpha))
    solution = SaddleSolution(
        problem=prob,
        alpha=alpha,
        w=w,
        residual=trace[-1],
        energy=lagrangian(w, prob),
        iterations=iterations,
        converged=converged,
        trivial=trivial,
        regularized=regularized,
        u_positive=not trivial and _positive(u_values),
        v_positive=not trivial and _positive(v_values),
        energy_split=_energy_split(w, prob, split),
        residual_trace=tuple(trace),
        reason=reason,
        seed=seed,
    )
    if converged:
        label = "trivial solution" if trivial else f"J={solution.energy:.8g}"
        logger.info(f"✅ Newton converged in {iterations} iterations, {label}")
    else:
        logger.warning(f"❌ Newton stopped ({reason}) at residual {trace[-1]:.3e} after {iterations} iterations")
    return solution


def solve_problem(prob: SystemProblem, w0: PairField | None = None) -> SaddleSolution:
    """Newton from w0 or, by default, from the maximiser of J along the linking ray."""
    if w0 is not None:
        return newton_solve(prob, w0, seed="warm-start")
    split = problem_split(prob)
    t_star = ray_maximizer(prob, split)
    return newton_solve(prob, initial_guess(prob, split, t_star), seed=f"ray t*={t_star:.17g}")


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    w: PairField
    iterations: int
    converged: bool
    increment: float


def fixed_point_solve(prob: SystemProblem, tol: float = 1e-12, max_iter: int = 500) -> FixedPointResult:
    """Normalised iteration w <- L^-1(|w|^(p-1) w) / |.| for the symmetric problem lam = mu = 0, p = q.

    At the fixed point L^-1(|w|^(p-1) w) = m w, and u = v = m^(-1/(p-1)) w solves L u = |u|^(p-1) u.
    """
    if prob.lam != 0.0 or prob.mu != 0.0 or prob.p != prob.q:
        raise PreconditionError("fixed_point_solve handles the symmetric reduction lam = mu = 0, p = q only")
    basis = problem_basis(prob)
    op = operator_eigenvalues(basis, prob.s)
    project = basis.modes.T * basis.weights
    w = np.zeros(basis.count)
    w[0] = 1.0
    increment = np.inf
    scale = 1.0
    iterations = 0
    for iterations in range(1, max_iter + 1):
        values = basis.modes @ w
        image = project @ (np.abs(values) ** (prob.p - 1.0) * values) / op
        scale = float(np.linalg.norm(image))
        update = image / scale
        increment = float(np.linalg.norm(update - w))
        w = update
        if increment <= tol:
            break
    converged = increment <= tol
    if not converged:
        logger.warning(f"❌ Fixed-point iteration stalled at increment {increment:.3e}")
    u = SpectralField(basis, scale ** (-1.0 / (prob.p - 1.0)) * w)
    return FixedPointResult(
        w=PairField(u, u), iterations=iterations, converged=converged, increment=increment
    )


@dataclass(frozen=True)
class ResonanceCrossing:
    mode: int
    value: float

    def to_dict(self) -> dict[str, int | float]:
        return {"mode": self.mode, "value": self.value}


@dataclass(eq=False)
class ContinuationPath:
    parameter: str
    values: list[float] = field(default_factory=list)
    solutions: list[SaddleSolution] = field(default_factory=list)
    crossings: list[ResonanceCrossing] = field(default_factory=list)
    dim_zero: list[int] = field(default_factory=list)
    stopped: bool = False
    reason: str = "completed"

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "values": list(self.values),
            "energies": [sol.energy for sol in self.solutions],
            "residuals": [sol.residual for sol in self.solutions],
            "trivial": [sol.trivial for sol in self.solutions],
            "crossings": [crossing.to_dict() for crossing in self.crossings],
            "dim_zero": list(self.dim_zero),
            "stopped": self.stopped,
            "reason": self.reason,
        }


def with_parameter(prob: SystemProblem, parameter: str, value: float) -> SystemProblem:
    if parameter == "lam":
        return replace(prob, lam=value)
    if parameter == "mu":
        return replace(prob, mu=value)
    if parameter == "lam_mu":
        return replace(prob, lam=value, mu=value)
    if parameter == "s":
        return replace(prob, s=value, alpha=None)
    raise PreconditionError(f"Unknown continuation parameter {parameter!r}, expected one of {CONTINUATION_PARAMETERS}")


def _resonance_function(prob: SystemProblem, parameter: str, eigenvalue: float):
    def distance(value: float) -> float:
        moved = with_parameter(prob, parameter, value)
        return moved.lam * moved.mu - eigenvalue ** (2.0 * moved.s)

    return distance


def _crossings(prob: SystemProblem, parameter: str, start: float, end: float) -> list[ResonanceCrossing]:
    found = []
    eigenvalues = problem_basis(with_parameter(prob, parameter, start)).eigenvalues
    for k, eigenvalue in enumerate(eigenvalues, start=1):
        distance = _resonance_function(prob, parameter, eigenvalue)
        d_start, d_end = distance(start), distance(end)
        if d_end == 0.0:
            found.append(ResonanceCrossing(k, end))
        elif d_start != 0.0 and np.sign(d_start) != np.sign(d_end):
            found.append(ResonanceCrossing(k, float(optimize.brentq(distance, start, end, xtol=1e-14))))
    return found


def _warm_start(previous: PairField, prob: SystemProblem) -> PairField:
    basis = problem_basis(prob)
    if previous.basis is basis:
        return previous
    return PairField(prolong(previous.u, basis), prolong(previous.v, basis))


def continuation(
    prob: SystemProblem,
    parameter: ContinuationParameter,
    values: list[float],
    seed: PairField | None = None,
    max_bisections: int = CONTINUATION_MAX_BISECTIONS,
) -> ContinuationPath:
    """Warm-started Newton along a parameter path, halving failed steps before giving up."""
    if parameter not in CONTINUATION_PARAMETERS:
        raise PreconditionError(f"Unknown continuation parameter {parameter!r}")
    path = ContinuationPath(parameter=parameter)
    current = seed
    for target in values:
        pending = [float(target)]
        bisections = 0
        while pending:
            value = pending[-1]
            step_prob = with_parameter(prob, parameter, value)
            w0 = _warm_start(current, step_prob) if current is not None else None
            solution = solve_problem(step_prob, w0)
            if solution.converged:
                if path.values:
                    path.crossings.extend(_crossings(prob, parameter, path.values[-1], value))
                path.values.append(value)
                path.solutions.append(solution)
                split = build_split(problem_basis(step_prob), step_prob.coupling(solution.alpha))
                path.dim_zero.append(split.dim_zero)
                current = solution.w
                pending.pop()
                continue
            if not path.values or bisections >= max_bisections:
                path.stopped = True
                path.reason = f"no convergence at {parameter}={value:.17g} after {bisections} bisections"
                logger.warning(f"❌ Continuation stopped: {path.reason}")
                return path
            bisections += 1
            midpoint = 0.5 * (path.values[-1] + value)
            logger.warning(f"🔁 Bisecting continuation step towards {parameter}={value:.6g} (try {midpoint:.6g})")
            pending.append(midpoint)
    for crossing in path.crossings:
        logger.info(f"🔁 Resonance of mode {crossing.mode} crossed at {parameter}={crossing.value:.12g}")
    return path
