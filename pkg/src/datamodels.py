from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field


@dataclass
class AdmissibilityReport:
    dimension: int
    s: float
    p: float
    q: float
    margin: float  # 1/(p+1) + 1/(q+1) - (n-2s)/n
    hyperbola_ok: bool
    alpha_window: tuple[float, float] | None  # open interval, None when empty
    alpha: float  # exponent the embedding checks were evaluated at
    suggested_alpha: float
    embedding_q_ok: bool  # q+1 < 2n/(n-2 alpha)
    embedding_p_ok: bool  # p+1 < 2n/(n+2 alpha-4s)
    lane_emden_critical: float
    theorem_applicable: bool

    @property
    def embedding_ok(self) -> bool:
        return self.embedding_q_ok and self.embedding_p_ok

    def to_dict(self) -> dict[str, int | float | bool | list[float] | None]:
        data = asdict(self)
        data["alpha_window"] = list(self.alpha_window) if self.alpha_window else None
        data["embedding_ok"] = self.embedding_ok
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "AdmissibilityReport":
        window = data.get("alpha_window")
        return cls(
            dimension=data["dimension"],
            s=data["s"],
            p=data["p"],
            q=data["q"],
            margin=data["margin"],
            hyperbola_ok=data["hyperbola_ok"],
            alpha_window=tuple(window) if window else None,
            alpha=data["alpha"],
            suggested_alpha=data["suggested_alpha"],
            embedding_q_ok=data["embedding_q_ok"],
            embedding_p_ok=data["embedding_p_ok"],
            lane_emden_critical=data.get("lane_emden_critical", float("inf")),
            theorem_applicable=data["theorem_applicable"],
        )


@dataclass
class OperatorDiagnostics:
    s: float
    intervals: int  # m of the coarsest level
    mu_1: float
    lambda_1_s: float
    eigenvalue_gap: float  # lambda_1^s - mu_1 on m intervals
    eigenvalue_gap_refined: float  # same on 2m intervals
    gap_extrapolated: float
    gap_order: float | None
    comparison_min: dict[str, float]
    comparison_min_refined: dict[str, float]
    comparison_tolerance: float  # 5h on the coarse grid
    boundary_exponent_restricted: float  # fitted on the finest level
    boundary_residual_restricted: float
    boundary_exponent_spectral: float
    boundary_residual_spectral: float
    boundary_refit_change: float

    @property
    def gap_change(self) -> float:
        if self.eigenvalue_gap == 0.0:
            return float("inf")
        return abs(self.eigenvalue_gap_refined - self.eigenvalue_gap) / abs(self.eigenvalue_gap)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["gap_change"] = self.gap_change
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "OperatorDiagnostics":
        return cls(**{key: data[key] for key in cls.__dataclass_fields__})


@dataclass
class SolutionDiagnostics:
    converged: bool
    sup_u: float
    sup_v: float
    decay_rate_u: float | None
    decay_residual_u: float | None
    decay_rate_v: float | None
    decay_residual_v: float | None
    boundary_exponent_u: float | None = None
    boundary_residual_u: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SolutionDiagnostics":
        return cls(**{key: data.get(key) for key in cls.__dataclass_fields__})


@dataclass
class DiagnosticsReport:
    test_family: str
    operator: list[OperatorDiagnostics] = field(default_factory=list)
    solution: SolutionDiagnostics | None = None
    identity_checks: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "test_family": self.test_family,
            "operator": [entry.to_dict() for entry in self.operator],
            "solution": self.solution.to_dict() if self.solution else None,
            "identity_checks": dict(self.identity_checks),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiagnosticsReport":
        solution = data.get("solution")
        return cls(
            test_family=data["test_family"],
            operator=[OperatorDiagnostics.from_dict(entry) for entry in data.get("operator", [])],
            solution=SolutionDiagnostics.from_dict(solution) if solution else None,
            identity_checks=dict(data.get("identity_checks", {})),
        )
