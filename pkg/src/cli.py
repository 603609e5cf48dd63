"""Batch front-end: fracsys {gate|spectrum|solve|verify|sweep} --config run.toml --out results --seed 0."""

import logging
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
import typer
from joblib import Parallel
from joblib import delayed
from tqdm import tqdm

from src.artifacts import RunManifest
from src.artifacts import run_directory
from src.basis import ModelDomain
from src.basis import ResolutionError
from src.basis import grid_points
from src.basis import synthesize
from src.config import LOG_LEVEL
from src.diagnostics import run_identity_checks
from src.diagnostics import run_operator_diagnostics
from src.diagnostics import run_solution_diagnostics
from src.functional import problem_basis
from src.indefinite import condition_number
from src.indefinite import nu_limit_check
from src.operators import AccuracyError
from src.operators import PreconditionError
from src.operators import operator_eigenvalues
from src.run_config import ConfigParseError
from src.run_config import ConfigValidationError
from src.run_config import RunConfig
from src.run_config import parse_config
from src.solver import SaddleSolution
from src.solver import admissibility
from src.solver import continuation
from src.solver import gate
from src.solver import problem_split
from src.solver import solve_problem

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3

app = typer.Typer(help="Fractional Hamiltonian systems: admissibility, spectra, solutions and diagnostics.")


def _solution_table(sol: SaddleSolution) -> pd.DataFrame:
    points, _ = grid_points(sol.w.basis.domain)
    columns = {"x": points[:, 0]}
    if points.shape[1] == 2:
        columns["y"] = points[:, 1]
    columns["u"] = synthesize(sol.w.u).ravel()
    columns["v"] = synthesize(sol.w.v).ravel()
    return pd.DataFrame(columns)


def _run_gate(config: RunConfig, manifest: RunManifest) -> int:
    manifest.write_json("admissibility.json", gate(config.problem).to_dict(), "admissibility")
    return EXIT_OK


def _run_spectrum(config: RunConfig, manifest: RunManifest) -> int:
    prob = config.problem
    split = problem_split(prob)
    op = operator_eigenvalues(problem_basis(prob), prob.s)
    rows = [{**mode.to_dict(), "operator_eigenvalue": op[mode.k - 1]} for mode in split.modes]
    manifest.write_csv("spectrum.csv", pd.DataFrame(rows))
    nu_limit = nu_limit_check(split.params, split.count, prob.domain) if split.count >= 32 else None
    payload = {
        "modes": rows,
        "split": split.summary(),
        "condition_number": condition_number(split),
        "nu_limit": nu_limit.to_dict() if nu_limit else None,
    }
    manifest.write_json("spectrum.json", payload, "spectrum")
    return EXIT_OK


def _finish_solution(sol: SaddleSolution, manifest: RunManifest) -> int:
    manifest.write_csv("solution.csv", _solution_table(sol))
    manifest.write_json("solution.json", sol.to_dict(), "solution")
    if not sol.converged:
        manifest.status = "nonconverged"
        return EXIT_NONCONVERGED
    return EXIT_OK


def _run_solve(config: RunConfig, manifest: RunManifest) -> int:
    _run_gate(config, manifest)
    return _finish_solution(solve_problem(config.problem), manifest)


def _run_verify(config: RunConfig, manifest: RunManifest) -> int:
    prob = config.problem
    settings = config.diagnostics
    domain = ModelDomain.interval(prob.domain.extents[0], grid_size=settings.intervals + 1)
    report = run_operator_diagnostics(domain, list(settings.s_values), levels=settings.levels)
    sol = solve_problem(prob)
    report.solution = run_solution_diagnostics(sol).solution
    rng = np.random.default_rng(config.seed)
    report.identity_checks = run_identity_checks(problem_basis(prob), prob.s, rng, prob)
    manifest.write_json("diagnostics.json", report.to_dict(), "diagnostics")
    return _finish_solution(sol, manifest)


def _hyperbola_row(n: int, s: float, p: float, qs: list[float]) -> list[dict]:
    rows = []
    for q in qs:
        report = admissibility(n, s, p, q)
        low, high = report.alpha_window or (np.nan, np.nan)
        rows.append(
            {
                "p": p,
                "q": q,
                "margin": report.margin,
                "admissible": report.hyperbola_ok,
                "alpha_low": low,
                "alpha_high": high,
                "suggested_alpha": report.suggested_alpha,
            }
        )
    return rows


def _run_sweep(config: RunConfig, manifest: RunManifest) -> int:
    prob = config.problem
    sweep = config.sweep
    values = sweep.values()
    if sweep.parameter == "pq":
        _run_gate(config, manifest)
        rows = Parallel(n_jobs=-1, prefer="threads")(
            delayed(_hyperbola_row)(prob.dimension, prob.s, p, values) for p in tqdm(values, desc="p rows")
        )
        manifest.write_csv("hyperbola.csv", pd.DataFrame([row for chunk in rows for row in chunk]))
        return EXIT_OK

    path = continuation(prob, sweep.parameter, values)
    table = pd.DataFrame(
        {
            sweep.parameter: path.values,
            "energy": [sol.energy for sol in path.solutions],
            "residual": [sol.residual for sol in path.solutions],
            "iterations": [sol.iterations for sol in path.solutions],
            "trivial": [sol.trivial for sol in path.solutions],
            "dim_zero": path.dim_zero,
            "sup_u": [float(np.abs(synthesize(sol.w.u)).max()) for sol in path.solutions],
            "sup_v": [float(np.abs(synthesize(sol.w.v)).max()) for sol in path.solutions],
        }
    )
    manifest.write_csv("continuation.csv", table)
    manifest.write_json("continuation.json", path.to_dict(), "continuation")
    if path.stopped:
        manifest.status = "nonconverged"
        return EXIT_NONCONVERGED
    return EXIT_OK


_PIPELINES = {
    "gate": _run_gate,
    "spectrum": _run_spectrum,
    "solve": _run_solve,
    "verify": _run_verify,
    "sweep": _run_sweep,
}


def run(config: RunConfig, out_dir: Path) -> int:
    """Execute the configured pipeline into out_dir; returns the process exit status."""
    with run_directory(out_dir, config.command, config.seed) as manifest:
        try:
            return _PIPELINES[config.command](config, manifest)
        except (PreconditionError, ResolutionError) as exc:
            logger.error(f"❌ {exc}")
            manifest.status = "rejected"
            return EXIT_CONFIG


def _execute(command: str, config_path: Path, out: Path | None, seed: int | None) -> None:
    logging.basicConfig(level=LOG_LEVEL)
    try:
        config = parse_config(config_path.read_text(encoding="utf-8"))
    except (ConfigParseError, ConfigValidationError, PreconditionError, ResolutionError) as exc:
        typer.secho(f"Error: {exc}", fg=typer.colors.RED, err=True)
        raise typer.Exit(EXIT_CONFIG)
    except AccuracyError as exc:
        typer.secho(f"Error: {exc} (estimate {exc.estimate})", fg=typer.colors.RED, err=True)
        raise typer.Exit(EXIT_CONFIG)
    config = replace(config, command=command, seed=config.seed if seed is None else seed)
    raise typer.Exit(run(config, out or Path(config.output_dir)))


# fmt: off
CONFIG_OPTION = typer.Option(..., "--config", exists=True, dir_okay=False, help="TOML or JSON run configuration")
OUT_OPTION = typer.Option(None, "--out", help="Output directory (defaults to [output].directory)")
SEED_OPTION = typer.Option(None, "--seed", min=0, help="Seed for randomized spot checks")
# fmt: on


@app.command("gate")
def gate_command(
    config: Path = CONFIG_OPTION, out: Path | None = OUT_OPTION, seed: int | None = SEED_OPTION
) -> None:
    """Admissibility of (p, q) against the critical hyperbola and the alpha-window."""
    _execute("gate", config, out, seed)


@app.command("spectrum")
def spectrum_command(
    config: Path = CONFIG_OPTION, out: Path | None = OUT_OPTION, seed: int | None = SEED_OPTION
) -> None:
    """Per-mode eigenvalues nu_k^+- and the E+/E-/E0 split."""
    _execute("spectrum", config, out, seed)


@app.command("solve")
def solve_command(
    config: Path = CONFIG_OPTION, out: Path | None = OUT_OPTION, seed: int | None = SEED_OPTION
) -> None:
    """Galerkin-Newton saddle solution; writes solution.csv and solution.json."""
    _execute("solve", config, out, seed)


@app.command("verify")
def verify_command(
    config: Path = CONFIG_OPTION, out: Path | None = OUT_OPTION, seed: int | None = SEED_OPTION
) -> None:
    """Operator and solution diagnostics."""
    _execute("verify", config, out, seed)


@app.command("sweep")
def sweep_command(
    config: Path = CONFIG_OPTION, out: Path | None = OUT_OPTION, seed: int | None = SEED_OPTION
) -> None:
    """(p, q) admissibility grid or a parameter continuation."""
    _execute("sweep", config, out, seed)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
