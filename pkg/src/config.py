import os
import tomllib
from pathlib import Path

import typer
from dotenv import load_dotenv

_config_file = Path(__file__).parent.parent / "pyproject.toml"
with _config_file.open("rb") as f:
    _config = tomllib.load(f)

_project_config = _config["project"]
_tool_config = _config["tool"]["config"]

load_dotenv()

SCHEMA_VERSION = _tool_config["schema_version"]
OUTPUT_DIR = _tool_config["output_dir"]
LOG_LEVEL = os.environ.get("LOG_LEVEL", _tool_config.get("log_level", "INFO"))
DEFAULT_SEED = _tool_config.get("default_seed", 0)
DEFAULT_TRUNCATION_1D = _tool_config.get("default_truncation_1d", 32)
DEFAULT_TRUNCATION_2D = _tool_config.get("default_truncation_2d", 64)
GRID_FACTOR = _tool_config.get("grid_factor", 4)
NEWTON_TOL = _tool_config.get("newton_tol", 1e-10)
NEWTON_MAX_ITER = _tool_config.get("newton_max_iter", 100)
ARMIJO_BACKTRACK = _tool_config.get("armijo_backtrack", 0.5)
ARMIJO_C = _tool_config.get("armijo_c", 1e-4)
MIN_STEP = _tool_config.get("min_step", 1e-6)
TIKHONOV_DELTA = _tool_config.get("tikhonov_delta", 1e-8)
RESONANCE_TOL = _tool_config.get("resonance_tol", 1e-9)
CONTINUATION_MAX_BISECTIONS = _tool_config.get("continuation_max_bisections", 8)


# fmt: off
def config_cli(
    all: bool = typer.Option(False, "--all", help="Show all configuration values"),
    project_name: bool = typer.Option(False, "--project-name", help=_project_config['name']),
    project_version: bool = typer.Option(False, "--project-version", help=_project_config['version']),
    schema_version: bool = typer.Option(False, "--schema-version", help=SCHEMA_VERSION),
    default_truncation: bool = typer.Option(False, "--default-truncation", help=str(DEFAULT_TRUNCATION_1D)),
    output_dir: bool = typer.Option(False, "--output-dir", help=OUTPUT_DIR),
) -> None:
# fmt: on
    if all:
        typer.echo(f"project_name={_project_config['name']}")
        typer.echo(f"project_version={_project_config['version']}")
        typer.echo(f"schema_version={SCHEMA_VERSION}")
        typer.echo(f"default_truncation_1d={DEFAULT_TRUNCATION_1D}")
        typer.echo(f"default_truncation_2d={DEFAULT_TRUNCATION_2D}")
        typer.echo(f"grid_factor={GRID_FACTOR}")
        typer.echo(f"newton_tol={NEWTON_TOL}")
        typer.echo(f"output_dir={OUTPUT_DIR}")
        return

    if project_name:
        typer.echo(_project_config["name"])
        return
    if project_version:
        typer.echo(_project_config["version"])
        return
    if schema_version:
        typer.echo(SCHEMA_VERSION)
        return
    if default_truncation:
        typer.echo(DEFAULT_TRUNCATION_1D)
        return
    if output_dir:
        typer.echo(OUTPUT_DIR)
        return

    typer.secho("Error: No config key specified. Use --help to see available options.", fg=typer.colors.RED, err=True)
    raise typer.Exit(1)


def main() -> None:
    typer.run(config_cli)


if __name__ == "__main__":
    main()
