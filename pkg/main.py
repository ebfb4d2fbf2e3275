# main.py
# ───────────────────────────────────────────────────────────────────
# Command-line entry point: resolve the experiment configuration, run
# one command through ExperimentRunner, print a summary table and map
# the outcome to an exit code.

import logging
import sys
from typing import Any, Dict, List, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from qevar.config import build_config
from qevar.errors import ConfigError
from qevar.runner import ExperimentRunner, RunOutcome

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_MISSING_FILE = 2
EXIT_INVALID_INPUT = 3

console = Console(stderr=True)


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(name)s - %(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def print_summary(outcome: RunOutcome) -> None:
    table = Table(title=f"qevar {outcome.command}")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for key, value in outcome.headline.items():
        table.add_row(str(key), f"{value:.6g}" if isinstance(value, float) else str(value))
    for path in outcome.paths:
        table.add_row("written", path)
    console.print(table)


def common_options(func):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="JSON experiment file; flags override its keys"),
        click.option("--seed", type=int, default=None, help="Root seed (default: QEVAR_SEED)"),
        click.option("--samples", type=int, default=None, help="Monte-Carlo samples (default: QEVAR_SAMPLES)"),
        click.option("--dim", type=int, default=None, help="Torus dimension"),
        click.option("--n-max", "n_max", type=int, default=None, help="Largest level / squared radius"),
        click.option("--d", "d", type=int, multiple=True, help="Matrix dimension (repeatable)"),
        click.option("--out", type=click.Path(file_okay=False), default=None,
                     help="Output folder (default: QEVAR_OUTPUT_DIR)"),
        click.option("--format", "output_format", type=click.Choice(["json", "csv"]), default=None,
                     help="Report format (default: QEVAR_FORMAT)"),
        click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def execute(command: str, config_path: Optional[str], verbose: bool, **flags: Any) -> int:
    configure_logging(verbose)
    overrides: Dict[str, Any] = {
        "seed": flags.get("seed"),
        "samples": flags.get("samples"),
        "dim": flags.get("dim"),
        "n_max": flags.get("n_max"),
        "d": flags.get("d"),
        "out": flags.get("out"),
        "format": flags.get("output_format"),
        "n_values": flags.get("n_values"),
        "draws": flags.get("draws"),
        "spectrum": flags.get("spectrum"),
    }
    config = build_config(command, config_path, overrides)
    outcome = ExperimentRunner(config).run()
    print_summary(outcome)
    return EXIT_FAILED if outcome.passed is False else EXIT_OK


@click.group(help="qevar: quantum variances of random orthonormal bases")
def cli() -> None:
    pass


@cli.command(help="m2/m4 from closed forms, the Weingarten oracle and Monte-Carlo")
@common_options
@click.option("--spectrum", type=float, multiple=True, help="Explicit eigenvalue (repeatable)")
def moments(config_path, verbose, **flags):
    return execute("moments", config_path, verbose, **flags)


@cli.command("mc-verify", help="Monte-Carlo checks of closed forms and entry moments")
@common_options
def mc_verify(config_path, verbose, **flags):
    return execute("mc-verify", config_path, verbose, **flags)


@cli.command("beta4-adjudicate", help="Compare the degree-4 candidates with the Weingarten oracle")
@common_options
def beta4_adjudicate(config_path, verbose, **flags):
    return execute("beta4-adjudicate", config_path, verbose, **flags)


@cli.command(help="SLLN partial sums over d_n = n")
@common_options
def slln(config_path, verbose, **flags):
    return execute("slln", config_path, verbose, **flags)


@cli.command("torus-shells", help="Lattice shell multiplicities and growth slope")
@common_options
def torus_shells(config_path, verbose, **flags):
    return execute("torus-shells", config_path, verbose, **flags)


@cli.command("torus-qe", help="Random ONBs of torus eigenspaces")
@common_options
@click.option("--n", "n_values", type=int, multiple=True, help="Shell squared radius (repeatable)")
@click.option("--draws", type=int, default=None, help="Random ONBs per shell")
def torus_qe(config_path, verbose, **flags):
    return execute("torus-qe", config_path, verbose, **flags)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    try:
        result = cli.main(args=argv, prog_name="qevar", standalone_mode=False)
        return result if isinstance(result, int) else EXIT_OK
    except click.exceptions.Abort:
        return EXIT_FAILED
    except click.exceptions.ClickException as e:
        e.show()
        return EXIT_INVALID_INPUT
    except FileNotFoundError as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return EXIT_INVALID_INPUT
    except ValueError as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except Exception as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
