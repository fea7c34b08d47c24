# cli/main.py
"""
Click group for the LwR toolkit with one place that maps errors to exit codes.

Exit codes: 0 success, 1 unexpected error, 2 invalid configuration,
3 data error, 4 training did not converge.
"""
import click

from cli.eval_commands import eval_cmd, sweep_cmd
from cli.synth_commands import synth_cmd
from cli.train_commands import train_cmd
from core.exceptions import ConfigError, ConvergenceError, DataError
from utils.logger import log

EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4


def exit_code_for(err: Exception) -> int:
    if isinstance(err, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(err, ConfigError):
        return EXIT_CONFIG
    if isinstance(err, DataError):
        return EXIT_DATA
    return EXIT_UNEXPECTED


class LwrGroup(click.Group):
    """click.Group that turns library errors into exit codes."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except Exception as err:
            code = exit_code_for(err)
            log.error(f"{type(err).__name__}: {err}")
            click.echo(f"Error: {err}", err=True)
            ctx.exit(code)


@click.group(cls=LwrGroup)
@click.version_option("1.0.0", prog_name="lwr")
def cli():
    """Learning with Rejection: joint classifier and rejector training."""


cli.add_command(train_cmd)
cli.add_command(eval_cmd)
cli.add_command(sweep_cmd)
cli.add_command(synth_cmd)


def main():
    cli()
