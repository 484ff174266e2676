import logging

import typer
from rich.logging import RichHandler

from python.commands import COMMANDS
from python.parameters import load_config
from python.sweep import default_workers
from python.timecounter import print_stats

description = """
Homoclinic corners of piecewise-smooth planar maps.

Every sub-command reads an experiment file (--config), writes its CSV, JSON
and SVG artifacts plus a manifest.json into the output directory and exits
with 0 on success, 2 on configuration errors, 3 on numeric failures and 4
when only part of the tasks succeeded.
The numerics live in the `python` package:

Maps:
    piecewise-smooth maps and orbits are in `pws_core`, the border-collision
    normal form in `normal_form`.
Orbits and manifolds:
    `periodic`, `manifolds` and `homoclinic`.
Theory checks:
    `unfolding` and `modelock`.
"""

app = typer.Typer(help=description, add_completion=False, no_args_is_help=True)

CONFIG = typer.Option(..., '-f', '--config', help='specify the experiment configuration file (json or yaml)')
WORKERS = typer.Option(None, '-j', '--workers', help='# of local workers (default: all cores)')
PLOT = typer.Option(False, '--plot', help='also write SVG figures')
OUT = typer.Option(None, '-o', '--out', help='override the output directory of the configuration')
DEBUG = typer.Option(False, '-d', '--debug', help='debug logging')


def setup_logging(debug):
    logging.basicConfig(level=logging.DEBUG if debug else logging.INFO, format='%(message)s', datefmt='[%X]',
                        handlers=[RichHandler(rich_tracebacks=False, show_path=debug)], force=True)


def run_command(command, configfile, workers, plot, out, debug):
    setup_logging(debug)
    config = load_config(configfile)
    if debug:
        config.print()
    workers = workers if workers is not None else default_workers()
    return COMMANDS[command](config, workers=max(1, workers), plot=plot, out_dir=out)


@app.command()
@print_stats
def iterate(config: str = CONFIG, workers: int = WORKERS, plot: bool = PLOT, out: str = OUT, debug: bool = DEBUG):
    """Forward orbit of a point (optionally with its Lyapunov exponent)."""
    return run_command('iterate', config, workers, plot, out, debug)


@app.command()
@print_stats
def portrait(config: str = CONFIG, workers: int = WORKERS, plot: bool = PLOT, out: str = OUT, debug: bool = DEBUG):
    """Phase portrait: orbit cloud, invariant manifolds, periodic orbits, transversality certificate."""
    return run_command('portrait', config, workers, plot, out, debug)


@app.command()
@print_stats
def bifdiag(config: str = CONFIG, workers: int = WORKERS, plot: bool = PLOT, out: str = OUT, debug: bool = DEBUG):
    """Border collisions of the single-round orbits accumulating on a corner, with the scaling table."""
    return run_command('bifdiag', config, workers, plot, out, debug)


@app.command()
@print_stats
def sweep(config: str = CONFIG, workers: int = WORKERS, plot: bool = PLOT, out: str = OUT, debug: bool = DEBUG):
    """Mode-locking tongues with homoclinic-corner curves on top."""
    return run_command('sweep', config, workers, plot, out, debug)


@app.command()
@print_stats
def corner(config: str = CONFIG, workers: int = WORKERS, plot: bool = PLOT, out: str = OUT, debug: bool = DEBUG):
    """Locate a homoclinic corner and continue it in a parameter plane."""
    return run_command('corner', config, workers, plot, out, debug)


@app.command()
@print_stats
def validate(config: str = CONFIG, workers: int = WORKERS, plot: bool = PLOT, out: str = OUT, debug: bool = DEBUG):
    """Random-draw validation of the unfolding predictions."""
    return run_command('validate', config, workers, plot, out, debug)


@app.command()
@print_stats
def tongues(config: str = CONFIG, workers: int = WORKERS, plot: bool = PLOT, out: str = OUT, debug: bool = DEBUG):
    """Mode-locking tongues of rotational periodic orbits."""
    return run_command('tongues', config, workers, plot, out, debug)


@app.command()
@print_stats
def tent(config: str = CONFIG, workers: int = WORKERS, plot: bool = PLOT, out: str = OUT, debug: bool = DEBUG):
    """Compare the normal form with the skew tent map at small determinants."""
    return run_command('tent', config, workers, plot, out, debug)


def main():
    app()


if __name__ == '__main__':
    main()
