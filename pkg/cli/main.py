"""Command-line interface for cut-point analysis"""
import logging
import sys
from pathlib import Path
from typing import Optional

import click
from tqdm import tqdm

from app.core.analyzer import CutPointAnalyzer
from app.core.bifurcation import BifurcationEngine
from app.core.config import Config
from app.core.errors import CutPointError
from app.core.procedures import UCP, get_procedure, list_procedures
from app.services.output_service import OutputService
from app.services.simulation import ProtocolSimulator

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_ASSUMPTIONS = 3


def _log_level(name: str) -> int:
    """Numeric level for a level name; unknown names fall back to WARNING"""
    level = logging.getLevelName(str(name).upper())
    return level if isinstance(level, int) else logging.WARNING


def _configure_logging() -> None:
    Config._ensure_initialized()
    level = _log_level(Config.LOG_LEVEL)
    logging.basicConfig(level=level, format=Config.LOG_FORMAT, stream=sys.stderr)
    if not isinstance(logging.getLevelName(str(Config.LOG_LEVEL).upper()), int):
        logging.getLogger(__name__).warning("unknown log level '%s', using WARNING", Config.LOG_LEVEL)


def _fail(message: str) -> None:
    click.echo(f"Error: {message}", err=True)
    sys.exit(EXIT_DOMAIN)


@click.group()
def main():
    """Optimal cut-points of binomial group testing procedures."""
    _configure_logging()


@main.command("list")
def cmd_list():
    """List registered procedures with c and cohort-size law."""
    for proc in list_procedures():
        if proc.satisfies_m1:
            click.echo(f"{proc.name} c={proc.c:g} N(n)={proc.cohort_law}")
        else:
            click.echo(f"{proc.name} N(n)={proc.cohort_law}")


@main.command("check")
@click.argument("procedure")
def cmd_check(procedure: str):
    """Audit assumptions (M0)-(M4) and print the JSON report."""
    try:
        report = CutPointAnalyzer().audit(procedure)
        text = OutputService.to_json(report)
    except CutPointError as e:
        _fail(str(e))
    click.echo(text)
    sys.exit(EXIT_ASSUMPTIONS if report.violations else EXIT_OK)


@main.command("curve")
@click.argument("procedure")
@click.option("--n-lo", type=float, default=None, help="Left end of the n range (default: c)")
@click.option("--n-hi", type=float, default=60.0, show_default=True, help="Right end of the n range")
@click.option("--steps", type=int, default=256, show_default=True, help="Number of n samples")
@click.option("--extended", is_flag=True, help="Scan all roots per n (extended domain, one row per root)")
@click.option("--out", "out_path", type=click.Path(), required=True, help="CSV output file")
@click.option("--svg", "svg_path", type=click.Path(), default=None, help="Optional SVG plot file")
def cmd_curve(procedure: str, n_lo: Optional[float], n_hi: float, steps: int, extended: bool, out_path: str, svg_path: Optional[str]):
    """Trace n -> p_n and write it as CSV."""
    try:
        proc = get_procedure(procedure)
        engine = BifurcationEngine()
        if extended:
            points = engine.trace_extended(proc, n_lo if n_lo is not None else proc.extended_n_lo + 0.1, n_hi, steps)
        else:
            points = engine.trace_curve(proc, n_lo if n_lo is not None else proc.c, n_hi, steps).points
    except CutPointError as e:
        _fail(str(e))
    try:
        written = OutputService.write_curve_csv(points, Path(out_path))
        if svg_path:
            OutputService.write_curve_svg(points, Path(svg_path), title=proc.name)
    except OSError as e:
        _fail(f"cannot write output: {e}")
    click.echo(f"Wrote {len(points)} rows to {written} (ucp={UCP:.12g})")


@main.command("ocp")
@click.argument("procedure")
@click.option("--discrete", is_flag=True, help="Also run the integer brute-force DOCP scan")
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Also save the JSON report to this file")
@click.option("--curve-out", type=click.Path(), default=None, help="Also write the bifurcation curve CSV")
def cmd_ocp(procedure: str, discrete: bool, as_json: bool, out_path: Optional[str], curve_out: Optional[str]):
    """Compute the optimal cut-point report."""
    try:
        proc = get_procedure(procedure)
        curve_file = None
        if curve_out and proc.satisfies_m1:
            engine = BifurcationEngine()
            curve = engine.trace_curve(proc, proc.c, 60.0, 256)
            curve_file = str(OutputService.write_curve_csv(curve.points, Path(curve_out)))
        report = CutPointAnalyzer().analyze(procedure, discrete=discrete, curve_file=curve_file)
    except CutPointError as e:
        _fail(str(e))
    except OSError as e:
        _fail(f"cannot write curve: {e}")

    try:
        text = OutputService.to_json(report)
        if out_path:
            OutputService.save_report(report, Path(out_path))
    except CutPointError as e:
        _fail(str(e))
    except OSError as e:
        _fail(f"cannot write report: {e}")
    if as_json:
        click.echo(text)
    elif report.status != "ok":
        click.echo(f"{report.name}: {report.message}")
    else:
        click.echo(f"{report.name}: type {report.bifurcation_type.value}")
        click.echo(f"  COCP = {report.cocp:.12g}" + (f" at n* = {report.n_star:.12g}" if report.n_star else ""))
        achieving = f" (n = {report.docp_achieving_n})" if report.docp_achieving_n is not None else ""
        click.echo(f"  DOCP = {report.docp:.12g}{achieving} via {report.docp_method.value}")
        if report.docp_bruteforce is not None:
            click.echo(f"  DOCP brute force = {report.docp_bruteforce:.12g} (n = {report.docp_bruteforce_n})")
        click.echo(f"  UCP  = {report.ucp:.12g}")
    sys.exit(EXIT_OK if report.status == "ok" else EXIT_ASSUMPTIONS)


@main.command("simulate")
@click.argument("procedure")
@click.option("--n", "n", type=int, required=True, help="Cohort parameter")
@click.option("--p", "p", type=float, required=True, help="Prevalence")
@click.option("--trials", type=int, default=None, help="Number of trials (default: from config)")
@click.option("--seed", type=int, default=None, help="RNG seed (default: from config)")
@click.option("--chunk-size", type=int, default=None, help="Trials per chunk (default: from config)")
@click.option("--progress/--no-progress", default=False, help="Show a progress bar")
def cmd_simulate(procedure: str, n: int, p: float, trials: Optional[int], seed: Optional[int], chunk_size: Optional[int], progress: bool):
    """Monte-Carlo check of the closed-form mean."""
    simulator = ProtocolSimulator()
    try:
        cfg = ProtocolSimulator.default_config(trials=trials, seed=seed, chunk_size=chunk_size)
    except ValueError as e:
        _fail(str(e))
    try:
        if progress:
            with tqdm(total=cfg.trials, desc="Simulating", unit="trial") as pbar:
                report = simulator.report(procedure, n, p, cfg, progress=pbar.update)
        else:
            report = simulator.report(procedure, n, p, cfg)
        text = OutputService.to_json(report)
    except CutPointError as e:
        _fail(str(e))
    click.echo(text)


if __name__ == "__main__":
    main()
