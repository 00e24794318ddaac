"""Command-line entry point for batch simulations, closed forms and the self-test."""

from enum import Enum
import functools
import logging
from pathlib import Path
import time
from typing import Any, Callable, List, Optional

from pydantic import ValidationError
import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .acceptance import load_suite, run_suite
from .errors import DegeneracyBudgetExceeded, InvariantViolationError, StitError
from .export import GEOMETRY_COLUMNS, export_events, geometry_lines
from .geometry import GreatCircle, SphericalCap, UnitVec
from .great_circles import gc_closed_form, run_gc, simulate_gc
from .process import ProcessConfig, make_rng, map_replications, replicate, run
from .reporting import RunManifest, render, write_output
from .runtime import bootstrap
from .stats.capacity import CapacitySpec, capacity_exact, capacity_mc, capacity_recursion_two_caps
from .stats.estimators import correlation_estimate, full_report, gc_report
from .stats.intersection import crossing_counts, poisson_gof
from .stats.oracle import closed_form
from .tessellation import summarize

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_USAGE = 2
EXIT_DEGENERACY = 3

app = typer.Typer(
    name="stit-sphere",
    help="Spherical splitting tessellation simulator",
    add_completion=False,
)

console = Console(stderr=True)


class OutputFormat(str, Enum):
    csv = "csv"
    structured = "structured"


class Model(str, Enum):
    splitting = "splitting"
    great_circle = "great-circle"


class CapacityMethod(str, Enum):
    quadrature = "quadrature"
    mc = "mc"


SEED_OPTION = typer.Option(None, "--seed", help="64-bit unsigned master seed (default: STIT_DEFAULT_SEED)")
OUT_OPTION = typer.Option(None, "--out", "-o", help="Output file (default: standard output)")
FORMAT_OPTION = typer.Option(OutputFormat.csv, "--format", "-f", help="Output format")
JOBS_OPTION = typer.Option(None, "--jobs", "-j", min=1, help="Worker processes (default: STIT_JOBS)")
VERBOSE_OPTION = typer.Option(False, "--verbose", "-v", help="Enable verbose logging")
NO_TIMING_OPTION = typer.Option(False, "--no-timing", help="Write duration_seconds as 0.0")


class _UsageError(Exception):
    pass


def _fail(message: str, code: int) -> None:
    console.print(f"[red]Error:[/red] {message}")
    raise typer.Exit(code=code)


def guarded(command: Callable) -> Callable:
    """Map domain errors to exit codes with a one-line diagnostic."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except typer.Exit:
            raise
        except (DegeneracyBudgetExceeded, InvariantViolationError) as exc:
            _fail(str(exc), EXIT_DEGENERACY)
        except ValidationError as exc:
            first = exc.errors()[0]
            location = ".".join(str(part) for part in first.get("loc", ()))
            _fail(f"{location}: {first['msg']}" if location else first["msg"], EXIT_USAGE)
        except (_UsageError, StitError, ValueError, OSError) as exc:
            _fail(str(exc), EXIT_USAGE)

    return wrapper


def _check_t(t: float) -> None:
    if not t >= 0:
        raise _UsageError("t must be ≥ 0")


def _check_reps(reps: int) -> None:
    if reps < 2:
        raise _UsageError("reps must be ≥ 2")


def _triple(text: str, label: str) -> tuple[float, float, float]:
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise _UsageError(f"{label} must be three comma-separated numbers, got {text!r}") from exc
    if len(values) != 3:
        raise _UsageError(f"{label} must be three comma-separated numbers, got {text!r}")
    return values


class _Session:
    """Settings, seed and timing shared by one command invocation."""

    def __init__(self, command: str, seed: Optional[int], jobs: Optional[int], verbose: bool):
        self.settings = bootstrap(verbose=verbose)
        self.command = command
        self.seed = self.settings.simulation.default_seed if seed is None else seed
        if not 0 <= self.seed < 2**64:
            raise _UsageError("seed must be a 64-bit unsigned integer")
        self.jobs = jobs or self.settings.simulation.jobs
        self.started = time.perf_counter()

    def config(self, t: float, **extra) -> ProcessConfig:
        return ProcessConfig(
            t_max=t,
            seed=self.seed,
            max_rejection_iters=self.settings.simulation.max_rejection_iters,
            degeneracy_retries=self.settings.simulation.degeneracy_retries,
            **extra,
        )

    def manifest(self, parameters: dict[str, Any], no_timing: bool) -> RunManifest:
        duration = 0.0 if no_timing else time.perf_counter() - self.started
        return RunManifest(command=self.command, parameters=parameters, seed=self.seed, duration_seconds=duration)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        typer.echo(text, nl=False)
    else:
        write_output(text, out)
        console.print(f"[green]✓[/green] Written: [cyan]{out}[/cyan]")


def _quantity_table(title: str, rows: List[tuple]) -> Table:
    table = Table(title=title, show_header=True)
    table.add_column("Quantity", style="cyan")
    table.add_column("Estimate", justify="right")
    table.add_column("SE", justify="right")
    table.add_column("Oracle", justify="right")
    table.add_column("z", justify="right")
    for name, estimate, se, oracle, z in rows:
        table.add_row(
            name,
            f"{estimate:.6g}",
            f"{se:.3g}",
            "-" if oracle is None else f"{oracle:.6g}",
            "-" if z is None else f"{z:+.2f}",
        )
    return table


def _show_report(title: str, report) -> None:
    rows = [(n, q.estimate, q.standard_error, q.oracle, q.z_score) for n, q in report.quantities.items()]
    console.print(_quantity_table(title, rows))


@app.command()
@guarded
def simulate(
    t: float = typer.Option(..., "--t", help="Target time t >= 0"),
    reps: int = typer.Option(1000, "--reps", help="Number of replications"),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    fmt: OutputFormat = FORMAT_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    no_timing: bool = NO_TIMING_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """
    Simulate the splitting tessellation and compare means, typical objects
    and adjacencies with their closed forms.
    """
    _check_t(t)
    _check_reps(reps)
    session = _Session("simulate", seed, jobs, verbose)
    summaries = list(replicate(session.config(t), reps, session.jobs))
    report = full_report(summaries, session.seed)
    _show_report(f"Splitting tessellation, t={t}, {reps} replications", report)
    manifest = session.manifest({"t": t, "reps": reps}, no_timing)
    _emit(render(fmt.value, manifest, report), out)


@app.command()
@guarded
def oracle(
    t: float = typer.Option(..., "--t", help="Time t >= 0"),
    model: Model = typer.Option(Model.splitting, "--model", help="Which tessellation's closed forms"),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    fmt: OutputFormat = FORMAT_OPTION,
    no_timing: bool = NO_TIMING_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Print the closed-form means at time t."""
    _check_t(t)
    session = _Session("oracle", seed, None, verbose)
    values = closed_form(t).as_dict() if model is Model.splitting else gc_closed_form(t).as_dict()

    table = Table(title=f"Closed forms ({model.value}), t={t}", show_header=True)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    for name, value in values.items():
        table.add_row(name, f"{value:.12g}")
    console.print(table)

    manifest = session.manifest({"t": t, "model": model.value}, no_timing)
    _emit(render(fmt.value, manifest, extras=values), out)


@app.command()
@guarded
def gc(
    t: float = typer.Option(..., "--t", help="Time (circle intensity) t >= 0"),
    reps: int = typer.Option(1000, "--reps", help="Number of replications"),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    fmt: OutputFormat = FORMAT_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    no_timing: bool = NO_TIMING_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Simulate the Poisson great-circle tessellation against its closed forms."""
    _check_t(t)
    _check_reps(reps)
    session = _Session("gc", seed, jobs, verbose)
    summaries = list(map_replications(summarize, session.config(t), reps, session.jobs, simulate=simulate_gc))
    report = gc_report(summaries, session.seed)
    _show_report(f"Great-circle tessellation, t={t}, {reps} replications", report)
    manifest = session.manifest({"t": t, "reps": reps}, no_timing)
    _emit(render(fmt.value, manifest, report), out)


@app.command()
@guarded
def capacity(
    t: float = typer.Option(..., "--t", help="Target time t >= 0"),
    caps: List[str] = typer.Option(
        ..., "--cap", help="Cap as 'colatitude,longitude,theta' in radians; give once or twice"
    ),
    reps: int = typer.Option(10000, "--reps", help="Number of replications"),
    method: CapacityMethod = typer.Option(
        CapacityMethod.quadrature, "--method", help="How the two-cap rates are integrated"
    ),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    fmt: OutputFormat = FORMAT_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    no_timing: bool = NO_TIMING_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Estimate the probability that the tessellation misses one or two caps."""
    _check_t(t)
    _check_reps(reps)
    if len(caps) not in (1, 2):
        raise _UsageError("give --cap once or twice")
    session = _Session("capacity", seed, jobs, verbose)
    spec = CapacitySpec(caps=[SphericalCap.at(*_triple(c, "--cap")) for c in caps])
    estimate, se = capacity_mc(
        spec, t, reps, session.seed, session.jobs, session.settings.simulation.max_rejection_iters
    )
    if spec.size == 1:
        exact = capacity_exact(spec, t)
    else:
        exact = capacity_recursion_two_caps(spec, t, method.value, seed=session.seed)
    z = 0.0 if estimate == exact else ((estimate - exact) / se if se > 0 else float("inf"))
    extras = {"estimate": estimate, "standard_error": se, "exact": exact, "z_score": z, "caps": spec.size}

    console.print(_quantity_table(f"Miss probability, t={t}", [("P(miss)", estimate, se, exact, z)]))
    parameters = {"t": t, "reps": reps, "caps": list(caps), "method": method.value}
    _emit(render(fmt.value, session.manifest(parameters, no_timing), extras=extras), out)


@app.command()
@guarded
def intersect(
    t: float = typer.Option(..., "--t", help="Target time t >= 0"),
    reps: int = typer.Option(10000, "--reps", help="Number of replications"),
    normal: str = typer.Option("1,0,0", "--normal", help="Normal 'x,y,z' of the test circle (not the equator)"),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    fmt: OutputFormat = FORMAT_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    no_timing: bool = NO_TIMING_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Test that crossings with a fixed circle are Poisson(t) in each open hemisphere."""
    _check_t(t)
    _check_reps(reps)
    session = _Session("intersect", seed, jobs, verbose)
    circle = GreatCircle(UnitVec.of(_triple(normal, "--normal")))
    counts = crossing_counts(t, circle, reps, session.seed, session.jobs)
    extras: dict[str, Any] = {
        "upper_mean": float(counts[:, 0].mean()),
        "lower_mean": float(counts[:, 1].mean()),
        "equator_pair_rate": float((counts[:, 2] == 2).mean()),
    }
    if t > 0:
        for label, column in (("upper", 0), ("lower", 1)):
            fit = poisson_gof(counts[:, column], t)
            extras[f"{label}_chi2"] = fit.statistic
            extras[f"{label}_p_value"] = fit.p_value
        r, se = correlation_estimate(counts[:, 0], counts[:, 1])
        extras.update(correlation=r, correlation_se=se)

    table = Table(title=f"Crossings with circle {normal}, t={t}", show_header=True)
    table.add_column("Key", style="cyan")
    table.add_column("Value", justify="right")
    for key, value in extras.items():
        table.add_row(key, f"{value:.6g}")
    console.print(table)

    parameters = {"t": t, "reps": reps, "normal": normal}
    _emit(render(fmt.value, session.manifest(parameters, no_timing), extras=extras), out)


@app.command()
@guarded
def export(
    t: float = typer.Option(..., "--t", help="Target time t >= 0"),
    model: Model = typer.Option(Model.splitting, "--model", help="Which tessellation to simulate"),
    events: Optional[Path] = typer.Option(None, "--events", help="Also write the event log here"),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    fmt: OutputFormat = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Write one realization's edges (and optionally its event log)."""
    _check_t(t)
    session = _Session("export", seed, None, verbose)
    if model is Model.splitting:
        tess = run(session.config(t, record_events=events is not None))
    else:
        if events is not None:
            raise _UsageError("event logs exist only for the splitting model")
        tess = run_gc(t, make_rng(session.seed), session.settings.simulation.degeneracy_retries).tessellation
    lines = geometry_lines(tess, model.value)
    if fmt is OutputFormat.csv:
        lines.insert(1, f"# seed={session.seed} version={__version__}")
        _emit("\n".join(lines) + "\n", out)
    else:
        edges = [dict(zip(GEOMETRY_COLUMNS, line.split())) for line in lines[2:]]
        extras = {"model": model.value, "header": lines[0], "edges": edges}
        _emit(render(fmt.value, session.manifest({"t": t, "model": model.value}, True), extras=extras), out)
    if events is not None:
        export_events(tess, events)
        console.print(f"[green]✓[/green] Event log: [cyan]{events}[/cyan]")


@app.command()
@guarded
def selftest(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Suite YAML (default: the suite shipped with the package)"),
    scale: float = typer.Option(1.0, "--scale", min=0.0, help="Multiply every replication count"),
    checks: Optional[List[str]] = typer.Option(None, "--check", help="Run only the named checks"),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    fmt: OutputFormat = FORMAT_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    no_timing: bool = NO_TIMING_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Run the acceptance suite; exits 1 when any check fails."""
    suite = load_suite(config)
    session = _Session("selftest", suite.seed if seed is None else seed, jobs, verbose)
    result = run_suite(suite, session.seed, session.jobs, scale, checks or None)

    table = Table(title="Self-test", show_header=True)
    table.add_column("Check", style="cyan")
    table.add_column("Kind")
    table.add_column("max |z|", justify="right")
    table.add_column("Result")
    for check in result.checks:
        table.add_row(
            check.name,
            check.kind,
            f"{check.max_abs_z:.2f}",
            "[green]ok[/green]" if check.passed else "[red]FAILED[/red]",
        )
    console.print(table)

    extras = {"passed": result.passed, "checks": [c.model_dump() for c in result.checks]}
    if fmt is OutputFormat.csv:
        extras = {f"{c.name}.passed": c.passed for c in result.checks} | {
            f"{c.name}.max_abs_z": c.max_abs_z for c in result.checks
        } | {"passed": result.passed}
    parameters = {"config": str(config) if config else "default", "scale": scale, "checks": checks or []}
    _emit(render(fmt.value, session.manifest(parameters, no_timing), extras=extras), out)

    if not result.passed:
        console.print(
            Panel.fit(f"[bold red]Failed:[/bold red] {', '.join(result.failed())}", border_style="red")
        )
        raise typer.Exit(code=EXIT_SELFTEST_FAILED)
    console.print(Panel.fit("[bold green]All checks passed[/bold green]", border_style="green"))


@app.command()
def version():
    """Display version information."""
    console.print(
        Panel.fit(
            "[bold cyan]Spherical splitting tessellation simulator[/bold cyan]\n"
            f"Version: {__version__}",
            border_style="cyan",
        )
    )


def main():
    """
    Main entry point for the CLI.
    """
    app()


if __name__ == "__main__":
    main()
