import logging
from pathlib import Path
from typing import Optional, Sequence

import click
import numpy as np

from wfdrift.config import Config
from wfdrift.diagnostics import discrete_expectation, discrete_probability, steady_report
from wfdrift.errors import NumericalError
from wfdrift.grid import InitialCondition, build_grid
from wfdrift.integrator import RunConfig, run, run_many
from wfdrift.schemes import SchemeKind, identity_deviations
from wfdrift.viscosity import (
    TEST_FUNCTIONS,
    limit_pairing,
    make_profile,
    pair_with_test_function,
    sample_profile,
)
from wfdrift.wf_oracle import ChainConfig, fixation_probability, one_step_moments
from wfdrift.writer import (
    format_value,
    prepare_output_dir,
    write_csv,
    write_diagnostics,
    write_snapshots,
    write_summary,
)

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


class FloatList(click.ParamType):
    name = "floats"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return tuple(float(v) for v in value)
        try:
            return tuple(float(part) for part in str(value).split(",") if part.strip())
        except ValueError:
            self.fail(f"{value!r} is not a comma-separated list of numbers", param, ctx)


FLOATS = FloatList()

out_dir_option = click.option(
    "--out-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Output directory (default: $WFDRIFT_OUTPUT_DIR or ./runs).",
)
clean_option = click.option(
    "--clean", is_flag=True, help="Remove the output directory before writing."
)
workers_option = click.option(
    "--workers",
    type=click.IntRange(min=1),
    default=Config.Integrator.WORKERS,
    show_default=True,
    help="Worker threads.",
)


def _echo_summary(summary: dict):
    for key, value in summary.items():
        click.echo(f"{key}={format_value(value)}")


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
def cli(verbose: bool):
    """Finite-volume solvers for the Wright-Fisher drift equation."""
    logging.basicConfig(
        level=logging.DEBUG if verbose or Config.DEBUG else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@click.option(
    "--scheme",
    type=click.Choice([kind.value for kind in SchemeKind]),
    default=SchemeKind.CENTRAL_WHOLE.value,
    show_default=True,
)
@click.option(
    "--cells", "M", type=int, default=1000, show_default=True, help="Cell count M (h = 1/M)."
)
@click.option("--tau", type=float, default=1e-4, show_default=True, help="Time step.")
@click.option("--t-end", type=float, default=6.0, show_default=True)
@click.option(
    "--p", type=float, default=0.4, show_default=True, help="Mean of the initial Gaussian."
)
@click.option("--sigma", type=float, default=Config.InitialState.SIGMA, show_default=True)
@click.option("--snapshots", type=FLOATS, default=None, help="Snapshot times, e.g. 0.01,0.05,1.")
@out_dir_option
@clean_option
@click.option("--renormalize", is_flag=True, help="Scale the initial data to unit discrete mass.")
@click.option(
    "--steady-tol",
    type=float,
    default=None,
    is_flag=False,
    flag_value=Config.Integrator.STEADY_TOL,
    help="Stop once max|df|/tau falls below this (bare flag: 1e-12).",
)
@click.option("--stride", type=click.IntRange(min=1), default=Config.Integrator.DIAGNOSTICS_STRIDE)
@click.option("--progress", is_flag=True, help="Show a progress bar.")
@click.option("--seed-unused", type=int, default=None, hidden=True)
def solve(
    scheme,
    M,
    tau,
    t_end,
    p,
    sigma,
    snapshots,
    out_dir,
    clean,
    renormalize,
    steady_tol,
    stride,
    progress,
    seed_unused,
):
    """Integrate the drift equation from a Gaussian initial state."""
    if seed_unused is not None:
        logger.debug("Ignoring --seed-unused=%d; solve runs are deterministic", seed_unused)

    cfg = RunConfig(
        scheme=scheme,
        M=M,
        tau=tau,
        t_end=t_end,
        ic=InitialCondition(p=p, sigma=sigma, renormalize=renormalize),
        snapshot_times=snapshots or (),
        steady_tol=steady_tol,
        stride=stride,
    )
    out = prepare_output_dir(out_dir, remove_old_files=clean)
    trajectory = run(cfg, progress=progress)
    grid = trajectory.grid

    P0 = discrete_probability(grid, trajectory.initial)
    E0 = discrete_expectation(grid, trajectory.initial)
    report = steady_report(grid, trajectory, P0, E0)

    write_snapshots(out, grid, trajectory.snapshots)
    write_diagnostics(out, trajectory.diagnostics)

    trace = trajectory.diagnostics
    summary = {
        "scheme": cfg.scheme.value,
        "M": cfg.M,
        "tau": cfg.tau,
        "t_end": cfg.t_end,
        "p": p,
        "sigma": sigma,
        "renormalize": renormalize,
        "P_0": P0,
        "E_0": E0,
        "P_end": discrete_probability(grid, trajectory.terminal),
        "E_end": discrete_expectation(grid, trajectory.terminal),
        "max_P_drift": trace.max_drift("P"),
        "max_E_drift": trace.max_drift("E"),
        "w0": report.w0,
        "w1": report.w1,
        "interior_mass": report.interior_mass,
        "deviation_w0": report.deviation_w0,
        "deviation_w1": report.deviation_w1,
        "left_mass": report.left_mass,
        "right_mass": report.right_mass,
        "steps": trajectory.steps_taken,
        "t_final": trajectory.terminal.t,
        "converged": trajectory.converged,
        "snapshots": len(trajectory.snapshots),
        # requested time of each snapshot_k.csv, then the time of the state written
        "snapshot_times": ",".join(format_value(t) for t, _ in trajectory.snapshots),
        "snapshot_state_times": ",".join(
            format_value(state.t) for _, state in trajectory.snapshots
        ),
        "wall_time": trajectory.wall_time,
    }
    write_summary(out / "summary.txt", summary)
    click.echo(f"w0={format_value(report.w0)}")
    click.echo(f"w1={format_value(report.w1)}")
    logger.info("Wrote %d snapshots and diagnostics to %s", len(trajectory.snapshots), out)


@cli.command()
@click.option(
    "--cells",
    "cells",
    type=click.IntRange(min=Config.Grid.MIN_CELLS),
    multiple=True,
    default=(5, 8, 17, 100),
    show_default=True,
)
@click.option("--samples", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
def compare(cells, samples, seed, out_dir):
    """Check the viscosity decompositions of the three flux operators."""
    rng = np.random.default_rng(seed)
    rows = []
    for M in cells:
        grid = build_grid(M)
        second = first = 0.0
        for _ in range(samples):
            f = rng.random(grid.size)
            d2, d1 = identity_deviations(grid, f)
            second, first = max(second, d2), max(first, d1)
        rows.append((M, samples, second, first))

    header = ("cells", "samples", "split_minus_whole", "upwind_minus_split")
    click.echo(",".join(header))
    for row in rows:
        click.echo(",".join(format_value(v) for v in row))
    if out_dir is not None:
        write_csv(prepare_output_dir(out_dir) / "compare.csv", header, rows)

    worst = max(max(row[2], row[3]) for row in rows)
    if worst > Config.IDENTITY_TOLERANCE:
        raise NumericalError(
            f"Operator identity deviation {worst:.3e} exceeds {Config.IDENTITY_TOLERANCE:g}"
        )


@cli.command()
@click.option(
    "--epsilons",
    type=FLOATS,
    default=",".join(str(e) for e in Config.Viscosity.EPSILONS),
    show_default=True,
)
@click.option(
    "--profile-points",
    type=click.IntRange(min=2),
    default=Config.Viscosity.PROFILE_POINTS,
    show_default=True,
)
@click.option(
    "--test-function",
    type=click.Choice(list(TEST_FUNCTIONS)),
    default="bump0",
    show_default=True,
)
@out_dir_option
@clean_option
def viscosity(epsilons, profile_points, test_function, out_dir, clean):
    """Regularized steady profiles and their pairing with a test function."""
    out = prepare_output_dir(out_dir, remove_old_files=clean)
    rows = []
    for k, eps in enumerate(epsilons):
        profile = make_profile(eps)
        x, f = sample_profile(profile, profile_points)
        write_csv(out / f"profile_{k:03d}.csv", ("x", "f"), np.column_stack([x, f]))
        rows.append((eps, pair_with_test_function(profile, test_function)))

    write_csv(out / "pairing.csv", ("epsilon", "pairing"), rows)
    click.echo("epsilon,pairing")
    for eps, value in rows:
        click.echo(f"{format_value(eps)},{format_value(value)}")
    click.echo(f"limit={format_value(limit_pairing(test_function))}")


@cli.command()
@click.option("--pop-size", "N", type=click.IntRange(min=2), default=100, show_default=True)
@click.option("--p", type=float, default=0.4, show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=100_000, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option(
    "--max-generations",
    type=click.IntRange(min=1),
    default=Config.Oracle.MAX_GENERATIONS,
    show_default=True,
)
@click.option(
    "--moment-draws",
    type=click.IntRange(min=2),
    default=Config.Oracle.MOMENT_DRAWS,
    show_default=True,
)
@workers_option
@out_dir_option
@clean_option
def oracle(N, p, trials, seed, max_generations, moment_draws, workers, out_dir, clean):
    """Monte Carlo Wright-Fisher chain: fixation fractions and one-step moments."""
    cfg = ChainConfig(N=N, p=p, trials=trials, max_generations=max_generations, rng_seed=seed)
    result = fixation_probability(cfg, workers=workers)
    moments = one_step_moments(N, cfg.start, draws=moment_draws, seed=seed)

    out = prepare_output_dir(out_dir, remove_old_files=clean)
    summary = {
        "N": N,
        "p": p,
        "initial_count": cfg.start,
        "trials": trials,
        "seed": seed,
        "fixed": result.fixed,
        "lost": result.lost,
        "unresolved": result.unresolved,
        "fixed_stderr": result.standard_error,
        "martingale_ok": all(r.within_bound for r in result.martingale),
        "moment_mean": moments.sample_mean,
        "moment_var": moments.sample_var,
        "expected_mean": moments.expected_mean,
        "expected_var": moments.expected_var,
        "mean_ok": moments.mean_ok,
        "var_ok": moments.var_ok,
    }
    write_summary(out / "oracle.txt", summary)
    write_csv(
        out / "martingale.csv",
        ("generation", "mean", "std", "within_bound"),
        [(r.generation, r.mean, r.std, float(r.within_bound)) for r in result.martingale],
    )
    _echo_summary(summary)


@cli.command()
@click.option("--vary", type=click.Choice(["cells", "tau"]), required=True)
@click.option("--values", type=FLOATS, default=None, help="Cell counts or time steps to run.")
@click.option("--p", type=float, default=0.4, show_default=True)
@click.option("--sigma", type=float, default=Config.InitialState.SIGMA, show_default=True)
@click.option("--t-end", type=float, default=6.0, show_default=True)
@click.option(
    "--cells", "M", type=int, default=1000, show_default=True, help="M when varying tau."
)
@click.option("--tau", type=float, default=1e-4, show_default=True, help="tau when varying cells.")
@workers_option
@out_dir_option
def table(vary, values, p, sigma, t_end, M, tau, workers, out_dir):
    """Boundary weights of central-whole across grids or time steps."""
    ic = InitialCondition(p=p, sigma=sigma)
    if vary == "cells":
        values = values or (100.0, 1000.0)
        if any(v != int(v) for v in values):
            raise click.BadParameter("cell counts must be integers", param_hint="--values")
        configs = [RunConfig(M=int(v), tau=tau, t_end=t_end, ic=ic) for v in values]
    else:
        values = values or (0.1, 0.01, 0.001, 0.0001)
        configs = [RunConfig(M=M, tau=v, t_end=t_end, ic=ic) for v in values]

    rows = []
    for value, trajectory in zip(values, run_many(configs, workers=workers)):
        grid = trajectory.grid
        f0, fM = trajectory.terminal.f[0], trajectory.terminal.f[-1]
        rows.append((value, f0, fM, 0.5 * grid.h * f0, 0.5 * grid.h * fM))

    header = ("param", "f0", "fM", "w0", "w1")
    click.echo(",".join(header))
    for row in rows:
        click.echo(",".join(format_value(float(v)) for v in row))
    if out_dir is not None:
        write_csv(prepare_output_dir(out_dir) / f"table_{vary}.csv", header, rows)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cli.main(
            args=list(argv) if argv is not None else None,
            prog_name="wfdrift",
            standalone_mode=False,
        )
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except NumericalError as e:
        click.echo(f"wfdrift: numerical failure: {e}", err=True)
        return EXIT_NUMERICAL
    except ValueError as e:
        click.echo(f"wfdrift: invalid input: {e}", err=True)
        return EXIT_USAGE
    except OSError as e:
        click.echo(f"wfdrift: I/O failure: {e}", err=True)
        return EXIT_IO
    return 0
