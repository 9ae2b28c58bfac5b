import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from wfdrift import operator_cache
from wfdrift.config import Config
from wfdrift.diagnostics import DiagnosticsTrace
from wfdrift.errors import NumericalError
from wfdrift.grid import Grid, InitialCondition, State, gaussian_initial
from wfdrift.linear_solver import solve_dense, solve_tridiagonal
from wfdrift.schemes import SchemeKind, SchemeOperator

logger = logging.getLogger(__name__)

# relative slack when comparing step times against requested times
TIME_SLACK = 1e-9


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: SchemeKind = SchemeKind.CENTRAL_WHOLE
    M: int = Field(gt=0)
    tau: float = Field(gt=0.0, allow_inf_nan=False)
    t_end: float = Field(ge=0.0, allow_inf_nan=False)
    ic: InitialCondition
    snapshot_times: Tuple[float, ...] = ()
    steady_tol: Optional[float] = Field(default=None, gt=0.0)
    stride: int = Field(default=Config.Integrator.DIAGNOSTICS_STRIDE, ge=1)

    @model_validator(mode="after")
    def check_snapshots(self) -> "RunConfig":
        times = self.snapshot_times
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("Snapshot times must be sorted")
        if any(t < 0 or t > self.t_end for t in times):
            raise ValueError(f"Snapshot times must lie in [0, {self.t_end}]")
        return self

    @property
    def n_steps(self) -> int:
        if self.t_end == 0:
            return 0
        return math.ceil(self.t_end / self.tau - TIME_SLACK)

    @property
    def requested_snapshots(self) -> Tuple[float, ...]:
        return self.snapshot_times or (self.t_end,)


@dataclass
class Trajectory:
    config: RunConfig
    grid: Grid
    initial: State
    terminal: State
    snapshots: List[Tuple[float, State]] = field(default_factory=list)
    diagnostics: DiagnosticsTrace = field(default_factory=DiagnosticsTrace)
    steps_taken: int = 0
    converged: bool = False
    wall_time: float = 0.0


def _solve(op: SchemeOperator, rhs: np.ndarray) -> np.ndarray:
    system = op.system(rhs)
    if op.pivot_free:
        return solve_tridiagonal(system)
    return solve_dense(system.to_dense(), rhs)


def step(state: State, op: SchemeOperator, grid: Grid, t: Optional[float] = None) -> State:
    """One backward Euler step. `t` overrides the new time (defaults to state.t + tau)."""
    f = state.f
    if f.shape != (grid.size,) or op.M != grid.M:
        raise ValueError(
            f"State of size {f.shape[0]} does not match M={grid.M} (operator M={op.M})"
        )

    rhs = f / op.tau
    if op.decoupled:
        interior = _solve(op, rhs[1:-1])
        new = np.empty_like(f)
        new[1:-1] = interior
        new[0] = f[0] + op.left_gain * interior[0]
        new[-1] = f[-1] + op.right_gain * interior[-1]
    else:
        new = _solve(op, rhs)
    if not np.all(np.isfinite(new)):
        raise NumericalError(f"Non-finite density after step from t={state.t:g}")

    return State(new, state.t + op.tau if t is None else t)


def run(
    cfg: RunConfig, initial: Optional[State] = None, progress: bool = False
) -> Trajectory:
    started = time.perf_counter()
    grid = operator_cache.get_grid(cfg.M)
    op = operator_cache.get_operator(cfg.scheme, cfg.M, cfg.tau)
    state = initial if initial is not None else gaussian_initial(grid, cfg.ic)
    if not np.all(np.isfinite(state.f)):
        raise NumericalError("Initial density must be finite")
    start = state
    t0 = state.t

    pending = list(cfg.requested_snapshots)
    snapshots: List[Tuple[float, State]] = []
    slack = TIME_SLACK * cfg.tau

    def serve(current: State):
        while pending and current.t - t0 >= pending[0] - slack:
            snapshots.append((pending.pop(0), current))

    trace = DiagnosticsTrace()
    trace.record(grid, state)
    serve(state)

    n_steps = cfg.n_steps
    logger.info(
        "Running %s: M=%d tau=%g t_end=%g (%d steps)",
        cfg.scheme.value,
        cfg.M,
        cfg.tau,
        cfg.t_end,
        n_steps,
    )

    converged = False
    taken = 0
    for n in tqdm(range(1, n_steps + 1), disable=not progress, desc=cfg.scheme.value):
        new = step(state, op, grid, t=t0 + n * cfg.tau)
        change = float(np.max(np.abs(new.f - state.f))) / cfg.tau
        state = new
        taken = n
        converged = cfg.steady_tol is not None and change < cfg.steady_tol

        if n % cfg.stride == 0 or n == n_steps or converged:
            trace.record(grid, state)
        serve(state)
        if converged:
            logger.info("Steady state reached at t=%g (max|df|/tau=%.3e)", state.t, change)
            break

    if pending:
        logger.debug("Serving %d remaining snapshots from the terminal state", len(pending))
        snapshots.extend((t, state) for t in pending)

    elapsed = time.perf_counter() - started
    logger.debug("Run finished after %d steps in %.3fs", taken, elapsed)
    return Trajectory(
        config=cfg,
        grid=grid,
        initial=start,
        terminal=state,
        snapshots=snapshots,
        diagnostics=trace,
        steps_taken=taken,
        converged=converged,
        wall_time=elapsed,
    )


def run_many(
    configs: Iterable[RunConfig], workers: int = Config.Integrator.WORKERS
) -> List[Trajectory]:
    """Independent runs, results in input order."""
    configs = list(configs)
    if workers <= 1 or len(configs) <= 1:
        return [run(cfg) for cfg in configs]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run, configs))
