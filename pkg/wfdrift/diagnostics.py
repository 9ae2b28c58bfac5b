"""
Discrete conservation functionals and steady-state boundary weights.

P_n = (h/2) f_0 + h sum_{0<i<M} f_i + (h/2) f_M
E_n = same weights applied to x_i f_i

Interior norm ||v||_h = (h sum_{0<i<M} v_i^2)^{1/2} with v_i = D_i f_i.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from wfdrift.grid import Grid, State

logger = logging.getLogger(__name__)

COLUMNS = ("t", "P", "E", "interior_mass", "v_norm", "f0", "fM")

Density = Union[State, np.ndarray]


def _values(grid: Grid, state: Density) -> np.ndarray:
    f = state.f if isinstance(state, State) else np.asarray(state, dtype=np.float64)
    if f.shape != (grid.size,):
        raise ValueError(f"Expected {grid.size} nodal values, got shape {f.shape}")
    return f


def discrete_probability(grid: Grid, state: Density) -> float:
    return float(grid.weights @ _values(grid, state))


def discrete_expectation(grid: Grid, state: Density) -> float:
    return float((grid.weights * grid.x) @ _values(grid, state))


def interior_mass(grid: Grid, state: Density) -> float:
    return float(grid.h * np.sum(_values(grid, state)[1:-1]))


def v_norm(grid: Grid, state: Density) -> float:
    v = (grid.D * _values(grid, state))[1:-1]
    return math.sqrt(grid.h * float(v @ v))


def half_masses(grid: Grid, state: Density) -> Tuple[float, float]:
    """Discrete mass on [0, 1/2) and (1/2, 1]; a node at exactly 1/2 is split evenly."""
    weighted = grid.weights * _values(grid, state)
    twice = np.arange(grid.size) * 2
    left = float(np.sum(weighted[twice < grid.M]))
    right = float(np.sum(weighted[twice > grid.M]))
    if grid.M % 2 == 0:
        middle = 0.5 * float(weighted[grid.M // 2])
        left += middle
        right += middle
    return left, right


@dataclass
class DiagnosticsTrace:
    t: List[float] = field(default_factory=list)
    P: List[float] = field(default_factory=list)
    E: List[float] = field(default_factory=list)
    interior_mass: List[float] = field(default_factory=list)
    v_norm: List[float] = field(default_factory=list)
    f0: List[float] = field(default_factory=list)
    fM: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def record(self, grid: Grid, state: State):
        if self.t and state.t <= self.t[-1]:
            raise ValueError(f"Trace time must increase: {state.t} after {self.t[-1]}")
        self.t.append(float(state.t))
        self.P.append(discrete_probability(grid, state))
        self.E.append(discrete_expectation(grid, state))
        self.interior_mass.append(interior_mass(grid, state))
        self.v_norm.append(v_norm(grid, state))
        self.f0.append(float(state.f[0]))
        self.fM.append(float(state.f[-1]))

    def column(self, name: str) -> np.ndarray:
        if name not in COLUMNS:
            raise KeyError(name)
        return np.asarray(getattr(self, name))

    def as_array(self) -> np.ndarray:
        if not self.t:
            return np.empty((0, len(COLUMNS)))
        return np.column_stack([self.column(name) for name in COLUMNS])

    def max_drift(self, name: str) -> float:
        """max_n |q_n - q_0| for a recorded quantity."""
        values = self.column(name)
        return float(np.max(np.abs(values - values[0]))) if values.size else 0.0


@dataclass(frozen=True)
class SteadyStateReport:
    w0: float
    w1: float
    interior_mass: float
    predicted_w0: float
    predicted_w1: float
    deviation_w0: float
    deviation_w1: float
    left_mass: float
    right_mass: float

    def as_dict(self) -> dict:
        return asdict(self)


def steady_report(grid: Grid, trajectory, P0: float, E0: float) -> SteadyStateReport:
    """Terminal boundary weights against the limits (P0 - E0, E0).

    `trajectory` is anything with a `terminal` state, or a State.
    """
    terminal = trajectory if isinstance(trajectory, State) else trajectory.terminal
    f = _values(grid, terminal)
    w0 = 0.5 * grid.h * float(f[0])
    w1 = 0.5 * grid.h * float(f[-1])
    left, right = half_masses(grid, terminal)
    report = SteadyStateReport(
        w0=w0,
        w1=w1,
        interior_mass=interior_mass(grid, terminal),
        predicted_w0=P0 - E0,
        predicted_w1=E0,
        deviation_w0=abs(w0 - (P0 - E0)),
        deviation_w1=abs(w1 - E0),
        left_mass=left,
        right_mass=right,
    )
    logger.debug("Steady report: %s", report)
    return report


def time_to_expectation_band(trace: DiagnosticsTrace, band: float = 0.05) -> Optional[float]:
    """First recorded time with |E - 1/2| < band, None if never reached."""
    E = trace.column("E")
    hits = np.flatnonzero(np.abs(E - 0.5) < band)
    return float(trace.t[hits[0]]) if hits.size else None


def smallest_eigenvalue(grid: Grid) -> float:
    """lambda_0 = (4/h^2) sin^2(pi/(2M)), the smallest eigenvalue of the discrete Laplacian."""
    return 4.0 / grid.h**2 * math.sin(math.pi / (2 * grid.M)) ** 2


def eigenvalue_decay_factor(grid: Grid, tau: float) -> float:
    return 1.0 / (1.0 + tau * smallest_eigenvalue(grid) / 2.0)


def guaranteed_decay_factor(tau: float) -> float:
    """Per-step bound on ||v^{n+1}||^2 / ||v^n||^2 for central-whole.

    Follows from (D w, K w)_h >= ||w||_h^2 for the discrete Laplacian K;
    attained up to 1/(1 + 2 tau)^2 by f = const in the interior.
    """
    return 1.0 / (1.0 + tau) ** 2


def interior_mass_bound(grid: Grid, t, initial_mass: float):
    """e^{-pi^2 t/4} / (4h(1 - h)) times the initial interior mass."""
    decay = np.exp(-(math.pi**2) * np.asarray(t) / 4.0)
    return decay / (4.0 * grid.h * (1.0 - grid.h)) * initial_mass


def energy_ratios(trace: DiagnosticsTrace) -> np.ndarray:
    """||v||^2 ratios between consecutive records."""
    norms = trace.column("v_norm") ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return norms[1:] / norms[:-1]
