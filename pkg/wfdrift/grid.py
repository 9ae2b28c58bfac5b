"""
Uniform finite-volume grid on [0, 1], the degenerate coefficients
D(x) = x(1 - x) and b(x) = 1 - 2x, and the discrete solution state.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from wfdrift.config import Config
from wfdrift.errors import InvalidGridError, NumericalError

logger = logging.getLogger(__name__)


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class Grid:
    """Nodes x_i = i h, half-nodes x_{i+1/2} = (i + 1/2) h, h = 1/M.

    D and D_half are built from integer products i (M - i) so that the
    mirror relation D_i = D_{M-i} holds bitwise.
    """

    M: int
    h: float
    x: np.ndarray
    D: np.ndarray
    x_half: np.ndarray
    D_half: np.ndarray
    b_half: np.ndarray
    weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.M + 1


@dataclass(frozen=True, eq=False)
class State:
    f: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "f", _frozen(self.f))

    def mirrored(self) -> "State":
        return State(self.f[::-1], self.t)


class InitialCondition(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: float = Field(gt=0.0, lt=1.0)
    sigma: float = Field(default=Config.InitialState.SIGMA, gt=0.0)
    renormalize: bool = Config.InitialState.RENORMALIZE


def build_grid(M: int) -> Grid:
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)):
        raise InvalidGridError(f"Cell count must be an integer, got {M!r}")
    M = int(M)
    if M < Config.Grid.MIN_CELLS:
        raise InvalidGridError(
            f"Cell count must be at least {Config.Grid.MIN_CELLS}, got {M}"
        )

    idx = np.arange(M + 1)
    half = np.arange(M)
    h = 1.0 / M

    weights = np.full(M + 1, h)
    weights[0] = weights[-1] = 0.5 * h

    return Grid(
        M=M,
        h=h,
        x=_frozen(idx / M),
        D=_frozen((idx * (M - idx)) / float(M * M)),
        x_half=_frozen((2 * half + 1) / (2.0 * M)),
        D_half=_frozen(((2 * half + 1) * (2 * M - 2 * half - 1)) / (4.0 * M * M)),
        b_half=_frozen((M - 2 * half - 1) / float(M)),
        weights=_frozen(weights),
    )


def gaussian_initial(grid: Grid, ic: InitialCondition) -> State:
    """Normal density N(p, sigma^2) sampled at the nodes, truncated to [0, 1]."""
    # (i - pM)/M keeps the offsets exactly antisymmetric about p = 1/2
    offsets = (np.arange(grid.M + 1) - ic.p * grid.M) / grid.M
    f = np.exp(-(offsets**2) / (2.0 * ic.sigma**2)) / (ic.sigma * math.sqrt(2.0 * math.pi))

    if ic.renormalize:
        mass = float(grid.weights @ f)
        if not (math.isfinite(mass) and mass > 0.0):
            raise NumericalError(
                f"Initial Gaussian has no resolvable mass on M={grid.M} "
                f"(p={ic.p}, sigma={ic.sigma})"
            )
        logger.debug("Renormalizing initial mass %.17g to 1", mass)
        f = f / mass

    return State(f, 0.0)


def state_from_values(grid: Grid, values, t: float = 0.0) -> State:
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (grid.size,):
        raise ValueError(
            f"Expected {grid.size} nodal values for M={grid.M}, got shape {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError("Nodal values must be finite")
    return State(values, t)
