"""
Finite-volume discretizations of the drift flux j = -d/dx (x(1-x) f).

Three half-node fluxes are provided:

- upwind:        -D_{i+1/2} (f_{i+1} - f_i)/h + c_{i+1/2} f_upwind
- central-split: -D_{i+1/2} (f_{i+1} - f_i)/h + c_{i+1/2} (f_{i+1} + f_i)/2
- central-whole: -(D_{i+1} f_{i+1} - D_i f_i)/h

with the convection velocity c = 2x - 1 = -b. The implicit Euler step is
(f^{n+1} - f^n)/tau + L f^{n+1} = 0, where L is the flux difference over the
control volumes (half cells of width h/2 at x = 0 and x = 1, zero flux
through the walls).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from wfdrift.grid import Grid
from wfdrift.linear_solver import TridiagonalSystem, safe_without_pivoting

logger = logging.getLogger(__name__)


class SchemeKind(str, Enum):
    UPWIND = "upwind"
    CENTRAL_SPLIT = "central-split"
    CENTRAL_WHOLE = "central-whole"


def _as_density(grid: Grid, f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (grid.size,):
        raise ValueError(f"Expected a vector of {grid.size} values, got shape {f.shape}")
    return f


def flux_vector(scheme: SchemeKind, grid: Grid, f) -> np.ndarray:
    """All half-node fluxes j_{i+1/2}, i = 0..M-1."""
    scheme = SchemeKind(scheme)
    f = _as_density(grid, f)
    left, right = f[:-1], f[1:]

    if scheme is SchemeKind.CENTRAL_WHOLE:
        return -(grid.D[1:] * right - grid.D[:-1] * left) / grid.h

    diffusion = -grid.D_half * (right - left) / grid.h
    velocity = -grid.b_half
    if scheme is SchemeKind.UPWIND:
        # velocity == 0 takes the f_i branch; the term vanishes either way
        return diffusion + velocity * np.where(velocity < 0, right, left)
    return diffusion + velocity * 0.5 * (right + left)


def half_node_flux(scheme: SchemeKind, grid: Grid, f, i: int) -> float:
    if not 0 <= i <= grid.M - 1:
        raise IndexError(f"Half-node index {i} outside 0..{grid.M - 1}")
    return float(flux_vector(scheme, grid, f)[i])


def spatial_operator(scheme: SchemeKind, grid: Grid, f) -> np.ndarray:
    """Flux difference per unit control-volume width at every node."""
    j = flux_vector(scheme, grid, f)
    out = np.empty(grid.size)
    out[1:-1] = (j[1:] - j[:-1]) / grid.h
    out[0] = j[0] / (0.5 * grid.h)
    out[-1] = -j[-1] / (0.5 * grid.h)
    return out


def lambda_residual(grid: Grid, f) -> np.ndarray:
    """Second-order viscosity separating central-split from central-whole."""
    f = _as_density(grid, f)
    return -0.25 * (f[2:] - 2.0 * f[1:-1] + f[:-2])


def lambda_tilde_residual(grid: Grid, f) -> np.ndarray:
    """First-order viscosity separating upwind from central-split."""
    f = _as_density(grid, f)
    b_right = np.abs(grid.b_half[1:])
    b_left = np.abs(grid.b_half[:-1])
    stencil = b_right * f[2:] - (b_right + b_left) * f[1:-1] + b_left * f[:-2]
    return -stencil / (2.0 * grid.h)


def _flux_coefficients(scheme: SchemeKind, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """(alpha, beta) with j_{i+1/2} = alpha_i f_i + beta_i f_{i+1}."""
    if scheme is SchemeKind.CENTRAL_WHOLE:
        return grid.D[:-1] / grid.h, -grid.D[1:] / grid.h

    diffusion = grid.D_half / grid.h
    velocity = -grid.b_half
    if scheme is SchemeKind.UPWIND:
        alpha = diffusion + np.where(velocity < 0, 0.0, velocity)
        beta = -diffusion + np.where(velocity < 0, velocity, 0.0)
    else:
        alpha = diffusion + 0.5 * velocity
        beta = -diffusion + 0.5 * velocity
    return alpha, beta


@dataclass(frozen=True, eq=False)
class SchemeOperator:
    """Backward Euler system (I/tau + L) f^{n+1} = f^n/tau for one scheme.

    For central-whole the interior rows do not touch f_0, f_M (D_0 = D_M = 0):
    `sub/diag/sup` hold the (M-1)-row interior system and the walls are
    recovered as f_0 += left_gain f_1, f_M += right_gain f_{M-1}. For the
    other schemes `sub/diag/sup` are the full (M+1)-row system.
    """

    scheme: SchemeKind
    M: int
    tau: float
    gamma: float
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    decoupled: bool
    left_gain: float
    right_gain: float
    pivot_free: bool
    full_sub: np.ndarray
    full_diag: np.ndarray
    full_sup: np.ndarray

    def system(self, rhs) -> TridiagonalSystem:
        return TridiagonalSystem(self.sub, self.diag, self.sup, rhs)

    def full_system(self, rhs) -> TridiagonalSystem:
        return TridiagonalSystem(self.full_sub, self.full_diag, self.full_sup, rhs)

    def full_matrix(self) -> np.ndarray:
        return self.full_system(np.zeros(self.M + 1)).to_dense()


def _readonly(*arrays):
    for array in arrays:
        array.setflags(write=False)


def assemble_operator(scheme: SchemeKind, grid: Grid, tau: float) -> SchemeOperator:
    scheme = SchemeKind(scheme)
    tau = float(tau)
    if not np.isfinite(tau) or tau <= 0:
        raise ValueError(f"Time step must be positive, got {tau}")

    M, h = grid.M, grid.h
    gamma = tau / h**2
    alpha, beta = _flux_coefficients(scheme, grid)

    full_diag = np.empty(M + 1)
    full_diag[1:-1] = 1.0 / tau + (alpha[1:] - beta[:-1]) / h
    full_diag[0] = 1.0 / tau + 2.0 * alpha[0] / h
    full_diag[-1] = 1.0 / tau - 2.0 * beta[-1] / h

    full_sub = -alpha / h
    full_sub[-1] *= 2.0
    full_sup = beta / h
    full_sup[0] *= 2.0

    if scheme is SchemeKind.CENTRAL_WHOLE:
        D = grid.D
        diag = 1.0 / tau + 2.0 * D[1:-1] / h**2
        sub = -D[1:-2] / h**2
        sup = -D[2:-1] / h**2
        left_gain = 2.0 * D[1] * gamma
        right_gain = 2.0 * D[-2] * gamma
        pivot_free = safe_without_pivoting(TridiagonalSystem(sub, diag, sup, np.zeros(M - 1)))
        decoupled = True
    else:
        sub, diag, sup = full_sub.copy(), full_diag.copy(), full_sup.copy()
        left_gain = right_gain = 0.0
        pivot_free = safe_without_pivoting(
            TridiagonalSystem(sub, diag, sup, np.zeros(M + 1)), weights=grid.weights
        )
        decoupled = False

    if not pivot_free:
        logger.warning(
            "%s operator (M=%d, tau=%g) has no pivot-free certificate; using dense solves",
            scheme.value,
            M,
            tau,
        )
    logger.debug("Assembled %s operator: M=%d tau=%g gamma=%g", scheme.value, M, tau, gamma)

    _readonly(sub, diag, sup, full_sub, full_diag, full_sup)
    return SchemeOperator(
        scheme=scheme,
        M=M,
        tau=tau,
        gamma=gamma,
        sub=sub,
        diag=diag,
        sup=sup,
        decoupled=decoupled,
        left_gain=float(left_gain),
        right_gain=float(right_gain),
        pivot_free=pivot_free,
        full_sub=full_sub,
        full_diag=full_diag,
        full_sup=full_sup,
    )


def identity_deviations(grid: Grid, f) -> Tuple[float, float]:
    """Scaled deviations of L2 - L3 - Lambda and L1 - L2 - Lambda~ on interior nodes.

    Both are divided by max(1, |L3 f|_inf): the operators carry 1/h^2 and
    their differences are only exact up to roundoff of that size.
    """
    f = _as_density(grid, f)
    upwind = spatial_operator(SchemeKind.UPWIND, grid, f)[1:-1]
    split = spatial_operator(SchemeKind.CENTRAL_SPLIT, grid, f)[1:-1]
    whole = spatial_operator(SchemeKind.CENTRAL_WHOLE, grid, f)[1:-1]
    scale = max(1.0, float(np.max(np.abs(whole))))

    second = np.max(np.abs(split - whole - lambda_residual(grid, f))) / scale
    first = np.max(np.abs(upwind - split - lambda_tilde_residual(grid, f))) / scale
    return float(second), float(first)
