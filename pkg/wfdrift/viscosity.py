"""
Steady state of the drift equation with an added viscosity eps:

    f_eps(x) = b_eps / (x(1 - x) + eps),   b_eps = c / ln((c + 1/2)/(c - 1/2)),

with c = sqrt(1/4 + eps), normalized to unit mass on [0, 1]. As eps -> 0,
f_eps tends to delta(x)/2 + delta(1 - x)/2 whatever the initial data were.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Tuple, Union

import numpy as np

from wfdrift.config import Config
from wfdrift.errors import QuadratureError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ViscosityProfile:
    epsilon: float
    c_plus: float
    b_eps: float


def make_profile(epsilon: float) -> ViscosityProfile:
    epsilon = float(epsilon)
    if not math.isfinite(epsilon) or epsilon <= 0:
        raise ValueError(f"Viscosity must be positive, got {epsilon}")
    c_plus = math.sqrt(0.25 + epsilon)
    # (c + 1/2)/(c - 1/2) = (c + 1/2)^2 / eps, free of cancellation for small eps
    b_eps = c_plus / (2.0 * math.log(c_plus + 0.5) - math.log(epsilon))
    return ViscosityProfile(epsilon=epsilon, c_plus=c_plus, b_eps=b_eps)


def f_epsilon(profile: ViscosityProfile, x):
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < 0.0) | (x > 1.0)) or not np.all(np.isfinite(x)):
        raise ValueError("f_eps is defined on [0, 1] only")
    values = profile.b_eps / (x * (1.0 - x) + profile.epsilon)
    return float(values) if values.ndim == 0 else values


def outer_mass(profile: ViscosityProfile, delta: float) -> float:
    """Mass of f_eps outside [delta, 1 - delta], in closed form."""
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"delta must lie in [0, 1/2], got {delta}")
    u = 0.5 - delta
    c = profile.c_plus
    return 1.0 - profile.b_eps / c * math.log((c + u) / (c - u))


def sample_profile(
    profile: ViscosityProfile, points: int = Config.Viscosity.PROFILE_POINTS
) -> Tuple[np.ndarray, np.ndarray]:
    if points < 2:
        raise ValueError("A profile needs at least two points")
    x = np.linspace(0.0, 1.0, points)
    return x, f_epsilon(profile, x)


def _bump(x: np.ndarray, centre: float, radius: float) -> np.ndarray:
    r = (np.asarray(x, dtype=np.float64) - centre) / radius
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class TestFunction:
    """Smooth phi on [0, 1] with the interval outside of which it vanishes."""

    __test__ = False

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    support: Tuple[float, float]

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=np.float64))


TEST_FUNCTIONS: Dict[str, TestFunction] = {
    "one": TestFunction("one", lambda x: np.ones_like(x), (0.0, 1.0)),
    "bump0": TestFunction("bump0", lambda x: _bump(x, 0.0, 0.5), (0.0, 0.5)),
    "bump1": TestFunction("bump1", lambda x: _bump(x, 1.0, 0.5), (0.5, 1.0)),
    "bumpmid": TestFunction("bumpmid", lambda x: _bump(x, 0.5, 0.25), (0.25, 0.75)),
}


def get_test_function(phi: Union[str, TestFunction]) -> TestFunction:
    if isinstance(phi, TestFunction):
        return phi
    if phi not in TEST_FUNCTIONS:
        raise ValueError(
            f"Unknown test function {phi!r}; choose from {', '.join(TEST_FUNCTIONS)}"
        )
    return TEST_FUNCTIONS[phi]


def limit_pairing(phi: Union[str, TestFunction]) -> float:
    """phi(0)/2 + phi(1)/2, the pairing with the eps -> 0 limit."""
    ends = get_test_function(phi)(np.array([0.0, 1.0]))
    return 0.5 * float(ends[0]) + 0.5 * float(ends[1])


@lru_cache(maxsize=None)
def _gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _breakpoints(epsilon: float, support: Tuple[float, float]) -> np.ndarray:
    """Panels on [0, 1/2], geometric from eps/100 so the O(eps) wall layer is resolved."""
    points = [0.0, 0.5]
    edge = min(epsilon / 100.0, Config.Viscosity.GRADING_FLOOR)
    while edge < 0.5:
        points.append(edge)
        edge *= 2.0
    # where phi(y) + phi(1 - y) stops being smooth
    for q in support:
        points.extend(p for p in (q, 1.0 - q) if 0.0 < p < 0.5)
    return np.unique(points)


def _composite(integrand, edges: np.ndarray, order: int) -> float:
    nodes, weights = _gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    y = mid[:, None] + half[:, None] * nodes[None, :]
    return float(np.sum(half[:, None] * weights[None, :] * integrand(y)))


def pair_with_test_function(
    profile: ViscosityProfile,
    phi: Union[str, TestFunction],
    order: int = Config.Viscosity.GAUSS_ORDER,
    tol: float = Config.Viscosity.QUADRATURE_TOL,
    max_refinements: int = Config.Viscosity.MAX_REFINEMENTS,
) -> float:
    """Integral of f_eps * phi over [0, 1].

    f_eps is symmetric, so the integral is taken over [0, 1/2] against
    phi(y) + phi(1 - y). Panels are bisected until two successive
    estimates agree to `tol` (relative to max(1, |value|)).
    """
    phi = get_test_function(phi)

    def integrand(y):
        return f_epsilon(profile, y) * (phi(y) + phi(1.0 - y))

    edges = _breakpoints(profile.epsilon, phi.support)
    previous = _composite(integrand, edges, order)
    change = math.inf
    for level in range(1, max_refinements + 1):
        edges = np.sort(np.concatenate([edges, 0.5 * (edges[:-1] + edges[1:])]))
        current = _composite(integrand, edges, order)
        change = abs(current - previous)
        if change <= tol * max(1.0, abs(current)):
            logger.debug(
                "Pairing eps=%g phi=%s converged at level %d: %.17g",
                profile.epsilon,
                phi.name,
                level,
                current,
            )
            return current
        previous = current

    raise QuadratureError(
        f"Pairing with {phi.name} at eps={profile.epsilon:g} did not converge "
        f"after {max_refinements} refinements (last change {change:.3e})"
    )


def normalization(profile: ViscosityProfile) -> float:
    return pair_with_test_function(profile, "one")


def pairing_table(
    epsilons: Iterable[float], phi: Union[str, TestFunction]
) -> List[Tuple[float, float]]:
    return [(eps, pair_with_test_function(make_profile(eps), phi)) for eps in epsilons]
