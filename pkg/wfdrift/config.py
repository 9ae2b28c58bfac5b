import os
from pathlib import Path


class Config:
    class Path:
        APP_HOME = Path(os.getenv("APP_HOME", Path(__file__).parent.parent))
        OUTPUT_DIR = Path(os.getenv("WFDRIFT_OUTPUT_DIR", APP_HOME / "runs"))

    class Grid:
        MIN_CELLS = 3

    class InitialState:
        SIGMA = 0.01
        RENORMALIZE = False

    class Solver:
        PIVOT_TOLERANCE = 1e-300
        DENSE_MAX_SIZE = 200

    class Cache:
        MAX_OPERATORS = int(os.getenv("WFDRIFT_MAX_OPERATORS", "32"))
        MAX_GRIDS = 16

    class Integrator:
        STEADY_TOL = 1e-12
        DIAGNOSTICS_STRIDE = 1
        WORKERS = int(os.getenv("WFDRIFT_WORKERS", "1"))

    class Viscosity:
        GAUSS_ORDER = 16
        GRADING_FLOOR = 1e-2
        QUADRATURE_TOL = 1e-10
        MAX_REFINEMENTS = 6
        PROFILE_POINTS = 401
        EPSILONS = (0.5, 1e-2)

    class Oracle:
        CHUNK_SIZE = 4096
        MAX_GENERATIONS = 100_000
        RECORD_GENERATIONS = (0, 1, 2, 5, 10, 20, 50, 100, 200, 500)
        MOMENT_DRAWS = 100_000

    DEBUG = os.getenv("WFDRIFT_DEBUG", "0").lower() in ("1", "true", "yes")
    CSV_FORMAT = "%.17g"
    IDENTITY_TOLERANCE = 1e-12
