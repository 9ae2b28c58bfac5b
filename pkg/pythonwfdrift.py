from wfdrift.config import Config
from wfdrift.diagnostics import discrete_expectation, discrete_probability, steady_report
from wfdrift.grid import InitialCondition, gaussian_initial
from wfdrift.integrator import RunConfig, run, step
from wfdrift.operator_cache import get_grid, get_operator
from wfdrift.schemes import SchemeKind

SCHEMES = [kind.value for kind in SchemeKind]


def _check_scheme(scheme: str) -> SchemeKind:
    if not scheme or not isinstance(scheme, str):
        raise ValueError("Scheme must be a non-empty string")

    if scheme not in SCHEMES:
        raise ValueError(f"Scheme must be one of: {', '.join(SCHEMES)}")

    return SchemeKind(scheme)


def solve_drift(
    scheme: str = "central-whole",
    cells: int = 1000,
    tau: float = 1e-4,
    t_end: float = 6.0,
    p: float = 0.4,
    sigma: float = Config.InitialState.SIGMA,
    renormalize: bool = False,
):
    cfg = RunConfig(
        scheme=_check_scheme(scheme),
        M=cells,
        tau=tau,
        t_end=t_end,
        ic=InitialCondition(p=p, sigma=sigma, renormalize=renormalize),
    )
    trajectory = run(cfg)
    grid = trajectory.grid

    P0 = discrete_probability(grid, trajectory.initial)
    E0 = discrete_expectation(grid, trajectory.initial)
    report = steady_report(grid, trajectory, P0, E0)

    return {
        "w0": report.w0,
        "w1": report.w1,
        "P_0": P0,
        "E_0": E0,
        "report": report,
        "trajectory": trajectory,
    }


def create_drift_system(scheme: str = "central-whole", cells: int = 1000, tau: float = 1e-4):
    kind = _check_scheme(scheme)

    class DriftSession:
        def __init__(self):
            self.grid = get_grid(cells)
            self.operator = get_operator(kind, cells, tau)
            self.state = None
            self.P0 = self.E0 = None
            self.is_loaded = False

        def load_initial(self, p: float, sigma: float = Config.InitialState.SIGMA,
                         renormalize: bool = False):
            ic = InitialCondition(p=p, sigma=sigma, renormalize=renormalize)
            self.state = gaussian_initial(self.grid, ic)
            self.P0 = discrete_probability(self.grid, self.state)
            self.E0 = discrete_expectation(self.grid, self.state)
            self.is_loaded = True
            return True

        def advance(self, steps: int = 1):
            if not self.is_loaded:
                raise ValueError("Please load an initial state first using load_initial()")

            if not isinstance(steps, int) or steps < 0:
                raise ValueError("Steps must be a non-negative integer")

            for _ in range(steps):
                self.state = step(self.state, self.operator, self.grid)
            return self.state

        def report(self):
            if not self.is_loaded:
                raise ValueError("Please load an initial state first using load_initial()")

            summary = steady_report(self.grid, self.state, self.P0, self.E0).as_dict()
            summary.update(
                t=self.state.t,
                P=discrete_probability(self.grid, self.state),
                E=discrete_expectation(self.grid, self.state),
            )
            return summary

    return DriftSession()
