import numpy as np
import pytest

from thermoblock.discretization import Problem, State
from thermoblock.mesh import build_grid
from thermoblock.physics import FluidModel, RockModel, SourceTerm


def small_problem(dims=(4, 3), lengths=(8.0, 6.0), sources="mixed", hetero=True, seed=0, gravity=False):
    """Few-cell problem with every kind of source for assembly checks."""
    rng = np.random.default_rng(seed)
    g = build_grid(dims, lengths)
    n = g.n_cells
    if hetero:
        perm = 10.0 ** rng.uniform(-13.5, -12.0, size=(n, g.ndim))
        poro = rng.uniform(0.1, 0.3, size=n)
    else:
        perm = np.full((n, g.ndim), 3e-13)
        poro = np.full(n, 0.2)
    rock = RockModel(perm=perm, poro=poro)
    src = []
    if sources == "mixed":
        src = [
            SourceTerm("injector", 0, q_target=2e-6),
            SourceTerm("producer", n - 1, rate_mode="peaceman", p_bh=2e5, q_target=1e-3, D_x=2.0, D_y=2.0),
            SourceTerm("heater", n // 2),
        ]
    elif sources == "heater":
        src = [SourceTerm("heater", n // 2)]
    elif sources == "wells":
        src = [SourceTerm("injector", 0, q_target=1e-6), SourceTerm("producer", n - 1, q_target=1e-6)]
    return Problem(g, FluidModel(), rock, src, gravity=gravity)


def random_state(problem, seed=1, p=(3e5, 6e5), T=(290.0, 400.0)):
    rng = np.random.default_rng(seed)
    n = problem.n
    return State(rng.uniform(*p, size=n), rng.uniform(*T, size=n))


@pytest.fixture
def problem():
    return small_problem()


_ACCEPTANCE_LINES = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _ACCEPTANCE_LINES.extend(v for k, v in report.user_properties if k == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
