import numpy as np
import pytest

import tradeoff_lab as tl
from tradeoff_lab.tvprox import tv_landscape_eval


@pytest.fixture(scope="session", autouse=True)
def warm_numba():
    """Compile the numba kernels once so per-test timings stay honest."""
    tl.tv_prox(np.array([1.0, 0.0, 2.0, 0.5]), 0.3)
    buf = np.empty(4)
    tv_landscape_eval(np.zeros(4), np.array([1.0, -1.0, 0.5, 2.0]), 0.5, 0.3, 0.0, 0.0, buf)


def make_quadratic_problem(n=20, lam=0.3, seed=0, m=2, f0_name="sin2pi"):
    grid = tl.uniform_grid(n)
    return tl.Problem(
        grid=grid,
        f0=tl.true_function_values(f0_name, grid),
        lam=lam,
        seminorm=tl.spline_penalty_form(grid, m),
    )


def make_tv_problem(n=25, lam=0.3, f0_name="step3"):
    grid = tl.uniform_grid(n)
    return tl.Problem(
        grid=grid,
        f0=tl.true_function_values(f0_name, grid),
        lam=lam,
        seminorm=tl.TotalVariationSeminorm(n),
    )
