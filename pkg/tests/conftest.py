import pytest

from roughfem.fem1d import average_coefficient, solve_dual_explicit, solve_primal_explicit
from roughfem.randfield import lognormal_of, sample_brownian_bridge
from roughfem.rng import RngStream


@pytest.fixture(scope="session")
def bridge_coefficient():
    """One fixed rough conductivity on a 2**-12 grid, shared across tests."""
    path = sample_brownian_bridge(12, RngStream(1234, 0))
    return lognormal_of(path)


def solve_pair(a_fine, h_level, observable):
    """(u_h, u_{h/2}, lam_h, lam_{h/2}) from exact elementwise averages."""
    a_h = average_coefficient(a_fine, h_level)
    a_h2 = average_coefficient(a_fine, h_level + 1)
    return (
        solve_primal_explicit(a_h),
        solve_primal_explicit(a_h2),
        solve_dual_explicit(a_h, observable),
        solve_dual_explicit(a_h2, observable),
        a_h2,
    )


def rel_diff(a, b, floor=1e-300):
    return abs(a - b) / max(abs(a), abs(b), floor)


def assert_close_rel(a, b, tol, floor=1e-300):
    assert rel_diff(a, b, floor) <= tol, f"{a} vs {b} (rel {rel_diff(a, b, floor):.3e})"
