import numpy as np
import pytest

from ambistop.errors import BadGrid, MismatchedModel
from ambistop.model import Payoff, make_model
from ambistop.oracle_fd import GridSpec, compare, dump_csv, solve_obstacle
from ambistop.solvers import exchange_solve, floor_solve, integral_boundary, integral_solve


@pytest.fixture(scope="module")
def integral_oracle(floor05_module):
    return solve_obstacle(floor05_module, Payoff.integral(), GridSpec(n=2000))


@pytest.fixture(scope="module")
def floor05_module():
    return make_model(0.0, 0.5, 0.05, 0.5)


def test_grid_spec_validation(floor05_module):
    with pytest.raises(BadGrid):
        GridSpec(n=100).resolve(floor05_module)
    with pytest.raises(BadGrid):
        GridSpec(n=500, z_min=2.0, z_max=1.0).resolve(floor05_module)


def test_converged_and_feasible(integral_oracle):
    o = integral_oracle
    assert o.residual < 1e-9
    assert np.all(o.h_values >= o.payoff.g_vec(o.z_nodes) - 1e-12)
    assert o.iterations < 2000


def test_free_boundary_location(integral_oracle, floor05_module):
    zb = integral_boundary(floor05_module)
    iv = integral_oracle.stop_intervals()
    assert len(iv) == 1
    z_left = iv[0][0]
    cell = zb * (integral_oracle.z_nodes[1] / integral_oracle.z_nodes[0] - 1.0)
    assert abs(z_left - zb) <= 1.5 * cell


def test_matches_analytic_and_refines(floor05_module):
    sol = integral_solve(floor05_module)
    r1 = compare(sol, solve_obstacle(floor05_module, Payoff.integral(), GridSpec(n=2000)))
    r2 = compare(sol, solve_obstacle(floor05_module, Payoff.integral(), GridSpec(n=4000)))
    assert r1.max_rel_error < 1e-3
    # refinement at least halves the error (first order or better)
    assert r2.max_rel_error <= 0.5 * r1.max_rel_error
    assert r1.worst_boundary_offset() <= 2


def test_two_sided_floor_oracle():
    m = make_model(0.0, 0.5, 0.05, 1.75)
    sol = floor_solve(m)
    o = solve_obstacle(m, Payoff.floor(), GridSpec(n=2000))
    rep = compare(sol, o)
    assert rep.max_rel_error < 1e-3
    assert rep.worst_boundary_offset() <= 2
    iv = o.stop_intervals()
    assert len(iv) == 2  # stop below z1* and above z2*
    assert iv[0][1] < sol.z_lower < iv[1][0] * 1.001
    assert iv[0][1] <= sol.z_lower * 1.05
    assert abs(iv[1][0] - sol.z_upper) / sol.z_upper < 0.01


def test_active_theta_matches_sign_rule(integral_oracle):
    o = integral_oracle
    z = o.z_nodes
    h = o.h_values
    dh = np.gradient(h, z)
    s = h - z * dh
    interior = slice(5, -5)
    agree = np.sign(o.active_theta[interior]) == np.where(s[interior] >= 0, 1.0, -1.0)
    assert agree.mean() > 0.99  # disagreement only within a cell of the switch


def test_exchange_theta_switch_inside_continuation():
    m = make_model(0.02, 0.1, 0.05, 0.5)
    sol = exchange_solve(m, 0.5)
    o = solve_obstacle(m, Payoff.exchange(0.5), GridSpec(n=2000))
    flips = o.z_nodes[np.nonzero(np.diff((o.active_theta > 0).astype(int)))[0]]
    zb = integral_boundary(m)
    assert len(flips) >= 1
    # the generator flips at z_bar, strictly below the exercise boundary
    assert abs(flips[0] - zb) / zb < 0.01
    assert flips[0] < sol.z_upper


def test_kappa_zero_against_closed_form():
    m = make_model(0.0, 0.5, 0.05, 0.0)
    sol = integral_solve(m)
    rep = compare(sol, solve_obstacle(m, Payoff.integral(), GridSpec(n=2000)))
    assert rep.max_rel_error < 1e-3


def test_discrete_comparison_principle(floor05_module):
    base = solve_obstacle(floor05_module, Payoff.integral(), GridSpec(n=500))
    raised = solve_obstacle(
        floor05_module,
        Payoff.custom(lambda z: z + 0.01),
        GridSpec(n=500),
    )
    assert np.all(raised.h_values >= base.h_values - 1e-12)


def test_compare_mismatch_raises(floor05_module):
    sol = integral_solve(make_model(0.0, 0.5, 0.05, 1.0))
    o = solve_obstacle(floor05_module, Payoff.integral(), GridSpec(n=500))
    with pytest.raises(MismatchedModel):
        compare(sol, o)


def test_compare_identical_inputs_plumbing(floor05_module, integral_oracle):
    sol = integral_solve(floor05_module)
    rep = compare(sol, integral_oracle)
    assert rep.n_interior == len(integral_oracle.z_nodes) - 10
    assert len(rep.boundary_offsets_cells) == 1


def test_csv_dump(tmp_path, integral_oracle):
    path = tmp_path / "grid.csv"
    dump_csv(integral_oracle, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "z,h,theta,stop"
    assert len(lines) == len(integral_oracle.z_nodes) + 1
