import csv

import numpy as np
import pytest

from hsictune.objectives.bateman import (
    DEFAULT_SYSTEM,
    SolverDivergedError,
    bateman_dataset,
    bateman_rhs,
    bateman_solve,
    dataset_to_csv,
    rate_matrix,
)


def _stoich_rhs(eta):
    """Independent oracle: stoichiometric formulation d eta = N . rates."""
    eta = np.asarray(eta, dtype=float)
    rates = np.array([
        1.0 * eta[0] * eta[1],
        5.0 * eta[2] * eta[3],
        3.0 * eta[1] * eta[10],
        0.1 * eta[2] * eta[10],
    ])
    N = np.zeros((11, 4))
    for p, ((a, b), products) in enumerate(DEFAULT_SYSTEM.reactions):
        for s in (a, b):
            N[s - 1, p] -= 1.0
        for s in products:
            N[s - 1, p] += 1.0
    return N @ rates


def _printed_second_row(eta):
    s1, s2, s3, s4 = DEFAULT_SYSTEM.rates
    row = np.zeros(11)
    row[1] = -s1 * eta[0]
    row[3] = s2 * eta[2]
    row[10] = -s3 * eta[1] + s4 * eta[2]
    return row


def test_second_row_matches_printed_form():
    rng = np.random.default_rng(0)
    for _ in range(20):
        eta = rng.random(11)
        M = rate_matrix(eta)
        assert np.allclose(M[1], _printed_second_row(eta), atol=0, rtol=0)


def test_rhs_zero_state():
    assert np.array_equal(bateman_rhs(np.zeros(11)), np.zeros(11))


def test_rhs_all_ones_component_two():
    rate = bateman_rhs(np.ones(11))
    assert abs(rate[1] - 1.1) < 1e-12   # -1 + 5 - 3 + 0.1


def test_species_one_rate_closed_form():
    rng = np.random.default_rng(1)
    for _ in range(20):
        eta = rng.random(11)
        rate = bateman_rhs(eta)
        assert abs(rate[0] - (-1.0 * eta[0] * eta[1])) < 1e-12


def test_rhs_matches_stoichiometric_oracle():
    rng = np.random.default_rng(2)
    for _ in range(50):
        eta = rng.random(11)
        assert np.allclose(bateman_rhs(eta), _stoich_rhs(eta), rtol=1e-12, atol=1e-14)


def test_solve_zero_horizon_returns_initial():
    eta0 = np.random.default_rng(3).random(11)
    assert np.array_equal(bateman_solve(eta0, 0.0), eta0)


def test_solve_single_step_is_euler():
    eta0 = np.random.default_rng(4).random(11)
    dt = 1e-3
    out = bateman_solve(eta0, dt, dt)
    assert np.allclose(out, eta0 + dt * bateman_rhs(eta0), rtol=0, atol=1e-15)


def test_solve_partial_final_step_lands_on_t_end():
    eta0 = np.random.default_rng(5).random(11)
    a = bateman_solve(eta0, 0.0015, dt=1e-3)
    step1 = eta0 + 1e-3 * bateman_rhs(eta0)
    expected = step1 + 0.5e-3 * bateman_rhs(step1)
    assert np.allclose(a, expected, rtol=1e-12, atol=1e-12)


def _rk4(eta0, t_end, dt):
    eta = np.array(eta0, dtype=float)
    n = int(round(t_end / dt))
    for _ in range(n):
        k1 = _stoich_rhs(eta)
        k2 = _stoich_rhs(eta + 0.5 * dt * k1)
        k3 = _stoich_rhs(eta + 0.5 * dt * k2)
        k4 = _stoich_rhs(eta + dt * k3)
        eta = eta + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return eta


def test_euler_close_to_rk4_oracle():
    rng = np.random.default_rng(6)
    for _ in range(3):
        eta0 = rng.random(11)
        euler = bateman_solve(eta0, 5.0, dt=1e-3)
        ref = _rk4(eta0, 5.0, dt=1e-4)
        assert np.max(np.abs(euler - ref)) < 1e-2


def test_solver_divergence_reports_step():
    # Euler overshoot on a stiff consumption reaction oscillates and blows up
    from hsictune.objectives.bateman import BatemanSystem

    system = BatemanSystem(3, (((1, 2), (3,)),), (1e9,))
    with pytest.raises(SolverDivergedError) as err:
        bateman_solve(np.array([1e3, 1e3, 0.0]), 10.0, dt=0.5, system=system)
    assert err.value.step >= 0


def test_dataset_determinism_and_bounds(tmp_path):
    a = bateman_dataset(5, seed=11)
    b = bateman_dataset(5, seed=11)
    for (xa, la), (xb, lb) in zip(a, b):
        assert np.array_equal(xa[0], xb[0]) and xa[1] == xb[1]
        assert np.array_equal(la, lb)
    for (eta0, t), label in a:
        assert np.all((eta0 >= 0) & (eta0 <= 1))
        assert 0.0 <= t <= 5.0
        assert label is not None and np.all(np.isfinite(label))
    path = tmp_path / "bateman.csv"
    dataset_to_csv(a, str(path))
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["eta0_1", "eta0_2"]
    assert len(rows) == 6
    assert len(rows[1]) == 23   # 12 inputs + 11 labels


def test_dataset_zero_time_label_is_initial_state():
    rows = bateman_dataset(200, seed=1)
    (eta0, t), label = min(rows, key=lambda r: r[0][1])
    # smallest sampled t is nearly zero; label must track eta0 closely
    assert np.allclose(label, eta0, atol=0.05)
