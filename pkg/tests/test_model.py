import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from instances import witness_problem
from reelbeam.errors import InvalidInputError
from reelbeam.linalg import herm, rotation_matrix
from reelbeam.model import (COCHANNEL_ANGLES_DEG, EH_DIRECTIONS_DEG, BeamformingProblem, IndividualConstraint,
                            JointConstraint, build_original_sdp, build_rotated_sdp, build_scenario,
                            complex_gaussian, ostbc_sinr_target, problem_from_json, problem_to_json,
                            relaxed_nulling_matrix, scenario_eh_los, scenario_interference_derivative,
                            scenario_rayleigh_eh, scenario_relaxed_nulling, sinr_matrices, steering_derivatives,
                            steering_vector)
from reelbeam.sdp import row_values, solve


def test_sinr_matrices_single_user():
    p = BeamformingProblem([np.array([1.0, 0.0])], [1.0], [2.0])
    (row,) = sinr_matrices(p)
    assert_allclose(row.matrices[0], np.diag([0.5, 0.0]))
    assert row.sense == "GE" and row.threshold == 1.0


def test_sinr_matrices_cross_terms():
    p = BeamformingProblem([np.array([1.0, 0.0]), np.array([0.0, 1.0])], [1.0, 1.0], [1.0, 1.0])
    r1, r2 = sinr_matrices(p)
    assert_allclose(r1.matrices[1], -np.diag([1.0, 0.0]))
    assert_allclose(r2.matrices[0], -np.diag([0.0, 1.0]))


def test_sinr_targets_must_be_positive():
    p = BeamformingProblem([np.ones(2)], [1.0], [0.0])
    with pytest.raises(InvalidInputError):
        sinr_matrices(p)
    with pytest.raises(InvalidInputError):
        p.validate()


@settings(max_examples=30)
@given(st.integers(0, 2**31))
def test_sinr_rows_agree_with_direct_sinr(seed):
    rng = np.random.default_rng(seed)
    M, n = 3, 4
    H = complex_gaussian(rng, n, M)
    gamma = rng.uniform(0.2, 3.0, M)
    s2 = rng.uniform(0.1, 1.0, M)
    p = BeamformingProblem([H[:, m] for m in range(M)], s2, gamma)
    W = [complex_gaussian(rng, n, 2) for _ in range(M)]
    X = [w @ herm(w) for w in W]
    vals = row_values(build_original_sdp(p).rows(), X)
    for m in range(M):
        rx = [np.sum(np.abs(np.conj(H[:, m]) @ w) ** 2) for w in W]
        sinr = rx[m] / (sum(rx) - rx[m] + s2[m])
        residual = vals[m] - s2[m]
        direct = (sinr - gamma[m]) * (sum(rx) - rx[m] + s2[m]) / gamma[m]
        assert residual == pytest.approx(direct, abs=1e-9 * (1 + abs(direct)))


def test_steering_examples():
    assert_allclose(steering_vector(0.0, 4), np.ones(4))
    assert_allclose(steering_vector(90.0, 3), [1, -1, 1], atol=1e-12)
    assert_allclose(steering_vector(30.0, 2), [1, 1j], atol=1e-12)


@given(st.floats(-90, 90), st.integers(1, 32))
def test_steering_norm(theta, n):
    assert np.linalg.norm(steering_vector(theta, n)) ** 2 == pytest.approx(n, rel=1e-12)


def test_steering_derivatives_at_broadside():
    h1, h2 = steering_derivatives(0.0, 5)
    n = np.arange(5)
    assert_allclose(h1, 1j * np.pi * n, atol=1e-12)
    assert_allclose(h2, -(np.pi * n) ** 2, atol=1e-9)
    assert h1[0] == 0 and h2[0] == 0


@given(st.floats(-80, 80), st.integers(2, 18))
def test_steering_derivatives_finite_difference(theta, n):
    d = 1e-4
    th = math.radians(theta)
    h1, h2 = steering_derivatives(theta, n)

    def h(t):
        return steering_vector(math.degrees(t), n)

    fd1 = (h(th + d) - h(th - d)) / (2 * d)
    fd2 = (h(th + d) - 2 * h(th) + h(th - d)) / d ** 2
    scale = (np.pi * n) ** 3
    assert np.linalg.norm(fd1 - h1) <= scale * d ** 2
    assert np.linalg.norm(fd2 - h2) <= (np.pi * n) ** 4 * d ** 2 + 1e-6 * (np.pi * n) ** 2


def test_build_original_structure():
    rng = np.random.default_rng(0)
    p, _ = witness_problem(rng, n_t=4, M=1, L=0, P=0)
    sdp = build_original_sdp(p)
    assert sdp.block_dims == [4] and len(sdp.constraints) == 1
    p, _ = witness_problem(rng, n_t=4, M=2, L=3, P=1)
    sdp = build_original_sdp(p)
    assert len(sdp.block_dims) == 2
    assert len(sdp.constraints) == 5 and len(sdp.double_sided) == 2
    assert all(c.sense == "GE" for c in sdp.constraints[:2])
    assert all(np.allclose(c, np.eye(4)) for c in sdp.objective)


def test_rotated_identity_equals_original():
    rng = np.random.default_rng(1)
    p, _ = witness_problem(rng, n_t=4, M=2, L=2, P=1)
    a, b = build_original_sdp(p), build_rotated_sdp(p, [np.eye(4)] * 2)
    for ca, cb in zip(a.constraints, b.constraints):
        for k in ca.coeffs:
            assert_allclose(ca.coeffs[k], cb.coeffs[k])
    for da, db in zip(a.double_sided, b.double_sided):
        assert_allclose(da.matrix, db.matrix)


def test_rotated_optimum_and_solution_map():
    rng = np.random.default_rng(2)
    p, _ = witness_problem(rng, n_t=4, M=2, L=4, P=1)
    us = [rotation_matrix(h) for h in p.channels]
    s0 = solve(build_original_sdp(p))
    rot = build_rotated_sdp(p, us)
    s1 = solve(rot)
    assert s1.objective_value == pytest.approx(s0.objective_value, rel=1e-6)
    xbar = [herm(u) @ x @ u for u, x in zip(us, s0.x_blocks)]
    assert_allclose(row_values(rot.rows(), xbar), row_values(build_original_sdp(p).rows(), s0.x_blocks),
                    rtol=1e-9, atol=1e-10)


def test_rotated_rejects_non_unitary():
    rng = np.random.default_rng(3)
    p, _ = witness_problem(rng, n_t=4, M=1, L=0, P=0)
    with pytest.raises(InvalidInputError):
        build_rotated_sdp(p, [2 * np.eye(4)])


def test_eh_direction_table():
    assert len(EH_DIRECTIONS_DEG) == 110
    assert EH_DIRECTIONS_DEG[:3] == (-90.0, -88.5, -87.0)
    assert EH_DIRECTIONS_DEG[-1] == 77.0
    i = EH_DIRECTIONS_DEG.index(-2.0)
    assert EH_DIRECTIONS_DEG[i + 1:i + 3] == (2.0, 3.5)
    assert len(COCHANNEL_ANGLES_DEG) == 19


def test_eh_los_rows():
    p = scenario_eh_los(1)
    assert p.L == 1 and p.joint[0].sense == "GE"
    assert_allclose(p.joint[0].matrices[0], np.outer(steering_vector(-90, 16), steering_vector(-90, 16).conj()))
    assert p.joint[0].threshold == pytest.approx(10.0)
    with pytest.raises(InvalidInputError):
        scenario_eh_los(111)


def test_eh_los_without_terminals_is_mrt():
    p = scenario_eh_los(0, n_t=16)
    s = solve(build_original_sdp(p))
    assert s.objective_value == pytest.approx(1.0 * 0.1 / 16, rel=1e-8)


def test_rayleigh_deterministic_and_moments():
    a, b = scenario_rayleigh_eh(5, M=2, seed=7), scenario_rayleigh_eh(5, M=2, seed=7)
    assert all(np.array_equal(x, y) for x, y in zip(a.channels, b.channels))
    rng = np.random.default_rng(0)
    norms = [np.linalg.norm(complex_gaussian(rng, 16)) ** 2 for _ in range(1000)]
    assert np.mean(norms) == pytest.approx(16, rel=0.05)


def test_interference_derivative_rows_hermitian_and_counted():
    p = scenario_interference_derivative()
    assert p.M == 3 and p.n_t == 18 and p.L == 4 * 19
    for row in p.joint:
        for a in row.matrices:
            assert_allclose(a, herm(a), atol=1e-12)
    senses = [r.sense for r in p.joint[:4]]
    assert senses == ["LE", "LE", "GE", "GE"]


def test_interference_derivative_perturbation_bounds():
    base = scenario_interference_derivative()
    pert = scenario_interference_derivative(seed=5)
    for h0, h1 in zip(base.channels, pert.channels):
        # recover angles from the phase progression of the steering vectors
        t0 = math.degrees(math.asin(np.angle(h0[1]) / math.pi))
        t1 = math.degrees(math.asin(np.angle(h1[1]) / math.pi))
        assert abs(t1 - t0) <= 0.25 + 1e-9


def test_relaxed_nulling_matrix():
    g = np.array([1.0, 1j, 0.5, -1.0])
    c = relaxed_nulling_matrix(g, 0.02)
    assert np.trace(c).real == pytest.approx(0.02 * 4 - 1)
    c0 = relaxed_nulling_matrix(g, 0.0)
    w = np.array([1.0, 0, 0, 0])
    assert np.real(np.conj(w) @ c0 @ w) <= 0


def test_relaxed_nulling_solution_respects_leakage():
    p = scenario_relaxed_nulling(L=5, n_t=16, seed=3)
    s = solve(build_original_sdp(p))
    assert s.optimal
    rng = np.random.default_rng(3)
    for _ in range(2 + 5 + 10):
        complex_gaussian(rng, 16)
    nulls = [complex_gaussian(rng, 16) for _ in range(2)]
    for g in nulls:
        for x in s.x_blocks:
            leak = np.real(np.conj(g) @ x @ g)
            assert leak <= 0.02 * np.vdot(g, g).real * np.trace(x).real + 1e-8


def test_ostbc_targets():
    assert ostbc_sinr_target(1.0) == pytest.approx(1.0)
    assert ostbc_sinr_target(3.0, 0.75) == pytest.approx(15.0)
    assert 10 * math.log10(ostbc_sinr_target(2.06)) == pytest.approx(5.0, abs=0.02)
    with pytest.raises(InvalidInputError):
        ostbc_sinr_target(1.0, 0.0)


def test_individual_bounds_validation():
    with pytest.raises(InvalidInputError):
        BeamformingProblem([np.ones(2)], [1.0], [1.0], [],
                           [[IndividualConstraint(np.eye(2), 0.5, 1.0)]]).validate()
    with pytest.raises(InvalidInputError):
        BeamformingProblem([np.ones(2)], [1.0], [1.0], [JointConstraint([np.eye(2)], "GT", 1.0)]).validate()


def test_build_scenario_dispatch():
    assert build_scenario("LosEh", {"L": 3}).L == 3
    p = build_scenario("InterferenceDerivative", {"rate": 2.0}, seed=1)
    assert_allclose(p.sinr_targets, 3.0)
    with pytest.raises(InvalidInputError):
        build_scenario("Nope", {})


def test_json_round_trip():
    rng = np.random.default_rng(4)
    p, _ = witness_problem(rng, n_t=4, M=2, L=3, P=2)
    p.individual[0][0].upper = math.inf
    doc = json.loads(json.dumps(problem_to_json(p)))
    assert doc["individual"][0][0]["upper"] is None
    q = problem_from_json(doc)
    assert_allclose(q.channels[1], p.channels[1])
    assert q.individual[0][0].upper == math.inf
    assert solve(build_original_sdp(q)).objective_value == pytest.approx(
        solve(build_original_sdp(p)).objective_value, rel=1e-9)
    with pytest.raises(InvalidInputError):
        problem_from_json({"channels": []})
