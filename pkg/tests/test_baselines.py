import numpy as np
import pytest

from instances import witness_problem
from reelbeam.baselines import (FEAS_TOL, design_baseline, evaluate_baselines, exact_if_low_rank,
                                gaussian_randomization, scheme_sinr_target)
from reelbeam.errors import InvalidInputError
from reelbeam.linalg import herm, numeric_rank
from reelbeam.model import (BeamformingProblem, build_original_sdp, scenario_eh_los,
                            scenario_interference_derivative)
from reelbeam.reelbf import run_algorithm1
from reelbeam.sdp import SdpSolution, Status, row_values, row_violations, solve


def _power(beams):
    return float(sum(np.sum(np.abs(w) ** 2) for w in beams))


def _violation(p, beams):
    sdp = build_original_sdp(p)
    rows = sdp.rows()
    return float(np.max(row_violations(rows, row_values(rows, [w @ herm(w) for w in beams])), initial=0.0))


def test_exact_rank_one():
    h = np.array([1.0, 1.0j])
    p = BeamformingProblem([h], [1.0], [1.0])
    s = solve(build_original_sdp(p))
    (w,) = exact_if_low_rank(s, 1)
    assert w.shape == (2, 1)
    assert np.allclose(w @ herm(w), s.x_blocks[0], atol=1e-8)


def test_rank_three_not_recovered_at_width_two():
    x = np.diag([3.0, 2.0, 1.0]).astype(complex)
    s = SdpSolution([x], 6.0, np.zeros(0), Status.OPTIMAL)
    assert exact_if_low_rank(s, 2) is None
    assert len(exact_if_low_rank(s, 4)[0].T) == 4


def test_non_optimal_rejected():
    s = SdpSolution([np.eye(2, dtype=complex)], 2.0, np.zeros(0), Status.INFEASIBLE)
    with pytest.raises(InvalidInputError):
        exact_if_low_rank(s, 2)


def test_rank_two_alamouti_attains_bound():
    p = scenario_eh_los(30, n_t=8)
    s = solve(build_original_sdp(p))
    assert [numeric_rank(x) for x in s.x_blocks] == [2]
    r = design_baseline(s, p, "Alamouti2")
    assert r.feasible and r.exact
    assert r.power == pytest.approx(s.objective_value, rel=1e-7)
    assert _violation(p, r.beamformers) <= FEAS_TOL
    one = design_baseline(s, p, "RankOne")
    assert not one.exact
    assert not one.feasible or one.power > s.objective_value * (1 + 1e-6)


def test_randomization_on_rank_one_reaches_bound():
    h = np.array([1.0, 2.0, -1.0j])
    p = BeamformingProblem([h], [0.5], [2.0])
    s = solve(build_original_sdp(p))
    r = gaussian_randomization(s, p, 1, n_inst=5)
    assert r.feasible and not r.exact
    assert r.power == pytest.approx(s.objective_value, rel=1e-6)


def test_randomization_is_deterministic():
    p = scenario_eh_los(30, n_t=8)
    s = solve(build_original_sdp(p))
    a = gaussian_randomization(s, p, 1, n_inst=20, seed=7)
    b = gaussian_randomization(s, p, 1, n_inst=20, seed=7)
    assert a.power == b.power
    for x, y in zip(a.beamformers, b.beamformers):
        assert np.array_equal(x, y)


def test_randomization_argument_checks():
    p = BeamformingProblem([np.array([1.0, 0.0])], [1.0], [1.0])
    s = solve(build_original_sdp(p))
    with pytest.raises(InvalidInputError):
        gaussian_randomization(s, p, 3)
    with pytest.raises(InvalidInputError):
        gaussian_randomization(s, p, 1, n_inst=0)


def test_high_rate_rank_one_mostly_infeasible():
    feasible = 0
    for seed in range(5):
        p = scenario_interference_derivative(gamma=2 ** 2.5 - 1, seed=seed)
        (r,) = evaluate_baselines(p, n_inst=20, seed=seed, schemes=("RankOne",))
        feasible += r.feasible
    assert feasible <= 2


def test_sinr_only_all_feasible():
    rng = np.random.default_rng(3)
    p, _ = witness_problem(rng, n_t=4, M=2, L=0, P=0)
    results = evaluate_baselines(p, n_inst=10)
    assert all(r.feasible for r in results)
    bound = solve(build_original_sdp(p)).objective_value
    assert results[0].power == pytest.approx(bound, rel=1e-6)


def test_ostbc_target():
    assert scheme_sinr_target("Ostbc4", 1.0) == pytest.approx(2 ** (4 / 3) - 1)
    assert scheme_sinr_target("Alamouti2", 1.0) == 1.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_baselines_never_beat_bound_or_reel(seed):
    rng = np.random.default_rng(100 + seed)
    p, _ = witness_problem(rng, n_t=4, M=2, L=4, P=0)
    reel = run_algorithm1(p)
    for r in evaluate_baselines(p, n_inst=20, seed=seed, schemes=("RankOne", "Alamouti2")):
        if r.feasible:
            assert r.power >= r.sdp_bound * (1 - 1e-6)
            assert r.power >= reel.power * (1 - 1e-6)
            assert _violation(p, r.beamformers) <= FEAS_TOL


def test_unknown_scheme():
    p = BeamformingProblem([np.array([1.0, 0.0])], [1.0], [1.0])
    with pytest.raises(InvalidInputError):
        evaluate_baselines(p, schemes=("Foo",))
