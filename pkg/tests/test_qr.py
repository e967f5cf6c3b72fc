import numpy as np
import pytest
from hypothesis import given, strategies as st

from modalreg.dataset import Dataset
from modalreg.errors import ConvergenceError, DomainError, SolverError
from modalreg.qr import (QuantileProcess, check_loss, predict_quantile, solve_path, solve_qr)
from modalreg.simlab import DgpSpec, case2_quantile, sample_dgp

from oracles import brute_force_qr, random_instance


def intercept_only(y):
    return Dataset.from_arrays(np.asarray(y, dtype=float))


def test_median_of_three():
    fit = solve_qr(intercept_only([1, 2, 3]), 0.5)
    assert fit.beta[0] == pytest.approx(2.0)
    assert fit.objective == pytest.approx(1.0)


def test_lower_quartile_is_vertex():
    data = intercept_only([1, 2, 3, 10])
    assert solve_qr(data, 0.25).beta[0] == pytest.approx(1.0)
    obj, beta = brute_force_qr(data.X, data.y, 0.25)
    assert beta[0] == pytest.approx(1.0)


def test_path_sample_quantiles():
    proc = solve_path(intercept_only([1, 2, 3, 10]), [0.25, 0.5, 0.75])
    np.testing.assert_allclose(proc.betas[:, 0], [1, 2, 3])


def test_singleton_path_matches_single_solve():
    rng = np.random.default_rng(3)
    X, y = random_instance(rng, 30, 2)
    data = Dataset.from_arrays(y, X[:, 1])
    a = solve_path(data, [0.5]).fits[0]
    b = solve_qr(data, 0.5)
    np.testing.assert_array_equal(a.beta, b.beta)


@given(st.integers(0, 10_000), st.integers(3, 10), st.integers(1, 2),
       st.floats(0.05, 0.95))
def test_brute_force_oracle(seed, n, d, tau):
    rng = np.random.default_rng(seed)
    X, y = random_instance(rng, n, d)
    data = Dataset(y, X, intercept=True)
    fit = solve_qr(data, tau)
    best, _ = brute_force_qr(X, y, tau)
    assert fit.objective <= best * (1 + 1e-8) + 1e-12
    assert fit.objective == pytest.approx(check_loss(y - X @ fit.beta, tau), rel=1e-8, abs=1e-12)
    assert fit.foc_norm(data) <= fit.foc_bound(data) + 1e-9
    assert len(fit.active_set) <= d


@given(st.integers(0, 10_000), st.floats(0.1, 10.0), st.floats(-5, 5), st.floats(0.1, 0.9))
def test_scale_and_shift_equivariance(seed, c, shift, tau):
    rng = np.random.default_rng(seed)
    X, y = random_instance(rng, 25, 2)
    gamma = np.array([shift, -shift / 2])
    base = solve_qr(Dataset(y, X, intercept=True), tau)
    moved = solve_qr(Dataset(c * y + X @ gamma, X, intercept=True), tau)
    assert moved.objective == pytest.approx(c * base.objective, rel=1e-8, abs=1e-10)
    np.testing.assert_allclose(moved.beta, c * base.beta + gamma, rtol=1e-7, atol=1e-7)


def test_case2_curve_nearly_monotone():
    data = sample_dgp(DgpSpec("case2", 2000, seed=11)).data
    proc = solve_path(data, np.linspace(0.05, 0.95, 100))
    for x2 in (0.25, 0.5, 0.75):
        q = proc.quantile_curve([1.0, x2])
        assert np.min(np.diff(q)) >= -2 * 2000 ** -0.5
        pop = case2_quantile(proc.taus, x2)
        assert np.max(np.abs(q - pop)) < 0.1


def test_predict_quantile_examples():
    proc = QuantileProcess([0.25, 0.5, 0.75], [[1.0, 3.0], [2.0, 4.0], [5.0, 6.0]])
    assert predict_quantile(proc, [1, 0], 0.5) == 2.0
    assert predict_quantile(proc, [1, 0], 0.49) == 2.0
    assert predict_quantile(QuantileProcess([0.5], [[1.0, 3.0]]), [1, 2], 0.5) == 7.0
    assert predict_quantile(proc, [1, 0], 0.375) == 1.0  # equidistant: lower grid point
    with pytest.raises(DomainError):
        predict_quantile(proc, [1, 0], 0.9)


def test_process_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    X, y = random_instance(rng, 40, 2)
    proc = solve_path(Dataset(y, X, intercept=True), np.linspace(0.1, 0.9, 9))
    proc.to_csv(tmp_path / "p.csv")
    back = QuantileProcess.from_csv(tmp_path / "p.csv")
    np.testing.assert_array_equal(back.betas, proc.betas)
    np.testing.assert_array_equal(back.taus, proc.taus)


def test_iteration_cap_keeps_incumbent():
    rng = np.random.default_rng(1)
    X, y = random_instance(rng, 200, 2)
    with pytest.raises(ConvergenceError) as info:
        solve_qr(Dataset(y, X, intercept=True), 0.3, max_iter=0)
    inc = info.value.incumbent
    assert inc is not None and np.all(np.isfinite(inc.beta))


def test_rank_deficient_design():
    X = np.column_stack([np.ones(6), np.arange(6.0), 2 * np.arange(6.0)])
    with pytest.raises(SolverError):
        solve_qr(Dataset(np.arange(6.0), X), 0.5)


def test_bad_grid():
    data = intercept_only([1, 2, 3])
    with pytest.raises(DomainError):
        solve_path(data, [0.5, 0.4])
    with pytest.raises(DomainError):
        solve_qr(data, 1.0)
