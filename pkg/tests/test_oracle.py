import csv

import numpy as np
import pytest

from slct.errorfn import KEvaluator, coeff_sos_linear, monomial, sum_of_squares
from slct.linear import LinearArchitecture, LinearNetwork
from slct.oracle import (BLOCK_ROWS, InsufficientHits, LCTEstimate, estimate_lct, estimate_lct_laplace,
                         estimate_lct_volume, sample_small_values)

AB2 = monomial([2, 2])


def combined_z(a: LCTEstimate, b: LCTEstimate):
    return (a.lambda_hat - b.lambda_hat) / np.hypot(a.stderr_lambda, b.stderr_lambda)


# -- validation and plumbing -------------------------------------------------

def test_preconditions():
    with pytest.raises(ValueError):
        estimate_lct_volume(AB2, n_samples=10**4)
    with pytest.raises(ValueError):
        estimate_lct_volume(AB2, eps_grid=np.geomspace(1e-6, 1e-2, 7), n_samples=10**5)
    with pytest.raises(ValueError):
        estimate_lct_volume(AB2, eps_grid=np.geomspace(1e-5, 1e-2, 13), n_samples=10**5)
    with pytest.raises(ValueError):
        estimate_lct_laplace(AB2, n_grid=np.geomspace(1e2, 1e4, 13), n_samples=10**5)
    with pytest.raises(ValueError):
        estimate_lct_volume(AB2, radius=0, n_samples=10**5)
    with pytest.raises(ValueError):
        estimate_lct(AB2, "mcmc")


def test_insufficient_hits():
    with pytest.raises(InsufficientHits, match="insufficient hits"):
        estimate_lct_volume(AB2, eps_grid=np.geomspace(1e-30, 1e-20, 10), n_samples=10**5)


def test_sampling_is_thread_invariant():
    n = 3 * BLOCK_ROWS + 17
    one = np.sort(sample_small_values(AB2, n, 5, 0.5, threads=1))
    four = np.sort(sample_small_values(AB2, n, 5, 0.5, threads=4))
    assert one.size == n
    np.testing.assert_array_equal(one, four)


def test_bit_identical_estimates():
    a = estimate_lct_volume(AB2, n_samples=2 * 10**5, seed=3, threads=1)
    b = estimate_lct_volume(AB2, n_samples=2 * 10**5, seed=3, threads=3)
    assert a == b
    c = estimate_lct_laplace(AB2, n_samples=2 * 10**5, seed=3, threads=1)
    d = estimate_lct_laplace(AB2, n_samples=2 * 10**5, seed=3, threads=2)
    assert c == d
    assert estimate_lct_volume(AB2, n_samples=2 * 10**5, seed=4) != a


def test_estimate_fields_and_csv(tmp_path):
    est = estimate_lct_volume(AB2, n_samples=2 * 10**5, seed=1)
    assert est.method == "volume" and est.samples_used == 2 * 10**5
    assert est.lambda_hat >= 0 and est.stderr_lambda >= 0 and 0 <= est.fit_r2 <= 1
    assert sum(est.used) >= 4
    path = tmp_path / "diag.csv"
    est.write_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["eps_or_n", "hits", "logV_or_logZ"]
    assert len(rows) - 1 == sum(est.used)
    eps, hits, logv = map(float, rows[1])
    assert logv == pytest.approx(np.log(hits / est.samples_used))
    doc = est.to_json()
    assert doc["lambdaHat"] == est.lambda_hat and doc["method"] == "volume"


def test_window_respects_dropout_rules():
    est = estimate_lct_volume(AB2, n_samples=2 * 10**5, seed=2)
    for h, u in zip(est.hits, est.used):
        assert u == (100 <= h <= 0.05 * 2 * 10**5)
    lap = estimate_lct_laplace(AB2, n_samples=2 * 10**5, seed=2)
    for h, v, u in zip(lap.hits, lap.log_values, lap.used):
        assert u == (h >= 100 and np.exp(v) <= 0.05)


def test_positive_volume_zero_set_rejected():
    flat = KEvaluator(lambda W, cap: np.maximum(W[:, 0], 0.0) ** 2, [0.0])
    with pytest.raises(RuntimeError):
        estimate_lct_volume(flat, n_samples=10**5)


# -- statistical behaviour (10^6 draws each) -----------------------------------

BATTERY = {
    "u2": (monomial([2]), 0.5),
    "u2v2": (monomial([2, 2]), 0.5),
    "u4": (monomial([4]), 0.25),
    "u2+v2": (sum_of_squares([lambda W: W[:, 0], lambda W: W[:, 1]], [0, 0]), 1.0),
    "u2v4": (monomial([2, 4]), 0.25),
}


@pytest.mark.slow
@pytest.mark.parametrize("name", BATTERY)
def test_normal_crossing_battery(name):
    K, lam = BATTERY[name]
    vol = estimate_lct_volume(K, seed=7)
    lap = estimate_lct_laplace(K, seed=7)
    assert abs(vol.z_score(lam)) <= 2, vol
    assert abs(lap.z_score(lam)) <= 2, lap
    assert abs(combined_z(vol, lap)) <= 2


@pytest.mark.slow
def test_fixed_grid_example():
    est = estimate_lct_volume(AB2, radius=1.0, eps_grid=np.geomspace(1e-8, 1e-2, 13), seed=11)
    assert 0.43 <= est.lambda_hat <= 0.57


@pytest.mark.slow
def test_laplace_examples():
    lap = estimate_lct_laplace(AB2, seed=13)
    assert abs(lap.lambda_hat - 0.5) < 0.1
    assert lap.loglog_coef is not None and lap.loglog_coef > 0
    reg = estimate_lct_laplace(BATTERY["u2+v2"][0], seed=13)
    assert abs(reg.lambda_hat - 1.0) < 0.15
    arch = LinearArchitecture((2, 2, 2))
    P = [[1, 0], [0, 0]]
    rrr = estimate_lct_laplace(coeff_sos_linear(arch, LinearNetwork(arch, (P, P))), seed=13)
    assert abs(rrr.lambda_hat - 2.0) <= 0.3


@pytest.mark.slow
def test_generator_invariance():
    f1 = lambda W: W[:, 0] * W[:, 1]  # noqa: E731
    f2 = lambda W: W[:, 0] ** 2  # noqa: E731
    a = sum_of_squares([f1, f2], [0, 0])
    b = sum_of_squares([lambda W: f1(W) + f2(W), lambda W: f1(W) - f2(W)], [0, 0])
    ea, eb = estimate_lct_volume(a, seed=17), estimate_lct_volume(b, seed=17)
    assert abs(combined_z(ea, eb)) <= 2


@pytest.mark.slow
@pytest.mark.parametrize("factor", [1e-3, 10.0])
def test_scale_robustness(factor):
    base = estimate_lct_volume(AB2, seed=19)
    scaled = estimate_lct_volume(AB2.scaled(factor), seed=19)
    assert abs(scaled.lambda_hat - base.lambda_hat) < base.stderr_lambda
