import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evmcv import distributions as dist
from evmcv.oracle import score_gradient_error
from evmcv.rng import derive_seed, generator


def all_densities():
    return {
        "std_normal": dist.std_normal(3),
        "exp1": dist.exponential_unit(),
        "mvn": dist.mvn(dist.random_covariance(4, 3)),
        "lognormal_gbm": dist.lognormal_gbm(1.0, 0.5, 1.0, 1.0),
        "product": dist.product_density(
            [dist.std_normal(1), dist.exponential_unit(), dist.lognormal_gbm(0.8, 0.5, 1.0, 1.0)]
        ),
    }


# --- standard normal -------------------------------------------------------------


def test_std_normal_score_and_ratios():
    d = dist.std_normal(3)
    assert np.array_equal(d.score(np.zeros(3)), np.zeros(3))
    assert d.second_ratio(0, 0, np.zeros(3)) == -1.0
    assert d.second_ratio(0, 1, np.array([1.0, 1.0, 0.0])) == 1.0
    x = np.array([[0.3, -1.2, 2.0]])
    np.testing.assert_allclose(d.score(x), -x)
    np.testing.assert_allclose(d.hessian_ratio(x)[0], np.outer(x[0], x[0]) - np.eye(3))


def test_std_normal_rejects_bad_dim():
    with pytest.raises(ValueError):
        dist.std_normal(0)


# --- exponential -----------------------------------------------------------------


def test_exponential_score_constant():
    d = dist.exponential_unit()
    np.testing.assert_array_equal(d.score(np.array([0.5, 3.7]))[:, 0], [-1.0, -1.0])
    assert not d.vanishes_at_boundary[0]


@pytest.mark.parametrize("x", [0.0, -1.0, np.nan])
def test_exponential_outside_support(x):
    with pytest.raises(dist.OutsideSupportError):
        dist.exponential_unit().score(np.array([x]))


def test_exponential_sample_mean():
    pts = dist.exponential_unit().sample(100_000, 4).points
    assert abs(pts.mean() - 1.0) <= 3 / np.sqrt(100_000)
    assert pts.min() > 0


# --- multivariate normal ---------------------------------------------------------


def test_mvn_identity_reduces_to_standard():
    d = dist.mvn(dist.CovarianceSpec(np.eye(3)))
    x = np.array([[0.5, -1.0, 2.0]])
    np.testing.assert_allclose(d.score(x), -x)
    np.testing.assert_allclose(d.hessian_ratio(x)[0], np.outer(x[0], x[0]) - np.eye(3))


def test_mvn_diag_two():
    d = dist.mvn(dist.CovarianceSpec(np.array([[2.0]])))
    assert d.score(np.array([2.0]))[0] == pytest.approx(-1.0)


@pytest.mark.parametrize(
    "matrix",
    [np.array([[1.0, 0.5], [0.4, 1.0]]), np.array([[1.0, 2.0], [2.0, 1.0]]), -np.eye(2)],
)
def test_covariance_rejects_bad_matrix(matrix):
    with pytest.raises(ValueError):
        dist.CovarianceSpec(matrix)


def test_covariance_json_round_trip():
    spec = dist.random_covariance(4, 9)
    back = dist.CovarianceSpec.from_json(spec.to_json())
    np.testing.assert_array_equal(back.matrix, spec.matrix)
    assert isinstance(json.loads(spec.to_json()), list)


def test_random_covariance_eigenvalues():
    spec = dist.random_covariance(10, 1)
    np.testing.assert_allclose(np.linalg.eigvalsh(spec.matrix), np.linspace(0.2, 2.0, 10),
                               atol=1e-10)
    np.testing.assert_array_equal(spec.matrix, dist.random_covariance(10, 1).matrix)
    np.testing.assert_allclose(dist.random_covariance(1, 5).matrix, [[0.2]])


def test_mvn_sample_covariance_within_five_stderr():
    spec = dist.random_covariance(5, 2)
    pts = dist.mvn(spec).sample(100_000, 8).points
    emp = np.cov(pts, rowvar=False)
    s = spec.matrix
    # Var of a sample covariance entry: (s_ii s_jj + s_ij^2) / n
    se = np.sqrt((np.outer(np.diag(s), np.diag(s)) + s * s) / pts.shape[0])
    assert np.all(np.abs(emp - s) <= 5 * se)


# --- log-normal ------------------------------------------------------------------


def test_lognormal_score_closed_form_and_fd():
    d = dist.lognormal_gbm(1.0, 0.5, 1.0, 1.0)
    x = 1.3
    expected = -1 / x - (np.log(x) - 0.0 - (0.5 - 0.5) * 1.0) / x
    assert d.score(np.array([x]))[0] == pytest.approx(expected, rel=1e-14)
    assert score_gradient_error(d, np.array([[x]])) <= 1e-6


def test_lognormal_moments():
    d = dist.lognormal_gbm(1.2, 0.5, 1.0, 1.0)
    pts = d.sample(100_000, 3).points[:, 0]
    se = pts.std(ddof=1) / np.sqrt(pts.size)
    assert abs(pts.mean() - 1.2 * np.exp(0.5)) <= 3 * se
    assert np.var(np.log(pts), ddof=1) == pytest.approx(1.0, rel=0.05)


def test_lognormal_rejects_tiny_points():
    with pytest.raises(dist.OutsideSupportError):
        dist.lognormal_gbm(1.0, 0.5, 1.0, 1.0).score(np.array([1e-13]))


@pytest.mark.parametrize("kw", [dict(x0=0.0), dict(sigma=0.0), dict(t=-1.0)])
def test_lognormal_rejects_bad_parameters(kw):
    args = dict(x0=1.0, mu=0.5, sigma=1.0, t=1.0)
    args.update(kw)
    with pytest.raises(ValueError):
        dist.lognormal_gbm(**args)


# --- product ---------------------------------------------------------------------


def test_product_scores():
    d = dist.product_density([dist.std_normal(1)] * 10)
    x = generator(1).normal(size=(4, 10))
    np.testing.assert_allclose(d.score(x), -x)
    e = dist.product_density([dist.exponential_unit()] * 2)
    np.testing.assert_array_equal(e.score(np.array([0.3, 2.0]))[0], [-1.0, -1.0])
    assert dist.product_density([dist.std_normal(1), dist.exponential_unit()]).dim == 2


def test_product_rejects_empty():
    with pytest.raises(ValueError):
        dist.product_density([])


# --- invariants over every density -------------------------------------------------


@pytest.mark.parametrize("name", list(all_densities()))
def test_score_matches_log_density_gradient(name):
    d = all_densities()[name]
    pts = d.sample(100, 17).points
    assert score_gradient_error(d, pts) <= 1e-6


@pytest.mark.parametrize("name", list(all_densities()))
def test_second_ratio_from_log_derivatives(name):
    d = all_densities()[name]
    if not d.has_second_ratio:
        pytest.skip("no second ratios")
    pts = d.sample(50, 5).points
    s = d.score(pts)
    fd_hess = np.empty((pts.shape[0], d.dim, d.dim))
    for j in range(d.dim):
        # relative step keeps positive-support coordinates well inside (0, inf)
        h = 1e-4 * np.clip(np.abs(pts[:, j]), 1e-2, 1.0)
        up, dn = pts.copy(), pts.copy()
        up[:, j] += h
        dn[:, j] -= h
        fd_hess[:, :, j] = (d.score(up) - d.score(dn)) / (2 * h[:, None])
    expected = fd_hess + s[:, :, None] * s[:, None, :]
    got = d.hessian_ratio(pts)
    assert np.all(np.abs(got - expected) <= 1e-5 * np.maximum(1.0, np.abs(expected)))
    np.testing.assert_array_equal(got, np.swapaxes(got, 1, 2))


@pytest.mark.parametrize("name", list(all_densities()))
def test_samples_in_support_and_deterministic(name):
    d = all_densities()[name]
    a = d.sample(500, 123)
    b = d.sample(500, 123)
    c = d.sample(500, 124)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)
    d.check_support(a.points)
    assert a.density_id == d.density_id and a.seed == 123


@pytest.mark.parametrize("name", list(all_densities()))
def test_log_density_differences_are_normalization_free(name):
    d = all_densities()[name]
    pts = d.sample(3, 2).points
    # unnormalized log-density: only differences carry meaning, and a path
    # integral of the score reproduces them
    x, y = pts[0], pts[1]
    t = np.linspace(0.0, 1.0, 2001)[:, None]
    path = x + t * (y - x)
    grad = d.score(path) @ (y - x)
    integral = np.sum((grad[1:] + grad[:-1]) / 2) * (t[1, 0] - t[0, 0])
    diff = d.log_density(y[None])[0] - d.log_density(x[None])[0]
    assert diff == pytest.approx(integral, rel=1e-5, abs=1e-7)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**64 - 1))
def test_std_normal_score_property(seed):
    d = dist.std_normal(2)
    pts = d.sample(5, seed).points
    np.testing.assert_allclose(d.score(pts), -pts)
    assert score_gradient_error(d, pts) <= 1e-6


# --- datasets and seeds ------------------------------------------------------------


def test_dataset_contract():
    with pytest.raises(ValueError):
        dist.Dataset(np.zeros((1, 2)), 0, "x")
    ds = dist.Dataset(np.arange(6.0).reshape(3, 2), 1, "x")
    assert (ds.n, ds.dim) == (3, 2)
    with pytest.raises(ValueError):
        ds.points[0, 0] = 1.0
    assert ds.column(1).points[:, 0].tolist() == [1.0, 3.0, 5.0]


def test_sample_rejects_single_point():
    with pytest.raises(ValueError):
        dist.std_normal(1).sample(1, 0)


def test_derived_streams_differ_and_repeat():
    assert derive_seed(5, "train") == derive_seed(5, "train")
    assert derive_seed(5, "train") != derive_seed(5, "test")
    assert derive_seed(5, "train") != derive_seed(6, "train")
    with pytest.raises(ValueError):
        derive_seed(-1, "train")
    with pytest.raises(ValueError):
        generator(2**64)
