import numpy as np
import pytest

from toneprobe.contour import LoessError, loess_fit


def oracle_point(x, y, g, span, degree):
    """Independent single-point tricube WLS solve (the brute-force check)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = len(x)
    r = int(np.ceil(span * n))
    d = np.abs(x - g)
    h = np.sort(d)[r - 1]
    w = np.zeros(n)
    inside = d < h
    w[inside] = (1 - (d[inside] / h) ** 3) ** 3
    cols = [(x - g) ** k for k in range(degree + 1)]
    X = np.column_stack(cols)
    W = np.diag(w)
    beta = np.linalg.solve(X.T @ W @ X, X.T @ W @ y)
    return beta[0]


def test_affine_data_reproduced_exactly():
    x = np.linspace(0, 1, 40)
    y = 2.0 * x + 1.0
    fit = loess_fit(x, y, degree=1)
    assert np.max(np.abs(fit.fitted - y)) < 1e-9
    assert np.max(fit.ci_high - fit.ci_low) < 1e-7


def test_constant_data():
    x = np.linspace(0, 5, 25)
    fit = loess_fit(x, np.full(25, 3.25))
    assert np.allclose(fit.fitted, 3.25, atol=1e-10)


def test_quadratic_reproduced_by_degree_two():
    x = np.linspace(-1, 1, 30)
    y = 0.5 * x**2 - x + 2
    fit = loess_fit(x, y, degree=2)
    assert np.max(np.abs(fit.fitted - y)) < 1e-9


def test_matches_pointwise_oracle_on_random_data():
    rng = np.random.default_rng(42)
    for trial in range(25):
        n = int(rng.integers(15, 60))
        x = np.sort(rng.uniform(0, 10, n))
        y = np.sin(x) + rng.normal(0, 0.3, n)
        span = float(rng.uniform(0.35, 1.0))
        degree = int(rng.integers(1, 3))
        grid = rng.uniform(x.min(), x.max(), 7)
        fit = loess_fit(x, y, span=span, degree=degree, grid=grid)
        for j, g in enumerate(grid):
            assert fit.fitted[j] == pytest.approx(
                oracle_point(x, y, g, span, degree), abs=1e-9
            )


def test_reordering_invariance():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, 30)
    y = rng.normal(0, 1, 30)
    grid = np.linspace(0.1, 0.9, 9)
    f1 = loess_fit(x, y, grid=grid)
    perm = rng.permutation(30)
    f2 = loess_fit(x[perm], y[perm], grid=grid)
    assert np.allclose(f1.fitted, f2.fitted)
    assert np.allclose(f1.se, f2.se)


def test_ci_brackets_fit():
    rng = np.random.default_rng(2)
    x = np.sort(rng.uniform(0, 1, 50))
    y = x + rng.normal(0, 0.2, 50)
    fit = loess_fit(x, y)
    assert np.all(fit.ci_low <= fit.fitted) and np.all(fit.fitted <= fit.ci_high)
    assert np.all(fit.se >= 0)


def test_degenerate_design_rejected():
    x = np.full(10, 2.0)
    y = np.arange(10.0)
    with pytest.raises(LoessError, match="degenerate"):
        loess_fit(x, y, degree=1)


def test_preconditions():
    with pytest.raises(LoessError):
        loess_fit([0.0, 1.0], [0.0, 1.0], degree=1)  # too few points
    x = np.linspace(0, 1, 10)
    with pytest.raises(LoessError):
        loess_fit(x, x, span=0.1, degree=2)  # span*n < degree+1
    with pytest.raises(LoessError):
        loess_fit(x, x, degree=3)
    with pytest.raises(LoessError):
        loess_fit(x, x, span=1.5)


def test_default_grid_is_sorted_unique_x():
    x = np.array([0.5, 0.1, 0.5, 0.9, 1.3])
    y = np.array([1.0, 2.0, 1.0, 3.0, 4.0])
    fit = loess_fit(x, y, degree=1, span=1.0)
    assert np.array_equal(fit.grid_x, [0.1, 0.5, 0.9, 1.3])
