import numpy as np
import pytest
import scipy.linalg

from obsforge.errors import NumericError
from obsforge.numerics import (
    eig,
    is_hurwitz,
    lambda_min_sym,
    place_poles_dual,
    solve_lyapunov,
    spectral_abscissa,
    spectral_norm,
    spectrum_distance,
)


def test_eig_diagonal_exact():
    M = np.diag([-3.0, -1.0, 2.0])
    pairs = eig(M)
    assert np.allclose(pairs.values, [-3.0, -1.0, 2.0])
    for lam, v in pairs:
        assert np.linalg.norm(M @ v - lam * v) < 1e-12
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12


def test_eig_conjugates_adjacent_positive_first():
    # rotation-like block: eigenvalues -1 +/- 2j plus a real one
    M = np.array([[-1.0, 2.0, 0.0], [-2.0, -1.0, 0.0], [0.0, 0.0, -5.0]])
    vals = eig(M).values
    assert vals[0] == pytest.approx(-5.0)
    assert vals[1] == pytest.approx(-1.0 + 2.0j)
    assert vals[2] == pytest.approx(-1.0 - 2.0j)


def test_eig_random_residuals():
    rng = np.random.default_rng(11)
    for _ in range(20):
        M = rng.standard_normal((5, 5))
        pairs = eig(M)
        scale = max(1.0, spectral_norm(M))
        for lam, v in pairs:
            assert np.linalg.norm(M @ v - lam * v) <= 1e-8 * scale


def test_eig_rejects_nonsquare_and_nonfinite():
    with pytest.raises(ValueError):
        eig(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_solve_lyapunov_closed_form():
    # A = -I gives A'S + SA = -2S, so S = Y/2
    Y = np.array([[2.0, 0.4], [0.4, 1.0]])
    S = solve_lyapunov(-np.eye(2), Y)
    assert np.allclose(S, Y / 2, atol=1e-12)


def test_solve_lyapunov_matches_scipy():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        A = rng.standard_normal((n, n))
        A -= (np.max(np.linalg.eigvals(A).real) + 1.0) * np.eye(n)
        M = rng.standard_normal((n, n))
        Y = M @ M.T + n * np.eye(n)
        S = solve_lyapunov(A, Y)
        S_ref = scipy.linalg.solve_continuous_lyapunov(A.T, -Y)
        assert np.allclose(S, S_ref, atol=1e-8 * max(1.0, spectral_norm(S_ref)))


def test_solve_lyapunov_residual_and_definiteness():
    rng = np.random.default_rng(4)
    for _ in range(10):
        A = rng.standard_normal((4, 4))
        A -= (np.max(np.linalg.eigvals(A).real) + 0.5) * np.eye(4)
        Y = np.eye(4)
        S = solve_lyapunov(A, Y)
        assert np.allclose(S, S.T)
        assert np.linalg.eigvalsh(S)[0] > 0
        assert spectral_norm(A.T @ S + S @ A + Y) <= 1e-8


def test_solve_lyapunov_unstable_rejected():
    # eigenvalues +1/-1 sum to zero: Kronecker system is singular
    A = np.diag([1.0, -1.0])
    with pytest.raises(NumericError):
        solve_lyapunov(A, np.eye(2))
    # strictly anti-stable A solves fine but S is negative definite
    with pytest.raises(NumericError):
        solve_lyapunov(np.eye(2), np.eye(2))


def test_solve_lyapunov_shape_mismatch():
    with pytest.raises(ValueError):
        solve_lyapunov(np.eye(2), np.eye(3))


def test_place_poles_dual_simple():
    F = np.array([[0.0, 1.0], [0.0, 0.0]])  # double integrator, dual pair
    H = np.array([[1.0, 0.0]])
    desired = np.array([-2.0, -3.0])
    L = place_poles_dual(F, H, desired)
    assert L.shape == (2, 1)
    placed = np.linalg.eigvals(F + L @ H)
    assert spectrum_distance(placed, desired.astype(complex)) < 1e-9


def test_place_poles_dual_complex_targets():
    rng = np.random.default_rng(5)
    for _ in range(25):
        n = int(rng.integers(2, 5))
        F = rng.standard_normal((n, n))
        H = rng.standard_normal((1, n))
        # conjugate-closed target set: one pair if room, rest real
        targets = [-1.0 - i for i in range(n)]
        if n >= 2:
            targets[0] = -1.5 + 1.0j
            targets[1] = -1.5 - 1.0j
        desired = np.array(targets, dtype=complex)
        try:
            L = place_poles_dual(F, H, desired)
        except NumericError:
            continue  # randomly unobservable pair, allowed
        placed = np.linalg.eigvals(F + L @ H)
        assert spectrum_distance(placed, desired) < 1e-6


def test_place_poles_dual_requires_conjugate_closure():
    F = np.zeros((2, 2))
    H = np.array([[1.0, 0.0]])
    with pytest.raises(ValueError):
        place_poles_dual(F, H, np.array([-1.0 + 1.0j, -2.0]))


def test_place_poles_dual_unobservable_pair():
    F = np.diag([-1.0, -2.0])
    H = np.array([[1.0, 0.0]])  # second state invisible
    with pytest.raises(NumericError):
        place_poles_dual(F, H, np.array([-3.0, -4.0]))


def test_spectral_norm_column_is_euclidean():
    v = np.array([[3.0], [4.0]])
    assert spectral_norm(v) == pytest.approx(5.0)


def test_lambda_min_sym_rejects_asymmetric():
    with pytest.raises(ValueError):
        lambda_min_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))
    assert lambda_min_sym(np.diag([2.0, 5.0])) == pytest.approx(2.0)


def test_hurwitz_and_abscissa():
    assert spectral_abscissa(np.diag([-3.0, -1.0])) == pytest.approx(-1.0)
    assert is_hurwitz(np.diag([-3.0, -1.0]))
    assert not is_hurwitz(np.diag([-3.0, 0.0]))
    # within tolerance of the axis does not count as stable
    assert not is_hurwitz(np.diag([-1e-10, -1.0]))


def test_spectrum_distance_permutation_invariant():
    a = np.array([-1.0 + 2.0j, -1.0 - 2.0j, -4.0])
    b = np.array([-4.0, -1.0 - 2.0j, -1.0 + 2.0j])
    assert spectrum_distance(a, b) == pytest.approx(0.0)
    assert spectrum_distance(a, b + 0.1) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        spectrum_distance(a, a[:2])
