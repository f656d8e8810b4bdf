"""Hessian windows, gap sweeps, truncation quotients, and the two rigor
bounds (KAM-side eta control, strong-coupling gap floor)."""

import numpy as np
import pytest

from fkgap import (
    Clamped,
    Configuration,
    FrequencyModule,
    Lagrangian,
    QuasiPeriodicPotential,
    QuotientRow,
    ai_gap_bound,
    assemble_hessian_window,
    cosine_well,
    gap_sweep,
    hull_newton_solve,
    kam_eta_bound,
    kam_truncation_data,
    kam_truncation_quotient,
    quadratic_interaction,
    quadratic_quartic_interaction,
    residual,
    scalar_fk_lagrangian,
    spectral_extrema,
    sturm_eigen_tridiagonal,
    trig_polynomial_well,
)

GOLDEN = 0.6180339887498949


def integer_chain(N, lam=20.0):
    L = Lagrangian(quadratic_interaction(1), cosine_well(1, coupling=lam))
    n0 = -(N // 2)
    vals = np.arange(n0, n0 + N, dtype=float).reshape(-1, 1)
    cl = Clamped(np.array([float(n0 - 1)]), np.array([float(n0 + N)]))
    return L, Configuration(n0, vals, np.array([1.0]), cl)


def free_chain(N):
    # V = 0 at unit rotation number: pure discrete Laplacian with clamps
    L = scalar_fk_lagrangian(None)
    n0 = -(N // 2)
    vals = np.arange(n0, n0 + N, dtype=float).reshape(-1, 1)
    cl = Clamped(np.array([float(n0 - 1)]), np.array([float(n0 + N)]))
    return L, Configuration(n0, vals, np.array([1.0]), cl)


# ---------------------------------------------------------------------------
# window assembly


def test_laplacian_closed_form():
    L, c = free_chain(40)
    H = assemble_hessian_window(L, c)
    diag, off = H.as_tridiagonal()
    assert np.allclose(diag, 2.0, atol=1e-15)
    assert np.allclose(off, -1.0, atol=1e-15)
    eig = np.sort(sturm_eigen_tridiagonal(diag, off, which="all", tol=1e-12))
    j = np.arange(1, 41)
    expect = 2.0 - 2.0 * np.cos(j * np.pi / 41.0)
    assert np.max(np.abs(eig - expect)) <= 1e-10


def test_onsite_shift_closed_form():
    L, c = integer_chain(50)
    H = assemble_hessian_window(L, c)
    diag, off = H.as_tridiagonal()
    assert np.allclose(diag, 22.0, atol=1e-13)
    eig = np.sort(sturm_eigen_tridiagonal(diag, off, which="all", tol=1e-12))
    j = np.arange(1, 51)
    expect = 22.0 - 2.0 * np.cos(j * np.pi / 51.0)
    assert np.max(np.abs(eig - expect)) <= 1e-9


def test_hessian_window_symmetry():
    I = quadratic_quartic_interaction(2)
    W = trig_polynomial_well(2, [(0.4, (1.0, 0.3), 0.2), (0.3, (0.0, 2.0), 0.0)], coupling=6.0)
    L = Lagrangian(I, W)
    rng = np.random.default_rng(5)
    vals = rng.uniform(-1, 1, size=(7, 2))
    c = Configuration(0, vals, np.array([0.5, 0.25]), Clamped(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)))
    H = assemble_hessian_window(L, c)
    D = H.to_dense()
    assert np.max(np.abs(D - D.T)) <= 1e-12


def fd_jacobian(L, c, step=1e-5):
    base = residual(L, c)
    N, d = c.values.shape
    J = np.zeros((N * d, N * d))
    for n in range(N):
        for i in range(d):
            bumped = c.values.copy()
            bumped[n, i] += step
            rp = residual(L, c.with_values(bumped))
            bumped[n, i] -= 2 * step
            rm = residual(L, c.with_values(bumped))
            J[:, n * d + i] = ((rp - rm) / (2 * step)).ravel()
    del base
    return J


def test_hessian_matches_fd_scalar_family():
    mod = FrequencyModule((1.0, GOLDEN))
    V = QuasiPeriodicPotential(mod, (((1, 0), 0.3, 0.1), ((1, 1), 0.2, 0.0)))
    L = scalar_fk_lagrangian(V)
    rng = np.random.default_rng(6)
    vals = rng.uniform(-2, 2, size=(6, 1))
    c = Configuration(0, vals, np.array([0.5]), Clamped(np.array([-0.3]), np.array([3.3])))
    H = assemble_hessian_window(L, c).to_dense()
    J = fd_jacobian(L, c)
    assert np.max(np.abs(H - J)) / max(1.0, np.max(np.abs(H))) <= 1e-6


def test_hessian_matches_fd_vector_family():
    I = quadratic_quartic_interaction(2)
    W = trig_polynomial_well(2, [(0.5, (1.0, 0.0), 0.0), (0.25, (1.0, 2.0), 0.4)], coupling=5.0)
    L = Lagrangian(I, W)
    rng = np.random.default_rng(7)
    vals = rng.uniform(-1, 1, size=(5, 2))
    c = Configuration(0, vals, np.array([0.4, 0.2]), Clamped(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)))
    H = assemble_hessian_window(L, c).to_dense()
    J = fd_jacobian(L, c)
    assert np.max(np.abs(H - J)) / max(1.0, np.max(np.abs(H))) <= 1e-6


# ---------------------------------------------------------------------------
# strong-coupling gap bound


def test_ai_gap_bound_anchor():
    b = ai_gap_bound(20.0, np.sqrt(2.0) / 2.0, 1.0, 4.0)
    assert b.value == pytest.approx((20.0 * np.sqrt(0.5) - 4.0) / 24.0, rel=1e-14)
    assert b.value == pytest.approx(0.42258898432212294, abs=1e-15)
    assert b.interaction_norm_bound == 4.0
    assert b.onsite_inverse_norm_bound == pytest.approx(1.0 / (20.0 * np.sqrt(0.5)), rel=1e-14)


def test_ai_gap_bound_monotone_in_coupling():
    bounds = [ai_gap_bound(lam, 0.7, 1.0, 4.0).value for lam in (10.0, 20.0, 40.0, 80.0)]
    assert all(b2 > b1 for b1, b2 in zip(bounds, bounds[1:]))
    # saturates below m / M_v
    assert bounds[-1] < 0.7


def test_ai_gap_bound_domain_errors():
    with pytest.raises(ValueError):
        ai_gap_bound(5.0, 0.7, 1.0, 4.0)  # lam m <= K: no certified gap
    with pytest.raises(ValueError):
        ai_gap_bound(20.0, 0.7, 0.5, 4.0)  # M_v < m is inconsistent
    with pytest.raises(ValueError):
        ai_gap_bound(20.0, 0.0, 1.0, 4.0)


def test_gap_exceeds_ai_bound_on_integer_chain():
    L, c = integer_chain(120)
    bound = ai_gap_bound(20.0, np.sqrt(2.0) / 2.0, 1.0, 4.0).value
    report = gap_sweep(L, c, [40, 80, 120], ai_bound=bound)
    assert report.verdict == "gap_persists"
    assert report.bound_ok is not None and all(report.bound_ok)
    for row in report.rows:
        assert row.gap_ratio >= bound - 0.02
        # exact spectrum floor: abs_min >= 22 - 2 = 20
        assert row.abs_min >= 20.0 - 1e-9


# ---------------------------------------------------------------------------
# truncation quotients


def test_free_chain_quotients_exact():
    V0 = QuasiPeriodicPotential(FrequencyModule((1.0, GOLDEN)), ())
    L = scalar_fk_lagrangian(V0)
    h = hull_newton_solve(V0, 1.0, cutoff=1, max_iter=5)
    for k in (4, 12, 112):
        q = kam_truncation_quotient(L, h, 0.0, k)
        assert q == pytest.approx(2.0 / np.sqrt(2.0 * k + 1.0), abs=1e-13)


def test_quotient_row_structure():
    V0 = QuasiPeriodicPotential(FrequencyModule((1.0, GOLDEN)), ())
    L = scalar_fk_lagrangian(V0)
    h = hull_newton_solve(V0, 1.0, cutoff=1, max_iter=5)
    row = kam_truncation_data(L, h, 0.0, 12)
    assert row.k == 12
    # identity hull: xi is the all-ones vector on 2k + 1 sites
    assert row.xi_norm == pytest.approx(np.sqrt(25.0), rel=1e-12)
    assert row.q == pytest.approx(row.eta_norm / row.xi_norm, rel=1e-12)


def test_quotient_bounds_window_abs_min():
    # the quotient is a Rayleigh-type witness: the |n| <= k + 1 window has
    # an eigenvalue no larger than q_k (plus bisection slack)
    mod = FrequencyModule((1.0, GOLDEN))
    V = QuasiPeriodicPotential(mod, (((1, 0), 0.01, 0.0), ((0, 1), 0.01, 0.0)))
    L = scalar_fk_lagrangian(V)
    h = hull_newton_solve(V, 1.0, cutoff=8)
    from fkgap import sample_configuration

    for k in (10, 25):
        row = kam_truncation_data(L, h, 0.0, k)
        c = sample_configuration(h, 0.0, -(k + 1), k + 1)
        ext = spectral_extrema(assemble_hessian_window(L, c))
        assert ext.abs_min <= row.q + 1e-9


# ---------------------------------------------------------------------------
# KAM-side eta bound


def test_kam_eta_bound_anchors():
    assert kam_eta_bound(2.0, 1.0) == pytest.approx(np.sqrt(20.0), rel=1e-14)
    assert kam_eta_bound(3.0, 1.0) == pytest.approx(np.sqrt(34.0), rel=1e-14)


def test_kam_eta_bound_dominates_measured_norms():
    mod = FrequencyModule((1.0, GOLDEN))
    V = QuasiPeriodicPotential(mod, (((1, 0), 0.01, 0.0), ((0, 1), 0.01, 0.0)))
    L = scalar_fk_lagrangian(V)
    h = hull_newton_solve(V, 1.0, cutoff=8)
    from fkgap import nondegeneracy_report

    a_sup = 2.0 + V.derivative_sup_bound(2)
    M = kam_eta_bound(a_sup, nondegeneracy_report(h).n_plus_bound)
    for k in (5, 50, 200):
        row = kam_truncation_data(L, h, 0.0, k)
        assert row.eta_norm <= M


# ---------------------------------------------------------------------------
# sweep verdicts


def test_sweep_vanishes_on_free_chain():
    L, _ = free_chain(8)

    def source(N):
        _, c = free_chain(N)
        return c

    V0 = QuasiPeriodicPotential(FrequencyModule((1.0, GOLDEN)), ())
    h = hull_newton_solve(V0, 1.0, cutoff=1, max_iter=5)
    quotients = [kam_truncation_data(scalar_fk_lagrangian(V0), h, 0.0, k) for k in (4, 112)]
    report = gap_sweep(L, source, [24, 48, 96], quotients=quotients)
    assert report.verdict == "gap_vanishes"
    assert [row.window for row in report.rows] == [24, 48, 96]
    # Laplacian bottom eigenvalue ~ pi^2 / N^2 decays with N
    mins = [row.abs_min for row in report.rows]
    assert mins[0] > mins[1] > mins[2]


def test_sweep_persists_on_integer_chain():
    def source(N):
        _, c = integer_chain(N)
        return c

    L, _ = integer_chain(8)
    report = gap_sweep(L, source, [30, 60, 90])
    assert report.verdict == "gap_persists"


def test_sweep_inconclusive_on_mixed_signals():
    # quotients that do not halve + decaying window minima: neither verdict
    def source(N):
        _, c = free_chain(N)
        return c

    L, _ = free_chain(8)
    quotients = [
        QuotientRow(k=4, q=0.40, eta_norm=0.40, xi_norm=1.0),
        QuotientRow(k=8, q=0.39, eta_norm=0.39, xi_norm=1.0),
    ]
    report = gap_sweep(L, source, [24, 48], quotients=quotients)
    assert report.verdict == "inconclusive"


def test_sweep_needs_enough_windows():
    L, c = integer_chain(60)
    with pytest.raises(ValueError):
        gap_sweep(L, c, [])
