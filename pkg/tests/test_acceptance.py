"""Acceptance gate: the nine checks that certify the toolkit end to end.

Each criterion prints one PASS/FAIL line (visible under pytest -s) and
is enforced with pinned tolerances.  Wall-clock budgets are asserted so
regressions in algorithmic complexity fail loudly rather than silently
slowing the suite.
"""

import json
import subprocess
import sys
import time

import numpy as np

from fkgap import (
    Clamped,
    Configuration,
    FrequencyModule,
    Lagrangian,
    QuasiPeriodicPotential,
    ai_gap_bound,
    anti_integrable_solve,
    assemble_hessian_window,
    check_aubry_criterion,
    cosine_well,
    gap_sweep,
    hull_newton_solve,
    hull_residual,
    jacobi_eigen_dense,
    kam_eta_bound,
    kam_truncation_data,
    kam_truncation_quotient,
    nondegeneracy_report,
    quadratic_interaction,
    quadratic_quartic_interaction,
    residual,
    scalar_fk_lagrangian,
    spectral_extrema,
    sturm_eigen_tridiagonal,
    trig_polynomial_well,
    uniqueness_probe,
    SeparableLattice,
)

GOLDEN = 0.6180339887498949
TWO_PI = 2.0 * np.pi
SCENARIOS = (
    "kam_free_chain",
    "kam_golden_mean",
    "ai_integer_lambda20",
    "ai_alternating_lambda20",
    "ai_defect_per10_lambda20",
)


class _Gate:
    def __init__(self, num: int, budget: float):
        self.num = num
        self.budget = budget
        self.t0 = time.monotonic()
        self.checks = []

    def check(self, ok: bool, label: str):
        self.checks.append((bool(ok), label))

    def finish(self):
        elapsed = time.monotonic() - self.t0
        self.check(elapsed <= self.budget, "elapsed %.2fs <= %.0fs" % (elapsed, self.budget))
        ok = all(flag for flag, _ in self.checks)
        verdict = "PASS" if ok else "FAIL"
        if ok:
            detail = "%d checks, %.2fs" % (len(self.checks), elapsed)
        else:
            detail = "; ".join(label for flag, label in self.checks if not flag)
        print("acceptance criterion %d: %s (%s)" % (self.num, verdict, detail))
        for flag, label in self.checks:
            assert flag, "criterion %d: %s" % (self.num, label)


def free_module():
    return QuasiPeriodicPotential(FrequencyModule((1.0, GOLDEN)), ())


def golden_potential():
    mod = FrequencyModule((1.0, GOLDEN))
    return QuasiPeriodicPotential(mod, (((1, 0), 0.01, 0.0), ((0, 1), 0.01, 0.0)))


def psi_cos(x):
    return np.sin(TWO_PI * x) / TWO_PI


def psi_cos_jac(x):
    return np.cos(TWO_PI * np.asarray(x, dtype=float))[..., None]


def lattice_chain(N, lam, spacing):
    """Clamped window of N sites on the exact orbit u_n = n * spacing."""
    L = Lagrangian(quadratic_interaction(1), cosine_well(1, coupling=lam))
    n0 = -(N // 2)
    vals = (np.arange(n0, n0 + N, dtype=float) * spacing).reshape(-1, 1)
    cl = Clamped(np.array([(n0 - 1) * spacing]), np.array([(n0 + N) * spacing]))
    return L, Configuration(n0, vals, np.array([spacing]), cl)


def test_criterion_1_free_chain_quotients_exact():
    # V = 0: the truncation quotient has the closed form 2 / sqrt(2k + 1)
    gate = _Gate(1, budget=1.0)
    V0 = free_module()
    L = scalar_fk_lagrangian(V0)
    h = hull_newton_solve(V0, 1.0, cutoff=1, max_iter=5)
    worst = 0.0
    for k in (4, 12, 112, 1112):
        q = kam_truncation_quotient(L, h, 0.0, k)
        worst = max(worst, abs(q - 2.0 / np.sqrt(2.0 * k + 1.0)))
    gate.check(worst <= 1e-12, "max quotient error %.3g <= 1e-12" % worst)
    gate.finish()


def test_criterion_2_golden_mean_hull_certified():
    # eps = 0.01 forcing on the golden module: converged hull, decaying
    # quotients, and every measured eta below the a-priori bound
    gate = _Gate(2, budget=60.0)
    V = golden_potential()
    L = scalar_fk_lagrangian(V)
    h = hull_newton_solve(V, 1.0, cutoff=8, tol=1e-10, max_iter=40, oversample=4)
    _, res_sup = hull_residual(h, V)
    gate.check(res_sup <= 1e-10, "hull residual %.3g <= 1e-10" % res_sup)

    rows = [kam_truncation_data(L, h, 0.0, k) for k in (100, 400, 1600)]
    gate.check(
        rows[2].q <= rows[0].q / 3.0,
        "q_1600 = %.4g <= q_100 / 3 = %.4g" % (rows[2].q, rows[0].q / 3.0),
    )

    a_sup = 2.0 + V.derivative_sup_bound(2)
    M = kam_eta_bound(a_sup, nondegeneracy_report(h).n_plus_bound)
    eta_max = max(row.eta_norm for row in rows)
    gate.check(eta_max <= M, "max ||eta|| %.4g <= M = %.4g" % (eta_max, M))
    gate.finish()


def test_criterion_3_integer_chain_spectrum():
    # lam = 20 on the integers: exact equilibrium, shifted-Laplacian
    # spectrum, and a spectral gap above the certified floor
    gate = _Gate(3, budget=10.0)
    L, c50 = lattice_chain(50, 20.0, 1.0)
    r = residual(L, c50)
    gate.check(float(np.max(np.abs(r))) <= 1e-14, "residual %.3g <= 1e-14" % float(np.max(np.abs(r))))

    diag, off = assemble_hessian_window(L, c50).as_tridiagonal()
    eig = np.sort(sturm_eigen_tridiagonal(diag, off, which="all", tol=1e-12))
    expect = 22.0 - 2.0 * np.cos(np.arange(1, 51) * np.pi / 51.0)
    err = float(np.max(np.abs(eig - expect)))
    gate.check(err <= 1e-9, "eigenvalue error %.3g <= 1e-9 at N = 50" % err)

    bound = ai_gap_bound(20.0, np.sqrt(2.0) / 2.0, 1.0, 4.0).value
    gate.check(abs(bound - 0.42259) <= 5e-6, "certified floor %.6f ~ 0.42259" % bound)
    _, c200 = lattice_chain(200, 20.0, 1.0)
    ext = spectral_extrema(assemble_hessian_window(L, c200))
    G = ext.abs_min / max(abs(ext.lambda_min), abs(ext.lambda_max))
    gate.check(G >= 0.8333 - 1e-6, "G(200) = %.6f >= 0.8333" % G)
    gate.check(G >= bound, "G(200) >= certified floor %.5f" % bound)
    gate.finish()


def test_criterion_4_alternating_chain_gap():
    # period-2 mix of integer and half-integer wells: the on-site curvature
    # alternates +-1 and the gap stays within 2% of the lam - 2 floor
    gate = _Gate(4, budget=30.0)
    L, _ = lattice_chain(8, 20.0, 0.5)
    worst = np.inf
    for N in (50, 100, 200):
        _, c = lattice_chain(N, 20.0, 0.5)
        ext = spectral_extrema(assemble_hessian_window(L, c))
        worst = min(worst, ext.abs_min)
    gate.check(worst >= 16.0 - 0.32, "min abs_min %.4f >= 15.68" % worst)
    gate.finish()


def test_criterion_5_expansivity_certificates():
    # the cosine force certifies (R, r, m) = (1/4, 1/8, 0.70) on the
    # half-integer zero set; degenerate forces fail the right condition
    gate = _Gate(5, budget=5.0)
    O = SeparableLattice(np.array([0.5]))
    dom = (np.array([-2.0]), np.array([2.0]))
    cert = check_aubry_criterion(psi_cos, O, 0.25, 0.125, 0.70, dom, grid_step=1e-3, psi_jacobian=psi_cos_jac)
    gate.check(cert.passed, "cosine force certifies (0.25, 0.125, 0.70)")

    off = check_aubry_criterion(
        lambda x: np.full_like(np.asarray(x, dtype=float), 0.01), O, 0.25, 0.125, 0.70, dom, grid_step=1e-3
    )
    gate.check((not off.zeros_ok) and not off.passed, "psi = 0.01 fails the zero condition")

    flat = check_aubry_criterion(
        lambda x: np.zeros_like(np.asarray(x, dtype=float)), O, 0.25, 0.125, 0.70, dom, grid_step=1e-3
    )
    gate.check(flat.zeros_ok and not flat.expansion_ok, "psi = 0 fails the expansion condition")
    gate.finish()


def test_criterion_6_dual_route_eigensolvers():
    # 100 random symmetric tridiagonal matrices, sizes 2..50: bisection
    # and rotation routes agree to 1e-9
    gate = _Gate(6, budget=10.0)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 51))
        diag = rng.normal(scale=2.0, size=n)
        off = rng.normal(size=n - 1)
        dense = np.diag(diag)
        idx = np.arange(n - 1)
        dense[idx, idx + 1] = off
        dense[idx + 1, idx] = off
        a = np.sort(sturm_eigen_tridiagonal(diag, off, which="all"))
        b = np.sort(jacobi_eigen_dense(dense))
        worst = max(worst, float(np.max(np.abs(a - b))))
    gate.check(worst <= 1e-9, "max discrepancy %.3g <= 1e-9" % worst)
    gate.finish()


def test_criterion_7_hessian_is_residual_jacobian():
    # central differences of the residual reproduce the assembled window
    # for both Lagrangian families on 20 random configurations
    gate = _Gate(7, budget=10.0)
    rng = np.random.default_rng(99)
    mod = FrequencyModule((1.0, GOLDEN))
    V = QuasiPeriodicPotential(mod, (((1, 0), 0.3, 0.1), ((1, 1), 0.2, 0.0)))
    scalar = scalar_fk_lagrangian(V)
    vector = Lagrangian(
        quadratic_quartic_interaction(2),
        trig_polynomial_well(2, [(0.5, (1.0, 0.0), 0.0), (0.25, (1.0, 2.0), 0.4)], coupling=5.0),
    )
    worst = 0.0
    for trial in range(20):
        L = scalar if trial % 2 == 0 else vector
        d = L.dimension
        N = int(rng.integers(4, 9))
        vals = rng.uniform(-1.5, 1.5, size=(N, d))
        c = Configuration(0, vals, rng.uniform(0.2, 1.0, d), Clamped(rng.uniform(-2, 2, d), rng.uniform(-2, 2, d)))
        H = assemble_hessian_window(L, c).to_dense()
        J = np.zeros_like(H)
        step = 1e-5
        for n in range(N):
            for i in range(d):
                bumped = vals.copy()
                bumped[n, i] += step
                rp = residual(L, c.with_values(bumped))
                bumped[n, i] -= 2 * step
                rm = residual(L, c.with_values(bumped))
                J[:, n * d + i] = ((rp - rm) / (2 * step)).ravel()
        rel = float(np.max(np.abs(H - J))) / max(1.0, float(np.max(np.abs(H))))
        worst = max(worst, rel)
    gate.check(worst <= 1e-6, "max relative Jacobian error %.3g <= 1e-6" % worst)
    gate.finish()


def test_criterion_8_uniqueness_probe():
    # random restarts within half the isolation radius all come home
    gate = _Gate(8, budget=10.0)
    well = cosine_well(1, coupling=20.0)
    I = quadratic_interaction(1)
    O = SeparableLattice(np.array([0.5]))
    cert = check_aubry_criterion(
        psi_cos, O, 0.25, 0.125, 0.70, (np.array([-2.0]), np.array([2.0])), grid_step=1e-3, psi_jacobian=psi_cos_jac
    )
    sites = np.arange(-1, 42, dtype=float).reshape(-1, 1)
    rep = anti_integrable_solve(I, well, sites, np.array([1.0]), cert, (0, 40))
    unique = uniqueness_probe(rep, delta=0.0625, trials=5, seed=1, match_tol=1e-8)
    gate.check(unique is True, "5 restarts at delta = r/2 reconverge within 1e-8")
    gate.finish()


def test_criterion_9_bundled_runs_deterministic(tmp_path):
    # byte-identical report.json on re-run, for every bundled scenario
    gate = _Gate(9, budget=120.0)
    for name in SCENARIOS:
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / ("%s_%s" % (name, tag))
            proc = subprocess.run(
                [sys.executable, "-m", "fkgap.cli", "run", name, "--out", str(out)],
                capture_output=True,
                text=True,
                cwd=tmp_path,
            )
            gate.check(proc.returncode == 0, "%s run %s exit 0" % (name, tag))
            outs.append(out)
        same = (outs[0] / "report.json").read_bytes() == (outs[1] / "report.json").read_bytes()
        gate.check(same, "%s report.json byte-identical" % name)
        report = json.loads((outs[0] / "report.json").read_text())
        gate.check(report["verdict"] in ("gap_vanishes", "gap_persists"), "%s verdict decided" % name)
    gate.finish()
