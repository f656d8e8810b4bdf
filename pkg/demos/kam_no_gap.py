"""Gapless route: a smooth hull function forces the phonon gap shut.

Solves the conjugacy equation for a weakly forced chain on the golden
module, then watches the smallest window eigenvalue collapse as the
window grows, at the rate predicted by the truncation quotients.

Run:  python3 demos/kam_no_gap.py
"""

import numpy as np

from fkgap import (
    FrequencyModule,
    QuasiPeriodicPotential,
    assemble_hessian_window,
    diophantine_check,
    gap_sweep,
    hull_newton_solve,
    hull_residual,
    kam_eta_bound,
    kam_truncation_data,
    nondegeneracy_report,
    sample_configuration,
    scalar_fk_lagrangian,
    spectral_extrema,
)

GOLDEN = 0.6180339887498949

module = FrequencyModule((1.0, GOLDEN))
V = QuasiPeriodicPotential(module, (((1, 0), 0.01, 0.0), ((0, 1), 0.01, 0.0)))

# the frequency module must stay clear of resonances for the small
# divisors to be invertible
dio = diophantine_check(1.0, module, nu=0.01, tau=1.0, k_max=8)
print("diophantine check: %s (worst scaled ratio %.3g)" % ("PASS" if dio.passed else "FAIL", dio.worst_ratio))

h = hull_newton_solve(V, omega=1.0, cutoff=8, tol=1e-10)
_, res = hull_residual(h, V)
print("hull solved: residual sup %.3g, correction l2 norm %.3g" % (res, h.norm_l2()))

nd = nondegeneracy_report(h)
print("sliding mode range: [%.6f, %.6f]" % (1.0 / nd.n_minus, nd.n_plus))

# truncated sliding modes witness eigenvalues of size q_k near zero
L = scalar_fk_lagrangian(V)
a_sup = 2.0 + V.derivative_sup_bound(2)
M = kam_eta_bound(a_sup, nd.n_plus_bound)
print("\n  k      q_k        2/sqrt(2k+1)   ||eta||  (bound M = %.3f)" % M)
quotients = []
for k in (100, 400, 1600):
    row = kam_truncation_data(L, h, 0.0, k)
    quotients.append(row)
    print("%5d   %.6f   %.6f       %.4f" % (k, row.q, 2.0 / np.sqrt(2 * k + 1), row.eta_norm))

# and the actual window spectra follow them down
def source(N):
    n0 = -(N // 2)
    return sample_configuration(h, 0.0, n0, n0 + N - 1)

report = gap_sweep(L, source, [50, 100, 200], quotients=quotients)
print("\n  N    abs_min")
for row in report.rows:
    print("%4d   %.8f" % (row.window, row.abs_min))
print("\nverdict: %s" % report.verdict)

# cross-check one window against the quotient it should undercut
c = source(2 * 101 + 1)
ext = spectral_extrema(assemble_hessian_window(L, c))
print("window |n| <= 101: abs_min %.3g <= q_100 %.3g" % (ext.abs_min, quotients[0].q))
