"""Two independent eigenvalue routes refereeing each other.

Every spectral claim in the package rests on the Sturm bisection path,
so a second opinion matters: cyclic Jacobi rotations share no code and
no algorithmic idea with bisection.  This script races them on random
tridiagonal matrices and on an actual phonon window.

Run:  python3 demos/eigensolver_cross_check.py
"""

import numpy as np

from fkgap import (
    Clamped,
    Configuration,
    Lagrangian,
    assemble_hessian_window,
    cosine_well,
    householder_tridiagonalize,
    jacobi_eigen_dense,
    quadratic_interaction,
    spectral_extrema,
    sturm_eigen_tridiagonal,
)

rng = np.random.default_rng(7)

print("random tridiagonal sweep:")
worst = 0.0
for trial in range(60):
    n = int(rng.integers(2, 40))
    diag = rng.normal(scale=2.0, size=n)
    off = rng.normal(size=n - 1)
    dense = np.diag(diag)
    idx = np.arange(n - 1)
    dense[idx, idx + 1] = off
    dense[idx + 1, idx] = off
    a = np.sort(sturm_eigen_tridiagonal(diag, off, which="all"))
    b = np.sort(jacobi_eigen_dense(dense))
    worst = max(worst, float(np.max(np.abs(a - b))))
print("  60 matrices, sizes 2..39: max discrepancy %.3g" % worst)

# a dense symmetric matrix goes through Householder reduction first
A = rng.normal(size=(12, 12))
M = (A + A.T) / 2
diag, off = householder_tridiagonalize(M)
a = np.sort(sturm_eigen_tridiagonal(diag, off, which="all"))
b = np.sort(jacobi_eigen_dense(M))
print("dense 12x12 via Householder + Sturm vs direct Jacobi: %.3g" % float(np.max(np.abs(a - b))))

# the same pair of opinions on a physical window: pinned chain at lam = 20
L = Lagrangian(quadratic_interaction(1), cosine_well(1, coupling=20.0))
N = 60
vals = np.arange(-30, 30, dtype=float).reshape(-1, 1)
c = Configuration(-30, vals, np.array([1.0]), Clamped(np.array([-31.0]), np.array([30.0])))
H = assemble_hessian_window(L, c)
ext = spectral_extrema(H)
jac = np.sort(jacobi_eigen_dense(H.to_dense()))
print("\nphonon window (N = %d):" % N)
print("  Sturm   lambda_min %.10f  abs_min %.10f  lambda_max %.10f" % (ext.lambda_min, ext.abs_min, ext.lambda_max))
print("  Jacobi  lambda_min %.10f  abs_min %.10f  lambda_max %.10f" % (jac[0], float(np.min(np.abs(jac))), jac[-1]))
print("  closed form floor 22 - 2 cos(pi/%d) edge: %.10f" % (N + 1, 22.0 - 2.0 * np.cos(np.pi * N / (N + 1))))
