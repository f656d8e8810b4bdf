"""Anatomy of an expansivity certificate.

The strong-coupling route needs three facts about the force psi and its
zero set O: the zeros cover the line at scale R, psi actually vanishes
on O, and psi expands at rate m on the r-balls around each zero.  This
script builds certificates for forces that pass and fail each condition.

Run:  python3 demos/aubry_criterion.py
"""

import numpy as np

from fkgap import SeparableLattice, check_aubry_criterion

TWO_PI = 2.0 * np.pi
O = SeparableLattice(np.array([0.5]))
dom = (np.array([-2.0]), np.array([2.0]))


def describe(tag, cert):
    print("%s:" % tag)
    print("  (1) covering   %s  worst %.4g at %s" % ("ok " if cert.covering_ok else "BAD", cert.covering_worst, cert.covering_witness))
    print("  (2) zeros      %s  worst %.4g at %s" % ("ok " if cert.zeros_ok else "BAD", cert.zeros_worst, cert.zeros_witness))
    print("  (3) expansion  %s  worst %.4g (method %s)" % ("ok " if cert.expansion_ok else "BAD", cert.expansion_worst, cert.method))
    print("  => %s\n" % ("certified" if cert.passed else "not certified"))


# the healthy case: sin forcing, zeros every half step, slope 1 at zeros
cert = check_aubry_criterion(
    psi=lambda x: np.sin(TWO_PI * x) / TWO_PI,
    zero_set=O,
    R=0.25,
    r=0.125,
    m=0.70,
    domain=dom,
    grid_step=1e-3,
    psi_jacobian=lambda x: np.cos(TWO_PI * np.asarray(x, dtype=float))[..., None],
)
describe("sin force on (1/2) Z", cert)

# a constant offset never vanishes: condition (2) must fail
cert = check_aubry_criterion(
    psi=lambda x: np.full_like(np.asarray(x, dtype=float), 0.01),
    zero_set=O, R=0.25, r=0.125, m=0.70, domain=dom, grid_step=1e-3,
)
describe("psi = 0.01 (no zeros)", cert)

# the zero force vanishes everywhere but expands nowhere: (3) fails
cert = check_aubry_criterion(
    psi=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    zero_set=O, R=0.25, r=0.125, m=0.70, domain=dom, grid_step=1e-3,
)
describe("psi = 0 (flat)", cert)

# a zero set that is too sparse for the requested covering radius
cert = check_aubry_criterion(
    psi=lambda x: np.sin(TWO_PI * x) / TWO_PI,
    zero_set=SeparableLattice(np.array([2.0])),
    R=0.25, r=0.125, m=0.70, domain=dom, grid_step=1e-3,
)
describe("sparse zero set (spacing 2)", cert)

# monotonicity: a certificate survives relaxing every demand
relaxed = check_aubry_criterion(
    psi=lambda x: np.sin(TWO_PI * x) / TWO_PI,
    zero_set=O, R=0.30, r=0.10, m=0.50, domain=dom, grid_step=1e-3,
    psi_jacobian=lambda x: np.cos(TWO_PI * np.asarray(x, dtype=float))[..., None],
)
print("relaxed demands (R 0.30, r 0.10, m 0.50): %s" % ("certified" if relaxed.passed else "not certified"))
