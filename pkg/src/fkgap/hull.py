"""Hull functions: quasi-periodic parametrisations of chain equilibria.

A hull function h(theta) = theta + h^(theta alpha) parametrises a whole
family of scalar configurations u_n(beta) = n omega + h^((n omega + beta) alpha) + beta.
The corrugation h^ lives on the frequency torus and is stored as a
truncated Fourier series with conjugate symmetry.

The defining equation solved here is

    E[h^](s) = h^(s + w a) + h^(s - w a) - 2 h^(s) - dV^(s + a h^(s)) = 0

with dV^ the directional derivative of the lifted on-site potential along
alpha.  The sign of the on-site term is fixed so that sampled
configurations are stationary points of the window energy used everywhere
else in the package (residual and Hessian conventions agree with
`equilibrium` and `phonon`).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .errors import ConvergenceError, DegeneracyError
from .model import Clamped, Configuration, FrequencyModule, QuasiPeriodicPotential

_TWO_PI = 2.0 * math.pi


def representatives(rank: int, cutoff: int) -> list[tuple[int, ...]]:
    """One multi-index per +-k pair with 0 < |k|_inf <= cutoff.

    The representative is the member whose first nonzero component is
    positive; the list is sorted for deterministic ordering.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    reps = []
    for k in itertools.product(range(-cutoff, cutoff + 1), repeat=rank):
        nz = next((x for x in k if x != 0), 0)
        if nz > 0:
            reps.append(k)
    return sorted(reps)


def torus_grid(rank: int, size: int) -> np.ndarray:
    """Uniform product grid on the torus: (size^rank, rank) points in [0, 2 pi)."""
    if size < 2:
        raise ValueError("grid size must be >= 2")
    axis = _TWO_PI * np.arange(size) / size
    grids = np.meshgrid(*([axis] * rank), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _normalize_coeffs(rank, coeffs):
    out: dict[tuple[int, ...], complex] = {}
    for k, v in coeffs.items():
        k = tuple(int(x) for x in k)
        if len(k) != rank:
            raise ValueError("mode index %r does not match the module rank %d" % (k, rank))
        nz = next((x for x in k if x != 0), 0)
        if nz == 0:
            raise ValueError("the zero mode is excluded; hull corrugations average to zero")
        if nz < 0:
            k = tuple(-x for x in k)
            v = np.conjugate(v)
        if k in out and abs(out[k] - complex(v)) > 0:
            raise ValueError("conflicting coefficients for +-%r" % (k,))
        out[k] = complex(v)
    return out


@dataclass(frozen=True, eq=False)
class HullFunction:
    """Truncated torus Fourier series h^(s) = sum_k h_k e^{i k . s}.

    Only one representative per +-k pair is stored (h_{-k} = conj(h_k) is
    implied), the zero mode is absent, and omega is the mean spacing of
    the configurations the hull generates.
    """

    omega: float
    module: FrequencyModule
    coeffs: Mapping[tuple[int, ...], complex]
    cutoff: int

    def __post_init__(self):
        coeffs = _normalize_coeffs(self.module.rank, dict(self.coeffs))
        if any(max(abs(x) for x in k) > self.cutoff for k in coeffs):
            raise ValueError("coefficient outside the declared cutoff")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "omega", float(self.omega))

    def _tables(self):
        keys = sorted(self.coeffs)
        if not keys:
            z = np.zeros((0,))
            return np.zeros((0, self.module.rank)), z.astype(complex), z
        K = np.array(keys, dtype=float)
        c = np.array([self.coeffs[k] for k in keys])
        w = K @ self.module.as_array()
        return K, c, w

    def value(self, points) -> np.ndarray:
        """h^ at torus points of shape (..., rank)."""
        pts = np.asarray(points, dtype=float)
        K, c, _ = self._tables()
        if c.size == 0:
            return np.zeros(pts.shape[:-1])
        return 2.0 * np.real(np.exp(1j * (pts @ K.T)) @ c)

    def alpha_derivative(self, points) -> np.ndarray:
        """Directional derivative of h^ along alpha."""
        pts = np.asarray(points, dtype=float)
        K, c, w = self._tables()
        if c.size == 0:
            return np.zeros(pts.shape[:-1])
        return 2.0 * np.real(np.exp(1j * (pts @ K.T)) @ (1j * w * c))

    def l_values(self, points) -> np.ndarray:
        """Sliding-mode samples l^ = 1 + d_alpha h^."""
        return 1.0 + self.alpha_derivative(points)

    def l_sup_bound(self) -> float:
        """Coefficient bound 1 + sum_k |h_k| |k . alpha| >= sup |l^|."""
        _, c, w = self._tables()
        return 1.0 + 2.0 * float(np.abs(c) @ np.abs(w)) if c.size else 1.0

    def norm_l2(self) -> float:
        """L2 norm of h^ over the torus (Parseval)."""
        _, c, _ = self._tables()
        return math.sqrt(2.0 * float(np.sum(np.abs(c) ** 2))) if c.size else 0.0

    def coefficient_table(self) -> list[tuple[tuple[int, ...], complex]]:
        return [(k, self.coeffs[k]) for k in sorted(self.coeffs)]


@dataclass(frozen=True)
class DiophantineReport:
    """Worst scaled small-divisor ratio over a finite frequency scan."""

    nu: float
    tau: float
    k_max: int
    n_max: int
    weights: tuple[float, ...]
    worst_ratio: float
    worst_k: tuple[int, ...]
    worst_n: int
    passed: bool


@dataclass(frozen=True)
class NondegeneracyReport:
    """Grid bounds for the sliding-mode field l^ = 1 + d_alpha h^."""

    n_plus: float
    n_minus: float
    c_value: float
    grid_size: int
    l_min_abs: float
    n_plus_bound: float


def diophantine_check(
    omega: float,
    module: FrequencyModule,
    nu: float = 0.01,
    tau: float = 1.0,
    k_max: int = 10,
    n_max: Optional[int] = None,
    weights=None,
) -> DiophantineReport:
    """Scan |omega k . alpha - 2 pi n| against the weighted lower bound.

    For every nonzero |k|_inf <= k_max and |n| <= n_max the scaled ratio

        |omega k . alpha - 2 pi n| * prod_j (1 + w_j^{1+tau} |k_j|^{1+tau}) / nu

    is computed; the report carries the worst ratio and its witness.
    Ratios >= 1 everywhere mean the scan found no violation.  Weights
    default to w_j = j (1-based).
    """
    if nu <= 0 or tau < 0 or k_max < 1:
        raise ValueError("need nu > 0, tau >= 0, k_max >= 1")
    alpha = module.as_array()
    m = module.rank
    w = np.arange(1, m + 1, dtype=float) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (m,) or np.any(w <= 0):
        raise ValueError("weights must be %d positive numbers" % m)
    ks = np.array(
        [k for k in itertools.product(range(-k_max, k_max + 1), repeat=m) if any(k)],
        dtype=int,
    )
    freqs = omega * (ks @ alpha)
    if n_max is None:
        n_max = int(math.ceil(np.max(np.abs(freqs)) / _TWO_PI)) + 1
    n_star = np.clip(np.round(freqs / _TWO_PI), -n_max, n_max)
    dist = np.abs(freqs - _TWO_PI * n_star)
    denom = np.prod(1.0 + (w ** (1.0 + tau)) * (np.abs(ks) ** (1.0 + tau)), axis=1)
    ratios = dist * denom / nu
    i = int(np.argmin(ratios))
    return DiophantineReport(
        nu=nu,
        tau=tau,
        k_max=k_max,
        n_max=int(n_max),
        weights=tuple(w),
        worst_ratio=float(ratios[i]),
        worst_k=tuple(int(x) for x in ks[i]),
        worst_n=int(n_star[i]),
        passed=bool(ratios[i] >= 1.0),
    )


def hull_residual(
    h: HullFunction,
    V: QuasiPeriodicPotential,
    points: Optional[np.ndarray] = None,
    beta: float = 0.0,
    oversample: int = 4,
):
    """Samples of E[h^] (beta-translated family) and their sup-norm.

    The shift terms are evaluated spectrally (each mode is multiplied by
    2 cos(omega k . alpha) - 2, exact for the truncated series); the
    on-site term is sampled pointwise.  Default points: a product grid
    with oversample * (2 cutoff + 1) points per dimension.  Returns
    (values, sup_norm).
    """
    if V.module.rank != h.module.rank:
        raise ValueError("potential and hull live on different tori")
    if points is None:
        points = torus_grid(h.module.rank, oversample * (2 * h.cutoff + 1))
    pts = np.asarray(points, dtype=float) + beta * h.module.as_array()
    K, c, w = h._tables()
    if c.size:
        mult = 2.0 * np.cos(h.omega * w) - 2.0
        linear = 2.0 * np.real(np.exp(1j * (pts @ K.T)) @ (mult * c))
        hv = 2.0 * np.real(np.exp(1j * (pts @ K.T)) @ c)
    else:
        linear = np.zeros(pts.shape[:-1])
        hv = np.zeros(pts.shape[:-1])
    arg = pts + hv[..., None] * h.module.as_array()
    values = linear - V.hat_alpha_derivative(arg, 1)
    return values, float(np.max(np.abs(values)))


def hull_newton_solve(
    V: QuasiPeriodicPotential,
    omega: float,
    cutoff: int,
    tol: float = 1e-10,
    max_iter: int = 40,
    damping: float = 1.0,
    oversample: int = 4,
    nu: float = 0.01,
    tau: float = 1.0,
    initial: Optional[HullFunction] = None,
) -> HullFunction:
    """Solve E[h^] = 0 over zero-average modes with |k|_inf <= cutoff.

    Each step solves the linearised equation in the least-squares sense
    over the retained cosine/sine coefficients, sampled on the oversampled
    grid; convergence is declared when the sampled sup-norm of E drops
    below tol.  A residual that fails to shrink by 10% over three
    consecutive steps raises ConvergenceError (with the history attached),
    as does running out of iterations.

    A small-divisor scan runs first and only warns on failure: resonances
    show up as near-zero shift multipliers and usually surface as
    stagnation.
    """
    module = V.module
    dio = diophantine_check(omega, module, nu=nu, tau=tau, k_max=cutoff)
    if not dio.passed:
        warnings.warn(
            "small-divisor scan failed: |omega k.alpha - 2 pi n| = %g at k=%r, n=%d"
            % (dio.worst_ratio * nu, dio.worst_k, dio.worst_n),
            stacklevel=2,
        )
    reps = representatives(module.rank, cutoff)
    K = np.array(reps, dtype=float)
    w = K @ module.as_array()
    mult = 2.0 * np.cos(omega * w) - 2.0
    pts = torus_grid(module.rank, oversample * (2 * cutoff + 1))
    phases = pts @ K.T
    cosP, sinP = np.cos(phases), np.sin(phases)

    coeffs = np.zeros(len(reps), dtype=complex)
    if initial is not None:
        for i, k in enumerate(reps):
            coeffs[i] = initial.coeffs.get(k, 0.0)

    def as_hull(c):
        table = {k: c[i] for i, k in enumerate(reps) if c[i] != 0}
        return HullFunction(omega, module, table, cutoff)

    history = []
    for _ in range(max_iter + 1):
        h = as_hull(coeffs)
        res, sup = hull_residual(h, V, points=pts)
        history.append(sup)
        if not math.isfinite(sup):
            raise ConvergenceError("hull residual diverged", history)
        if sup <= tol:
            return h
        if len(history) >= 4 and history[-1] > 0.9 * history[-4]:
            raise ConvergenceError(
                "hull Newton stagnated (residual %g after %d steps)" % (sup, len(history) - 1),
                history,
            )
        # Linearisation: (mult_k - W(s)) acting on each retained basis
        # function, with W the second directional derivative of the lifted
        # potential along alpha at the displaced argument.
        hv = h.value(pts)
        arg = pts + hv[..., None] * module.as_array()
        W = V.hat_alpha_derivative(arg, 2)
        J = np.empty((pts.shape[0], 2 * len(reps)))
        J[:, : len(reps)] = (mult - W[:, None]) * (2.0 * cosP)
        J[:, len(reps) :] = (mult - W[:, None]) * (-2.0 * sinP)
        delta, *_ = np.linalg.lstsq(J, -res, rcond=None)
        coeffs = coeffs + damping * (delta[: len(reps)] + 1j * delta[len(reps) :])
    raise ConvergenceError(
        "hull Newton did not converge in %d iterations (residual %g)"
        % (max_iter, history[-1]),
        history,
    )


def nondegeneracy_report(h: HullFunction, grid_size: Optional[int] = None) -> NondegeneracyReport:
    """Sliding-mode bounds N+ = sup |l^|, N- = sup |1/l^| and the mean
    c = |< 1 / (l^ . l^ o T_{-omega alpha}) >| on a torus grid.

    Raises DegeneracyError when |l^| drops below 1e-10 anywhere on the
    grid (the reciprocal bounds would be meaningless).  n_plus_bound is
    the coefficient-sum upper bound for sup |l^| (grid-independent).
    """
    size = grid_size or 4 * (2 * h.cutoff + 1)
    pts = torus_grid(h.module.rank, size)
    l = h.l_values(pts)
    l_min = float(np.min(np.abs(l)))
    if l_min < 1e-10:
        raise DegeneracyError("sliding mode vanishes on the grid (min |l^| = %g)" % l_min)
    shifted = h.l_values(pts - h.omega * h.module.as_array())
    c_value = float(np.abs(np.mean(1.0 / (l * shifted))))
    return NondegeneracyReport(
        n_plus=float(np.max(np.abs(l))),
        n_minus=1.0 / l_min,
        c_value=c_value,
        grid_size=size,
        l_min_abs=l_min,
        n_plus_bound=h.l_sup_bound(),
    )


def _site_points(h: HullFunction, beta: float, n0: int, n1: int) -> np.ndarray:
    n = np.arange(n0, n1 + 1, dtype=float)
    return np.outer(n * h.omega + beta, h.module.as_array())


def sample_configuration(h: HullFunction, beta: float, n0: int, n1: int) -> Configuration:
    """Clamped window u_n = n omega + h^((n omega + beta) alpha) + beta.

    The clamps are the same formula evaluated at n0 - 1 and n1 + 1, so the
    window residual measures how far the hull is from an exact equilibrium.
    """
    if n1 - n0 < 0:
        raise ValueError("empty window")
    pts = _site_points(h, beta, n0 - 1, n1 + 1)
    n = np.arange(n0 - 1, n1 + 2, dtype=float)
    u = n * h.omega + h.value(pts) + beta
    return Configuration(
        n0, u[1:-1], np.array([h.omega]), Clamped(u[:1], u[-1:])
    )


def sliding_mode(h: HullFunction, beta: float, n0: int, n1: int) -> np.ndarray:
    """Tangent field of the beta-family: xi_n = l^((n omega + beta) alpha)."""
    return h.l_values(_site_points(h, beta, n0, n1))
