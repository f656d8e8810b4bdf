"""Model ingredients for nearest-neighbor chains on quasi-periodic media.

A chain is a bi-infinite sequence of sites u_n in R^d coupled through a
nearest-neighbor Lagrangian

    L(x, y) = I(x - y) + lam * V(x)

where I is an interaction potential and V an on-site potential with
coupling lam.  The scalar specialisation I(s) = s^2/2, lam = 1 with a
quasi-periodic on-site potential is the classical d = 1 case.

This module holds the potential types, finite windows of configurations,
window energies, and the interaction curvature bound used by the
anti-integrable route.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

_TWO_PI = 2.0 * math.pi


def _cf_terminates(x: float, depth: int = 30, tol: float = 1e-9) -> bool:
    """True if the continued fraction of x terminates within `depth` steps.

    Termination within a short depth is the numerical signature of a
    rational number; genuinely irrational ratios keep producing nonzero
    fractional parts until float precision runs out.
    """
    x = abs(float(x))
    for _ in range(depth):
        frac = x - math.floor(x)
        if frac < tol:
            return True
        x = 1.0 / frac
    return False


@dataclass(frozen=True)
class FrequencyModule:
    """Finite set of positive base frequencies alpha_1..alpha_m.

    The frequencies span the module {k . alpha : k integer vector}; sums
    of cosines with these base frequencies are the quasi-periodic
    potentials handled by the toolkit.  Pairwise rational ratios defeat
    quasi-periodicity, so a heuristic continued-fraction check warns (but
    does not fail) when a ratio looks rational.
    """

    alphas: tuple[float, ...]

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if len(alphas) == 0:
            raise ValueError("frequency module needs at least one frequency")
        if any(a <= 0 for a in alphas):
            raise ValueError("base frequencies must be positive")
        object.__setattr__(self, "alphas", alphas)
        for i in range(len(alphas)):
            for j in range(i + 1, len(alphas)):
                if _cf_terminates(alphas[i] / alphas[j]):
                    warnings.warn(
                        "frequency ratio alpha[%d]/alpha[%d] = %.12g looks rational; "
                        "the module is not quasi-periodic" % (i, j, alphas[i] / alphas[j]),
                        stacklevel=2,
                    )

    @property
    def rank(self) -> int:
        return len(self.alphas)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alphas, dtype=float)


@dataclass(frozen=True)
class QuasiPeriodicPotential:
    """Real trigonometric sum V(theta) = sum_j c_j cos((k_j . alpha) theta + phi_j).

    Each mode is a triple (k, amplitude, phase) with k an integer vector
    of the module rank.  The same data defines the torus lift
    V^(sigma) = sum_j c_j cos(k_j . sigma + phi_j) with V(theta) = V^(theta * alpha).
    """

    module: FrequencyModule
    modes: tuple[tuple[tuple[int, ...], float, float], ...]

    def __post_init__(self):
        m = self.module.rank
        norm = []
        for k, c, phi in self.modes:
            k = tuple(int(x) for x in k)
            if len(k) != m:
                raise ValueError(
                    "mode index %r has length %d, module rank is %d" % (k, len(k), m)
                )
            norm.append((k, float(c), float(phi)))
        object.__setattr__(self, "modes", tuple(norm))

    def _tables(self):
        """(K, c, phi, w) arrays; w = k . alpha per mode."""
        if not self.modes:
            z = np.zeros((0,))
            return np.zeros((0, self.module.rank), dtype=int), z, z, z
        K = np.array([k for k, _, _ in self.modes], dtype=int)
        c = np.array([c for _, c, _ in self.modes])
        phi = np.array([p for _, _, p in self.modes])
        w = K @ self.module.as_array()
        return K, c, phi, w

    def derivative(self, theta, order: int = 0):
        """d^order/dtheta^order V(theta), vectorized over theta.

        Uses d^j cos(w t + p)/dt^j = w^j cos(w t + p + j pi/2).
        """
        if order not in (0, 1, 2):
            raise ValueError("unsupported derivative order %r" % (order,))
        theta = np.asarray(theta, dtype=float)
        _, c, phi, w = self._tables()
        if c.size == 0:
            return np.zeros(theta.shape)
        phases = np.multiply.outer(theta, w) + phi + order * (math.pi / 2.0)
        return np.cos(phases) @ (c * w**order)

    def value(self, theta):
        return self.derivative(theta, 0)

    def hat_value(self, sigma):
        """Torus lift V^ at sigma (shape (..., m))."""
        return self.hat_alpha_derivative(sigma, 0)

    def hat_alpha_derivative(self, sigma, order: int = 1):
        """Directional derivative (d_alpha)^order V^ at sigma, vectorized.

        Consistent with derivative(): hat_alpha_derivative(theta * alpha, j)
        equals derivative(theta, j).
        """
        if order not in (0, 1, 2):
            raise ValueError("unsupported derivative order %r" % (order,))
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape[-1] != self.module.rank:
            raise ValueError(
                "sigma has %d components, module rank is %d"
                % (sigma.shape[-1], self.module.rank)
            )
        K, c, phi, w = self._tables()
        if c.size == 0:
            return np.zeros(sigma.shape[:-1])
        phases = sigma @ K.T + phi + order * (math.pi / 2.0)
        return np.cos(phases) @ (c * w**order)

    def derivative_sup_bound(self, order: int) -> float:
        """Coefficient bound sum |c_j| |k_j . alpha|^order >= sup |V^(order)|."""
        _, c, _, w = self._tables()
        if c.size == 0:
            return 0.0
        return float(np.abs(c) @ np.abs(w) ** order)

    def as_well(self, coupling: float = 1.0) -> "WellPotential":
        """Adapt to the d = 1 well interface (gradient/hessian with axes)."""

        def value(x):
            return self.derivative(x[..., 0], 0)

        def gradient(x):
            return self.derivative(x[..., 0], 1)[..., None]

        def hessian(x):
            return self.derivative(x[..., 0], 2)[..., None, None]

        return WellPotential(
            dimension=1,
            value=value,
            gradient=gradient,
            hessian=hessian,
            coupling=coupling,
            name="quasi_periodic",
        )


@dataclass(frozen=True)
class WellPotential:
    """On-site potential V: R^d -> R with closed-form gradient and Hessian.

    Evaluators are vectorized: value maps (..., d) -> (...,), gradient to
    (..., d), hessian to (..., d, d).  `coupling` is the multiplier lam in
    L(x, y) = I(x - y) + lam V(x).
    """

    dimension: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    coupling: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.coupling <= 0:
            raise ValueError("coupling must be positive")

    def hessian_sup_bound(self, radius: float = 1.0, grid_step: float = 1e-3) -> float:
        """Grid estimate of sup over ||x||_inf <= radius of sigma_max(hess V(x))."""
        pts = _box_grid(self.dimension, radius, grid_step)
        H = np.asarray(self.hessian(pts))
        return float(np.max(np.abs(np.linalg.eigvalsh(H))))

    def hessian_min_singular(self, x) -> np.ndarray:
        """sigma_min of hess V at x (singular values of a symmetric matrix
        are the absolute eigenvalues)."""
        H = np.asarray(self.hessian(np.asarray(x, dtype=float)))
        return np.min(np.abs(np.linalg.eigvalsh(H)), axis=-1)


def _box_grid(d: int, radius: float, step: float) -> np.ndarray:
    n = max(2, int(round(2.0 * radius / step)) + 1)
    axis = np.linspace(-radius, radius, n)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def cosine_well(d: int = 1, coupling: float = 1.0) -> WellPotential:
    """Separable cosine well V(x) = sum_i (1 - cos(2 pi x_i)) / (4 pi^2).

    Gradient components sin(2 pi x_i)/(2 pi) vanish on the half-integer
    lattice; the Hessian is diag(cos(2 pi x_i)) with unit spectral radius.
    """

    # reduce mod 1 before scaling by 2 pi: exact for |x| < 2^52 and keeps
    # gradients at lattice points at machine zero independent of site index
    def value(x):
        return np.sum((1.0 - np.cos(_TWO_PI * np.mod(x, 1.0))) / (_TWO_PI**2), axis=-1)

    def gradient(x):
        return np.sin(_TWO_PI * np.mod(x, 1.0)) / _TWO_PI

    def hessian(x):
        x = np.asarray(x, dtype=float)
        diag = np.cos(_TWO_PI * np.mod(x, 1.0))
        out = np.zeros(x.shape + (x.shape[-1],))
        idx = np.arange(x.shape[-1])
        out[..., idx, idx] = diag
        return out

    return WellPotential(d, value, gradient, hessian, coupling, name="cosine")


def trig_polynomial_well(
    d: int, terms: list[tuple[float, tuple[float, ...], float]], coupling: float = 1.0
) -> WellPotential:
    """Sum of plane-wave cosines V(x) = sum_j c_j cos(k_j . x + phi_j)."""
    if not terms:
        raise ValueError("need at least one term")
    c = np.array([t[0] for t in terms], dtype=float)
    K = np.array([t[1] for t in terms], dtype=float)
    phi = np.array([t[2] for t in terms], dtype=float)
    if K.shape != (len(terms), d):
        raise ValueError("wavevectors must have length d = %d" % d)

    def value(x):
        return np.cos(x @ K.T + phi) @ c

    def gradient(x):
        return -(np.sin(x @ K.T + phi) * c) @ K

    def hessian(x):
        KK = K[:, :, None] * K[:, None, :]  # (terms, d, d)
        weights = -np.cos(x @ K.T + phi) * c  # (..., terms)
        return np.tensordot(weights, KK, axes=([-1], [0]))

    return WellPotential(d, value, gradient, hessian, coupling, name="trig_polynomial")


@dataclass(frozen=True)
class InteractionPotential:
    """Interaction I: R^d -> R applied to bond differences u_n - u_{n+1}.

    Evaluators are vectorized like WellPotential's.
    """

    dimension: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"


def quadratic_interaction(d: int = 1) -> InteractionPotential:
    """Harmonic springs I(s) = ||s||^2 / 2."""

    def value(s):
        return 0.5 * np.sum(s * s, axis=-1)

    def gradient(s):
        return np.array(s, dtype=float, copy=True)

    def hessian(s):
        s = np.asarray(s)
        return np.broadcast_to(np.eye(d), s.shape + (d,)).copy()

    return InteractionPotential(d, value, gradient, hessian, name="quadratic")


def quadratic_quartic_interaction(d: int = 1) -> InteractionPotential:
    """Stiffening springs I(s) = ||s||^2 / 2 + ||s||^4 / 4.

    hess I(s) = (1 + ||s||^2) Id + 2 s s^T, so sigma_max = 1 + 3 ||s||^2.
    """

    def value(s):
        q = np.sum(s * s, axis=-1)
        return 0.5 * q + 0.25 * q * q

    def gradient(s):
        q = np.sum(s * s, axis=-1)
        return s * (1.0 + q)[..., None]

    def hessian(s):
        s = np.asarray(s, dtype=float)
        q = np.sum(s * s, axis=-1)
        eye = np.broadcast_to(np.eye(d), s.shape + (d,))
        outer = s[..., :, None] * s[..., None, :]
        return (1.0 + q)[..., None, None] * eye + 2.0 * outer

    return InteractionPotential(d, value, gradient, hessian, name="quadratic_quartic")


WELL_REGISTRY: dict[str, Callable[..., WellPotential]] = {
    "cosine": cosine_well,
    "trig_polynomial": trig_polynomial_well,
}

INTERACTION_REGISTRY: dict[str, Callable[..., InteractionPotential]] = {
    "quadratic": quadratic_interaction,
    "quadratic_quartic": quadratic_quartic_interaction,
}


@dataclass(frozen=True)
class Clamped:
    """Dirichlet boundary: fixed virtual neighbors at n0 - 1 and n1 + 1."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "left", np.atleast_1d(np.asarray(self.left, dtype=float)))
        object.__setattr__(self, "right", np.atleast_1d(np.asarray(self.right, dtype=float)))


@dataclass(frozen=True, eq=False)
class Configuration:
    """Finite window u_{n0}..u_{n1} of a chain with d-component sites.

    `values` has shape (N, d); scalar chains may pass shape (N,) and are
    stored as (N, 1).  `rho` is the rotation vector the window is compared
    against.  `boundary` is either a Clamped pair of virtual neighbors or
    None for a free window.
    """

    start: int
    values: np.ndarray
    rho: np.ndarray
    boundary: Optional[Clamped] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValueError("values must be a (N,) or (N, d) array")
        rho = np.atleast_1d(np.asarray(self.rho, dtype=float))
        if rho.shape != (values.shape[1],):
            raise ValueError(
                "rho has dimension %d, sites have dimension %d"
                % (rho.shape[0], values.shape[1])
            )
        if self.boundary is not None:
            for side in (self.boundary.left, self.boundary.right):
                if side.shape != (values.shape[1],):
                    raise ValueError("clamp values must match the site dimension")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "start", int(self.start))

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    @property
    def stop(self) -> int:
        """Index n1 of the last site."""
        return self.start + self.length - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.length)

    def extended_values(self) -> np.ndarray:
        """(N + 2, d) array [left clamp, values, right clamp]."""
        if self.boundary is None:
            raise ValueError("free window has no virtual neighbors")
        return np.vstack([self.boundary.left[None, :], self.values, self.boundary.right[None, :]])

    def with_values(self, values: np.ndarray) -> "Configuration":
        return Configuration(self.start, values, self.rho, self.boundary)

    def rotation_deviation(self) -> float:
        """sup_n ||u_n - (n - a) rho - u_a|| with anchor a = 0 when the
        window contains site 0, otherwise the window start."""
        anchor = 0 if self.start <= 0 <= self.stop else self.start
        u_a = self.values[anchor - self.start]
        drift = self.values - np.outer(self.sites - anchor, self.rho) - u_a
        return float(np.max(np.linalg.norm(drift, axis=1)))

    def subwindow(self, n0: int, n1: int) -> "Configuration":
        """Clamped sub-window; clamps come from the neighboring parent
        values (or the parent clamps when the sub-window touches an edge)."""
        if n0 > n1:
            raise ValueError("empty sub-window")
        if n0 < self.start or n1 > self.stop:
            raise ValueError("sub-window exceeds the parent window")
        i0, i1 = n0 - self.start, n1 - self.start
        if i0 == 0:
            if self.boundary is None:
                raise ValueError("sub-window needs a left neighbor; parent is free")
            left = self.boundary.left
        else:
            left = self.values[i0 - 1]
        if i1 == self.length - 1:
            if self.boundary is None:
                raise ValueError("sub-window needs a right neighbor; parent is free")
            right = self.boundary.right
        else:
            right = self.values[i1 + 1]
        return Configuration(n0, self.values[i0 : i1 + 1], self.rho, Clamped(left, right))

    def centered_subwindow(self, size: int) -> "Configuration":
        if size > self.length:
            raise ValueError("requested window exceeds the configuration")
        n0 = self.start + (self.length - size) // 2
        return self.subwindow(n0, n0 + size - 1)


@dataclass(frozen=True)
class Lagrangian:
    """Nearest-neighbor bond Lagrangian L(x, y) = I(x - y) + lam V(x).

    `potential` None means V = 0.  The coupling lam is read off the well.
    d1/d2 are the partial gradients in the first/second slot; d11, d12,
    d22 the corresponding Hessian blocks (d21 is the transpose of d12 and
    equals it here since hess I is symmetric).
    """

    interaction: InteractionPotential
    potential: Optional[WellPotential] = None

    def __post_init__(self):
        if self.potential is not None and self.potential.dimension != self.interaction.dimension:
            raise ValueError("interaction and well dimensions differ")

    @property
    def dimension(self) -> int:
        return self.interaction.dimension

    @property
    def coupling(self) -> float:
        return 0.0 if self.potential is None else self.potential.coupling

    def value(self, x, y):
        out = self.interaction.value(x - y)
        if self.potential is not None:
            out = out + self.potential.coupling * self.potential.value(x)
        return out

    def d1(self, x, y):
        out = self.interaction.gradient(x - y)
        if self.potential is not None:
            out = out + self.potential.coupling * self.potential.gradient(x)
        return out

    def d2(self, x, y):
        return -self.interaction.gradient(x - y)

    def d11(self, x, y):
        out = self.interaction.hessian(x - y)
        if self.potential is not None:
            out = out + self.potential.coupling * self.potential.hessian(x)
        return out

    def d22(self, x, y):
        return self.interaction.hessian(x - y)

    def d12(self, x, y):
        return -self.interaction.hessian(x - y)


def scalar_fk_lagrangian(potential: Optional[QuasiPeriodicPotential]) -> Lagrangian:
    """The d = 1 family L(x, y) = (x - y)^2 / 2 + V(x) for quasi-periodic V."""
    well = None if potential is None else potential.as_well()
    return Lagrangian(quadratic_interaction(1), well)


def eval_potential(p, x, order: int = 0):
    """Evaluate a potential or its derivatives.

    For a QuasiPeriodicPotential, x is the scalar argument theta and the
    result is V, V' or V''.  For a WellPotential, x is a point in R^d and
    the result is the value, gradient, or Hessian.
    """
    if order not in (0, 1, 2):
        raise ValueError("unsupported derivative order %r" % (order,))
    if isinstance(p, QuasiPeriodicPotential):
        return p.derivative(x, order)
    if isinstance(p, WellPotential):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (p.dimension,):
            raise ValueError("point has wrong dimension for the well")
        return (p.value, p.gradient, p.hessian)[order](x)
    raise ValueError("unsupported potential type %r" % type(p).__name__)


def energy_window(L: Lagrangian, c: Configuration) -> float:
    """Window energy sum_{n = n0}^{n1 - 1} L(u_n, u_{n+1}).

    Only bonds internal to the window contribute; clamp bonds are excluded
    so that splitting a window splits the energy additively.
    """
    if c.length < 2:
        raise ValueError("energy window needs at least two sites")
    if c.dimension != L.dimension:
        raise ValueError("configuration dimension does not match the Lagrangian")
    return float(np.sum(L.value(c.values[:-1], c.values[1:])))


def interaction_bound_K(
    I: InteractionPotential, rho, r: float, R: float, grid_step: float = 1e-2
) -> float:
    """Curvature bound K = 4 sup sigma_max(hess I(x)) over ||x|| <= ||rho|| + 2 (R + r).

    The sup is taken over a cubic grid intersected with the ball plus the
    radial projections of the grid onto the sphere, so boundary maxima of
    radially increasing Hessians are sampled exactly.
    """
    if r <= 0 or R < 0 or grid_step <= 0:
        raise ValueError("need r > 0, R >= 0, grid_step > 0")
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if rho.shape != (I.dimension,):
        raise ValueError("rho must have the interaction dimension")
    radius = float(np.linalg.norm(rho)) + 2.0 * (R + r)
    pts = _box_grid(I.dimension, radius, grid_step)
    norms = np.linalg.norm(pts, axis=1)
    inside = pts[norms <= radius]
    nz = norms > 0
    sphere = pts[nz] * (radius / norms[nz])[:, None]
    sample = np.vstack([inside, sphere])
    H = np.asarray(I.hessian(sample))
    return 4.0 * float(np.max(np.abs(np.linalg.eigvalsh(H))))
