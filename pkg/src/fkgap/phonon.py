"""Phonon spectra of chain windows and the gap/no-gap certificates.

The second derivative of the window energy Phi(u) = sum L(u_n, u_{n+1})
is block tridiagonal:

    (D2Phi(u) xi)_n = D21 L(u_{n-1}, u_n) xi_{n-1}
                    + (D11 L(u_n, u_{n+1}) + D22 L(u_{n-1}, u_n)) xi_n
                    + D12 L(u_n, u_{n+1}) xi_{n+1}

For the scalar family L = (x - y)^2/2 + V(x) this is the tridiagonal
matrix with diagonal 2 + V''(u_n) and off-diagonal -1.

Two certificates quantify the dichotomy between the equilibrium routes:

* `kam_truncation_quotient`: for hull-generated equilibria, the sliding
  mode truncated to |n| <= k is an approximate kernel vector; applying
  the Hessian leaves exactly four nonzero entries (the interior ones
  cancel), so the Rayleigh quotient decays like 1/sqrt(k) and certifies
  spectrum arbitrarily close to zero.
* `ai_gap_bound`: for anti-integrable equilibria the spectrum stays
  outside (-(lam m - K), lam m - K) and the gap ratio is bounded below by
  (lam m - K) / (lam M + K).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .hull import HullFunction, sample_configuration, sliding_mode
from .model import Configuration, Lagrangian
from .spectral import HessianWindow, spectral_extrema

EDGE_TOLERANCE = 0.02  # absolute slack when checking gap ratios against the bound


def assemble_hessian_window(L: Lagrangian, c: Configuration) -> HessianWindow:
    """Window Hessian with Dirichlet truncation.

    Rows are assembled for every window site; the clamped virtual
    neighbors contribute to the diagonal blocks only (their columns are
    outside the window).  This is the finite section whose Jacobian
    relationship with `equilibrium.residual` is exact.
    """
    if c.length < 3:
        raise ValueError("Hessian window needs at least three sites")
    if c.dimension != L.dimension:
        raise ValueError("configuration dimension does not match the Lagrangian")
    ext = c.extended_values()
    u = c.values
    fwd = u - ext[2:]  # u_n - u_{n+1}, right neighbor including clamp
    bwd = ext[:-2] - u  # u_{n-1} - u_n, left neighbor including clamp
    Ih = L.interaction.hessian
    diag = Ih(fwd) + Ih(bwd)
    if L.potential is not None:
        diag = diag + L.potential.coupling * L.potential.hessian(u)
    off = -Ih(fwd[:-1])
    return HessianWindow(c.start, diag, off)


@dataclass(frozen=True)
class GapRow:
    window: int
    abs_min: float
    lambda_min: float
    lambda_max: float
    gap_ratio: float


@dataclass(frozen=True)
class QuotientRow:
    k: int
    q: float
    eta_norm: float
    xi_norm: float


@dataclass(frozen=True)
class GapReport:
    """Windowed spectral sweep with a coarse verdict.

    verdict is one of 'gap_persists', 'gap_vanishes', 'inconclusive'.
    When an anti-integrable bound is supplied, bound_ok records the
    per-window check gap_ratio >= ai_bound - EDGE_TOLERANCE.
    """

    rows: tuple[GapRow, ...]
    verdict: str
    ai_bound: Optional[float] = None
    bound_ok: Optional[tuple[bool, ...]] = None
    quotients: Optional[tuple[QuotientRow, ...]] = None


def _verdict(rows, quotients, decay_factor, stability, floor) -> str:
    if quotients:
        seq = [qr.q for qr in quotients]
    else:
        seq = [r.abs_min for r in rows]
    if len(seq) >= 2 and seq[0] >= decay_factor * seq[-1]:
        return "gap_vanishes"
    if (
        len(rows) >= 2
        and rows[-1].abs_min >= (1.0 - stability) * rows[-2].abs_min
        and rows[-1].abs_min > floor
    ):
        return "gap_persists"
    return "inconclusive"


def gap_sweep(
    L: Lagrangian,
    source: Union[Configuration, Callable[[int], Configuration]],
    window_sizes: Sequence[int],
    tol: float = 1e-10,
    ai_bound: Optional[float] = None,
    quotients: Optional[Sequence[QuotientRow]] = None,
    decay_factor: float = 2.0,
    stability: float = 0.10,
    floor: float = 1e-6,
) -> GapReport:
    """Spectral extrema of centered windows of increasing size.

    source is either a fixed Configuration (centered sub-windows are cut
    out of it) or a callable mapping a window size to a Configuration.
    The verdict uses the quotient sequence when one is supplied (decay by
    `decay_factor` from first to last reads as a vanishing gap), else the
    abs_min sequence; a persisting gap needs abs_min stable within
    `stability` across the two largest windows and above `floor`.
    """
    sizes = sorted(int(n) for n in window_sizes)
    if not sizes:
        raise ValueError("need at least one window size")
    rows = []
    for n in sizes:
        c = source.centered_subwindow(n) if isinstance(source, Configuration) else source(n)
        ex = spectral_extrema(assemble_hessian_window(L, c), tol=tol)
        rows.append(
            GapRow(
                window=n,
                abs_min=ex.abs_min,
                lambda_min=ex.lambda_min,
                lambda_max=ex.lambda_max,
                gap_ratio=ex.gap_ratio,
            )
        )
    quots = tuple(quotients) if quotients else None
    verdict = _verdict(rows, quots, decay_factor, stability, floor)
    bound_ok = None
    if ai_bound is not None:
        bound_ok = tuple(r.gap_ratio >= ai_bound - EDGE_TOLERANCE for r in rows)
    return GapReport(tuple(rows), verdict, ai_bound, bound_ok, quots)


def kam_truncation_data(L: Lagrangian, h: HullFunction, beta: float, k: int) -> QuotientRow:
    """Rayleigh data of the truncated sliding mode on sites |n| <= k.

    The sliding mode xi_n = l^((n omega + beta) alpha) solves the
    linearised equilibrium equation exactly, so applying the window
    Hessian to its truncation leaves only the four boundary entries

        eta_{ k }   = D_k xi_k + E xi_{k-1}
        eta_{ k+1 } = E xi_k
        eta_{-k }   = D_{-k} xi_{-k} + E xi_{-k+1}
        eta_{-k-1 } = E xi_{-k}

    with D_n the diagonal entry at n and E = D12 L the bond coupling
    (E = -1 for the scalar family).  Interior entries vanish up to the
    hull residual and are not accumulated; the quotient is
    ||eta||_2 / ||xi||_2 and decays like 1/sqrt(k) precisely because the
    number of surviving terms does not grow with k.
    """
    if L.dimension != 1:
        raise ValueError("hull-generated chains are scalar; need a d = 1 Lagrangian")
    if k < 1:
        raise ValueError("k must be >= 1")
    xi = sliding_mode(h, beta, -k, k)
    cfg = sample_configuration(h, beta, -k, k)
    ext = cfg.extended_values()[:, 0]  # u_{-k-1} .. u_{k+1}
    u = ext[1:-1]

    def pt(v):
        return np.array([[v]])  # (1, d) with d = 1

    def diag_at(i):
        # i indexes u (0 = site -k); neighbors live in ext at i and i + 2
        d11 = L.d11(pt(u[i]), pt(ext[i + 2]))[0, 0, 0]
        d22 = L.d22(pt(ext[i]), pt(u[i]))[0, 0, 0]
        return d11 + d22

    def coupling_at(i):
        return L.d12(pt(u[i]), pt(ext[i + 2]))[0, 0, 0]

    n_sites = 2 * k + 1
    d_top = diag_at(n_sites - 1)
    d_bot = diag_at(0)
    e_top = coupling_at(n_sites - 1)  # bond k -> k+1
    e_bot_in = coupling_at(0)  # bond -k -> -k+1
    e_top_in = coupling_at(n_sites - 2)  # bond k-1 -> k
    e_bot_out = L.d12(pt(ext[0]), pt(u[0]))[0, 0, 0]  # bond -k-1 -> -k

    eta_top = d_top * xi[-1] + e_top_in * xi[-2]
    eta_top_out = e_top * xi[-1]
    eta_bot = d_bot * xi[0] + e_bot_in * xi[1]
    eta_bot_out = e_bot_out * xi[0]
    eta_norm = math.sqrt(eta_top**2 + eta_top_out**2 + eta_bot**2 + eta_bot_out**2)
    xi_norm = float(np.linalg.norm(xi))
    return QuotientRow(k=k, q=eta_norm / xi_norm, eta_norm=eta_norm, xi_norm=xi_norm)


def kam_truncation_quotient(L: Lagrangian, h: HullFunction, beta: float, k: int) -> float:
    """||D2Phi xi^[k]||_2 / ||xi^[k]||_2 for the truncated sliding mode."""
    return kam_truncation_data(L, h, beta, k).q


def kam_eta_bound(a_sup: float, n_star_plus: float) -> float:
    """k-independent bound M >= ||eta^[k]||_2 for the four surviving terms.

    With A >= sup |diagonal entry| and N >= sup |sliding mode|, the two
    outer terms are each bounded by N and the two boundary rows by
    A N + N, so M = sqrt(2 N^2 + 2 (A N + N)^2).
    """
    if a_sup < 0 or n_star_plus <= 0:
        raise ValueError("need a_sup >= 0 and n_star_plus > 0")
    n = n_star_plus
    return math.sqrt(2.0 * n * n + 2.0 * (a_sup * n + n) ** 2)


@dataclass(frozen=True)
class AiGapBound:
    """Gap-ratio lower bound for anti-integrable equilibria.

    The window Hessian splits as (interaction part) + (on-site part);
    interaction_norm_bound bounds the former's operator norm by K and
    onsite_inverse_norm_bound the inverse of the latter by 1/(lam m).
    """

    value: float
    interaction_norm_bound: float
    onsite_inverse_norm_bound: float


def ai_gap_bound(lam: float, m: float, M_v: float, K: float) -> AiGapBound:
    """Lower bound (lam m - K) / (lam M_v + K) for the gap ratio.

    Requires lam > K / m (otherwise the bound is vacuous and the request
    is a domain error) and M_v >= m > 0.
    """
    if m <= 0 or M_v < m:
        raise ValueError("need M_v >= m > 0")
    if K < 0:
        raise ValueError("need K >= 0")
    if lam * m <= K:
        raise ValueError(
            "coupling lam = %g does not exceed K/m = %g; the bound is vacuous" % (lam, K / m)
        )
    return AiGapBound(
        value=(lam * m - K) / (lam * M_v + K),
        interaction_norm_bound=K,
        onsite_inverse_norm_bound=1.0 / (lam * m),
    )
