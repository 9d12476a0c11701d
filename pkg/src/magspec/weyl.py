"""Phase-space state densities: standard Weyl, magnetic Weyl, surface correction.

Densities are evaluated at an effective potential level W selected by an
explicit convention flag: the full operator carries a global 1/2 and counts
at 2*tau + V ("paper" convention), the separable model operators carry no 1/2
and count at tau + V ("model" convention).  All thresholds use the strict
Heaviside theta(t) = 1 for t > 0 (thresholds are measure zero).

  standard Weyl density    (2 tau + V)_+^2 sqrt(g) / (32 pi^2) * h^-4
  magnetic Weyl density    (2 pi)^-2 mu^2 h^-2 #{(m,n): W > (2m+1) mu h f1
                               + (2n+1) mu h f2} f1 f2 sqrt(g)
  correction density       (2 pi)^-3/2 mu h^-2 hbar^1/2 kappa^-1/2 *
                               sum_n (W_n)_+^(1/8) phi^(1/4)
                               G(S0 (W_n)_+^(3/4) phi^(-1/2) / (2 pi hbar))
                               f2 sqrt(g'),   hbar = mu^(1/2) h
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureNotConverged
from .geometry import FieldModel, intensities

__all__ = [
    "Convention",
    "WeylInputs",
    "CorrectionParams",
    "NondegReport",
    "weyl_density",
    "magnetic_weyl_density",
    "lattice_pair_count",
    "landau_level_count",
    "magnetic_weyl_integral",
    "magnetic_weyl_integral_1d",
    "correction_density",
    "oscillatory_sum",
    "nondegeneracy_diagnostic",
]


class Convention(str, Enum):
    """Energy bookkeeping: W = 2*tau + V (paper) or W = tau + V (model)."""

    PAPER = "paper"
    MODEL = "model"


def effective_level(V: float, tau: float, convention: Convention) -> float:
    if convention == Convention.PAPER:
        return 2.0 * tau + V
    return tau + V


@dataclass(frozen=True)
class WeylInputs:
    """Pointwise inputs of the density formulas.

    sqrt_g is (det g^{jk})^(-1/2); f1 <= f2 are the eigen-intensities.
    """

    V: float
    f1: float
    f2: float
    sqrt_g: float = 1.0
    tau: float = 0.0
    mu: float = 2.0
    h: float = 0.1
    convention: Convention = Convention.PAPER

    def __post_init__(self):
        if self.f1 > self.f2 + 1e-15:
            raise ValueError(f"need f1 <= f2, got {self.f1} > {self.f2}")
        if self.sqrt_g <= 0:
            raise ValueError("sqrt_g must be positive")

    @property
    def level(self) -> float:
        return effective_level(self.V, self.tau, self.convention)


def weyl_density(inp: WeylInputs, mode: str = "density") -> float:
    """Field-free phase-space density W_+^2 sqrt(g) / (32 pi^2).

    mode="density" multiplies by h^-4; mode="coefficient" returns the h-free
    coefficient.
    """
    W = max(inp.level, 0.0)
    coeff = W * W * inp.sqrt_g / (32.0 * math.pi ** 2)
    if mode == "coefficient":
        return coeff
    if mode == "density":
        return coeff / inp.h ** 4
    raise ValueError(f"unknown mode {mode!r}")


def _count_odd_below(q) -> np.ndarray:
    """#{m >= 0 : 2m+1 < q}, elementwise, with exact strictness at integers."""
    q = np.asarray(q, dtype=float)
    half = 0.5 * (q - 1.0)
    cnt = np.floor(half) + 1.0
    cnt = np.where(half == np.floor(half), half, cnt)  # boundary hit: strict
    return np.maximum(cnt, 0.0)


def lattice_pair_count(W: float, f1: float, f2: float, mu_h: float) -> int:
    """#{(m,n) in Z+^2 : W - (2m+1) mu h f1 - (2n+1) mu h f2 > 0}."""
    if W <= 0 or mu_h <= 0:
        return 0
    if f2 <= 0:
        raise ValueError("f2 must be positive for the pair count")
    n_vals = int(_count_odd_below(W / (mu_h * f2)))
    total = 0
    for n in range(n_vals):
        R = W - (2 * n + 1) * mu_h * f2
        total += int(_count_odd_below(R / (mu_h * f1)))
    return total


def landau_level_count(W: float, f2: float, mu_h: float) -> int:
    """#{n >= 0 : (2n+1) mu h f2 < W}."""
    if W <= 0 or mu_h <= 0:
        return 0
    return int(_count_odd_below(W / (mu_h * f2)))


def magnetic_weyl_density(inp: WeylInputs, f1_limit_ratio: float = 1e-8,
                          mode: str = "density") -> float:
    """Magnetic phase-space density of filled Landau-type levels.

    For f1 below `f1_limit_ratio * f2` the direct (m,n) sum needs about
    1/(mu h f1) terms; the density is then evaluated in the f1 -> 0 limit
    (the Riemann-sum value of the m-ladder)

        (2 pi)^-2 (mu h^-3 / 2) sum_n (W - (2n+1) mu h f2)_+ f2 sqrt(g).
    """
    if inp.mu * inp.h <= 0:
        raise ValueError("mu*h must be positive")
    W = inp.level
    if W <= 0:
        return 0.0
    mu_h = inp.mu * inp.h
    if inp.f1 < f1_limit_ratio * inp.f2:
        n_vals = landau_level_count(W, inp.f2, mu_h)
        total = sum(W - (2 * n + 1) * mu_h * inp.f2 for n in range(n_vals))
        coeff = (inp.mu * inp.h ** 3) * total * inp.f2 * inp.sqrt_g / (8.0 * math.pi ** 2)
    else:
        count = lattice_pair_count(W, inp.f1, inp.f2, mu_h)
        coeff = (mu_h ** 2) * count * inp.f1 * inp.f2 * inp.sqrt_g / (4.0 * math.pi ** 2)
    if mode == "coefficient":
        return coeff
    if mode == "density":
        return coeff / inp.h ** 4
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# 4D quadrature of the magnetic Weyl density
# ---------------------------------------------------------------------------


def _density_grid(model: FieldModel, pts: np.ndarray, tau: float,
                  convention: Convention, count_cap: float = 128.0):
    """(density, pair count) arrays at points pts (k, 4), vectorized.

    f1*f2*sqrt(g) = |Pf F| makes the product metric-independent; the pair
    count per point runs over the Landau ladder in n with a closed-form count
    of the m ladder.  Where the m-ladder count reaches `count_cap` (near the
    degeneracy hypersurface the thresholds accumulate like 1/f1) the density
    switches to its smooth f1 -> 0 ladder limit, which differs from the
    staircase by at most half a state per level (relative ~ 1/(2*count_cap));
    those points report the sentinel count -1 so cell refinement treats the
    strip as threshold-free.
    """
    f1, f2 = intensities(pts, model)
    V = model.scalar_at(pts)
    W = (2.0 * tau + V) if convention == Convention.PAPER else (tau + V)
    mu_h = model.mu * model.h
    n_max = int(np.max(_count_odd_below(np.where(W > 0, W, 0.0) / (mu_h * np.maximum(f2, 1e-300)))))
    count = np.zeros(len(pts))
    limit_sum = np.zeros(len(pts))
    # smooth-limit region: m-count at the lowest level would reach count_cap
    R0 = W - mu_h * f2
    tiny = np.maximum(R0, 0.0) >= (2.0 * count_cap - 1.0) * mu_h * f1
    for n in range(n_max):
        R = W - (2 * n + 1) * mu_h * f2
        pos = R > 0
        cnt_m = np.zeros(len(pts))
        cnt_m[pos] = _count_odd_below(R[pos] / (mu_h * np.maximum(f1[pos], 1e-300)))
        count += np.where(tiny, 0.0, cnt_m)
        limit_sum += np.where(tiny & pos, np.maximum(R, 0.0), 0.0)
    if model.euclidean:
        g_det = np.ones(len(pts))
    else:
        g_det = np.array([1.0 / np.linalg.det(np.asarray(model.metric(p), float)) for p in pts])
    sqrt_g = np.sqrt(g_det)
    dens = (model.mu ** 2 / model.h ** 2) * count * f1 * f2 * sqrt_g / (4.0 * math.pi ** 2)
    dens_tiny = (model.mu / model.h ** 3) * limit_sum * f2 * sqrt_g / (8.0 * math.pi ** 2)
    dens = np.where(tiny, dens_tiny, dens)
    count = np.where(tiny, -1.0, count)
    return dens, count


def _transverse_profile(model, psi, tau, convention, bounds, n_t):
    """G(x1) evaluator: transverse tensor-trapezoid of density * psi at fixed
    x1, plus an integer count signature that changes whenever a Landau
    threshold surface crosses the x1 slice anywhere on the transverse grid."""
    axes = [np.linspace(bounds[d, 0], bounds[d, 1], n_t + 1) for d in range(1, 4)]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    w = np.ones(n_t + 1)
    w[0] = w[-1] = 0.5
    weights = (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel()
    weights = weights * np.prod([(bounds[d, 1] - bounds[d, 0]) / n_t for d in range(1, 4)])
    pts = np.empty((flat.shape[0], 4))
    pts[:, 1:] = flat

    def G(x1):
        pts[:, 0] = x1
        dens, count = _density_grid(model, pts, tau, convention)
        val = float(np.dot(dens * np.asarray(psi(pts), dtype=float), weights))
        signature = float(np.sum(count))
        return val, signature

    return G


def _adaptive_x1(G, lo, hi, tol_abs, min_width, max_nodes=60000):
    """Adaptive Simpson along x1 with refinement at count jumps.

    An interval is accepted when (a) it is smooth (no count change) and the
    Simpson/trapezoid disagreement fits its proportional share of `tol_abs`,
    (b) its jump mass |G(b) - G(a)| * width also fits that share (dense fields
    of tiny threshold crossings behave like a slope), or (c) it has been
    narrowed to the jump width floor min_width_jump, sized so the total jump
    residual stays under tol_abs using the total variation of the base grid.
    Returns (integral, residual_bound).
    """
    base = np.linspace(lo, hi, 65)
    cache = {float(x): G(float(x)) for x in base}

    def node(x):
        d = cache.get(x)
        if d is None:
            if len(cache) > max_nodes:
                raise QuadratureNotConverged(0.0, math.inf, tol_abs)
            d = G(x)
            cache[x] = d
        return d

    g_base = np.array([cache[float(x)][0] for x in base])
    tv = float(np.sum(np.abs(np.diff(g_base)))) * 2.0 + 1e-300
    min_width_jump = max(min_width, 0.5 * tol_abs / tv)

    total = 0.0
    residual = 0.0
    stack = [(float(a), float(b)) for a, b in zip(base[:-1], base[1:])]
    while stack:
        a, b = stack.pop()
        m = 0.5 * (a + b)
        ga, ca = node(a)
        gb, cb = node(b)
        gm, cm = node(m)
        width = b - a
        trap = 0.5 * (ga + gb) * width
        simp = (ga + 4.0 * gm + gb) * width / 6.0
        disagreement = abs(simp - trap)
        has_jump = (ca != cm) or (cm != cb)
        share = tol_abs * width / (hi - lo)
        jump_mass = abs(gb - ga) * width
        if width <= min_width:
            total += simp
            residual += disagreement + (jump_mass if has_jump else 0.0)
        elif not has_jump and disagreement <= share:
            total += simp
            residual += disagreement
        elif has_jump and disagreement <= share and jump_mass <= share:
            total += simp
            residual += disagreement + jump_mass
        elif has_jump and width <= min_width_jump and disagreement <= 4.0 * share:
            total += simp
            residual += disagreement + jump_mass
        else:
            stack.append((a, m))
            stack.append((m, b))
    return total, residual


def magnetic_weyl_integral(
    model: FieldModel,
    psi: Callable[[np.ndarray], np.ndarray],
    tau: float,
    bounds=None,
    resolution: int = 16,
    convention: Convention = Convention.PAPER,
    tol: float = 1e-3,
    max_depth: int = 26,
):
    """Integral of magnetic_weyl_density * psi over a box, with error estimate.

    The Landau threshold surfaces of the fields in scope are graphs over the
    transverse coordinates (the small intensity is comparable to |x1|), so
    the quadrature is a tensor trapezoid over (x2, x3, x4) at `resolution`
    glued to an adaptive Simpson rule in x1 that bisects every interval whose
    transverse count signature changes (a threshold crossed the slice) down
    to a width floor of 2^-max_depth of the x1 span.

    The reported error estimate combines the x1 residual with the last dyadic
    refinement of the transverse grid (two refinement levels are folded into
    the value, Richardson style); raises QuadratureNotConverged when it
    exceeds tol * (|value| + 1).

    `psi` maps an array of points (k, 4) to weights (k,) and should be
    compactly supported inside `bounds` (default the unit-ball bounding box).
    """
    if bounds is None:
        bounds = np.array([[-1.0, 1.0]] * 4)
    bounds = np.asarray(bounds, dtype=float).reshape(4, 2)
    lo, hi = bounds[0]
    min_width = (hi - lo) * 2.0 ** (-max_depth)
    G_coarse = _transverse_profile(model, psi, tau, convention, bounds, resolution)
    pre = np.array([G_coarse(float(x))[0] for x in np.linspace(lo, hi, 65)])
    i_pre = float(np.trapz(pre, np.linspace(lo, hi, 65)))
    tol_abs = 0.25 * tol * (abs(i_pre) + 1.0)
    val, res_x1 = _adaptive_x1(G_coarse, lo, hi, tol_abs, min_width)

    # two transverse dyadic refinements at a fixed x1 sample: both correction
    # levels are added to the value; the last one bounds what remains
    sample = np.linspace(lo, hi, 33)
    g0 = np.array([G_coarse(float(x))[0] for x in sample])
    corr = 0.0
    last = 0.0
    for level in (2, 4):
        G_fine = _transverse_profile(model, psi, tau, convention, bounds,
                                     level * resolution)
        g1 = np.array([G_fine(float(x))[0] for x in sample])
        last = float(np.trapz(g1 - g0, sample))
        corr += last
        g0 = g1
    err = res_x1 + abs(last)
    if err > tol * (abs(val) + 1.0):
        raise QuadratureNotConverged(val, err, tol * (abs(val) + 1.0))
    return val + corr, err


# ---------------------------------------------------------------------------
# 1D reduction for the separable model (thresholds depend on x1 only)
# ---------------------------------------------------------------------------


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(7)


def magnetic_weyl_integral_1d(
    psi1: Callable[[np.ndarray], np.ndarray],
    support: tuple[float, float],
    mu: float,
    h: float,
    k: float = 0.0,
    tau: float = 0.0,
    V0: float = 1.0,
    f2: float = 1.0,
    convention: Convention = Convention.MODEL,
    levels: Optional[int] = None,
    x_small: float = 1e-3,
    max_piece: float = 0.01,
):
    """Integral over x1 of the magnetic Weyl density with f1 = |x1|,
    V = V0 + k*x1, constant f2, weighted by psi1.

    The (m,n)-count is piecewise constant with breakpoints where
    W - (2m+1) mu h |x1| - (2n+1) mu h f2 vanishes; the integral is assembled
    exactly piecewise with Gauss-Legendre panels.  For |x1| < x_small the
    m-ladder count (which needs ~1/(mu h |x1|) breakpoints) is replaced by its
    Riemann-sum value R_n / (2 mu h |x1|); the dropped staircase remainder is
    bounded by half a state per active level and folded into the returned
    error estimate.

    Returns (value, error_bound).
    """
    lo, hi = support
    mu_h = mu * h
    C0 = effective_level(V0, tau, convention)
    W_max = max(C0 + k * lo, C0 + k * hi, C0)
    if W_max <= 0:
        return 0.0, 0.0
    if levels is None:
        levels = landau_level_count(W_max, f2, mu_h)
    if levels == 0:
        return 0.0, 0.0
    pref = mu ** 2 / (h ** 2 * 4.0 * math.pi ** 2)
    n_arr = np.arange(levels)
    thresholds_n = (2 * n_arr + 1) * mu_h * f2

    def count_at(x_abs: np.ndarray, sign: float) -> np.ndarray:
        """Pair count at |x1| = x_abs on the sign branch (vectorized)."""
        W = C0 + k * sign * x_abs
        R = W[:, None] - thresholds_n[None, :]
        q = R / (mu_h * x_abs[:, None])
        cnt = np.where(R > 0, _count_odd_below(q), 0.0)
        return cnt.sum(axis=1)

    total = 0.0
    err = 0.0
    for sign in (-1.0, 1.0):
        seg_lo, seg_hi = (x_small, hi) if sign > 0 else (x_small, -lo)
        if seg_hi <= seg_lo:
            continue
        cuts = set()
        m_cap = int(W_max / (2.0 * mu_h * seg_lo)) + 2
        for n in range(levels):
            base = C0 - thresholds_n[n]
            for m in range(m_cap):
                denom = (2 * m + 1) * mu_h - sign * k
                if denom == 0.0:
                    continue
                x_star = base / denom
                if denom > 0 and x_star <= seg_lo:
                    break
                if seg_lo < x_star < seg_hi:
                    cuts.add(x_star)
        edges = np.unique(np.concatenate([[seg_lo, seg_hi], sorted(cuts)]))
        # split wide pieces so Gauss panels stay accurate on the bump weight
        sub = [edges[0]]
        for a, b in zip(edges, edges[1:]):
            parts = max(1, int(math.ceil((b - a) / max_piece)))
            sub.extend(a + (b - a) * (i + 1) / parts for i in range(parts))
        sub = np.array(sub)
        mids = 0.5 * (sub[:-1] + sub[1:])
        halves = 0.5 * (sub[1:] - sub[:-1])
        counts = count_at(mids, sign)
        active = counts > 0
        if np.any(active):
            xq = mids[active, None] + halves[active, None] * _GL_NODES[None, :]
            wq = halves[active, None] * _GL_WEIGHTS[None, :]
            panel = np.sum(np.asarray(psi1(sign * xq)) * xq * wq, axis=1)
            total += pref * float(np.sum(counts[active] * panel))

    # |x1| < x_small: smooth Riemann-sum main term plus bounded staircase rest
    def smooth_part(x):
        w = float(np.asarray(psi1(x)))
        if w == 0.0:
            return 0.0
        R = C0 + k * x - thresholds_n
        return w * float(np.sum(np.maximum(R, 0.0))) / (2.0 * mu_h)

    val, qerr = quad(smooth_part, -x_small, x_small, limit=200)
    total += pref * val
    err += pref * abs(qerr)
    # staircase remainder: |count - R/(2 mu h x)| <= 1/2 per active level
    psi_cap = float(np.max(np.abs(np.asarray(psi1(np.linspace(-x_small, x_small, 65))))))
    err += pref * 0.5 * levels * psi_cap * x_small ** 2
    return total, err


# ---------------------------------------------------------------------------
# surface correction term and oscillatory sum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrectionParams:
    """Inputs of the surface correction term that live outside this model:

    G       periodic profile (callable), user supplied
    S0      action constant
    kappa   positive curvature-type scalar
    phi     edge slope of the small intensity along its eigenplane
    g_prime surface density factor g' = g^{11} g
    """

    G: Callable[[float], float]
    S0: float = 1.0
    kappa: float = 1.0
    phi: float = 1.0
    g_prime: float = 1.0

    def __post_init__(self):
        if self.S0 <= 0 or self.kappa <= 0 or self.phi <= 0 or self.g_prime <= 0:
            raise ValueError("S0, kappa, phi, g_prime must be positive")


def correction_density(params: CorrectionParams, V: float, f2: float,
                       mu: float, h: float) -> float:
    """Surface correction density on the degeneracy hypersurface.

    (2 pi)^(-3/2) mu h^-2 hbar^(1/2) kappa^(-1/2) *
      sum over n with V - (2n+1) f2 mu h > 0 of
        (V - (2n+1) f2 mu h)^(1/8) phi^(1/4)
        * G(S0 (V - (2n+1) f2 mu h)^(3/4) phi^(-1/2) / (2 pi hbar))
      * f2 sqrt(g'),     hbar = mu^(1/2) h.
    """
    hbar = math.sqrt(mu) * h
    if hbar >= 1.0:
        raise ValueError(f"need hbar = sqrt(mu)*h < 1, got {hbar}")
    if V <= 0:
        raise ValueError("V must be positive")
    mu_h = mu * h
    n_vals = landau_level_count(V, f2, mu_h)
    s = 0.0
    for n in range(n_vals):
        gap = V - (2 * n + 1) * f2 * mu_h
        arg = params.S0 * gap ** 0.75 / (math.sqrt(params.phi) * 2.0 * math.pi * hbar)
        s += gap ** 0.125 * params.phi ** 0.25 * float(params.G(arg))
    pref = (2.0 * math.pi) ** (-1.5) * mu * h ** (-2) * math.sqrt(hbar / params.kappa)
    return pref * s * f2 * math.sqrt(params.g_prime)


def oscillatory_sum(eps: float, hbar: float, params: CorrectionParams,
                    V: float = 1.0, phi: Optional[float] = None, f2: float = 1.0,
                    sqrt_gp: Optional[float] = None) -> float:
    """Level sum I(eps, hbar) of the separable-model correction:

    sum_n (V - (2n+1) f2 eps)_+^(1/8) phi^(1/4)
          G(S0 (V - (2n+1) f2 eps)^(3/4) phi^(-1/2) / (2 pi hbar))
          * f2 sqrt(g') * eps.

    Requires 0 < hbar <= eps <= 1.
    """
    if not 0.0 < hbar <= eps <= 1.0:
        raise ValueError(f"need 0 < hbar <= eps <= 1, got hbar={hbar}, eps={eps}")
    phi = params.phi if phi is None else phi
    sqrt_gp = math.sqrt(params.g_prime) if sqrt_gp is None else sqrt_gp
    n_vals = landau_level_count(V, f2, eps)
    s = 0.0
    for n in range(n_vals):
        gap = V - (2 * n + 1) * f2 * eps
        arg = params.S0 * gap ** 0.75 / (math.sqrt(phi) * 2.0 * math.pi * hbar)
        s += gap ** 0.125 * phi ** 0.25 * float(params.G(arg))
    return s * f2 * sqrt_gp * eps


# ---------------------------------------------------------------------------
# nondegeneracy diagnostics on the degeneracy hypersurface
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NondegReport:
    """Nondegeneracy of V/f2 on the hypersurface at a point.

    L = eps0 * |grad(V/f2)| + min_n |V/f2 - (2n+1) mu h|;
    q_class counts Hessian eigenvalues with |lambda| >= eps0.
    """

    L: float
    grad_norm: float
    hess_eigs: tuple
    q_class: int


def _nearest_level_gap(value: float, mu_h: float) -> float:
    if mu_h <= 0:
        raise ValueError("mu*h must be positive")
    n = max(0, round((value / mu_h - 1.0) / 2.0))
    best = min(abs(value - (2 * m + 1) * mu_h) for m in (max(0, n - 1), n, n + 1))
    return best


def nondegeneracy_diagnostic(surface_fn, point, mu: float, h: float,
                             eps0: float, step: float = 1e-4) -> NondegReport:
    """Gradient/Hessian classification of V/f2 on the hypersurface.

    `surface_fn` maps surface coordinates (x2, x3, x4) to (V, f2); derivatives
    are taken by central finite differences with the given step (exact for
    quadratics up to roundoff).
    """
    y0 = np.asarray(point, dtype=float).reshape(3)

    def ratio(y):
        V, f2 = surface_fn(y)
        return V / f2

    r0 = ratio(y0)
    grad = np.zeros(3)
    hess = np.zeros((3, 3))
    for i in range(3):
        e = np.zeros(3)
        e[i] = step
        rp, rm = ratio(y0 + e), ratio(y0 - e)
        grad[i] = (rp - rm) / (2 * step)
        hess[i, i] = (rp - 2 * r0 + rm) / step ** 2
    for i in range(3):
        for j in range(i + 1, 3):
            ei = np.zeros(3)
            ej = np.zeros(3)
            ei[i] = step
            ej[j] = step
            val = (
                ratio(y0 + ei + ej) - ratio(y0 + ei - ej)
                - ratio(y0 - ei + ej) + ratio(y0 - ei - ej)
            ) / (4 * step ** 2)
            hess[i, j] = hess[j, i] = val
    eigs = np.sort(np.linalg.eigvalsh(hess))
    grad_norm = float(np.linalg.norm(grad))
    L = eps0 * grad_norm + _nearest_level_gap(r0, mu * h)
    q_class = int(np.sum(np.abs(eigs) >= eps0))
    return NondegReport(L=float(L), grad_norm=grad_norm,
                        hess_eigs=tuple(float(v) for v in eigs), q_class=q_class)
