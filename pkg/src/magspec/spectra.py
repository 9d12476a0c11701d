"""True spectral counting for the separable model operators.

The 4D model operator splits as A = A_I + A_II where

    A_I  = h^2 D1^2 + (h D2 - mu x1^2/2)^2 - 1 - k x1      on (x1, x2)
    A_II = h^2 D3^2 + (h D4 - mu x3)^2                     on (x3, x4)

A_I is translation invariant in x2; conjugating by the x2 Fourier transform
yields the fiber family  h^2 D1^2 + U(x1; xi2)  with

    U(x1; xi2) = (xi2 - mu x1^2/2)^2 - 1 - k x1,

solved here by second-order symmetric tridiagonal finite differences with
bisection eigenvalues and inverse-iteration eigenvectors (Dirichlet walls,
a posteriori tail criterion, Richardson consistency check between N and N/2).
A_II is a constant-field 2D operator with Landau levels (2n+1) mu h carrying
mu/(2 pi h) states per unit area per level.  Counting states of A below tau
therefore reduces to fiber eigenvalues below tau - (2n+1) mu h, integrated
over the dual parameter xi2 with adaptive refinement at eigenvalue crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainTooSmall, GridTooCoarse, QuadratureNotConverged
from .weyl import Convention, landau_level_count, magnetic_weyl_integral_1d

__all__ = [
    "ModelParams",
    "Grid1D",
    "FiberSpectrum",
    "CountReport",
    "fiber_potential",
    "solve_potential",
    "solve_fiber",
    "landau_count",
    "xi2_band",
    "default_grid",
    "FiberEngine",
    "local_dos_2d",
    "count_states",
    "count_states_2d",
]


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the separable model: coupling mu, Planck h, linear tilt k,
    counting level tau.  Model convention (no global 1/2) throughout."""

    mu: float
    h: float
    k: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if self.mu <= 0 or self.h <= 0:
            raise ValueError("mu and h must be positive")
        if self.mu * self.h > 1.0 + 1e-12:
            raise ValueError(f"mu*h must not exceed 1, got {self.mu * self.h:.4g}")
        if abs(self.k) > 1.0:
            raise ValueError(f"|k| must not exceed 1, got {self.k}")

    @property
    def convention(self) -> Convention:
        return Convention.MODEL


@dataclass(frozen=True)
class Grid1D:
    """Dirichlet grid on [-L, L] with N intervals (N-1 interior nodes)."""

    L: float
    N: int

    def __post_init__(self):
        if self.N < 256 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 256, got {self.N}")
        if self.L <= 0:
            raise ValueError("half-width L must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def nodes(self) -> np.ndarray:
        return -self.L + self.spacing * np.arange(1, self.N)

    def coarsened(self) -> "Grid1D":
        return Grid1D(self.L, self.N // 2)


def fiber_potential(xi2: float, prm: ModelParams) -> Callable[[np.ndarray], np.ndarray]:
    """Fiber potential U(x1) = (xi2 - mu x1^2/2)^2 - 1 - k x1."""

    def U(x):
        x = np.asarray(x, dtype=float)
        return (xi2 - 0.5 * prm.mu * x * x) ** 2 - 1.0 - prm.k * x

    return U


def _eigensolve(U_vals: np.ndarray, h: float, spacing: float, cutoff: float,
                want_vectors: bool):
    d = 2.0 * h * h / spacing ** 2 + U_vals
    e = np.full(len(U_vals) - 1, -h * h / spacing ** 2)
    lo = float(np.min(U_vals)) - 1.0
    if lo >= cutoff:
        if want_vectors:
            return np.empty(0), np.empty((len(U_vals), 0))
        return np.empty(0)
    return eigh_tridiagonal(
        d, e, select="v", select_range=(lo, cutoff), eigvals_only=not want_vectors
    )


def solve_potential(
    U: Callable[[np.ndarray], np.ndarray],
    h: float,
    grid: Grid1D,
    cutoff: float,
    tail_tol: float = 1e-6,
    grid_check: bool = True,
    grid_tol: float = 2e-2,
    boundary_margin: float = 5.0,
):
    """Eigenpairs of h^2 D1^2 + U below `cutoff` on the Dirichlet grid.

    Returns (eigenvalues, eigenvectors) with eigenvectors discrete-normalized
    (sum v^2 = 1); the continuum-normalized eigenfunction at node i is
    v[i] / sqrt(spacing).  Raises DomainTooSmall when U at the walls fails the
    `cutoff + boundary_margin` precondition or the eigenfunction tails exceed
    tail_tol; raises GridTooCoarse when the Richardson estimate from the N/2
    grid exceeds grid_tol * max(1, |lambda|).
    """
    x = grid.nodes
    U_vals = np.asarray(U(x), dtype=float)
    U_wall = min(float(np.asarray(U(np.array([-grid.L])))), float(np.asarray(U(np.array([grid.L])))))
    if U_wall < cutoff + boundary_margin:
        raise DomainTooSmall(
            f"U(+-L) = {U_wall:.3g} below cutoff + {boundary_margin:g} = "
            f"{cutoff + boundary_margin:.3g}; enlarge the grid"
        )
    w, v = _eigensolve(U_vals, h, grid.spacing, cutoff, want_vectors=True)
    if len(w):
        edge = np.maximum(np.abs(v[0, :]), np.abs(v[-1, :])) / math.sqrt(grid.spacing)
        worst = float(np.max(edge))
        if worst > tail_tol:
            raise DomainTooSmall(
                f"eigenfunction tail {worst:.3e} at the wall exceeds {tail_tol:g}"
            )
    if grid_check and len(w):
        coarse = grid.coarsened()
        Uc = np.asarray(U(coarse.nodes), dtype=float)
        wc = _eigensolve(Uc, h, coarse.spacing, cutoff, want_vectors=False)
        m = min(len(w), len(wc))
        if m:
            est = np.max(np.abs(wc[:m] - w[:m]) / 3.0 / np.maximum(1.0, np.abs(w[:m])))
            if est > grid_tol:
                raise GridTooCoarse(
                    f"Richardson estimate {est:.3e} exceeds {grid_tol:g}; refine N"
                )
    return w, v


@dataclass
class FiberSpectrum:
    """Eigenvalues/eigenvectors of one fiber at fixed dual parameter xi2."""

    xi2: float
    eigenvalues: np.ndarray
    vectors: np.ndarray
    grid: Grid1D

    def weights(self, profile: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Per-eigenvalue weights int |phi_k|^2 Psi = sum_i v_i^2 Psi(x_i)."""
        p = np.asarray(profile(self.grid.nodes), dtype=float)
        return np.einsum("ik,i->k", self.vectors ** 2, p)

    def gram_residual(self) -> float:
        if self.vectors.shape[1] == 0:
            return 0.0
        G = self.vectors.T @ self.vectors
        return float(np.max(np.abs(G - np.eye(G.shape[0]))))

    def eigenfunction_at(self, x) -> np.ndarray:
        """Continuum-normalized eigenfunction values at x (linear interp)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((len(x), self.vectors.shape[1]))
        scale = 1.0 / math.sqrt(self.grid.spacing)
        for k in range(self.vectors.shape[1]):
            out[:, k] = np.interp(x, self.grid.nodes, self.vectors[:, k],
                                  left=0.0, right=0.0) * scale
        return out


def solve_fiber(xi2: float, prm: ModelParams, grid: Grid1D, cutoff: float,
                **kwargs) -> FiberSpectrum:
    """Fiber spectrum below `cutoff` at dual parameter xi2."""
    w, v = solve_potential(fiber_potential(xi2, prm), prm.h, grid, cutoff, **kwargs)
    return FiberSpectrum(xi2=xi2, eigenvalues=w, vectors=v, grid=grid)


def landau_count(lam: float, prm: ModelParams):
    """(#levels (2n+1) mu h strictly below lam, sheet density mu/(2 pi h))."""
    count = landau_level_count(lam, 1.0, prm.mu * prm.h)
    return count, prm.mu / (2.0 * math.pi * prm.h)


def xi2_band(prm: ModelParams, support_radius: float) -> tuple[float, float]:
    """Dual-parameter band outside which fibers cannot contribute weight.

    Outside [-s - 1, mu L^2/2 + s + 1] with s = sqrt(1 + |k| L + |tau|) either
    the fiber potential exceeds the counting level on the weight support or
    the well centers lie beyond it with only exponentially small tail weight.
    """
    L = support_radius
    s = math.sqrt(1.0 + abs(prm.k) * L + abs(prm.tau))
    return (-s - 1.0, 0.5 * prm.mu * L * L + s + 1.0)


def oscillator_grid(mu: float, h: float, n_max: int = 20,
                    rel_target: float = 3e-7) -> tuple[Grid1D, float]:
    """Grid sized so the oscillator levels (2n+1) mu h up to n_max resolve to
    `rel_target` relative accuracy with the second-order stencil.

    In the dimensionless variable y = x sqrt(mu/h) the level n error is about
    1.28 * spacing^2 * (2n+1)/... ; the returned cutoff sits just above level
    n_max.  Validation hook for the spectral accuracy chain.
    """
    lam_top = (2 * n_max + 1.2) * mu * h
    y_turn = math.sqrt(lam_top / (mu * h))
    L = (y_turn + 3.4) * math.sqrt(h / mu)
    dy = math.sqrt(rel_target / 1.3)
    dx = dy * math.sqrt(h / mu)
    N = max(256, 2 ** math.ceil(math.log2(2.0 * L / dx)))
    return Grid1D(L=L, N=min(N, 1 << 17)), lam_top


def default_grid(prm: ModelParams, xi2_hi: float, cutoff: float,
                 min_N: int = 256, tail_pad_scale: float = 1.6) -> Grid1D:
    """Grid wide enough for every fiber in the band, spacing <= h/8.

    The half-width satisfies U(+-L) >= cutoff + 6 for the worst fiber and adds
    a WKB tail pad so eigenfunctions below `cutoff` decay under 1e-6 at the
    walls; N is the next power of two with spacing at most h/8.
    """
    need = max(xi2_hi, 0.0) + math.sqrt(max(cutoff, 0.0) + 7.0 + 2.0 * abs(prm.k))
    L0 = math.sqrt(2.0 * need / prm.mu)
    x_t = math.sqrt(2.0 * (max(xi2_hi, 0.0) + math.sqrt(2.0 + abs(prm.k))) / prm.mu)
    pad = tail_pad_scale * (24.0 * prm.h) ** (2.0 / 3.0) / max(2.0 * prm.mu * x_t, 1e-6) ** (1.0 / 3.0)
    L = max(L0, x_t + max(pad, 0.1))
    N = max(min_N, 2 ** math.ceil(math.log2(2.0 * L / (prm.h / 8.0))))
    return Grid1D(L=L, N=N)


class FiberEngine:
    """Cached fiber solver: one eigensolve per distinct xi2.

    The Richardson grid check runs on the first solve only; the grid is fixed
    across the band so the integrand is a smooth function of xi2 between
    eigenvalue crossings.
    """

    def __init__(self, prm: ModelParams, grid: Grid1D, cutoff: float,
                 tail_tol: float = 1e-6, grid_tol: float = 2e-2):
        self.prm = prm
        self.grid = grid
        self.cutoff = cutoff
        self.tail_tol = tail_tol
        self.grid_tol = grid_tol
        self._cache: dict[float, FiberSpectrum] = {}
        self._checked = False

    def __call__(self, xi2: float) -> FiberSpectrum:
        fs = self._cache.get(xi2)
        if fs is None:
            fs = solve_fiber(
                xi2, self.prm, self.grid, self.cutoff,
                tail_tol=self.tail_tol,
                grid_check=not self._checked,
                grid_tol=self.grid_tol,
            )
            self._checked = True
            self._cache[xi2] = fs
        return fs

    @property
    def solves(self) -> int:
        return len(self._cache)


def _adaptive_fiber_integral(
    engine: FiberEngine,
    band: tuple[float, float],
    thresholds: np.ndarray,
    weight_fn: Callable[[FiberSpectrum], np.ndarray],
    tol: float,
    base_nodes: int = 64,
    min_width_frac: float = 1e-4,
    max_intervals: int = 200_000,
):
    """Integrate g_n(xi2) = sum_k theta(tau_n - lambda_k) w_k over the band.

    Deterministic interval bisection: an interval is split while either the
    level-count vector differs at its endpoints (an eigenvalue crossing sits
    inside) or the trapezoid/Simpson disagreement exceeds its share of `tol`,
    down to a width floor.  Returns (per-threshold integrals, error bound).
    """
    lo, hi = band
    thresholds = np.asarray(thresholds, dtype=float)
    min_width = (hi - lo) * min_width_frac

    def node_data(x: float):
        fs = engine(x)
        w = weight_fn(fs)
        counts = np.searchsorted(fs.eigenvalues, thresholds, side="left")
        g = np.array([
            float(np.sum(w[: counts[i]])) for i in range(len(thresholds))
        ])
        return g, counts

    xs = np.linspace(lo, hi, base_nodes + 1)
    data = {float(x): node_data(float(x)) for x in xs}
    stack = [(float(a), float(b)) for a, b in zip(xs[:-1], xs[1:])]
    total = np.zeros(len(thresholds))
    err = 0.0
    n_processed = 0
    while stack:
        a, b = stack.pop()
        n_processed += 1
        if n_processed > max_intervals:
            raise QuadratureNotConverged(float(np.sum(total)), math.inf, tol)
        ga, ca = data[a]
        gb, cb = data[b]
        m = 0.5 * (a + b)
        gm, cm = data.setdefault(m, node_data(m))
        width = b - a
        trap = 0.5 * (ga + gb) * width
        simp = (ga + 4.0 * gm + gb) * width / 6.0
        disagreement = float(np.max(np.abs(simp - trap)))
        has_jump = bool(np.any(ca != cm) or np.any(cm != cb))
        budget = tol * width / (hi - lo)
        if width <= min_width or (not has_jump and disagreement <= budget):
            total += simp
            err += disagreement
            if has_jump:
                err += float(np.max(np.abs(gb - ga))) * width
        else:
            stack.append((a, m))
            stack.append((m, b))
    return total, err


@dataclass
class CountReport:
    """Localized state count against its magnetic Weyl approximation."""

    mu: float
    h: float
    k: float
    tau: float
    N_count: float
    emw_integral: float
    remainder: float
    per_landau: list
    quadrature_error: float
    fiber_solves: int = 0

    def to_dict(self):
        return {
            "mu": self.mu,
            "h": self.h,
            "k": self.k,
            "tau": self.tau,
            "N": self.N_count,
            "EMW": self.emw_integral,
            "remainder": self.remainder,
            "per_landau": [[int(n), float(c)] for n, c in self.per_landau],
            "quadrature_error": self.quadrature_error,
        }


def _support_of(psi1, support):
    if support is not None:
        return support
    sup = getattr(psi1, "support", None)
    if sup is None:
        raise ValueError("psi1 has no 'support' attribute; pass support=(lo, hi)")
    return sup


def count_states(
    psi1: Callable[[np.ndarray], np.ndarray],
    psi2_mass: float,
    prm: ModelParams,
    support=None,
    tol: float = 1e-4,
    grid: Optional[Grid1D] = None,
    base_nodes: int = 64,
    min_width_frac: float = 1e-4,
    engine: Optional[FiberEngine] = None,
) -> CountReport:
    """Weighted count of model states below tau, with its magnetic Weyl value.

    N = sum_n  (mu / 2 pi h) * psi2_mass * (2 pi h)^-1 *
          int d(xi2) sum_k theta(tau - (2n+1) mu h - lambda_k(xi2))
                       <|phi_k|^2, psi1>

    The magnetic Weyl integral is evaluated on the same weights with
    f1 = |x1|, f2 = 1, V = 1 + k x1 in model convention; the remainder is
    their difference.  `tol` is the relative tolerance allotted to the xi2
    quadrature (against the computed N).
    """
    sup_lo, sup_hi = _support_of(psi1, support)
    radius = max(abs(sup_lo), abs(sup_hi))
    band = xi2_band(prm, radius)
    mu_h = prm.mu * prm.h
    # deepest fiber level on the grid is >= -1 - |k| L; levels beyond that
    # cannot satisfy lambda < tau - (2n+1) mu h
    if grid is None:
        grid = default_grid(prm, band[1], cutoff=prm.tau)
    depth = 1.0 + abs(prm.k) * grid.L + max(prm.tau, 0.0)
    n_levels = landau_level_count(depth + mu_h, 1.0, mu_h)
    if n_levels == 0:
        emw, emw_err = magnetic_weyl_integral_1d(
            psi1, (sup_lo, sup_hi), prm.mu, prm.h, prm.k, prm.tau,
            convention=Convention.MODEL,
        )
        emw *= psi2_mass
        return CountReport(prm.mu, prm.h, prm.k, prm.tau, 0.0, emw, -emw,
                           [], abs(emw_err) * psi2_mass)
    thresholds = prm.tau - (2.0 * np.arange(n_levels) + 1.0) * mu_h
    cutoff = float(np.max(thresholds))
    if engine is None:
        engine = FiberEngine(prm, grid, cutoff)
    sheet = prm.mu / (2.0 * math.pi * prm.h)
    fiber_norm = 1.0 / (2.0 * math.pi * prm.h)
    # absolute tolerance for the xi2 integrals, shared across levels
    tol_abs = tol * max(1.0, 1.0 / (sheet * fiber_norm * max(psi2_mass, 1e-12)))
    per_level_int, int_err = _adaptive_fiber_integral(
        engine, band, thresholds, lambda fs: fs.weights(psi1),
        tol=tol_abs, base_nodes=base_nodes, min_width_frac=min_width_frac,
    )
    factor = sheet * psi2_mass * fiber_norm
    per_landau = [(n, factor * float(per_level_int[n])) for n in range(n_levels)]
    N = float(sum(c for _, c in per_landau))
    emw, emw_err = magnetic_weyl_integral_1d(
        psi1, (sup_lo, sup_hi), prm.mu, prm.h, prm.k, prm.tau,
        convention=Convention.MODEL,
    )
    emw *= psi2_mass
    emw_err *= psi2_mass
    quad_err = factor * int_err + abs(emw_err)
    return CountReport(
        mu=prm.mu, h=prm.h, k=prm.k, tau=prm.tau,
        N_count=N, emw_integral=emw, remainder=N - emw,
        per_landau=per_landau, quadrature_error=quad_err,
        fiber_solves=engine.solves,
    )


def count_states_2d(
    psi1: Callable[[np.ndarray], np.ndarray],
    prm: ModelParams,
    support=None,
    tol: float = 1e-4,
    grid: Optional[Grid1D] = None,
    base_nodes: int = 64,
    min_width_frac: float = 1e-4,
):
    """Weighted count for the 2D factor operator alone, with its 2D magnetic
    Weyl integral (one m-ladder, no Landau sheet factor).

    Returns (N_I, EMW_I, quadrature_error, fiber_solves).
    """
    sup_lo, sup_hi = _support_of(psi1, support)
    radius = max(abs(sup_lo), abs(sup_hi))
    band = xi2_band(prm, radius)
    if grid is None:
        grid = default_grid(prm, band[1], cutoff=prm.tau)
    thresholds = np.array([prm.tau])
    engine = FiberEngine(prm, grid, cutoff=prm.tau)
    fiber_norm = 1.0 / (2.0 * math.pi * prm.h)
    tol_abs = tol * max(1.0, 1.0 / fiber_norm)
    integral, int_err = _adaptive_fiber_integral(
        engine, band, thresholds, lambda fs: fs.weights(psi1),
        tol=tol_abs, base_nodes=base_nodes, min_width_frac=min_width_frac,
    )
    N_I = fiber_norm * float(integral[0])
    # 2D magnetic Weyl: (2 pi)^-1 mu h^-1 sum_m theta(W - (2m+1) mu h |x1|) |x1|
    # equals the 4D kernel divided by the n = "no second factor" ladder; reuse
    # the 1D integrator with a single fictitious level at threshold 0
    emw, emw_err = _emw_2d_integral(psi1, (sup_lo, sup_hi), prm)
    return N_I, emw, fiber_norm * int_err + abs(emw_err), engine.solves


def _emw_2d_integral(psi1, support, prm: ModelParams, x_small: float = 1e-3):
    """Integral of (2 pi)^-1 mu h^-1 sum_m theta(tau + 1 + k x - (2m+1) mu h |x|) |x|
    weighted by psi1, exact piecewise (same scheme as the 4D 1D-reduction)."""
    from .weyl import _count_odd_below, _GL_NODES, _GL_WEIGHTS
    from scipy.integrate import quad

    lo, hi = support
    mu_h = prm.mu * prm.h
    C0 = prm.tau + 1.0
    pref = prm.mu / (2.0 * math.pi * prm.h)
    total = 0.0
    err = 0.0
    for sign in (-1.0, 1.0):
        seg_lo, seg_hi = (x_small, hi) if sign > 0 else (x_small, -lo)
        if seg_hi <= seg_lo:
            continue
        cuts = set()
        m_cap = int((C0 + abs(prm.k) * max(abs(lo), abs(hi))) / (2.0 * mu_h * seg_lo)) + 2
        for m in range(m_cap):
            denom = (2 * m + 1) * mu_h - sign * prm.k
            if denom == 0.0:
                continue
            x_star = C0 / denom
            if denom > 0 and x_star <= seg_lo:
                break
            if seg_lo < x_star < seg_hi:
                cuts.add(x_star)
        edges = np.unique(np.concatenate([[seg_lo, seg_hi], sorted(cuts)]))
        sub = [edges[0]]
        for a, b in zip(edges, edges[1:]):
            parts = max(1, int(math.ceil((b - a) / 0.01)))
            sub.extend(a + (b - a) * (i + 1) / parts for i in range(parts))
        sub = np.array(sub)
        mids = 0.5 * (sub[:-1] + sub[1:])
        halves = 0.5 * (sub[1:] - sub[:-1])
        W = C0 + prm.k * sign * mids
        counts = np.where(W > 0, _count_odd_below(W / (mu_h * mids)), 0.0)
        active = counts > 0
        if np.any(active):
            xq = mids[active, None] + halves[active, None] * _GL_NODES[None, :]
            wq = halves[active, None] * _GL_WEIGHTS[None, :]
            panel = np.sum(np.asarray(psi1(sign * xq)) * xq * wq, axis=1)
            total += pref * float(np.sum(counts[active] * panel))

    def smooth_part(x):
        w = float(np.asarray(psi1(x)))
        if w == 0.0:
            return 0.0
        return w * max(C0 + prm.k * x, 0.0) / (2.0 * mu_h)

    val, qerr = quad(smooth_part, -x_small, x_small, limit=200)
    total += pref * val
    err += pref * abs(qerr)
    psi_cap = float(np.max(np.abs(np.asarray(psi1(np.linspace(-x_small, x_small, 65))))))
    err += pref * 0.5 * psi_cap * x_small ** 2
    return total, err


def local_dos_2d(
    x1,
    tau: float,
    prm: ModelParams,
    support_radius: float = 1.0,
    tol: float = 1e-5,
    grid: Optional[Grid1D] = None,
    base_nodes: int = 64,
    min_width_frac: float = 1e-4,
):
    """Local density of states of the 2D factor operator at positions x1:

    e_I(x1, x1, tau) = (2 pi h)^-1 int d(xi2) sum_k |phi_k(x1; xi2)|^2
                                              theta(tau - lambda_k(xi2)).

    Returns an array matching the shape of x1 (or a scalar for scalar input).
    """
    x1_arr = np.atleast_1d(np.asarray(x1, dtype=float))
    radius = max(support_radius, float(np.max(np.abs(x1_arr))) + 0.1)
    band = xi2_band(prm, radius)
    if grid is None:
        grid = default_grid(prm, band[1], cutoff=tau)
    engine = FiberEngine(prm, grid, cutoff=tau)

    # component j of the integrand accumulates |phi_k(x1_j)|^2 over the
    # eigenvalues below tau
    def weight_total(fs: FiberSpectrum) -> np.ndarray:
        vals = fs.eigenfunction_at(x1_arr) ** 2
        below = np.searchsorted(fs.eigenvalues, tau, side="left")
        return vals[:, :below].sum(axis=1)

    lo, hi = band
    min_width = (hi - lo) * min_width_frac

    def node_data(x: float):
        fs = engine(x)
        g = weight_total(fs)
        count = int(np.searchsorted(fs.eigenvalues, tau, side="left"))
        return g, count

    xs = np.linspace(lo, hi, base_nodes + 1)
    data = {float(x): node_data(float(x)) for x in xs}
    stack = [(float(a), float(b)) for a, b in zip(xs[:-1], xs[1:])]
    total = np.zeros(len(x1_arr))
    err = 0.0
    while stack:
        a, b = stack.pop()
        ga, ca = data[a]
        gb, cb = data[b]
        m = 0.5 * (a + b)
        gm, cm = data.setdefault(m, node_data(m))
        width = b - a
        trap = 0.5 * (ga + gb) * width
        simp = (ga + 4.0 * gm + gb) * width / 6.0
        disagreement = float(np.max(np.abs(simp - trap)))
        has_jump = (ca != cm) or (cm != cb)
        budget = tol * width / (hi - lo) * max(1.0, float(np.max(np.abs(gm))))
        if width <= min_width or (not has_jump and disagreement <= budget):
            total += simp
            err += disagreement
        else:
            stack.append((a, m))
            stack.append((m, b))
    out = total / (2.0 * math.pi * prm.h)
    if np.isscalar(x1) or (isinstance(x1, np.ndarray) and x1.ndim == 0):
        return float(out[0])
    return out
