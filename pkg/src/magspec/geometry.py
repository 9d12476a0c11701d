"""Geometry of the model degenerate magnetic field.

The magnetic 2-form used throughout is the circular-symmetric normal form of
the generic rank-degenerate (Martinet-type) field in four dimensions,

    F12 = 1,  F13 = -x4,  F14 = x3,  F23 = x3,  F24 = x4,
    F34 = 2*(x1 - (x3^2 + x4^2)/2),

with degeneracy hypersurface Sigma = {x1 = 0} (where the Pfaffian 2*x1
vanishes and the form drops to rank 2) and central curve
Lambda = {x1 = x3 = x4 = 0}.  The module evaluates the field, its
eigen-intensities f1 <= f2 and eigenframes with respect to a metric, the
helical magnetic lines inside Sigma, and the zone classification used by the
propagation estimates (inner core / true inner / inner bulk / near outer /
strict outer I, II).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import NearDegenerateFrames, OnLambda

__all__ = [
    "Point4",
    "FieldModel",
    "FieldInvariants",
    "ZoneConstants",
    "ZoneLabel",
    "two_form",
    "vector_potential",
    "pfaffian",
    "field_invariants",
    "intensities",
    "classify_zone",
    "magnetic_line",
    "martinet_model",
    "circular_gauge_model",
    "separable_model",
    "constant_field_model",
    "sample_field",
]


@dataclass(frozen=True)
class Point4:
    """A point in the 4D model coordinates."""

    x1: float
    x2: float
    x3: float
    x4: float

    @property
    def r(self) -> float:
        """Distance to the central curve Lambda in model coordinates."""
        return math.hypot(self.x3, self.x4)

    @property
    def theta(self) -> float:
        return math.atan2(self.x4, self.x3)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3, self.x4], dtype=float)

    @classmethod
    def from_array(cls, a) -> "Point4":
        a = np.asarray(a, dtype=float)
        return cls(a[0], a[1], a[2], a[3])


def _coords(p) -> np.ndarray:
    """Accept Point4 or any 4-sequence; return a float array of shape (4,)."""
    if isinstance(p, Point4):
        return p.as_array()
    a = np.asarray(p, dtype=float)
    if a.shape != (4,):
        raise ValueError(f"expected a 4D point, got shape {a.shape}")
    return a


def two_form(p) -> np.ndarray:
    """Antisymmetric matrix F_{jk} of the model field at a point."""
    x1, _, x3, x4 = _coords(p)
    w = 2.0 * (x1 - 0.5 * (x3 * x3 + x4 * x4))
    F = np.array(
        [
            [0.0, 1.0, -x4, x3],
            [-1.0, 0.0, x3, x4],
            [x4, -x3, 0.0, w],
            [-x3, -x4, -w, 0.0],
        ]
    )
    return F


def vector_potential(p) -> np.ndarray:
    """Vector potential (V1..V4) whose exterior derivative is `two_form`.

    Cartesian components of the 1-form
    (x1 - r^2/2) dx2 + (x1 - r^2/4) r^2 dtheta.
    """
    x1, _, x3, x4 = _coords(p)
    r2 = x3 * x3 + x4 * x4
    c = x1 - 0.25 * r2
    return np.array([0.0, x1 - 0.5 * r2, -c * x4, c * x3])


def pfaffian(F: np.ndarray) -> float:
    """Pfaffian of a 4x4 antisymmetric matrix."""
    return F[0, 1] * F[2, 3] - F[0, 2] * F[1, 3] + F[0, 3] * F[1, 2]


def _euclidean_metric(p) -> np.ndarray:
    return np.eye(4)


def _potential_jacobian(p) -> np.ndarray:
    """J[j, k] = d V_k / d x_j for the model vector potential."""
    x1, _, x3, x4 = _coords(p)
    J = np.zeros((4, 4))
    # V2 = x1 - (x3^2+x4^2)/2
    J[0, 1] = 1.0
    J[2, 1] = -x3
    J[3, 1] = -x4
    # V3 = -(x1 - r^2/4) x4,  V4 = (x1 - r^2/4) x3
    c = x1 - 0.25 * (x3 * x3 + x4 * x4)
    J[0, 2] = -x4
    J[2, 2] = 0.5 * x3 * x4
    J[3, 2] = -c + 0.5 * x4 * x4
    J[0, 3] = x3
    J[2, 3] = c - 0.5 * x3 * x3
    J[3, 3] = -0.5 * x3 * x4
    return J


@dataclass(frozen=True)
class FieldModel:
    """Evaluators for the metric, vector potential and scalar potential.

    `metric` returns the inverse-metric matrix g^{jk} (symmetric positive
    definite), `potential` the covariant components V_j, `scalar` the scalar
    potential V.  `mu` is the field coupling (mu > 1), `h` the semiclassical
    parameter in (0, 1); their product is capped by `mu_h_max`.

    Optional analytic derivative callbacks speed up flow integration; when
    absent, central finite differences are used.
    """

    metric: Callable[[np.ndarray], np.ndarray]
    potential: Callable[[np.ndarray], np.ndarray]
    scalar: Callable[[np.ndarray], float]
    mu: float
    h: float
    mu_h_max: float = 1.0
    field_matrix: Optional[Callable[[np.ndarray], np.ndarray]] = None
    potential_jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    scalar_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    euclidean: bool = False
    # vectorized fast paths over point arrays of shape (n, 4)
    intensities_batch: Optional[Callable[[np.ndarray], tuple]] = None
    scalar_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def scalar_at(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.scalar_batch is not None:
            return np.asarray(self.scalar_batch(pts), dtype=float)
        return np.array([self.scalar(p) for p in pts], dtype=float)

    def __post_init__(self):
        if not self.mu > 1.0:
            raise ValueError(f"coupling mu must exceed 1, got {self.mu}")
        if not 0.0 < self.h < 1.0:
            raise ValueError(f"planck parameter h must lie in (0,1), got {self.h}")
        if self.mu * self.h > self.mu_h_max + 1e-12:
            raise ValueError(
                f"mu*h = {self.mu * self.h:.4g} exceeds configured cap {self.mu_h_max}"
            )

    def field(self, p) -> np.ndarray:
        """Field matrix F_{jk} = d_j V_k - d_k V_j at a point."""
        if self.field_matrix is not None:
            return self.field_matrix(p)
        J = self._potential_jac(p)
        return J - J.T

    def _potential_jac(self, p) -> np.ndarray:
        if self.potential_jac is not None:
            return self.potential_jac(p)
        x = _coords(p)
        step = 1e-6
        J = np.zeros((4, 4))
        for j in range(4):
            e = np.zeros(4)
            e[j] = step
            J[j, :] = (np.asarray(self.potential(x + e)) - np.asarray(self.potential(x - e))) / (2 * step)
        return J

    def _scalar_grad(self, p) -> np.ndarray:
        if self.scalar_grad is not None:
            return self.scalar_grad(p)
        x = _coords(p)
        step = 1e-6
        g = np.zeros(4)
        for j in range(4):
            e = np.zeros(4)
            e[j] = step
            g[j] = (self.scalar(x + e) - self.scalar(x - e)) / (2 * step)
        return g


def _const_scalar(value):
    def fn(p):
        return value

    return fn


def martinet_model(mu: float, h: float, scalar=1.0, mu_h_max: float = 1.0) -> FieldModel:
    """Standard model: Euclidean metric, circular-symmetric degenerate field.

    `scalar` may be a constant or a callable V(x); the default V = 1 keeps the
    energy shell away from the classically forbidden region on the unit ball.
    """
    scalar_fn = scalar if callable(scalar) else _const_scalar(float(scalar))
    scalar_grad = None if callable(scalar) else (lambda p: np.zeros(4))
    scalar_batch = None if callable(scalar) else (
        lambda pts: np.full(np.atleast_2d(pts).shape[0], float(scalar)))

    def intensities_batch(pts):
        pts = np.atleast_2d(pts)
        x1 = pts[:, 0]
        r2 = pts[:, 2] ** 2 + pts[:, 3] ** 2
        P = np.abs(2.0 * x1)
        S = 1.0 + 2.0 * r2 + 4.0 * (x1 - 0.5 * r2) ** 2
        return _intensities_from_invariants(S, P)

    return FieldModel(
        metric=_euclidean_metric,
        potential=vector_potential,
        scalar=scalar_fn,
        mu=mu,
        h=h,
        mu_h_max=mu_h_max,
        field_matrix=two_form,
        potential_jac=_potential_jacobian,
        scalar_grad=scalar_grad,
        euclidean=True,
        intensities_batch=intensities_batch,
        scalar_batch=scalar_batch,
    )


def _gauge_potential_half(p) -> np.ndarray:
    """Companion gauge with (x1 - r^2/2) in both the x2 and theta components.

    This is the exact vector potential matching the reduced polar Hamiltonian
    as printed (both squares carry x1 - r^2/2); its field differs from
    `two_form` in the F34 entry and degenerates on the parabola x1 = r^2/2.
    """
    x1, _, x3, x4 = _coords(p)
    c = x1 - 0.5 * (x3 * x3 + x4 * x4)
    return np.array([0.0, c, -c * x4, c * x3])


def _gauge_half_jacobian(p) -> np.ndarray:
    x1, _, x3, x4 = _coords(p)
    J = np.zeros((4, 4))
    c = x1 - 0.5 * (x3 * x3 + x4 * x4)
    J[0, 1] = 1.0
    J[2, 1] = -x3
    J[3, 1] = -x4
    J[0, 2] = -x4
    J[2, 2] = x3 * x4
    J[3, 2] = -c + x4 * x4
    J[0, 3] = x3
    J[2, 3] = c - x3 * x3
    J[3, 3] = -x3 * x4
    return J


def circular_gauge_model(mu: float, h: float, scalar=1.0, mu_h_max: float = 1.0) -> FieldModel:
    """Model whose full Hamiltonian reduces exactly to the polar form."""
    scalar_fn = scalar if callable(scalar) else _const_scalar(float(scalar))
    scalar_grad = None if callable(scalar) else (lambda p: np.zeros(4))
    return FieldModel(
        metric=_euclidean_metric,
        potential=_gauge_potential_half,
        scalar=scalar_fn,
        mu=mu,
        h=h,
        mu_h_max=mu_h_max,
        potential_jac=_gauge_half_jacobian,
        scalar_grad=scalar_grad,
        euclidean=True,
    )


def separable_model(mu: float, h: float, k: float = 0.0, mu_h_max: float = 1.0) -> FieldModel:
    """Classical counterpart of the separable model operators: field
    F12 = x1, F34 = 1 (so f1 = |x1|, f2 = 1), scalar potential 1 + k*x1."""

    def potential(p):
        x = _coords(p)
        return np.array([0.0, 0.5 * x[0] * x[0], 0.0, x[2]])

    def potential_jac(p):
        x = _coords(p)
        J = np.zeros((4, 4))
        J[0, 1] = x[0]
        J[2, 3] = 1.0
        return J

    def field_matrix(p):
        x = _coords(p)
        F = np.zeros((4, 4))
        F[0, 1], F[1, 0] = x[0], -x[0]
        F[2, 3], F[3, 2] = 1.0, -1.0
        return F

    def intensities_batch(pts):
        pts = np.atleast_2d(pts)
        f1 = np.abs(pts[:, 0])
        return np.minimum(f1, 1.0), np.maximum(f1, 1.0)

    return FieldModel(
        metric=_euclidean_metric,
        potential=potential,
        scalar=lambda p: 1.0 + k * _coords(p)[0],
        mu=mu,
        h=h,
        mu_h_max=mu_h_max,
        field_matrix=field_matrix,
        potential_jac=potential_jac,
        scalar_grad=lambda p: np.array([k, 0.0, 0.0, 0.0]),
        euclidean=True,
        intensities_batch=intensities_batch,
        scalar_batch=lambda pts: 1.0 + k * np.atleast_2d(pts)[:, 0],
    )


def constant_field_model(mu: float, h: float, f1: float = 1.0, f2: float = 1.0,
                         scalar=1.0, scalar_grad=None, mu_h_max: float = 1.0) -> FieldModel:
    """Constant field F12 = f1, F34 = f2 with an optional variable scalar."""

    def potential(p):
        x = _coords(p)
        return np.array([0.0, f1 * x[0], 0.0, f2 * x[2]])

    def potential_jac(p):
        J = np.zeros((4, 4))
        J[0, 1] = f1
        J[2, 3] = f2
        return J

    def field_matrix(p):
        F = np.zeros((4, 4))
        F[0, 1], F[1, 0] = f1, -f1
        F[2, 3], F[3, 2] = f2, -f2
        return F

    scalar_fn = scalar if callable(scalar) else _const_scalar(float(scalar))
    scalar_batch = None if callable(scalar) else (
        lambda pts: np.full(np.atleast_2d(pts).shape[0], float(scalar)))
    if scalar_grad is None and not callable(scalar):
        scalar_grad = lambda p: np.zeros(4)
    lo, hi_f = min(abs(f1), abs(f2)), max(abs(f1), abs(f2))
    return FieldModel(
        metric=_euclidean_metric,
        potential=potential,
        scalar=scalar_fn,
        mu=mu,
        h=h,
        mu_h_max=mu_h_max,
        field_matrix=field_matrix,
        potential_jac=potential_jac,
        scalar_grad=scalar_grad,
        euclidean=True,
        intensities_batch=lambda pts: (
            np.full(np.atleast_2d(pts).shape[0], lo),
            np.full(np.atleast_2d(pts).shape[0], hi_f),
        ),
        scalar_batch=scalar_batch,
    )


@dataclass(frozen=True)
class FieldInvariants:
    """Eigen-intensities and eigenframes of the field at a point.

    f1 <= f2 are the nonnegative reals with +-i*f1, +-i*f2 the eigenvalues of
    (g^{jl} F_{lk}); frame1/frame2 are the +i*f eigenvectors normalized so the
    metric pairing of a frame with its conjugate equals 2.
    """

    f1: float
    f2: float
    frame1: np.ndarray
    frame2: np.ndarray
    two_form: np.ndarray


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    ph = v[i] / abs(v[i])
    return v / ph


def field_invariants(p, model: FieldModel, frame_tol: float = 1e-12) -> FieldInvariants:
    """Intensities f1 <= f2 and normalized eigenframes at a point.

    Raises NearDegenerateFrames (carrying f1, f2) when f2 - f1 < frame_tol,
    in which case individual eigenframes are not well defined.
    """
    x = _coords(p)
    F = model.field(x)
    G = np.asarray(model.metric(x), dtype=float)
    M = G @ F
    w, V = np.linalg.eig(M)
    # keep the two eigenvectors with positive imaginary eigenvalue part,
    # sorted by |Im|; real parts are rounding noise for g-antisymmetric M
    order = np.argsort(w.imag)
    idx1, idx2 = order[2], order[3]
    f1 = max(float(w.imag[idx1]), 0.0)
    f2 = max(float(w.imag[idx2]), 0.0)
    if f2 < f1:
        f1, f2 = f2, f1
        idx1, idx2 = idx2, idx1
    if f2 - f1 < frame_tol:
        raise NearDegenerateFrames(f1, f2)
    g_lower = np.linalg.inv(G)
    frames = []
    for idx in (idx1, idx2):
        v = V[:, idx]
        norm2 = np.real(np.conj(v) @ g_lower @ v)
        v = v * math.sqrt(2.0 / norm2)
        frames.append(_fix_phase(v))
    return FieldInvariants(f1=f1, f2=f2, frame1=frames[0], frame2=frames[1], two_form=F)


def _intensities_from_invariants(S, P):
    """(f1, f2) from S = f1^2 + f2^2 and P = f1 * f2."""
    disc = np.sqrt(np.maximum(S * S - 4.0 * P * P, 0.0))
    f1 = np.sqrt(np.maximum(0.5 * (S - disc), 0.0))
    f2 = np.sqrt(0.5 * (S + disc))
    return f1, f2


def intensities(points: np.ndarray, model: FieldModel) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (f1, f2) over an array of points of shape (n, 4).

    Uses the closed-form identities f1*f2*sqrt(g) = |Pf F| (metric-weighted)
    and f1^2 + f2^2 = -tr((g^{-1}F)^2)/2, valid for any metric; models with
    an `intensities_batch` fast path bypass the per-point loop.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if model.intensities_batch is not None:
        f1, f2 = model.intensities_batch(pts)
        return np.asarray(f1, dtype=float), np.asarray(f2, dtype=float)
    n = pts.shape[0]
    P = np.empty(n)
    S = np.empty(n)
    for i, x in enumerate(pts):
        F = model.field(x)
        M = np.asarray(model.metric(x), dtype=float) @ F
        g_det = 1.0 / np.linalg.det(np.asarray(model.metric(x), dtype=float))
        P[i] = abs(pfaffian(F)) / math.sqrt(g_det)
        S[i] = -0.5 * np.trace(M @ M)
    return _intensities_from_invariants(S, P)


@dataclass(frozen=True)
class ZoneConstants:
    """Constants entering the zone inequalities (C >= 1 >= eps > 0)."""

    C: float = 2.0
    c: float = 1.0
    eps: float = 0.05
    delta: float = 0.01

    def __post_init__(self):
        if not (self.C >= 1.0 >= self.eps > 0.0):
            raise ValueError("zone constants must satisfy C >= 1 >= eps > 0")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


class ZoneLabel(Enum):
    INNER_CORE = "InnerCore"
    INNER_TRUE = "InnerTrue"
    INNER_BULK = "InnerBulk"
    OUTER_NEAR = "OuterNear"
    OUTER_STRICT_I = "OuterStrictI"
    OUTER_STRICT_II = "OuterStrictII"
    OFF_ZONE = "OffZone"


def classify_zone(p, rho: float, model: FieldModel, k: ZoneConstants = ZoneConstants()) -> ZoneLabel:
    """Deterministic zone label for a point and momentum scale rho >= 0.

    gamma = |x1| is the distance to the degeneracy hypersurface and
    r = sqrt(x3^2 + x4^2) the distance to the central curve.  Inner labels are
    checked before outer ones because the regions overlap by constants:

      InnerCore      r <= C mu^(-1/3)  and  gamma <= C mu^(-2/3)
      inner family   gamma <= c mu^(-1/2) r^(1/2), split by
          InnerTrue      rho * r >= eps * mu * gamma^2
          InnerBulk      otherwise
      OuterNear      gamma <= C mu^(-1/2) h^(-delta)
      OuterStrictI   C mu^(3 delta - 1/2) r^(1/2) <= gamma <= eps r^2
      OuterStrictII  gamma >= C max(r^2, mu^(4 delta - 2/3))
      OffZone        none of the above
    """
    if rho < 0:
        raise ValueError("momentum scale rho must be nonnegative")
    x = _coords(p)
    gamma = abs(x[0])
    r = math.hypot(x[2], x[3])
    mu = model.mu
    h = model.h
    if r <= k.C * mu ** (-1.0 / 3.0) and gamma <= k.C * mu ** (-2.0 / 3.0):
        return ZoneLabel.INNER_CORE
    if gamma <= k.c * mu ** (-0.5) * math.sqrt(r):
        if rho * r >= k.eps * mu * gamma * gamma:
            return ZoneLabel.INNER_TRUE
        return ZoneLabel.INNER_BULK
    if gamma <= k.C * mu ** (-0.5) * h ** (-k.delta):
        return ZoneLabel.OUTER_NEAR
    if k.C * mu ** (3.0 * k.delta - 0.5) * math.sqrt(r) <= gamma <= k.eps * r * r:
        return ZoneLabel.OUTER_STRICT_I
    if gamma >= k.C * max(r * r, mu ** (4.0 * k.delta - 2.0 / 3.0)):
        return ZoneLabel.OUTER_STRICT_II
    return ZoneLabel.OFF_ZONE


def magnetic_line(p0, s: float) -> Point4:
    """Point at angle-parameter s along the magnetic line through p0.

    Magnetic lines are the integral curves of Ker F intersected with the
    tangent space of the degeneracy hypersurface.  Solving F v = 0 with
    v1 = 0 at a point of Sigma = {x1 = 0} gives the tangent
    (0, -r^2, -r sin(theta), r cos(theta)) per unit angle, so through a point
    with polar radius r the lines are the helices

        x1 = 0,  x3 = r cos(theta0 + s),  x4 = r sin(theta0 + s),
        x2 = x2(0) - r^2 s.

    The radius r is preserved exactly.  Raises OnLambda when r < 1e-9.
    """
    x = _coords(p0)
    if abs(x[0]) > 1e-9:
        raise ValueError(f"magnetic_line requires a point on {{x1=0}}, got x1={x[0]!r}")
    r = math.hypot(x[2], x[3])
    if r < 1e-9:
        raise OnLambda("magnetic line degenerates to a point on the central curve")
    theta = math.atan2(x[3], x[2]) + s
    return Point4(0.0, x[1] - r * r * s, r * math.cos(theta), r * math.sin(theta))


def sample_field(model: FieldModel, n: int, seed: int = 0, radius: float = 1.0,
                 rho: float = 0.0, constants: ZoneConstants = ZoneConstants()):
    """Sample n points uniformly in the ball and evaluate (f1, f2, zone).

    Returns a list of rows (x1, x2, x3, x4, f1, f2, zone_name) for CSV export.
    """
    rng = np.random.default_rng(seed)
    rows = []
    count = 0
    while count < n:
        x = rng.uniform(-radius, radius, size=4)
        if np.dot(x, x) > radius * radius:
            continue
        f1, f2 = intensities(x[None, :], model)
        zone = classify_zone(x, rho, model, constants)
        rows.append((x[0], x[1], x[2], x[3], float(f1[0]), float(f2[0]), zone.value))
        count += 1
    return rows
