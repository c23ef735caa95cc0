"""
services/geometry_service.py
Geometry Service Module - model domains and their Kähler data

Potentials, Calabi diastasis (through the closed-form analytic
continuation of the potential), volume densities and closed-form
reproducing kernels for the disk, the ball, the polydisk and the
type I matrix domains, for the metric mu * g_min.

Sign convention: D(z, w) = phi(z, z̄) + phi(w, w̄) - phi(z, w̄) - phi(w, z̄),
which vanishes on the diagonal.

Points are numpy arrays whose trailing axes are the coordinate shape of
the model: () for the disk, (n,) for ball and polydisk, (p, q) for type I.
Leading axes are treated as a batch.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from services.catalog_service import Family, lookup_domain, symmetric_root_constants
from services.errors import (
    BelowThresholdError, ContinuationError, DimensionMismatchError,
    InvalidParameterError, NonPositiveScaleError, PointOutsideDomainError,
    UnsupportedModelError,
)
from services.homog_service import RootConstants, to_fraction

logger = logging.getLogger(__name__)

CONTINUATION_TOL = 1e-9


class ModelKind(str, Enum):
    DISK = 'disk'
    BALL = 'ball'
    POLYDISK = 'polydisk'
    TYPE_I = 'typeI'


@dataclass(frozen=True)
class DomainModel:
    """
    kind, params ((), (n,), (n,) or (p, q)), metric scale mu and an optional
    holomorphic gauge: the potential is mu*phi_min(z) + 2 Re(sum_j gauge_j z_j).
    """
    kind: ModelKind
    params: Tuple[int, ...] = ()
    scale: float = 1.0
    gauge: Tuple[complex, ...] = ()

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        params = tuple(int(v) for v in self.params)
        object.__setattr__(self, 'params', params)
        expected = {ModelKind.DISK: 0, ModelKind.BALL: 1, ModelKind.POLYDISK: 1, ModelKind.TYPE_I: 2}[kind]
        if len(params) != expected:
            raise InvalidParameterError(f"{kind.value} takes {expected} size parameter(s), got {params}")
        if any(v < 1 for v in params):
            raise InvalidParameterError(f"{kind.value} sizes must be positive, got {params}")
        if kind is ModelKind.TYPE_I and params[0] > params[1]:
            raise InvalidParameterError(f"typeI requires p <= q, got {params}")
        if not self.scale > 0:
            raise NonPositiveScaleError(f"metric scale must be positive, got {self.scale}")
        object.__setattr__(self, 'scale', float(self.scale))
        gauge = tuple(complex(a) for a in self.gauge)
        if gauge and len(gauge) != self.n_vars:
            raise DimensionMismatchError(f"gauge has {len(gauge)} coefficients, model has {self.n_vars} coordinates")
        object.__setattr__(self, 'gauge', gauge)

    # -- constructors --------------------------------------------------
    @classmethod
    def disk(cls, scale: float = 1.0) -> 'DomainModel':
        return cls(ModelKind.DISK, (), scale)

    @classmethod
    def ball(cls, n: int, scale: float = 1.0) -> 'DomainModel':
        return cls(ModelKind.BALL, (n,), scale)

    @classmethod
    def polydisk(cls, n: int, scale: float = 1.0) -> 'DomainModel':
        return cls(ModelKind.POLYDISK, (n,), scale)

    @classmethod
    def type_i(cls, p: int, q: int, scale: float = 1.0) -> 'DomainModel':
        return cls(ModelKind.TYPE_I, (p, q), scale)

    def with_scale(self, scale: float) -> 'DomainModel':
        return replace(self, scale=scale)

    def with_gauge(self, gauge: Sequence[complex]) -> 'DomainModel':
        return replace(self, gauge=tuple(gauge))

    def without_gauge(self) -> 'DomainModel':
        return replace(self, gauge=())

    # -- shape ---------------------------------------------------------
    @property
    def coordinate_shape(self) -> Tuple[int, ...]:
        if self.kind is ModelKind.DISK:
            return ()
        return self.params

    @property
    def n_vars(self) -> int:
        return int(np.prod(self.coordinate_shape, dtype=int))

    @property
    def dim(self) -> int:
        return self.n_vars

    @property
    def matrix_shape(self) -> Tuple[int, int]:
        """(P, Q) with the domain seen as P x Q matrices of operator norm < 1."""
        if self.kind is ModelKind.DISK:
            return 1, 1
        if self.kind is ModelKind.BALL:
            return 1, self.params[0]
        if self.kind is ModelKind.TYPE_I:
            return self.params
        raise UnsupportedModelError("the polydisk has no matrix form")

    @property
    def genus(self) -> int:
        """Genus of one irreducible factor."""
        if self.kind is ModelKind.POLYDISK:
            return 2
        p, q = self.matrix_shape
        return p + q

    @property
    def label(self) -> str:
        if not self.params:
            return self.kind.value
        return f"{self.kind.value}:{','.join(str(v) for v in self.params)}"

    def origin(self) -> np.ndarray:
        return np.zeros(self.coordinate_shape, dtype=complex)


def parse_model_spec(spec: str, scale: float = 1.0) -> DomainModel:
    """'disk', 'ball:2', 'polydisk:3', 'typeI:2,3' or 'I:2,3'."""
    head, _, tail = (spec or '').strip().partition(':')
    try:
        params = tuple(int(t) for t in tail.split(',') if t.strip()) if tail else ()
    except ValueError:
        raise InvalidParameterError(f"malformed parameters in model spec {spec!r}") from None
    key = head.strip().lower()
    kinds = {'disk': ModelKind.DISK, 'ball': ModelKind.BALL, 'polydisk': ModelKind.POLYDISK,
             'typei': ModelKind.TYPE_I, 'i': ModelKind.TYPE_I}
    if key not in kinds:
        raise UnsupportedModelError(f"no evaluatable model for {spec!r} (disk, ball:n, polydisk:n, typeI:p,q)")
    return DomainModel(kinds[key], params, scale)


# -- points ------------------------------------------------------------

def as_points(m: DomainModel, z) -> np.ndarray:
    arr = np.asarray(z, dtype=complex)
    cs = m.coordinate_shape
    if arr.ndim < len(cs) or arr.shape[arr.ndim - len(cs):] != cs:
        raise DimensionMismatchError(f"{m.label} points need trailing shape {cs}, got {arr.shape}")
    return arr


def flat_coordinates(m: DomainModel, z) -> np.ndarray:
    """Points as (..., n_vars), type I entries in row-major order."""
    arr = as_points(m, z)
    batch = arr.shape[:arr.ndim - len(m.coordinate_shape)]
    return arr.reshape(batch + (m.n_vars,))


def _matrix(m: DomainModel, arr: np.ndarray) -> np.ndarray:
    if m.kind is ModelKind.DISK:
        return arr[..., None, None]
    if m.kind is ModelKind.BALL:
        return arr[..., None, :]
    return arr


def _out(values):
    values = np.asarray(values)
    return values.item() if values.ndim == 0 else values


def domain_radius(m: DomainModel, z):
    """Exhaustion radius: |z|, max |z_j| or the operator norm."""
    arr = as_points(m, z)
    if m.kind is ModelKind.DISK:
        return _out(np.abs(arr))
    if m.kind is ModelKind.BALL:
        return _out(np.linalg.norm(arr, axis=-1))
    if m.kind is ModelKind.POLYDISK:
        return _out(np.max(np.abs(arr), axis=-1))
    return _out(np.linalg.norm(arr, ord=2, axis=(-2, -1)))


def check_points(m: DomainModel, z) -> np.ndarray:
    """Points as an array; raises PointOutsideDomainError unless every radius is < 1."""
    arr = as_points(m, z)
    radius = np.asarray(domain_radius(m, arr))
    if not np.all(radius < 1.0):
        raise PointOutsideDomainError(f"point outside {m.label}: radius {float(np.max(radius)):.6g} >= 1")
    return arr


# -- potentials --------------------------------------------------------

def _phi_min_continued(m: DomainModel, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """phi_min(z, w̄), holomorphic in z and antiholomorphic in w."""
    if m.kind is ModelKind.POLYDISK:
        return -np.sum(np.log(1.0 - z * np.conj(w)), axis=-1)
    Z, W = _matrix(m, z), _matrix(m, w)
    p, _ = m.matrix_shape
    if p == 1:
        return -np.log(1.0 - np.sum(Z[..., 0, :] * np.conj(W[..., 0, :]), axis=-1))
    M = np.eye(p) - Z @ np.conj(np.swapaxes(W, -1, -2))
    eig = np.linalg.eigvals(M)
    # spectrum of Z W* lies in the open unit disk, so I - Z W* has it in the right half plane
    if np.any(eig.real <= 0):
        raise ContinuationError("I - Z W* left the principal branch of the logarithm")
    return -np.sum(np.log(eig), axis=-1)


def _gauge_continued(m: DomainModel, z: np.ndarray, w: np.ndarray):
    if not m.gauge:
        return 0.0
    alpha = np.asarray(m.gauge)
    zf = flat_coordinates(m, z)
    wf = flat_coordinates(m, w)
    return zf @ alpha + np.conj(wf @ alpha)


def _potential_continued(m: DomainModel, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    return m.scale * _phi_min_continued(m, z, w) + _gauge_continued(m, z, w)


def potential(m: DomainModel, z):
    arr = check_points(m, z)
    return _out(np.real(_potential_continued(m, arr, arr)))


def diastasis(m: DomainModel, w, z):
    """Calabi diastasis D_w(z); real, symmetric, zero on the diagonal."""
    w = check_points(m, w)
    z = check_points(m, z)
    value = (_potential_continued(m, z, z) + _potential_continued(m, w, w)
             - _potential_continued(m, z, w) - _potential_continued(m, w, z))
    if np.any(np.abs(np.imag(value)) > CONTINUATION_TOL * (1.0 + np.abs(np.real(value)))):
        raise ContinuationError("diastasis picked up an imaginary part")
    return _out(np.real(value))


def _hermitian_power(h: np.ndarray, power: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * w[..., None, :] ** power) @ np.conj(np.swapaxes(v, -1, -2))


def move_to_origin(m: DomainModel, a, z):
    """
    Automorphism taking a to the origin, applied to z.

    Matrix models: (I - A A*)^{-1/2} (Z - A) (I - A* Z)^{-1} (I - A* A)^{1/2};
    polydisk: the Möbius map (z_j - a_j)/(1 - ā_j z_j) in each coordinate.
    D_a(z) = D_0(move_to_origin(a, z)) and omega^n/n! is preserved.
    """
    a = check_points(m, a)
    z = check_points(m, z)
    if a.shape != m.coordinate_shape:
        raise DimensionMismatchError(f"base point must be a single point of shape {m.coordinate_shape}")
    if m.kind is ModelKind.POLYDISK:
        return (z - a) / (1.0 - np.conj(a) * z)
    p, q = m.matrix_shape
    A = _matrix(m, a)
    Z = _matrix(m, z)
    A_star = np.conj(A.T)
    left = _hermitian_power(np.eye(p) - A @ A_star, -0.5)
    right = _hermitian_power(np.eye(q) - A_star @ A, 0.5)
    moved = left @ (Z - A) @ np.linalg.inv(np.eye(q) - A_star @ Z) @ right
    return moved.reshape(z.shape)


def volume_density(m: DomainModel, z):
    """Density of omega^n/n! against Lebesgue measure, with (i/2)dz∧dz̄ = dx∧dy."""
    arr = check_points(m, z)
    mu_n = m.scale ** m.dim
    if m.kind is ModelKind.POLYDISK:
        return _out(mu_n * np.prod((1.0 - np.abs(arr) ** 2) ** -2, axis=-1))
    p, q = m.matrix_shape
    Z = _matrix(m, arr)
    if p == 1:
        det = 1.0 - np.sum(np.abs(Z[..., 0, :]) ** 2, axis=-1)
    else:
        det = np.real(np.linalg.det(np.eye(p) - Z @ np.conj(np.swapaxes(Z, -1, -2))))
    return _out(mu_n * det ** -(p + q))


# -- thresholds and oracles ----------------------------------------------

def model_root_constants(m: DomainModel) -> RootConstants:
    """Root constants of mu * g_min (gamma_k of g_min is 1)."""
    mu = to_fraction(m.scale)
    if m.kind is ModelKind.POLYDISK:
        n = m.params[0]
        zeros = tuple(Fraction(0) for _ in range(n))
        return RootConstants(rank=n, p=zeros, q=zeros, b=zeros, gamma=tuple(mu for _ in range(n)))
    p, q = m.matrix_shape
    c = symmetric_root_constants(lookup_domain(Family.I, (p, q)))
    return replace(c, gamma=tuple(mu for _ in range(c.rank)))


def diastatic_entropy(m: DomainModel) -> float:
    """Exact value (genus - 1)/mu; lambda*g is balanced iff lambda exceeds it."""
    return (m.genus - 1) / m.scale


def closed_form_kernel(m: DomainModel, lam: float, z, w):
    """
    Reproducing kernel of H_{lam*phi} with measure omega_g^n/n!.

    s = lam*mu. disk: ((s-1)/(pi mu)) (1 - z w̄)^-s;
    ball(n): Gamma(s)/(mu^n pi^n Gamma(s-n)) (1 - <z, w>)^-s; polydisk: product.
    """
    z = check_points(m, z)
    w = check_points(m, w)
    if m.kind is ModelKind.TYPE_I and m.params[0] > 1:
        raise UnsupportedModelError("no closed-form kernel for typeI with p > 1; use the hilbert service")
    if not lam > 0:
        raise NonPositiveScaleError(f"lambda must be positive, got {lam}")
    s = lam * m.scale
    mu = m.scale
    zf = flat_coordinates(m, z)
    wf = flat_coordinates(m, w)
    if m.kind is ModelKind.POLYDISK:
        if s <= 1:
            raise BelowThresholdError(f"lambda={lam} is not above the threshold {1 / mu:.9g}: the space degenerates")
        factors = (s - 1) / (np.pi * mu) * (1.0 - zf * np.conj(wf)) ** -s
        value = np.prod(factors, axis=-1)
    else:
        n = m.n_vars
        if s <= n:
            raise BelowThresholdError(f"lambda={lam} is not above the threshold {n / mu:.9g}: the space degenerates")
        const = np.exp(gammaln(s) - gammaln(s - n) - n * np.log(mu * np.pi))
        value = const * (1.0 - np.sum(zf * np.conj(wf), axis=-1)) ** -s
    if m.gauge:
        alpha = np.asarray(m.gauge)
        value = value * np.exp(lam * (zf @ alpha + np.conj(wf @ alpha)))
    return _out(value)


def sample_points(m: DomainModel, radii: Sequence[float], angles: Sequence[float] = (0.0,)) -> np.ndarray:
    """One point per (radius, angle), radius-major, with domain_radius equal to the radius."""
    rows = []
    for r in radii:
        for theta in angles:
            phase = r * np.exp(1j * theta)
            if m.kind is ModelKind.DISK:
                rows.append(np.asarray(phase, dtype=complex))
            elif m.kind is ModelKind.BALL:
                n = m.params[0]
                rows.append(np.full(n, phase / np.sqrt(n)))
            elif m.kind is ModelKind.POLYDISK:
                rows.append(np.full(m.params[0], phase))
            else:
                p, q = m.params
                rows.append(phase * np.eye(p, q, dtype=complex))
    return np.stack(rows) if rows else np.zeros((0,) + m.coordinate_shape, dtype=complex)
