"""
services/hilbert_service.py
Hilbert Space Service Module - weighted Bergman spaces on model domains

Builds the Gram matrix of the monomials z^alpha, |alpha| <= N, in
H_{lam phi} = { f holomorphic : int e^{-lam phi} |f|^2 omega^n/n! < inf },
factors it (G = L L^*), and evaluates from the factor the truncated
reproducing kernel, the epsilon function e^{-lam phi} K(z, z̄), the
balanced test, and the kernel-ratio diastasis

    D_z0(z) = (1/lam) log [K(z,z̄) K(z0,z̄0) / (K(z,z̄0) K(z0,z̄))].

log of the kernel ratio is lam times the diastasis of g, hence the 1/lam.

Quadrature schemes:
  radial   Gauss-Jacobi in t = |z|^2 with exact angular integrals (no gauge)
  product  Gauss-Jacobi x trapezoid per coordinate (disk / polydisk with gauge)
  qmc      scrambled Sobol points, boundary cut at RHO_MAX (everything else)
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from config import Config
from services import geometry_service as geometry
from services.entropy_service import Verdict, classify_convergence
from services.errors import (
    DivergentNormError, FactorizationError, InvalidParameterError,
    NonPositiveScaleError, PreconditionError, VanishingKernelError,
)
from services.geometry_service import DomainModel, ModelKind
from services.quadrature import gauss_jacobi_unit, polydisk_points, trapezoid_circle

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
VANISHING_KERNEL = 1e-300
QMC_TOTAL_DEGREE = 4


@dataclass(frozen=True, eq=False)
class KernelApproximation:
    model: DomainModel
    lam: float
    degree: int
    exponents: np.ndarray
    gram: np.ndarray
    factor: np.ndarray
    quadrature_spec: Dict[str, Any] = field(default_factory=dict)
    error_bar: float = 0.0

    @property
    def size(self) -> int:
        return len(self.exponents)

    def prefix_size(self, degree: int) -> int:
        """Number of monomials of total degree <= degree (they come first)."""
        return int(np.sum(self.exponents.sum(axis=1) <= degree))


@dataclass
class BalanceReport:
    samples: List[Dict[str, Any]]
    mean: float
    deviation: float
    rel_tol: float
    verdict: str
    truncation_limited: bool = False
    message: str = ''


def monomial_exponents(n_vars: int, degree: int) -> np.ndarray:
    """Multi-indices with |alpha| <= degree, ordered by total degree."""
    rows: List[Tuple[int, ...]] = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n_vars), total):
            alpha = [0] * n_vars
            for j in combo:
                alpha[j] += 1
            rows.append(tuple(alpha))
    return np.array(rows, dtype=int).reshape(-1, n_vars)


def monomials(points: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """(k, n) points -> (k, m) values z^alpha."""
    return np.prod(points[:, None, :] ** exponents[None, :, :], axis=-1)


# -- quadrature schemes ------------------------------------------------------

def _scheme_for(m: DomainModel) -> str:
    if not m.gauge and (m.kind in (ModelKind.DISK, ModelKind.BALL, ModelKind.POLYDISK)
                        or (m.kind is ModelKind.TYPE_I and m.params[0] == 1)):
        return 'radial'
    if m.kind in (ModelKind.DISK, ModelKind.POLYDISK) or m.n_vars == 1:
        return 'product'
    return 'qmc'


def _radial_gram(m: DomainModel, lam: float, exps: np.ndarray, degree: int):
    s = lam * m.scale
    mu = m.scale
    if m.kind is ModelKind.POLYDISK:
        t, w = gauss_jacobi_unit(degree + 8, s - 2.0)
        # ||z^k||^2 on one disk factor: mu * pi * int t^k (1-t)^{s-2} dt
        one_dim = mu * math.pi * (t[None, :] ** np.arange(degree + 1)[:, None]) @ w
        diag = np.prod(one_dim[exps], axis=1)
        spec = {'scheme': 'radial', 'jacobi_nodes': len(t)}
    else:
        n = m.n_vars
        t, w = gauss_jacobi_unit(degree + n + 8, s - (n + 1.0))
        total = exps.sum(axis=1)
        radial = (t[None, :] ** (total + n - 1)[:, None]) @ w
        # sphere: int |zeta^alpha|^2 = 2 pi^n alpha!/(n-1+|alpha|)!; r^{2n-1} dr = t^{n-1} dt / 2
        log_angular = n * math.log(mu * math.pi) + gammaln(exps + 1).sum(axis=1) - gammaln(n + total)
        diag = np.exp(log_angular) * radial
        spec = {'scheme': 'radial', 'jacobi_nodes': len(t)}
    return np.diag(diag.astype(complex)), spec, 0.0


def _disk_product_rule(m: DomainModel, lam: float, degree: int, alpha: complex = 0j):
    """Points and weights for int f e^{-lam phi} omega on one disk factor."""
    s = lam * m.scale
    t, wt = gauss_jacobi_unit(degree + 32, s - 2.0)
    theta, wth = trapezoid_circle(2 * degree + 64)
    z = (np.sqrt(t)[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = 0.5 * m.scale * (wt[:, None] * wth[None, :]).ravel()
    if alpha:
        weights = weights * np.exp(-2.0 * lam * np.real(alpha * z))
    return z, weights


def _product_gram(m: DomainModel, lam: float, exps: np.ndarray, degree: int):
    alphas = m.gauge or (0j,) * m.n_vars
    gram = np.ones((len(exps), len(exps)), dtype=complex)
    powers = np.arange(degree + 1)
    n_points = 0
    for j, alpha in enumerate(alphas):
        z, weights = _disk_product_rule(m, lam, degree, alpha)
        V = z[:, None] ** powers[None, :]
        one_dim = (V * weights[:, None]).T @ np.conj(V)
        gram = gram * one_dim[exps[:, j][:, None], exps[:, j][None, :]]
        n_points = len(z)
    spec = {'scheme': 'product', 'points_per_factor': n_points}
    return gram, spec, 0.0


def _qmc_rule(m: DomainModel, lam: float, n_points: int, replicates: int, seed: int):
    """Replicated scrambled-Sobol rule on {rho(z) < RHO_MAX}, weights include e^{-lam phi} * density."""
    rules = []
    for r in range(replicates):
        flat, cell = polydisk_points(m.n_vars, n_points, seed + r)
        pts = flat.reshape((-1,) + m.coordinate_shape)
        keep = np.asarray(geometry.domain_radius(m, pts)) < Config.RHO_MAX
        pts, flat = pts[keep], flat[keep]
        weights = (cell / replicates) * np.exp(-lam * np.asarray(geometry.potential(m, pts))) \
            * np.asarray(geometry.volume_density(m, pts))
        rules.append((flat, weights))
    return rules


def _qmc_gram(m: DomainModel, lam: float, exps: np.ndarray, n_points: int, replicates: int, seed: int):
    rules = _qmc_rule(m, lam, n_points, replicates, seed)
    partial = []
    for flat, weights in rules:
        V = monomials(flat, exps)
        partial.append((V * weights[:, None]).T @ np.conj(V))
    gram = sum(partial)
    norms = np.array([replicates * np.real(g[0, 0]) for g in partial])
    error_bar = float(np.std(norms, ddof=1) / math.sqrt(replicates) / np.mean(norms)) if replicates > 1 else 0.0
    spec = {'scheme': 'qmc', 'points': n_points, 'replicates': replicates, 'rho_max': Config.RHO_MAX}
    return gram, spec, error_bar


# -- construction ------------------------------------------------------------

def build_space(model: DomainModel, lam: float, degree: Optional[int] = None,
                scheme: Optional[str] = None, qmc_points: Optional[int] = None,
                qmc_replicates: Optional[int] = None, seed: Optional[int] = None) -> KernelApproximation:
    """
    Gram matrix and Cholesky factor of the monomials up to total degree N.

    Raises DivergentNormError when the constant function is not square
    integrable (lam at or below the balanced threshold: 1 is not in H).
    """
    if not lam > 0:
        raise NonPositiveScaleError(f"lambda must be positive, got {lam}")
    scheme = scheme or _scheme_for(model)
    if degree is None:
        if scheme == 'qmc':
            degree = QMC_TOTAL_DEGREE
        else:
            degree = Config.DEFAULT_DEGREE_1D if model.n_vars == 1 else Config.DEFAULT_TOTAL_DEGREE
    if degree < 0:
        raise InvalidParameterError(f"degree must be >= 0, got {degree}")

    # ||1||^2 is the entropy integral at the origin with c = lam
    probe = classify_convergence(model.without_gauge(), None, lam)
    if probe.verdict is not Verdict.CONVERGENT:
        raise DivergentNormError(
            f"norm of the constant function on {model.label} is {probe.verdict.value} at lambda={lam:.9g} "
            f"(tail ratios {[round(r, 4) for r in probe.ratios[-3:]]}): 1 is not in H"
        )

    exps = monomial_exponents(model.n_vars, degree)
    if scheme == 'radial':
        gram, spec, error_bar = _radial_gram(model, lam, exps, degree)
    elif scheme == 'product':
        gram, spec, error_bar = _product_gram(model, lam, exps, degree)
    elif scheme == 'qmc':
        gram, spec, error_bar = _qmc_gram(model, lam, exps,
                                          qmc_points or Config.QMC_POINTS,
                                          qmc_replicates or Config.QMC_REPLICATES,
                                          Config.QMC_SEED if seed is None else seed)
    else:
        raise InvalidParameterError(f"unknown quadrature scheme {scheme!r}")

    asym = np.max(np.abs(gram - np.conj(gram.T)))
    if asym > HERMITIAN_TOL * np.max(np.abs(gram)):
        logger.debug("symmetrizing gram (asymmetry %.3g)", asym)
    gram = 0.5 * (gram + np.conj(gram.T))
    try:
        factor = linalg.cholesky(gram, lower=True)
    except linalg.LinAlgError as exc:
        raise FactorizationError(f"gram matrix of {model.label} at degree {degree} is not positive definite: {exc}") from None
    if not np.all(np.real(np.diag(factor)) > 0):
        raise FactorizationError("nonpositive pivot in the gram factorization")

    logger.debug("built H for %s lam=%g degree=%d size=%d spec=%s", model.label, lam, degree, len(exps), spec)
    return KernelApproximation(model=model, lam=float(lam), degree=degree, exponents=exps,
                               gram=gram, factor=factor, quadrature_spec=spec, error_bar=error_bar)


# -- evaluation --------------------------------------------------------------

def _coefficients(ka: KernelApproximation, z) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """u(z) = L^{-1} m(z), shape (size, k), plus the batch shape of z."""
    arr = geometry.check_points(ka.model, z)
    batch = arr.shape[:arr.ndim - len(ka.model.coordinate_shape)]
    flat = geometry.flat_coordinates(ka.model, arr).reshape(-1, ka.model.n_vars)
    V = monomials(flat, ka.exponents)
    return linalg.solve_triangular(ka.factor, V.T, lower=True), batch


def reproducing_kernel(ka: KernelApproximation, z, w):
    """Truncated K(z, w̄) = sum_j s_j(z) conj(s_j(w)); z and w broadcast as batches."""
    uz, batch_z = _coefficients(ka, z)
    uw, batch_w = _coefficients(ka, w)
    if uz.shape[1] != uw.shape[1]:
        if uw.shape[1] == 1:
            uw = np.repeat(uw, uz.shape[1], axis=1)
        elif uz.shape[1] == 1:
            uz = np.repeat(uz, uw.shape[1], axis=1)
            batch_z = batch_w
        else:
            raise InvalidParameterError("z and w batches have different sizes")
    values = np.sum(uz * np.conj(uw), axis=0)
    return values.reshape(batch_z).item() if not batch_z else values.reshape(batch_z)


def _diagonal(ka: KernelApproximation, z, prefix: Optional[int] = None):
    u, batch = _coefficients(ka, z)
    if prefix is not None:
        u = u[:prefix]
    return np.sum(np.abs(u) ** 2, axis=0).reshape(batch)


def epsilon_function(ka: KernelApproximation, z):
    """e^{-lam phi(z)} K(z, z̄)."""
    values = np.exp(-ka.lam * np.asarray(geometry.potential(ka.model, z))) * _diagonal(ka, z)
    return values.item() if np.ndim(values) == 0 else values


def epsilon_report(ka: KernelApproximation, points, rel_tol: Optional[float] = None) -> List[Dict[str, Any]]:
    """
    Rows (re, im, radius, epsilon, N, tail_flag) for a batch of points.

    tail_flag is 'truncation-limited' when epsilon at N and N/2 differ by
    more than 10 * rel_tol (relative).
    """
    rel_tol = Config.BALANCE_REL_TOL if rel_tol is None else rel_tol
    pts = geometry.check_points(ka.model, points)
    if pts.ndim == len(ka.model.coordinate_shape):
        pts = pts[None, ...]
    weight = np.exp(-ka.lam * np.asarray(geometry.potential(ka.model, pts)))
    eps = weight * _diagonal(ka, pts)
    eps_half = weight * _diagonal(ka, pts, ka.prefix_size(ka.degree // 2))
    radius = np.atleast_1d(geometry.domain_radius(ka.model, pts))
    first = geometry.flat_coordinates(ka.model, pts)[:, 0]
    rows = []
    for i in range(len(pts)):
        drift = abs(eps[i] - eps_half[i]) / abs(eps[i]) if eps[i] else math.inf
        flag = 'ok' if drift <= 10 * rel_tol else 'truncation-limited'
        if flag != 'ok':
            logger.warning("epsilon at radius %.3g is truncation-limited (N=%d, drift %.3g)",
                           radius[i], ka.degree, drift)
        rows.append({'re': float(first[i].real), 'im': float(first[i].imag), 'radius': float(radius[i]),
                     'epsilon': float(eps[i]), 'N': ka.degree, 'tail_flag': flag})
    return rows


def default_sample_points(model: DomainModel) -> np.ndarray:
    radii = np.linspace(0.0, Config.SAMPLE_RHO_MAX, Config.SAMPLE_RADII)
    angles = 2.0 * np.pi * np.arange(Config.SAMPLE_ANGLES) / Config.SAMPLE_ANGLES
    return geometry.sample_points(model, radii, angles)


def is_balanced(ka: KernelApproximation, sample_points=None,
                rel_tol: Optional[float] = None) -> Tuple[bool, BalanceReport]:
    """
    Is epsilon a positive constant on the sample points?

    True iff max |eps_i - mean| / mean <= rel_tol with every eps_i > 0.
    The report verdict is 'inconclusive' when the deviation is within a
    factor 2 of rel_tol. Truncation-limited samples are reported but do
    not take part in the decision.
    """
    rel_tol = Config.BALANCE_REL_TOL if rel_tol is None else rel_tol
    pts = default_sample_points(ka.model) if sample_points is None else geometry.as_points(ka.model, sample_points)
    if pts.ndim == len(ka.model.coordinate_shape) or len(pts) < 2:
        raise PreconditionError("constancy of epsilon needs at least 2 sample points")
    rows = epsilon_report(ka, pts, rel_tol)
    usable = [r for r in rows if r['tail_flag'] == 'ok']
    if len(usable) < 2:
        return False, BalanceReport(samples=rows, mean=math.nan, deviation=math.inf, rel_tol=rel_tol,
                                    verdict='inconclusive', truncation_limited=True,
                                    message=f"fewer than 2 samples are resolved at N={ka.degree}")
    eps = np.array([r['epsilon'] for r in usable])
    mean = float(np.mean(eps))
    positive = bool(np.all(eps > 0))
    deviation = float(np.max(np.abs(eps - mean)) / mean) if mean > 0 else math.inf
    if not positive or deviation > 2 * rel_tol:
        verdict = 'not balanced'
    elif deviation < 0.5 * rel_tol:
        verdict = 'balanced'
    else:
        verdict = 'inconclusive'
    truncated = len(usable) < len(rows)
    report = BalanceReport(samples=rows, mean=mean, deviation=deviation, rel_tol=rel_tol,
                           verdict=verdict, truncation_limited=truncated)
    return positive and deviation <= rel_tol, report


def check_balanced(model: DomainModel, lam: float, degree: Optional[int] = None,
                   sample_points=None, rel_tol: Optional[float] = None) -> Tuple[bool, BalanceReport]:
    """Build H_{lam phi} and test epsilon; a degenerate space is reported as not balanced."""
    rel_tol = Config.BALANCE_REL_TOL if rel_tol is None else rel_tol
    try:
        ka = build_space(model, lam, degree)
    except DivergentNormError as exc:
        return False, BalanceReport(samples=[], mean=0.0, deviation=math.inf, rel_tol=rel_tol,
                                    verdict='degenerate', message=f"not balanced: space degenerates ({exc})")
    return is_balanced(ka, sample_points, rel_tol)


def kernel_diastasis(ka: KernelApproximation, z0, z):
    """(1/lam) log[K(z,z̄) K(z0,z̄0) / (K(z,z̄0) K(z0,z̄))]."""
    z0 = geometry.as_points(ka.model, z0)
    k_zz = reproducing_kernel(ka, z, z)
    k_00 = reproducing_kernel(ka, z0, z0)
    k_z0 = reproducing_kernel(ka, z, z0)
    k_0z = reproducing_kernel(ka, z0, z)
    if np.min(np.abs([k_zz, k_00, k_z0, k_0z])) < VANISHING_KERNEL:
        raise VanishingKernelError("the reproducing kernel vanishes at the evaluated pairs")
    ratio = np.asarray(k_zz) * k_00 / (np.asarray(k_z0) * np.asarray(k_0z))
    values = np.real(np.log(ratio)) / ka.lam
    return values.item() if np.ndim(values) == 0 else values


def inner_product(ka: KernelApproximation, f: Callable, g: Callable) -> complex:
    """<f, g> = int f conj(g) e^{-lam phi} omega^n/n! on the space's quadrature."""
    m = ka.model
    if m.n_vars == 1 and m.kind in (ModelKind.DISK, ModelKind.POLYDISK, ModelKind.BALL, ModelKind.TYPE_I):
        alpha = m.gauge[0] if m.gauge else 0j
        z, weights = _disk_product_rule(m, ka.lam, ka.degree, alpha)
        pts = z.reshape((-1,) + m.coordinate_shape)
        return complex(np.sum(weights * np.asarray(f(pts)) * np.conj(np.asarray(g(pts)))))
    total = 0j
    for flat, weights in _qmc_rule(m, ka.lam, Config.QMC_POINTS, Config.QMC_REPLICATES, Config.QMC_SEED):
        pts = flat.reshape((-1,) + m.coordinate_shape)
        total += np.sum(weights * np.asarray(f(pts)) * np.conj(np.asarray(g(pts))))
    return complex(total)


def kernel_section(ka: KernelApproximation, w) -> Callable:
    """The function z -> K(z, w̄)."""
    return lambda z: reproducing_kernel(ka, z, w)
