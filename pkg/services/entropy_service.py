"""
services/entropy_service.py
Entropy Service Module - numerical diastatic entropy

Estimates Ent_d(Omega, g)(z0) = inf { c > 0 : int e^{-c D_z0} omega^n/n! < inf }
by shell exhaustion: the integral is split over shells
rho_{j-1} <= rho(z) < rho_j with rho_j = 1 - 2^-j, and the decay ratio of
consecutive shell contributions decides convergence. A bisection in c
then brackets the threshold.

The infimum is never attained on the model domains (at the threshold the
integral diverges logarithmically), so the result is an open bracket.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.special import gammaln

from config import Config
from services import geometry_service as geometry
from services.errors import (
    InvalidParameterError, NoBracketError, QuadratureError, UnsupportedModelError,
)
from services.geometry_service import DomainModel, ModelKind
from services.quadrature import (
    det_increment, log_distance_rule, product_increment, shell_radii,
    sphere_area, sphere_points, trapezoid_circle,
)

logger = logging.getLogger(__name__)

ANGULAR_NODES = 256


class Verdict(str, Enum):
    CONVERGENT = 'convergent'
    DIVERGENT = 'divergent'
    INCONCLUSIVE = 'inconclusive'


@dataclass(frozen=True)
class ShellProbe:
    c: float
    verdict: Verdict
    radii: List[float]
    integrals: List[float]
    ratios: List[float]

    def decay_exponent(self) -> Optional[float]:
        """-log2 of the mean tail ratio; zero at the threshold."""
        tail = [r for r in self.ratios[len(self.ratios) // 2:] if r > 0 and math.isfinite(r)]
        if not tail:
            return None
        return -math.log2(sum(tail) / len(tail))

    def to_json(self) -> Dict[str, Any]:
        return {'c': self.c, 'verdict': self.verdict.value, 'ratios': list(self.ratios)}


@dataclass
class EntropyEstimate:
    lower: float
    upper: float
    z0: np.ndarray
    tol: float
    probes: List[ShellProbe] = field(default_factory=list)
    extrapolated: Optional[float] = None

    @property
    def verdicts(self) -> Dict[float, Verdict]:
        return {p.c: p.verdict for p in self.probes}

    @property
    def shells(self) -> List[ShellProbe]:
        return sorted(self.probes, key=lambda p: p.c)

    @property
    def widened(self) -> bool:
        return self.upper - self.lower > self.tol

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_json(self) -> Dict[str, Any]:
        z0 = np.atleast_1d(self.z0).ravel()
        return {
            'lower': self.lower,
            'upper': self.upper,
            'z0': [format_complex(v) for v in z0],
            'tol': self.tol,
            'widened': self.widened,
            'extrapolated': self.extrapolated,
            'probes': [p.to_json() for p in self.shells],
        }


def format_complex(value: complex) -> str:
    value = complex(value)
    return f"{value.real:.9g}{value.imag:+.9g}i"


# -- shell integrals ---------------------------------------------------------

def _weyl_constant(p: int, q: int) -> float:
    """Lebesgue measure on C^{p x q} in squared singular values t (unordered), times p!."""
    log_c = p * q * math.log(math.pi) - sum(gammaln(j + 2) + gammaln(j + q - p + 1) for j in range(p))
    return math.exp(log_c) * math.factorial(p)


def _radial_increments(m: DomainModel, c: float, j_max: int, nodes: int, executor) -> np.ndarray:
    """
    Shell integrals for z0 = 0 on disk, ball and type I.

    The integrand is mu^{pq} prod (1 - t_i)^{c mu - p - q}; by the Weyl
    formula and Andréief's identity the integral over {max t_i < b} is
    C det[ int_0^b t^{k+l+q-p} (1-t)^e dt ]_{k,l < p}.
    """
    p, q = m.matrix_shape
    e = c * m.scale - (p + q)
    powers = np.arange(2 * p - 1) + (q - p)
    radii = shell_radii(j_max)

    def moments(j):
        t, w = log_distance_rule(radii[j - 1] ** 2, radii[j] ** 2, nodes)
        return np.array([np.sum(w * t ** k * (1.0 - t) ** e) for k in powers])

    deltas = list(executor.map(moments, range(1, j_max + 1)))
    const = m.scale ** (p * q) * _weyl_constant(p, q)
    hankel = np.add.outer(np.arange(p), np.arange(p))
    cumulative = np.zeros(len(powers))
    out = []
    for delta in deltas:
        out.append(const * det_increment(cumulative[hankel], delta[hankel]))
        cumulative = cumulative + delta
    return np.array(out)


def _coordinate_factors(m: DomainModel, z0: np.ndarray, c: float, j_max: int,
                        nodes: int, executor, fast_path: bool) -> np.ndarray:
    """One-variable shell integrals of each coordinate factor, shape (j_max, n_vars)."""
    coords = np.atleast_1d(geometry.flat_coordinates(m, z0))
    disk = DomainModel.disk(m.scale)
    radii = shell_radii(j_max)
    theta, theta_w = trapezoid_circle(ANGULAR_NODES)

    def factor(args):
        j, a = args
        t, w = log_distance_rule(radii[j - 1] ** 2, radii[j] ** 2, nodes)
        if fast_path and a == 0:
            # e^{-c D_0} * density = mu (1-t)^{c mu - 2}; dA = dt dtheta / 2
            return math.pi * m.scale * float(np.sum(w * (1.0 - t) ** (c * m.scale - 2.0)))
        z = np.sqrt(t)[:, None] * np.exp(1j * theta)[None, :]
        integrand = np.exp(-c * geometry.diastasis(disk, a, z)) * geometry.volume_density(disk, z)
        return 0.5 * float(np.sum(w[:, None] * theta_w[None, :] * integrand))

    jobs = [(j, complex(a)) for j in range(1, j_max + 1) for a in coords]
    return np.array(list(executor.map(factor, jobs))).reshape(j_max, len(coords))


def _coordinate_increments(m: DomainModel, z0: np.ndarray, c: float, j_max: int,
                           nodes: int, executor, fast_path: bool) -> np.ndarray:
    """
    Shell integrals for the polydisk (and one-variable models): the integrand
    factors over coordinates and rho = max |z_j|.
    """
    values = _coordinate_factors(m, z0, c, j_max, nodes, executor, fast_path)
    cumulative = np.zeros(values.shape[1])
    out = []
    for delta in values:
        out.append(product_increment(cumulative, delta))
        cumulative = cumulative + delta
    return np.array(out)


def _sphere_increments(m: DomainModel, z0: np.ndarray, c: float, j_max: int,
                       nodes: int, executor, sphere_n: int, seed: int) -> np.ndarray:
    """Ball with an arbitrary base point: log-distance radial rule x QMC on the sphere."""
    n = m.params[0]
    zeta = sphere_points(n, sphere_n, seed)
    area = sphere_area(2 * n)
    radii = shell_radii(j_max)

    def shell(j):
        t, w = log_distance_rule(radii[j - 1] ** 2, radii[j] ** 2, nodes)
        z = np.sqrt(t)[:, None, None] * zeta[None, :, :]
        integrand = np.exp(-c * geometry.diastasis(m, z0, z)) * geometry.volume_density(m, z)
        # r^{2n-1} dr = t^{n-1} dt / 2
        return 0.5 * area * float(np.sum(w * t ** (n - 1) * integrand.mean(axis=1)))

    return np.array(list(executor.map(shell, range(1, j_max + 1))))


def _is_origin(z0: np.ndarray) -> bool:
    return bool(np.all(z0 == 0))


def _schedule(m: DomainModel, z0, c: float, j_min: Optional[int], j_max: Optional[int],
              fast_path: Optional[bool]):
    j_min = Config.SHELL_J_MIN if j_min is None else j_min
    j_max = Config.SHELL_J_MAX if j_max is None else j_max
    if not 1 <= j_min < j_max:
        raise InvalidParameterError(f"shell schedule needs 1 <= j_min < j_max, got {j_min}..{j_max}")
    if not c > 0:
        raise InvalidParameterError(f"c must be positive, got {c}")
    z0 = m.origin() if z0 is None else geometry.check_points(m, z0)
    at_origin = _is_origin(z0)
    use_fast = at_origin if fast_path is None else (fast_path and at_origin)
    return j_min, j_max, z0, use_fast


def _checked(values: np.ndarray, m: DomainModel, c: float) -> np.ndarray:
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise QuadratureError(f"shell integrals at c={c} are not finite and nonnegative: {values}")
    logger.debug("shells %s c=%g: %s", m.label, c, values)
    return values


def shell_integrals(m: DomainModel, z0=None, c: float = 1.0, j_min: Optional[int] = None,
                    j_max: Optional[int] = None, nodes: Optional[int] = None,
                    fast_path: Optional[bool] = None, threads: Optional[int] = None) -> np.ndarray:
    """
    Shell contributions I_j for j = j_min..j_max of int e^{-c D_z0} omega^n/n!.

    Type I models away from the origin are integrated over the shells of
    rho(move_to_origin(z0, z)): the automorphism carries D_z0 to D_0 and
    preserves omega^n/n!, so the origin rule applies unchanged.
    """
    j_min, j_max, z0, use_fast = _schedule(m, z0, c, j_min, j_max, fast_path)
    nodes = nodes or Config.SHELL_NODES

    with ThreadPoolExecutor(max_workers=threads or Config.THREADS) as executor:
        if m.kind is ModelKind.POLYDISK or m.n_vars == 1:
            if use_fast and m.kind is not ModelKind.POLYDISK:
                values = _radial_increments(m, c, j_max, nodes, executor)
            else:
                values = _coordinate_increments(m, z0, c, j_max, nodes, executor, use_fast)
        elif use_fast:
            values = _radial_increments(m, c, j_max, nodes, executor)
        elif m.kind is ModelKind.BALL:
            values = _sphere_increments(m, z0, c, j_max, nodes, executor,
                                        Config.SPHERE_POINTS, Config.QMC_SEED)
        else:
            logger.debug("moving base point of %s to the origin", m.label)
            values = _radial_increments(m, c, j_max, nodes, executor)

    return _checked(values[j_min - 1:], m, c)


def factor_shell_integrals(m: DomainModel, z0=None, c: float = 1.0, j_min: Optional[int] = None,
                           j_max: Optional[int] = None, nodes: Optional[int] = None,
                           fast_path: Optional[bool] = None, threads: Optional[int] = None) -> np.ndarray:
    """
    Per-coordinate shell integrals of a polydisk, shape (shells, n_vars).

    The integral over the polydisk is the product of these one-variable
    integrals, so it converges iff every column does.
    """
    if m.kind is not ModelKind.POLYDISK:
        raise UnsupportedModelError(f"{m.label} does not factor over coordinates")
    j_min, j_max, z0, use_fast = _schedule(m, z0, c, j_min, j_max, fast_path)
    with ThreadPoolExecutor(max_workers=threads or Config.THREADS) as executor:
        values = _coordinate_factors(m, z0, c, j_max, nodes or Config.SHELL_NODES, executor, use_fast)
    return _checked(values[j_min - 1:], m, c)


def _ratios(values: np.ndarray) -> List[float]:
    out = []
    for prev, cur in zip(values[:-1], values[1:]):
        out.append(0.0 if cur == 0 else (math.inf if prev == 0 else float(cur / prev)))
    return out


def classify_ratios(ratios: List[float], convergent_ratio: float = None,
                    divergent_ratio: float = None) -> Verdict:
    convergent_ratio = Config.CONVERGENT_RATIO if convergent_ratio is None else convergent_ratio
    divergent_ratio = Config.DIVERGENT_RATIO if divergent_ratio is None else divergent_ratio
    tail = ratios[len(ratios) // 2:]
    if all(r <= convergent_ratio for r in tail):
        return Verdict.CONVERGENT
    if all(r >= divergent_ratio for r in tail):
        return Verdict.DIVERGENT
    return Verdict.INCONCLUSIVE


def classify_convergence(m: DomainModel, z0=None, c: float = 1.0, j_min: Optional[int] = None,
                         j_max: Optional[int] = None, fast_path: Optional[bool] = None,
                         threads: Optional[int] = None) -> ShellProbe:
    """
    Convergent / divergent / inconclusive verdict for int e^{-c D_z0} omega^n/n!.

    On the polydisk each coordinate factor is classified on its own and the
    slowest factor is reported: shells of max |z_j| carry a polynomial
    factor that keeps their ratios above 1 just past the threshold.
    """
    j_min = Config.SHELL_J_MIN if j_min is None else j_min
    j_max = Config.SHELL_J_MAX if j_max is None else j_max
    if m.kind is ModelKind.POLYDISK:
        factors = factor_shell_integrals(m, z0, c, j_min, j_max, fast_path=fast_path, threads=threads)
        columns = [_ratios(factors[:, k]) for k in range(factors.shape[1])]
        verdicts = [classify_ratios(r) for r in columns]
        if Verdict.DIVERGENT in verdicts:
            verdict = Verdict.DIVERGENT
        elif all(v is Verdict.CONVERGENT for v in verdicts):
            verdict = Verdict.CONVERGENT
        else:
            verdict = Verdict.INCONCLUSIVE
        slowest = max(range(len(columns)), key=lambda k: sum(columns[k][len(columns[k]) // 2:]))
        values, ratios = factors[:, slowest], columns[slowest]
    else:
        values = shell_integrals(m, z0, c, j_min, j_max, fast_path=fast_path, threads=threads)
        ratios = _ratios(values)
        verdict = classify_ratios(ratios)
    logger.debug("classify %s c=%.9g -> %s (tail ratios %s)", m.label, c, verdict.value,
                 ratios[len(ratios) // 2:])
    return ShellProbe(c=float(c), verdict=verdict,
                      radii=[float(r) for r in shell_radii(j_max)[j_min:]],
                      integrals=[float(v) for v in values], ratios=ratios)


# -- bisection ---------------------------------------------------------------

def _extrapolate(probes: List[ShellProbe], lower: float, upper: float) -> Optional[float]:
    """Secant of the decay exponent through the probes nearest the bracket."""
    points = [(p.c, p.decay_exponent()) for p in probes]
    points = [(c, k) for c, k in points if k is not None]
    if len(points) < 2:
        return None
    centre = 0.5 * (lower + upper)
    points = sorted(points, key=lambda ck: abs(ck[0] - centre))[:4]
    cs = np.array([c for c, _ in points])
    ks = np.array([k for _, k in points])
    if np.ptp(cs) == 0:
        return None
    slope, intercept = np.polyfit(cs, ks, 1)
    if slope <= 0:
        return None
    return float(-intercept / slope)


def estimate_entropy(m: DomainModel, z0=None, tol: Optional[float] = None,
                     j_min: Optional[int] = None, j_max: Optional[int] = None,
                     fast_path: Optional[bool] = None, threads: Optional[int] = None,
                     max_seed_steps: Optional[int] = None,
                     max_probes: Optional[int] = None) -> EntropyEstimate:
    """
    Bracket the diastatic entropy at z0 (default: the origin).

    Seeds come from doubling / halving c from 1. Inconclusive probes are
    never coerced: the bracket stops at the last decided probes around
    them and is reported as widened.
    """
    tol = Config.ENTROPY_TOL if tol is None else tol
    if not tol > 0:
        raise InvalidParameterError(f"tol must be positive, got {tol}")
    max_seed_steps = max_seed_steps or Config.MAX_SEED_STEPS
    max_probes = max_probes or Config.MAX_PROBES
    z0 = m.origin() if z0 is None else geometry.as_points(m, z0)

    probes: Dict[float, ShellProbe] = {}

    def probe(c: float) -> Verdict:
        if c not in probes:
            probes[c] = classify_convergence(m, z0, c, j_min, j_max, fast_path, threads)
        return probes[c].verdict

    lower: Optional[float] = None
    upper: Optional[float] = None
    first = probe(1.0)
    if first is Verdict.CONVERGENT:
        upper = 1.0
    elif first is Verdict.DIVERGENT:
        lower = 1.0

    c = 1.0
    for _ in range(max_seed_steps):
        if upper is not None:
            break
        c *= 2.0
        verdict = probe(c)
        if verdict is Verdict.CONVERGENT:
            upper = c
        elif verdict is Verdict.DIVERGENT:
            lower = c
    c = 1.0
    for _ in range(max_seed_steps):
        if lower is not None:
            break
        c /= 2.0
        verdict = probe(c)
        if verdict is Verdict.DIVERGENT:
            lower = c
        elif verdict is Verdict.CONVERGENT:
            upper = c
    if lower is None or upper is None:
        raise NoBracketError(f"no sign change of the verdict for {m.label} after {max_seed_steps} doublings")

    for _ in range(max_probes):
        if upper - lower <= tol:
            break
        inconclusive = [c for c, p in probes.items() if p.verdict is Verdict.INCONCLUSIVE and lower < c < upper]
        if not inconclusive:
            c = 0.5 * (lower + upper)
        else:
            low_gap = min(inconclusive) - lower
            high_gap = upper - max(inconclusive)
            if max(low_gap, high_gap) <= 0.5 * tol:
                break
            if high_gap >= low_gap:
                c = 0.5 * (max(inconclusive) + upper)
            else:
                c = 0.5 * (lower + min(inconclusive))
        verdict = probe(c)
        if verdict is Verdict.CONVERGENT:
            upper = c
        elif verdict is Verdict.DIVERGENT:
            lower = c

    ordered = sorted(probes.values(), key=lambda p: p.c)
    for p in ordered:
        if (p.verdict is Verdict.CONVERGENT and p.c < lower) or (p.verdict is Verdict.DIVERGENT and p.c > upper):
            logger.warning("non-monotone verdict at c=%g (%s) outside [%g, %g]", p.c, p.verdict.value, lower, upper)

    estimate = EntropyEstimate(lower=lower, upper=upper, z0=z0, tol=tol, probes=ordered,
                               extrapolated=_extrapolate(ordered, lower, upper))
    if estimate.widened:
        logger.warning("entropy bracket for %s widened to [%g, %g] by inconclusive probes",
                       m.label, lower, upper)
    return estimate
