"""
services/quadrature.py
Quadrature rules shared by the hilbert and entropy services.
"""

import itertools
import math
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, ndtri, roots_jacobi
from scipy.stats import qmc

from services.errors import QuadratureError


def gauss_jacobi_unit(n_nodes: int, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes t and weights w with sum w f(t) ~ int_0^1 f(t) (1-t)^alpha dt.

    Exact for polynomials of degree < 2*n_nodes.
    """
    if not alpha > -1:
        raise QuadratureError(f"Jacobi exponent {alpha} must exceed -1")
    x, w = roots_jacobi(n_nodes, alpha, 0.0)
    return (1.0 + x) / 2.0, w / 2.0 ** (alpha + 1.0)


def trapezoid_circle(n_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Equispaced angles; exact for trigonometric polynomials of degree < n_nodes."""
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    return theta, np.full(n_nodes, 2.0 * np.pi / n_nodes)


def shell_radii(j_max: int) -> np.ndarray:
    """rho_j = 1 - 2**-j for j = 0..j_max (rho_0 = 0)."""
    return 1.0 - 2.0 ** -np.arange(j_max + 1, dtype=float)


def log_distance_rule(a: float, b: float, n_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule for int_a^b f(t) dt, 0 <= a < b < 1, in u = -log(1 - t).

    Boundary power laws (1-t)^e become exponentials in u, so a fixed node
    count stays accurate on every shell.
    """
    x, w = leggauss(n_nodes)
    ua, ub = -math.log1p(-a), -math.log1p(-b)
    u = 0.5 * (ub - ua) * x + 0.5 * (ub + ua)
    one_minus_t = np.exp(-u)
    return 1.0 - one_minus_t, 0.5 * (ub - ua) * w * one_minus_t


def sphere_area(real_dim: int) -> float:
    """Area of the unit sphere S^(real_dim - 1)."""
    return 2.0 * math.exp(0.5 * real_dim * math.log(math.pi) - gammaln(0.5 * real_dim))


def sphere_points(n_complex: int, n_points: int, seed: int) -> np.ndarray:
    """Scrambled-Sobol points on the unit sphere of C^n, as complex (n_points, n)."""
    sobol = qmc.Sobol(d=2 * n_complex, scramble=True, seed=seed)
    u = sobol.random(n_points)
    g = ndtri(np.clip(u, 1e-15, 1.0 - 1e-15))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[:, :n_complex] + 1j * g[:, n_complex:]


def polydisk_points(n_vars: int, n_points: int, seed: int) -> Tuple[np.ndarray, float]:
    """Uniform scrambled-Sobol points in the unit polydisk of C^n and the cell volume."""
    sobol = qmc.Sobol(d=2 * n_vars, scramble=True, seed=seed)
    u = sobol.random(n_points)
    z = np.sqrt(u[:, :n_vars]) * np.exp(2j * np.pi * u[:, n_vars:])
    return z, math.pi ** n_vars / n_points


def det_increment(base: np.ndarray, delta: np.ndarray) -> float:
    """det(base + delta) - det(base) without forming the difference of two determinants."""
    size = base.shape[0]
    total = 0.0
    for mask in itertools.product((False, True), repeat=size):
        if not any(mask):
            continue
        mixed = np.where(np.asarray(mask)[None, :], delta, base)
        total += np.linalg.det(mixed)
    return float(total)


def product_increment(base: np.ndarray, delta: np.ndarray) -> float:
    """prod(base + delta) - prod(base), summed over the nonempty subsets of factors."""
    total = 0.0
    for mask in itertools.product((False, True), repeat=len(base)):
        if not any(mask):
            continue
        total += float(np.prod(np.where(mask, delta, base)))
    return total
