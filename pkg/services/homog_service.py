"""
services/homog_service.py
Homogeneous Domain Service Module - exact entropy formulas

Root-structure constants p_k, q_k, b_k, gamma_k of a homogeneous bounded
domain, the entropy max formula, the balanced threshold, the Bergman
specialization and the scaling law. Everything is exact (Fraction).
"""

import json
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Dict, Mapping, Sequence, Tuple

from services.errors import (
    DimensionMismatchError, InvalidParameterError,
    NonPositiveGammaError, NonPositiveScaleError,
)

logger = logging.getLogger(__name__)


def to_fraction(value) -> Fraction:
    """Accept int, Fraction, 'num/den' strings; floats only through their decimal repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidParameterError(f"not a rational: {value!r}")
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise InvalidParameterError(f"not a rational: {value!r}") from None


def format_fraction(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class RootConstants:
    rank: int
    p: Tuple[Fraction, ...]
    q: Tuple[Fraction, ...]
    b: Tuple[Fraction, ...]
    gamma: Tuple[Fraction, ...]

    def __post_init__(self):
        if not isinstance(self.rank, int) or self.rank < 1:
            raise InvalidParameterError(f"rank must be a positive integer, got {self.rank!r}")
        for name in ('p', 'q', 'b', 'gamma'):
            seq = tuple(to_fraction(v) for v in getattr(self, name))
            if len(seq) != self.rank:
                raise DimensionMismatchError(f"{name} has length {len(seq)}, expected rank {self.rank}")
            object.__setattr__(self, name, seq)
        for name in ('p', 'q', 'b'):
            if any(v < 0 for v in getattr(self, name)):
                raise InvalidParameterError(f"{name} entries must be nonnegative")
        if any(g <= 0 for g in self.gamma):
            raise NonPositiveGammaError("gamma entries must be positive")

    def to_json(self) -> Dict[str, Any]:
        return {
            'rank': self.rank,
            'p': [format_fraction(v) for v in self.p],
            'q': [format_fraction(v) for v in self.q],
            'b': [format_fraction(v) for v in self.b],
            'gamma': [format_fraction(v) for v in self.gamma],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> 'RootConstants':
        try:
            return cls(rank=int(data['rank']), p=tuple(data['p']), q=tuple(data['q']),
                       b=tuple(data['b']), gamma=tuple(data['gamma']))
        except KeyError as exc:
            raise InvalidParameterError(f"root constants JSON is missing field {exc.args[0]!r}") from None


def load_constants(path: str) -> RootConstants:
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParameterError(f"cannot read root constants from {path}: {exc}") from None
    return RootConstants.from_json(data)


def constants_from_root_dims(rank: int,
                             dims_upper: Mapping[Tuple[int, int], int],
                             dims_half: Sequence[int],
                             gamma: Sequence) -> RootConstants:
    """
    Build constants from root-space dimensions.

    dims_upper[(k, l)] (1-based, k < l) is dim s_{(alpha_l - alpha_k)/2};
    missing pairs count as 0. dims_half[k-1] is dim s_{alpha_k/2}.
    A nested list / square matrix indexed [k-1][l-1] is accepted as well.
    """
    if len(dims_half) != rank:
        raise DimensionMismatchError(f"dims_half has length {len(dims_half)}, expected {rank}")
    if len(gamma) != rank:
        raise DimensionMismatchError(f"gamma has length {len(gamma)}, expected {rank}")
    if any(to_fraction(g) <= 0 for g in gamma):
        raise NonPositiveGammaError("gamma entries must be positive")

    upper: Dict[Tuple[int, int], int] = {}
    if isinstance(dims_upper, Mapping):
        for (k, l), d in dims_upper.items():
            if not (1 <= k < l <= rank):
                raise DimensionMismatchError(f"dims_upper index ({k}, {l}) is not a pair k < l <= {rank}")
            upper[(k, l)] = d
    else:
        rows = list(dims_upper)
        if rows and len(rows) != rank:
            raise DimensionMismatchError(f"dims_upper has {len(rows)} rows, expected {rank}")
        for k, row in enumerate(rows, start=1):
            if len(row) != rank:
                raise DimensionMismatchError(f"dims_upper row {k} has length {len(row)}, expected {rank}")
            for l in range(k + 1, rank + 1):
                upper[(k, l)] = row[l - 1]
    if any(int(d) != d or d < 0 for d in list(upper.values()) + list(dims_half)):
        raise InvalidParameterError("root-space dimensions must be nonnegative integers")

    p = [sum(upper.get((i, k), 0) for i in range(1, k)) for k in range(1, rank + 1)]
    q = [sum(upper.get((k, l), 0) for l in range(k + 1, rank + 1)) for k in range(1, rank + 1)]
    b = [Fraction(int(d), 2) for d in dims_half]
    return RootConstants(rank=rank, p=tuple(p), q=tuple(q), b=tuple(b), gamma=tuple(gamma))


def _terms(c: RootConstants):
    return [(1 + c.p[k] + c.b[k] + c.q[k] / 2) / c.gamma[k] for k in range(c.rank)]


def entropy_homogeneous(c: RootConstants) -> Fraction:
    """max_k (1 + p_k + b_k + q_k/2) / gamma_k; the same at every point of the domain."""
    return max(_terms(c))


def argmax_index(c: RootConstants) -> int:
    """Largest 1-based k attaining the maximum."""
    terms = _terms(c)
    best = max(terms)
    return max(k + 1 for k, t in enumerate(terms) if t == best)


def balanced_threshold(c: RootConstants) -> Fraction:
    """lambda*g is balanced exactly when lambda is strictly above this value."""
    return entropy_homogeneous(c)


minimal_balanced_scale = balanced_threshold


def is_balanced_homogeneous(c: RootConstants, lam) -> Tuple[bool, Fraction]:
    lam = to_fraction(lam)
    if lam <= 0:
        raise NonPositiveScaleError(f"lambda must be positive, got {lam}")
    threshold = balanced_threshold(c)
    return lam > threshold, threshold


def bergman_gamma(c: RootConstants) -> RootConstants:
    gamma = tuple(2 + c.p[k] + c.q[k] + c.b[k] for k in range(c.rank))
    return replace(c, gamma=gamma)


def entropy_bergman(c: RootConstants) -> Fraction:
    return entropy_homogeneous(bergman_gamma(c))


def scale_constants(c: RootConstants, mu) -> RootConstants:
    """Constants of mu*g: gamma_k is linear in the metric."""
    mu = to_fraction(mu)
    if mu <= 0:
        raise NonPositiveScaleError(f"scale must be positive, got {mu}")
    return replace(c, gamma=tuple(mu * g for g in c.gamma))


def entropy_scaled(ent, lam) -> Fraction:
    """Entropy of (Omega, lambda*g) given the entropy of (Omega, g)."""
    ent = to_fraction(ent)
    lam = to_fraction(lam)
    if lam <= 0:
        raise NonPositiveScaleError(f"lambda must be positive, got {lam}")
    if ent <= 0:
        raise InvalidParameterError(f"entropy must be positive, got {ent}")
    return ent / lam

