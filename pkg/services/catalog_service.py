"""
services/catalog_service.py
Catalog Service Module - irreducible bounded symmetric domains

Exact registry of the six families with their numerical invariants
(rank r, a, b, complex dimension, genus) and the symmetric-case entropy.
All arithmetic here is integer / Fraction.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Tuple

from services.errors import InvalidParameterError
from services.homog_service import RootConstants

logger = logging.getLogger(__name__)


class Family(str, Enum):
    I = 'I'
    II = 'II'
    III = 'III'
    IV = 'IV'
    V = 'V'
    VI = 'VI'


@dataclass(frozen=True)
class DomainDescriptor:
    family: Family
    params: Tuple[int, ...]
    rank: int
    a: int
    b: int
    dim: int
    genus: int

    def __post_init__(self):
        if self.rank < 1:
            raise InvalidParameterError(f"rank must be >= 1, got {self.rank}")
        if self.dim < self.rank:
            raise InvalidParameterError(f"dim {self.dim} is smaller than rank {self.rank}")
        if self.genus != (self.rank - 1) * self.a + self.b + 2:
            raise InvalidParameterError(
                f"{self.label}: genus {self.genus} != (r-1)a + b + 2 = "
                f"{(self.rank - 1) * self.a + self.b + 2}"
            )
        # n = r + r(r-1)a/2 + rb
        if 2 * self.dim != 2 * self.rank + self.rank * (self.rank - 1) * self.a + 2 * self.rank * self.b:
            raise InvalidParameterError(f"{self.label}: dim {self.dim} inconsistent with (r, a, b)")

    @property
    def label(self) -> str:
        if not self.params:
            return self.family.value
        return f"{self.family.value}:{','.join(str(p) for p in self.params)}"

    def to_json(self) -> Dict[str, Any]:
        return {
            'family': self.family.value,
            'params': list(self.params),
            'rank': self.rank,
            'a': self.a,
            'b': self.b,
            'dim': self.dim,
            'genus': self.genus,
        }


def _require(ok: bool, message: str) -> None:
    if not ok:
        raise InvalidParameterError(message)


def _check_arity(family: Family, params: Tuple[int, ...], arity: int) -> None:
    _require(len(params) == arity, f"family {family.value} takes {arity} parameter(s), got {len(params)}")
    _require(all(isinstance(p, int) and not isinstance(p, bool) for p in params),
             f"family {family.value} parameters must be integers")


def lookup_domain(family, params=()) -> DomainDescriptor:
    """
    Return the descriptor of an irreducible bounded symmetric domain.

    I(p,q): 1 <= p <= q; II(n): n >= 2; III(n): n >= 1; IV(n): n >= 3; V, VI: no params.
    """
    try:
        family = Family(family)
    except ValueError:
        raise InvalidParameterError(f"unknown family {family!r}") from None
    params = tuple(params)

    if family is Family.I:
        _check_arity(family, params, 2)
        p, q = params
        _require(1 <= p <= q, f"family I requires 1 <= p <= q, got p={p}, q={q}")
        return DomainDescriptor(family, params, rank=p, a=2, b=q - p, dim=p * q, genus=p + q)

    if family is Family.II:
        _check_arity(family, params, 1)
        (n,) = params
        _require(n >= 2, f"family II requires n >= 2, got n={n}")
        return DomainDescriptor(family, params, rank=n // 2, a=4, b=0 if n % 2 == 0 else 2,
                                dim=n * (n - 1) // 2, genus=2 * n - 2)

    if family is Family.III:
        _check_arity(family, params, 1)
        (n,) = params
        _require(n >= 1, f"family III requires n >= 1, got n={n}")
        return DomainDescriptor(family, params, rank=n, a=1, b=0, dim=n * (n + 1) // 2, genus=n + 1)

    if family is Family.IV:
        _check_arity(family, params, 1)
        (n,) = params
        _require(n >= 3, f"family IV requires n >= 3, got n={n}")
        return DomainDescriptor(family, params, rank=2, a=n - 2, b=0, dim=n, genus=n)

    _check_arity(family, params, 0)
    if family is Family.V:
        return DomainDescriptor(family, params, rank=2, a=6, b=4, dim=16, genus=12)
    return DomainDescriptor(family, params, rank=3, a=8, b=0, dim=27, genus=18)


def parse_domain_spec(spec: str) -> DomainDescriptor:
    """Parse 'I:2,3', 'IV:5', 'VI' (also 'disk' and 'ball:n' as I(1,1), I(1,n))."""
    text = (spec or '').strip()
    if not text:
        raise InvalidParameterError("empty domain spec")
    head, _, tail = text.partition(':')
    head = head.strip()
    try:
        params = tuple(int(t) for t in tail.split(',') if t.strip()) if tail else ()
    except ValueError:
        raise InvalidParameterError(f"malformed parameters in domain spec {spec!r}") from None
    if head.lower() == 'disk':
        return lookup_domain(Family.I, (1, 1))
    if head.lower() == 'ball':
        _require(len(params) == 1, "ball spec takes one parameter, e.g. 'ball:2'")
        return lookup_domain(Family.I, (1, params[0]))
    return lookup_domain(head.upper(), params)


def symmetric_root_constants(d: DomainDescriptor) -> RootConstants:
    r = d.rank
    return RootConstants(
        rank=r,
        p=tuple(Fraction((k - 1) * d.a) for k in range(1, r + 1)),
        q=tuple(Fraction((r - k) * d.a) for k in range(1, r + 1)),
        b=tuple(Fraction(d.b) for _ in range(r)),
        gamma=tuple(Fraction(d.genus) for _ in range(r)),
    )


def entropy_symmetric(d: DomainDescriptor) -> Fraction:
    """(genus - 1)/genus: diastatic entropy of the Bergman metric."""
    return Fraction(d.genus - 1, d.genus)


def catalog_table(max_param: int = 6) -> List[DomainDescriptor]:
    """All catalog entries with parameters up to max_param, in stable order."""
    rows: List[DomainDescriptor] = []
    for p in range(1, max_param + 1):
        for q in range(p, max_param + 1):
            rows.append(lookup_domain(Family.I, (p, q)))
    rows.extend(lookup_domain(Family.II, (n,)) for n in range(2, max_param + 1))
    rows.extend(lookup_domain(Family.III, (n,)) for n in range(1, max_param + 1))
    rows.extend(lookup_domain(Family.IV, (n,)) for n in range(3, max_param + 1))
    rows.append(lookup_domain(Family.V))
    rows.append(lookup_domain(Family.VI))
    logger.debug("catalog table with max_param=%d has %d rows", max_param, len(rows))
    return rows
