"""Class-scope parameter budgets and classifier rewriting.

The baseline network was trained for ``alpha`` classes; the target task only
needs ``beta`` of them.  Without scope awareness the synthesized network gets
a ``beta/alpha`` share of the baseline capacity.  With scope awareness the
``alpha - beta`` rejected classes are folded into one miscellaneous class that
costs a fraction ``lam`` of their full per-class share.
"""

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction

from .errors import ScopeError

DEFAULT_LAMBDA = Fraction(1, 4)


def as_fraction(x):
    """Exact rational from an int, Fraction, Decimal or decimal string.

    Floats go through ``repr`` so ``0.25`` becomes exactly 1/4.
    """
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class ClassScope:
    alpha: int
    beta: int
    lam: Fraction = DEFAULT_LAMBDA

    def __post_init__(self):
        object.__setattr__(self, "lam", as_fraction(self.lam))
        if self.alpha < 1:
            raise ScopeError(f"alpha must be >= 1, got {self.alpha}")
        if not 1 <= self.beta <= self.alpha:
            raise ScopeError(f"beta must lie in [1, alpha={self.alpha}], got {self.beta}")
        if not 0 < self.lam <= 1:
            raise ScopeError(f"lambda must lie in (0, 1], got {self.lam}")

    @classmethod
    def from_mapping(cls, m):
        """Read a ``scope`` block: ``alpha``, ``beta``, optional ``lambda``."""
        try:
            alpha, beta = m["alpha"], m["beta"]
        except KeyError as e:
            raise ScopeError(f"scope block missing {e.args[0]!r}") from None
        return cls(alpha, beta, as_fraction(m.get("lambda", DEFAULT_LAMBDA)))


@dataclass(frozen=True)
class BudgetSpec:
    phi: int
    scope: ClassScope
    scope_aware: bool = False
    window_tolerance: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "window_tolerance", as_fraction(self.window_tolerance))
        if self.phi < 0:
            raise ValueError("phi must be non-negative")
        if self.window_tolerance < 0:
            raise ValueError("window_tolerance must be non-negative")


@dataclass(frozen=True)
class BudgetResult:
    phi: int
    phi_prime_floor: int
    gamma_ideal: Fraction
    fraction: Fraction

    @classmethod
    def for_fraction(cls, phi, fraction, alpha=1):
        """Budget for an explicit capacity fraction, bypassing the class scope."""
        fraction = as_fraction(fraction)
        return cls(phi, math.ceil(phi * fraction), ideal_gamma(phi, alpha), fraction)


def ideal_gamma(phi, alpha):
    """Average parameters per class, ``phi / alpha``."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    return Fraction(phi, alpha)


def budget_fraction(scope, scope_aware):
    if scope_aware:
        return (scope.beta + scope.lam * (scope.alpha - scope.beta)) / scope.alpha
    return Fraction(scope.beta, scope.alpha)


def compute_budget(spec):
    frac = budget_fraction(spec.scope, spec.scope_aware)
    return BudgetResult(
        phi=spec.phi,
        phi_prime_floor=math.ceil(spec.phi * frac),
        gamma_ideal=ideal_gamma(spec.phi, spec.scope.alpha),
        fraction=frac,
    )


def rewrite_classifier(n, scope, scope_aware):
    """Shrink the classifier to ``beta`` classes, plus one when scope aware."""
    if n.classifier_classes != scope.alpha:
        raise ScopeError(
            f"network {n.name!r} has a {n.classifier_classes}-way classifier, scope expects alpha={scope.alpha}"
        )
    return n.replace(classifier_classes=scope.beta + (1 if scope_aware else 0))


def round_half_up(x, places=2):
    """Decimal rounding of an exact rational, ties away from zero."""
    x = as_fraction(x)
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(x.numerator) / Decimal(x.denominator)
        return d.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
