"""Admissible scaling factors and the size of the scaling solution space.

Each macro-layer is scaled by one integer factor that must divide every
micro-layer depth inside it, so the admissible factors are the divisors of
the gcd of those depths.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

from .errors import EnumerationCapError
from .ir import param_count_network

DEFAULT_ENUMERATION_CAP = 10**7


def divisors(n):
    """All positive divisors of ``n`` in ascending order (trial division)."""
    if n < 1:
        raise ValueError(f"divisors() needs a positive integer, got {n}")
    small, large = [], []
    k = 1
    while k * k <= n:
        if n % k == 0:
            small.append(k)
            if k * k != n:
                large.append(n // k)
        k += 1
    return small + large[::-1]


@dataclass(frozen=True)
class FactorSet:
    macro_layer: str
    factors: tuple

    def __len__(self):
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __contains__(self, f):
        return f in self.factors


def factor_set(layer):
    return FactorSet(layer.name, tuple(divisors(reduce(math.gcd, layer.depths))))


def factor_sets(n):
    return [factor_set(l) for l in n.macro_layers]


def count_solution_space(n, affine=True):
    """Number of scaling assignments, bottleneck constraint ignored.

    With ``affine`` one factor per macro-layer; without it every micro-layer
    picks any divisor of its own depth.
    """
    if affine:
        return math.prod(len(fs) for fs in factor_sets(n))
    return math.prod(len(divisors(m.depth)) for l in n.macro_layers for m in l.micro_layers)


def pair_costs(n, sets=None):
    """Scaled parameter count of every macro-layer for each (previous, own) factor.

    ``costs[i][(fp, f)]`` is the parameter count of macro-layer ``i`` scaled by
    ``f`` when its predecessor is scaled by ``fp``.  The first layer reads the
    unscaled network input, so only ``fp == 1`` appears for it.
    """
    if sets is None:
        sets = factor_sets(n)
    costs = []
    prev_out = n.input_channels
    prev_factors = (1,)
    for layer, fs in zip(n.macro_layers, sets):
        table = {}
        for fp in prev_factors:
            cin = prev_out // fp
            for f in fs:
                total = 0
                for branch in layer.branches:
                    c = cin
                    for m in branch.micro_layers:
                        q = m.depth // f
                        total += c * m.kernel_width * m.kernel_height * q
                        c = q
                table[(fp, f)] = total
        costs.append(table)
        prev_out = layer.output_channels
        prev_factors = fs.factors
    return costs


def _suffix_bounds(costs, sets):
    """min/max parameter count of layers i+1.. given factor f at layer i."""
    N = len(sets)
    lo = [dict.fromkeys(fs.factors, 0) for fs in sets]
    hi = [dict.fromkeys(fs.factors, 0) for fs in sets]
    for i in range(N - 2, -1, -1):
        for fp in sets[i]:
            vals_lo = [costs[i + 1][(fp, f)] + lo[i + 1][f] for f in sets[i + 1]]
            vals_hi = [costs[i + 1][(fp, f)] + hi[i + 1][f] for f in sets[i + 1]]
            lo[i][fp] = min(vals_lo)
            hi[i][fp] = max(vals_hi)
    return lo, hi


@dataclass
class WindowResult:
    count: int
    phi: int
    target_fraction: Fraction
    tolerance: Fraction
    space: int
    plans: list = field(default_factory=list)
    closed_form: bool = False


def _window_bounds(phi, target_fraction, tol):
    centre = target_fraction * phi
    half = tol * phi
    return centre - half, centre + half


def _walk(costs, sets, suf_lo, suf_hi, lo, hi, i, fp, acc, prefix):
    # lo/hi are exclusive bounds on the total
    last = i == len(sets) - 1
    table = costs[i]
    for f in sets[i]:
        s = acc + table[(fp, f)]
        if last:
            if lo < s < hi:
                yield prefix + (f,), s
            continue
        if s + suf_lo[i][f] >= hi or s + suf_hi[i][f] <= lo:
            continue
        yield from _walk(costs, sets, suf_lo, suf_hi, lo, hi, i + 1, f, s, prefix + (f,))


def _partition(args):
    n, target_fraction, tol, first, collect = args
    sets = factor_sets(n)
    costs = pair_costs(n, sets)
    suf_lo, suf_hi = _suffix_bounds(costs, sets)
    lo, hi = _window_bounds(param_count_network(n), target_fraction, tol)
    s = costs[0][(1, first)]
    if len(sets) == 1:
        hits = [((first,), s)] if lo < s < hi else []
    else:
        hits = _walk(costs, sets, suf_lo, suf_hi, lo, hi, 1, first, s, (first,))
    if collect:
        return list(hits)
    return sum(1 for _ in hits)


def iter_window_plans(n, target_fraction, tol, cap=DEFAULT_ENUMERATION_CAP):
    """Yield ``(factors, phi_prime)`` for every affine plan inside the window.

    The window is ``|target_fraction * phi - phi_prime| / phi < tol``.
    """
    target_fraction, tol = Fraction(target_fraction), Fraction(tol)
    space = count_solution_space(n, affine=True)
    if space > cap:
        raise EnumerationCapError(
            f"solution space has {space} plans, above the enumeration cap {cap}; use the DP solver (synthesize) instead"
        )
    for first in factor_set(n.macro_layers[0]):
        yield from _partition((n, target_fraction, tol, first, True))


def enumerate_window(n, target_fraction, tol, cap=DEFAULT_ENUMERATION_CAP, collect=False, workers=1):
    """Exhaustively count affine plans whose parameter count lies in the window.

    The bottleneck constraint is ignored.  Work is split by the first layer's
    factor; ``workers > 1`` farms the partitions out to processes, and the
    result does not depend on the split.  Above ``cap`` only the all-covering
    window can be answered (by the closed-form product), and plans are never
    collected.
    """
    target_fraction, tol = Fraction(target_fraction), Fraction(tol)
    if not 0 < target_fraction <= 1:
        raise ValueError("target_fraction must lie in (0, 1]")
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    phi = param_count_network(n)
    space = count_solution_space(n, affine=True)
    result = WindowResult(0, phi, target_fraction, tol, space)
    if space > cap:
        lo, hi = _window_bounds(phi, target_fraction, tol)
        if lo < 0 and hi > phi and not collect:
            result.count = space
            result.closed_form = True
            return result
        raise EnumerationCapError(
            f"solution space has {space} plans, above the enumeration cap {cap}; use the DP solver (synthesize) instead"
        )

    jobs = [(n, target_fraction, tol, f, collect) for f in factor_set(n.macro_layers[0])]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_partition, jobs))
    else:
        parts = [_partition(j) for j in jobs]
    if collect:
        result.plans = [p for part in parts for p in part]
        result.count = len(result.plans)
    else:
        result.count = sum(parts)
    return result


def format_plan_line(factors, phi_prime):
    """One plan per line, as a compact JSON object."""
    return json.dumps({"factors": list(factors), "phi_prime": phi_prime}, separators=(",", ":"))
