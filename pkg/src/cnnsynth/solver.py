"""Pick one scaling factor per macro-layer under a parameter budget.

This is a multiple-choice knapsack: every macro-layer is a class, every
admissible factor an item whose size and reward are the scaled parameter
count of that macro-layer.  Unlike the textbook problem, a layer's count
depends on its predecessor's factor too (the predecessor fixes the number of
input channels), and consecutive layers must not form a channel bottleneck.
Both couplings only involve adjacent pairs of factors, so the DP runs over
(layer, factor) states, each carrying the set of parameter sums reachable by
the layers that follow it.

Sets of sums are Python ints used as bitsets: bit ``s`` set means "a
completion with exactly ``s`` parameters exists".  Shifting by a layer's cost
and OR-ing over choices is the whole transition.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import ir
from .budget import BudgetResult, ClassScope, BudgetSpec, compute_budget, rewrite_classifier, round_half_up
from .errors import DivisibilityError, EnumerationCapError, InfeasibleError
from .factorspace import DEFAULT_ENUMERATION_CAP, count_solution_space, factor_sets, pair_costs

ABSOLUTE = "absolute-ratio"
RELATIVE = "baseline-relative"
STRICT = "strict-nondecreasing"
POLICY_MODES = (ABSOLUTE, RELATIVE, STRICT)
DEFAULT_THETA = {ABSOLUTE: Fraction(1, 2), RELATIVE: Fraction(1, 4), STRICT: None}

CAP = "cap-maximize"
WINDOW = "window"
OBJECTIVES = (CAP, WINDOW)


@dataclass(frozen=True)
class BottleneckPolicy:
    mode: str = ABSOLUTE
    theta: Fraction | None = None

    def __post_init__(self):
        if self.mode not in POLICY_MODES:
            raise ValueError(f"unknown bottleneck mode {self.mode!r}")
        theta = self.theta
        if theta is None:
            theta = DEFAULT_THETA[self.mode]
        elif self.mode == STRICT:
            theta = None
        else:
            theta = Fraction(theta)
            if not 0 < theta <= 1:
                raise ValueError(f"theta must lie in (0, 1], got {theta}")
        object.__setattr__(self, "theta", theta)

    def min_ratio(self, base_prev, base_cur):
        """Smallest admissible ``S'_i / S'_{i-1}`` for one pair of layers."""
        if self.mode == ABSOLUTE:
            return self.theta
        if self.mode == RELATIVE:
            return self.theta * Fraction(base_cur, base_prev)
        return Fraction(1)

    def __str__(self):
        return self.mode if self.theta is None else f"{self.mode}(theta={self.theta})"


@dataclass(frozen=True)
class ScalePlan:
    factors: tuple
    scaled_depths: tuple
    phi_prime: int


def _check_divisible(n, factors):
    if len(factors) != len(n.macro_layers):
        raise ValueError(f"plan has {len(factors)} factors for {len(n.macro_layers)} macro-layers")
    for layer, f in zip(n.macro_layers, factors):
        if f < 1:
            raise DivisibilityError(f"{layer.name}: factor must be positive, got {f}")
        bad = [d for d in layer.depths if d % f]
        if bad:
            raise DivisibilityError(f"{layer.name}: factor {f} does not divide depth(s) {bad}")


def _scale_annotations(annotations, channels):
    out = []
    for a in annotations:
        if "channels" in a:
            a = {**a, "channels": channels}
        out.append(a)
    return tuple(out)


def apply_plan(n, plan):
    """Divide every depth of macro-layer ``i`` by ``factors[i]``.

    Kernel sizes, geometry, branch topology and annotations are kept;
    annotations carrying a ``channels`` entry are rewritten with the new
    channel count, and declared input widths are re-propagated.
    """
    factors = tuple(plan.factors if isinstance(plan, ScalePlan) else plan)
    _check_divisible(n, factors)
    layers = []
    prev_out = n.input_channels
    for layer, f in zip(n.macro_layers, factors):
        branches = []
        for b in layer.branches:
            micros = [
                ir.MicroLayer(
                    m.kernel_width,
                    m.kernel_height,
                    m.depth // f,
                    m.out_rows,
                    m.out_cols,
                    _scale_annotations(m.annotations, m.depth // f),
                )
                for m in b.micro_layers
            ]
            branches.append(ir.Branch(micros))
        out = sum(b.output_channels for b in branches)
        declared = prev_out if layer.input_channels is not None else None
        layers.append(ir.MacroLayer(layer.name, branches, _scale_annotations(layer.annotations, out), declared))
        prev_out = out
    return n.replace(macro_layers=layers)


def make_plan(n, factors):
    factors = tuple(factors)
    scaled = apply_plan(n, factors)
    return ScalePlan(
        factors,
        tuple(tuple(l.depths) for l in scaled.macro_layers),
        ir.param_count_network(scaled),
    )


def _flagged(scaled_sums, base_sums, policy):
    """1-based numbers of layers whose channel sum collapses w.r.t. the previous one."""
    flags = []
    for i in range(1, len(scaled_sums)):
        cur, prev = scaled_sums[i], scaled_sums[i - 1]
        if policy.mode == ABSOLUTE:
            t = policy.theta
            bad = cur * t.denominator < t.numerator * prev
        elif policy.mode == RELATIVE:
            t = policy.theta
            bad = cur * base_sums[i - 1] * t.denominator < t.numerator * base_sums[i] * prev
        else:
            bad = cur < prev
        if bad:
            flags.append(i + 1)
    return flags


def check_bottleneck(n, plan, policy=BottleneckPolicy()):
    """Layer numbers (1-based, as in "layer 3") flagged by ``policy``.

    Channel sums add up every micro-layer depth of a macro-layer.
    """
    factors = plan.factors if isinstance(plan, ScalePlan) else tuple(plan)
    _check_divisible(n, factors)
    base = [l.channel_sum for l in n.macro_layers]
    return _flagged([s // f for s, f in zip(base, factors)], base, policy)


def min_channel_ratio(n, factors):
    """Smallest ``S'_i / S'_{i-1}`` over consecutive layers; None for one layer."""
    s = [l.channel_sum // f for l, f in zip(n.macro_layers, factors)]
    if len(s) < 2:
        return None
    return min(Fraction(s[i], s[i - 1]) for i in range(1, len(s)))


# ---------------------------------------------------------------------------
# requests


@dataclass(frozen=True)
class SolveRequest:
    network: ir.Network
    budget: BudgetResult
    policy: BottleneckPolicy = BottleneckPolicy()
    objective_mode: str = CAP
    window_tolerance: Fraction = Fraction(0)
    # >1 buckets parameter sums; results are then approximate
    quantum: int = 1
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        object.__setattr__(self, "window_tolerance", Fraction(self.window_tolerance))
        if self.objective_mode not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective_mode!r}")
        if self.quantum < 1:
            raise ValueError("quantum must be >= 1")

    def target_range(self, phi):
        """Inclusive integer range of acceptable parameter counts."""
        if self.objective_mode == CAP:
            return 0, min(self.budget.phi_prime_floor, phi)
        centre = self.budget.fraction * phi
        half = self.window_tolerance * phi
        # open interval (centre - half, centre + half)
        return max(0, math.floor(centre - half) + 1), math.ceil(centre + half) - 1


def _nearest(bits, lo, hi):
    below = (bits & ((1 << lo) - 1)).bit_length() - 1 if lo > 0 else -1
    above_bits = bits >> (hi + 1)
    above = hi + 1 + ((above_bits & -above_bits).bit_length() - 1) if above_bits else None
    return (below if below >= 0 else None), above


class _DP:
    def __init__(self, req):
        n = req.network
        self.n = n
        self.q = req.quantum
        self.sets = [fs.factors for fs in factor_sets(n)]
        exact = pair_costs(n)
        q = self.q
        self.costs = exact if q == 1 else [{k: -(-v // q) for k, v in t.items()} for t in exact]
        base = [l.channel_sum for l in n.macro_layers]
        self.ratio = [None]
        self.allowed = [None]
        for i in range(1, len(self.sets)):
            floor = req.policy.min_ratio(base[i - 1], base[i])
            r, ok = {}, {}
            for fp in self.sets[i - 1]:
                for f in self.sets[i]:
                    r[(fp, f)] = Fraction(base[i] * fp, base[i - 1] * f)
                    ok[(fp, f)] = r[(fp, f)] >= floor
            self.ratio.append(r)
            self.allowed.append(ok)
        # cheapest way to reach (i, f) from the input, ignoring the policy
        self.min_prefix = []
        prev = {1: 0}
        for i, fs in enumerate(self.sets):
            cur = {f: min(prev[fp] + self.costs[i][(fp, f)] for fp in prev) for f in fs}
            self.min_prefix.append(cur)
            prev = cur

    def suffix_sets(self, hi, floor_ratio=None):
        """Bitsets of sums reachable by layers after i, for each factor at i."""
        N = len(self.sets)
        suf = [None] * N
        suf[N - 1] = {}
        for f in self.sets[N - 1]:
            suf[N - 1][f] = 1 if self.min_prefix[N - 1][f] <= hi else 0
        for i in range(N - 1, 0, -1):
            layer = {}
            costs, allowed, ratio = self.costs[i], self.allowed[i], self.ratio[i]
            for fp in self.sets[i - 1]:
                limit = hi - self.min_prefix[i - 1][fp]
                if limit < 0:
                    layer[fp] = 0
                    continue
                acc = 0
                for f in self.sets[i]:
                    key = (fp, f)
                    if not allowed[key] or (floor_ratio is not None and ratio[key] < floor_ratio):
                        continue
                    if suf[i][f]:
                        acc |= suf[i][f] << costs[key]
                layer[fp] = acc & ((1 << (limit + 1)) - 1)
            suf[i - 1] = layer
        return suf

    def totals(self, suf, hi):
        acc = 0
        for f in self.sets[0]:
            if suf[0][f]:
                acc |= suf[0][f] << self.costs[0][(1, f)]
        return acc & ((1 << (hi + 1)) - 1)

    def rebuild(self, suf, total, floor_ratio=None):
        """Lexicographically smallest factor vector whose sum is ``total``."""
        rem, fp, out = total, 1, []
        for i, fs in enumerate(self.sets):
            for f in fs:
                key = (fp, f)
                if i > 0 and (not self.allowed[i][key] or (floor_ratio is not None and self.ratio[i][key] < floor_ratio)):
                    continue
                r = rem - self.costs[i][key]
                if r >= 0 and (suf[i][f] >> r) & 1:
                    out.append(f)
                    rem, fp = r, f
                    break
            else:
                raise AssertionError("reconstruction lost track of a reachable sum")
        return tuple(out)


def solve_dp(req):
    """Optimal plan by dynamic programming over (layer, factor) states.

    Among plans with the largest parameter count in range, the one with the
    largest minimum consecutive channel ratio wins, then the lexicographically
    smallest factor vector.  Raises InfeasibleError when nothing qualifies.
    """
    n = req.network
    phi = ir.param_count_network(n)
    lo, hi = req.target_range(phi)
    q = req.quantum
    dp = _DP(req)
    qlo, qhi = -(-lo // q), hi // q

    best = -1
    if qhi >= 0:
        suf = dp.suffix_sets(qhi)
        best = dp.totals(suf, qhi).bit_length() - 1
    if best < 0 or best < qlo:
        # exact, unbounded pass for diagnostics
        diag = _DP(SolveRequest(n, req.budget, req.policy, req.objective_mode, req.window_tolerance))
        bits = diag.totals(diag.suffix_sets(phi), phi)
        below, above = _nearest(bits, lo, hi)
        raise InfeasibleError(
            f"no plan with {lo} <= phi' <= {hi} passes {req.policy}", below=below, above=above
        )

    floor_ratio = None
    if len(dp.sets) > 1:
        candidates = sorted({r for i in range(1, len(dp.sets)) for k, r in dp.ratio[i].items() if dp.allowed[i][k]})
        # largest threshold that still reaches `best`
        a, b = 0, len(candidates) - 1
        while a < b:
            mid = (a + b + 1) // 2
            s = dp.suffix_sets(qhi, candidates[mid])
            if (dp.totals(s, qhi) >> best) & 1:
                a = mid
            else:
                b = mid - 1
        floor_ratio = candidates[a]
        suf = dp.suffix_sets(qhi, floor_ratio)

    factors = dp.rebuild(suf, best, floor_ratio)
    plan = make_plan(n, factors)
    if q > 1 and not lo <= plan.phi_prime <= hi:
        raise InfeasibleError(
            f"quantized search (quantum={q}) found phi'={plan.phi_prime} outside [{lo}, {hi}]",
            below=plan.phi_prime if plan.phi_prime < lo else None,
            above=plan.phi_prime if plan.phi_prime > hi else None,
        )
    return plan


# ---------------------------------------------------------------------------
# brute force


def _scaled_params(n, factors):
    total = 0
    c = n.input_channels
    for layer, f in zip(n.macro_layers, factors):
        out = 0
        for b in layer.branches:
            cc = c
            for m in b.micro_layers:
                q = m.depth // f
                total += cc * m.kernel_width * m.kernel_height * q
                cc = q
            out += cc
        c = out
    return total


def solve_bruteforce(req):
    """Exhaustive search with the same objective, policy and tie-break as solve_dp."""
    n = req.network
    space = count_solution_space(n, affine=True)
    if space > req.enumeration_cap:
        raise EnumerationCapError(f"solution space has {space} plans, above the cap {req.enumeration_cap}")
    phi = ir.param_count_network(n)
    lo, hi = req.target_range(phi)
    base = [l.channel_sum for l in n.macro_layers]
    sets = [fs.factors for fs in factor_sets(n)]

    best_key, best = None, None
    below = above = None
    for factors in itertools.product(*sets):
        p = _scaled_params(n, factors)
        if best_key is not None and p < best_key[0]:
            continue
        scaled = [s // f for s, f in zip(base, factors)]
        if _flagged(scaled, base, req.policy):
            continue
        if not lo <= p <= hi:
            if p < lo and (below is None or p > below):
                below = p
            if p > hi and (above is None or p < above):
                above = p
            continue
        ratio = min_channel_ratio(n, factors)
        key = (p, ratio if ratio is not None else 0)
        # ties: larger ratio first, then smaller factor vector (product order is lexicographic)
        if best_key is None or key > best_key:
            best_key, best = key, factors
    if best is None:
        raise InfeasibleError(f"no plan with {lo} <= phi' <= {hi} passes {req.policy}", below=below, above=above)
    return make_plan(n, best)


# ---------------------------------------------------------------------------
# end-to-end


@dataclass(frozen=True)
class SynthesisOptions:
    scope_aware: bool = False
    # overrides the scope-derived fraction when set
    target_fraction: Fraction | None = None
    objective_mode: str = CAP
    window_tolerance: Fraction = Fraction(2, 1000)
    policy: BottleneckPolicy = BottleneckPolicy()
    quantum: int = 1


@dataclass
class SynthesisReport:
    network: str
    phi: int
    phi_prime_floor: int
    phi_prime: int
    fraction: Fraction
    gamma_ideal: Fraction
    objective_mode: str
    window_tolerance: Fraction
    target_range: tuple
    policy: BottleneckPolicy
    factors: tuple
    layer_names: tuple
    depths_before: tuple
    depths_after: tuple
    params_before: tuple
    params_after: tuple
    bottleneck_flags: list
    flops_before: int
    flops_after: int
    space_affine: int
    space_non_affine: int
    classifier_before: int
    classifier_after: int
    scope: ClassScope | None = None
    scope_aware: bool = False
    approximate: bool = False
    notes: list = field(default_factory=list)

    @property
    def achieved_fraction(self):
        return Fraction(self.phi_prime, self.phi) if self.phi else Fraction(0)


def synthesize(n, scope, options=SynthesisOptions()):
    """Budget -> factor sets -> DP -> scaled network -> classifier rewrite."""
    ir.check(n)
    phi = ir.param_count_network(n)
    budget = compute_budget(BudgetSpec(phi, scope, options.scope_aware, options.window_tolerance))
    if options.target_fraction is not None:
        budget = BudgetResult.for_fraction(phi, options.target_fraction, scope.alpha)
    req = SolveRequest(
        n,
        budget,
        options.policy,
        options.objective_mode,
        options.window_tolerance,
        options.quantum,
    )
    plan = solve_dp(req)
    scaled = apply_plan(n, plan)
    out = rewrite_classifier(scaled, scope, options.scope_aware)
    out = out.replace(name=f"{n.name}-scaled")

    report = SynthesisReport(
        network=n.name,
        phi=phi,
        phi_prime_floor=budget.phi_prime_floor,
        phi_prime=plan.phi_prime,
        fraction=budget.fraction,
        gamma_ideal=budget.gamma_ideal,
        objective_mode=options.objective_mode,
        window_tolerance=Fraction(options.window_tolerance),
        target_range=req.target_range(phi),
        policy=options.policy,
        factors=plan.factors,
        layer_names=tuple(l.name for l in n.macro_layers),
        depths_before=tuple(tuple(l.depths) for l in n.macro_layers),
        depths_after=plan.scaled_depths,
        params_before=tuple(ir.layer_param_counts(n)),
        params_after=tuple(ir.layer_param_counts(scaled)),
        bottleneck_flags=check_bottleneck(n, plan, options.policy),
        flops_before=ir.flop_count(n),
        flops_after=ir.flop_count(scaled),
        space_affine=count_solution_space(n, affine=True),
        space_non_affine=count_solution_space(n, affine=False),
        classifier_before=n.classifier_classes,
        classifier_after=out.classifier_classes,
        scope=scope,
        scope_aware=options.scope_aware,
        approximate=options.quantum > 1,
    )
    return out, report
