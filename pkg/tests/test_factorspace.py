import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnnsynth import ir
from cnnsynth.errors import EnumerationCapError
from cnnsynth.factorspace import (
    count_solution_space,
    divisors,
    enumerate_window,
    factor_set,
    factor_sets,
    format_plan_line,
    iter_window_plans,
    pair_costs,
)
from cnnsynth.ir import Branch, MacroLayer, MicroLayer, Network

from strategies import fractions, networks


def naive_divisors(n):
    return [k for k in range(1, n + 1) if n % k == 0]


def oracle_params(n, factors):
    """Scale the network object and count it with the plain IR accounting."""
    layers = []
    for layer, f in zip(n.macro_layers, factors):
        branches = [
            Branch([MicroLayer(m.kernel_width, m.kernel_height, m.depth // f, m.out_rows, m.out_cols) for m in b.micro_layers])
            for b in layer.branches
        ]
        layers.append(MacroLayer(layer.name, branches))
    return ir.param_count_network(n.replace(macro_layers=layers))


def oracle_window(n, target, tol):
    phi = ir.param_count_network(n)
    sets = [naive_divisors(math.gcd(*l.depths)) for l in n.macro_layers]
    return sorted(
        f for f in itertools.product(*sets) if abs(target * phi - oracle_params(n, f)) < tol * phi
    )


def test_divisors_examples():
    assert divisors(96) == [1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 96]
    assert divisors(1) == [1]
    assert divisors(256) == [1, 2, 4, 8, 16, 32, 64, 128, 256]


@given(st.integers(1, 5000))
def test_divisors_match_trial_scan(n):
    assert divisors(n) == naive_divisors(n)


def test_divisors_rejects_zero():
    with pytest.raises(ValueError):
        divisors(0)


def layer(*depths):
    return MacroLayer("x", [Branch([MicroLayer(1, 1, d, 1, 1)]) for d in depths])


def test_factor_set_examples():
    assert len(factor_set(layer(384))) == 16
    assert factor_set(layer(64, 96)).factors == (1, 2, 4, 8, 16, 32)
    assert factor_set(layer(1, 96)).factors == (1,)


@settings(max_examples=60, deadline=None)
@given(networks())
def test_factor_set_properties(n):
    for l, fs in zip(n.macro_layers, factor_sets(n)):
        assert fs.factors[0] == 1
        assert list(fs.factors) == sorted(set(fs.factors))
        for d in l.depths:
            assert set(fs.factors) <= set(divisors(d))
            assert all(d % f == 0 for f in fs.factors)


def test_alexnet_space(alexnet):
    assert count_solution_space(alexnet, affine=True) == 248832 == 12 * 9 * 16 * 16 * 9
    # single-micro-layer macro-layers: both counts coincide
    assert count_solution_space(alexnet, affine=False) == 248832


def test_prime_depth_space():
    n = Network("p", 3, [layer(97)], 10)
    assert count_solution_space(n) == 2


def test_googlenet_space_magnitudes(googlenet):
    aff = count_solution_space(googlenet, affine=True)
    non = count_solution_space(googlenet, affine=False)
    assert aff == 1481760000
    assert 1.70e54 < non < 1.73e54


def test_pair_costs_match_direct_count(alexnet):
    costs = pair_costs(alexnet)
    sets = factor_sets(alexnet)
    for f in [(8, 8, 4, 3, 2), (1, 1, 1, 1, 1), (96, 256, 384, 384, 256)]:
        total = costs[0][(1, f[0])] + sum(costs[i][(f[i - 1], f[i])] for i in range(1, len(sets)))
        assert total == oracle_params(alexnet, f)


def test_alexnet_window_count(alexnet):
    # frozen from oracle_window; recomputed in the slow check below
    r = enumerate_window(alexnet, Fraction(8, 100), Fraction(2, 1000))
    assert r.count == 1541
    assert r.space == 248832


def test_alexnet_window_reference_tolerance(alexnet):
    # the widely quoted 2335 count appears at a tolerance of 0.003
    assert enumerate_window(alexnet, Fraction(8, 100), Fraction(3, 1000)).count == 2335


@pytest.mark.slow
def test_alexnet_window_oracle(alexnet):
    assert len(oracle_window(alexnet, Fraction(8, 100), Fraction(2, 1000))) == 1541


def test_all_covering_window(alexnet):
    r = enumerate_window(alexnet, Fraction(1, 2), Fraction(2))
    assert r.count == count_solution_space(alexnet) == 248832
    assert not r.closed_form


def test_identity_hit_with_zero_tolerance_is_excluded(alexnet):
    # strict inequality: |phi - phi'| < 0 never holds
    assert enumerate_window(alexnet, Fraction(1), Fraction(0)).count == 0


def test_identity_hit_with_tiny_tolerance(alexnet):
    r = enumerate_window(alexnet, Fraction(1), Fraction(1, 10**9), collect=True)
    assert r.count >= 1
    assert ((1, 1, 1, 1, 1), 3745824) in r.plans


def test_partitioned_workers_agree(alexnet):
    a = enumerate_window(alexnet, Fraction(8, 100), Fraction(2, 1000), collect=True)
    b = enumerate_window(alexnet, Fraction(8, 100), Fraction(2, 1000), collect=True, workers=3)
    assert a.plans == b.plans and a.count == b.count == 1541


def test_stream_matches_count(alexnet):
    plans = list(iter_window_plans(alexnet, Fraction(8, 100), Fraction(2, 1000)))
    assert len(plans) == 1541
    for f, p in plans[:50]:
        assert p == oracle_params(alexnet, f)
    assert format_plan_line((8, 8, 4, 3, 2), 299652) == '{"factors":[8,8,4,3,2],"phi_prime":299652}'


def test_cap_refusal(alexnet, googlenet):
    with pytest.raises(EnumerationCapError, match="DP"):
        enumerate_window(alexnet, Fraction(8, 100), Fraction(2, 1000), cap=1000)
    with pytest.raises(EnumerationCapError):
        list(iter_window_plans(googlenet, Fraction(8, 100), Fraction(2, 1000)))


def test_cap_closed_form(googlenet):
    r = enumerate_window(googlenet, Fraction(1, 2), Fraction(2))
    assert r.closed_form and r.count == count_solution_space(googlenet)


@settings(max_examples=60, deadline=None)
@given(networks(max_space=400), fractions, st.sampled_from([Fraction(1, 100), Fraction(5, 100), Fraction(2)]))
def test_window_matches_oracle(n, target, tol):
    r = enumerate_window(n, target, tol, collect=True)
    assert sorted(f for f, _ in r.plans) == oracle_window(n, target, tol)
    for f, p in r.plans:
        assert p == oracle_params(n, f)
    if tol == 2:
        assert r.count == count_solution_space(n)
