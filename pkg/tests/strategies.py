"""Hypothesis strategies for small random networks."""

from fractions import Fraction

from hypothesis import strategies as st

from cnnsynth.factorspace import factor_set
from cnnsynth.ir import Branch, MacroLayer, MicroLayer, Network
from cnnsynth.solver import ABSOLUTE, RELATIVE, STRICT, BottleneckPolicy

SHARED = [1, 1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64]


@st.composite
def macro_layers(draw, name):
    g = draw(st.sampled_from(SHARED))
    branches = []
    for _ in range(draw(st.integers(1, 3))):
        micros = []
        for _ in range(draw(st.integers(1, 2))):
            k = draw(st.integers(1, 5))
            r = draw(st.integers(1, 8))
            d = g * draw(st.integers(1, 512 // g))
            micros.append(MicroLayer(k, k, d, r, r))
        branches.append(Branch(micros))
    return MacroLayer(name, branches)


@st.composite
def networks(draw, max_layers=6, max_space=2000):
    """Up to ``max_layers`` macro-layers, trimmed so the affine space stays small."""
    want = draw(st.integers(1, max_layers))
    layers, space = [], 1
    for i in range(want):
        layer = draw(macro_layers(f"l{i}"))
        size = len(factor_set(layer))
        if layers and space * size > max_space:
            break
        space *= size
        layers.append(layer)
    return Network("rand", draw(st.integers(1, 8)), layers, 10)


policies = st.one_of(
    st.builds(BottleneckPolicy, st.just(ABSOLUTE), st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(2, 3), Fraction(1)])),
    st.builds(BottleneckPolicy, st.just(RELATIVE), st.sampled_from([Fraction(1, 8), Fraction(1, 4), Fraction(1, 2)])),
    st.just(BottleneckPolicy(STRICT)),
)

fractions = st.integers(1, 100).map(lambda k: Fraction(k, 100))
