from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import ctx, ctx_matrix
from oracles import (
    bruhat_below,
    growth_by_matrices,
    key,
    perm_of_word,
    poincare_finite,
    reflections,
    type_a_matrix,
    word_matrix,
)
from coxcells.coxeter import (
    CoxeterInputError,
    CoxeterSystem,
    ResourceLimitError,
    classify_parabolic,
    enumerate_ball,
    finite_parabolics,
)


def growth(G, radius):
    ball = enumerate_ball(G, radius)
    counts = [0] * (radius + 1)
    for w in ball:
        counts[G.length(w)] += 1
    while counts and counts[-1] == 0:
        counts.pop()
    return counts


@pytest.mark.parametrize("name,radius", [
    ("affine_a2", 9), ("affine_a4", 6), ("d4", 12), ("i2_7", 8), ("p5", 6),
    ("triangle_237", 10), ("property_star", 8),
])
def test_growth_matches_geometric_representation(name, radius):
    c = ctx(name)
    assert growth(c.G, radius) == growth_by_matrices(c.G.system.matrix, radius)


def test_affine_a2_growth_series():
    # Bott: (1 + t + t^2) / (1 - t)^2, so 3n elements of length n >= 1
    assert growth(ctx("affine_a2").G, 12) == [1] + [3 * n for n in range(1, 13)]


@pytest.mark.parametrize("matrix,degrees", [
    (type_a_matrix(3), [2, 3, 4]),
    (((1, 4, 2), (4, 1, 3), (2, 3, 1)), [2, 4, 6]),  # B3
    (((1, 5), (5, 1)), [2, 5]),
])
def test_finite_poincare_polynomials(matrix, degrees):
    c = ctx_matrix(matrix)
    top = sum(d - 1 for d in degrees)
    assert growth(c.G, top + 2) == poincare_finite(degrees, top)


def test_d4_is_type_d4():
    spec = classify_parabolic(ctx("d4").G.system, range(4))
    assert spec.finite and spec.type_label == "D4" and spec.order == 192


@pytest.mark.parametrize("name", ["affine_a4", "d4", "triangle_237", "p5"])
def test_normal_forms_are_braid_closed(name):
    c = ctx(name)
    G = c.G
    gens = reflections(G.system.matrix)
    for w in enumerate_ball(G, 6):
        words, complete = G.reduced_words(w)
        assert complete
        keys = {key(word_matrix(gens, wd)) for wd in words}
        assert len(keys) == 1
        assert all(G.element(wd) == w for wd in words)
        assert all(len(wd) == G.length(w) for wd in words)


def test_multiplication_and_inverse():
    c = ctx("affine_a2")
    G = c.G
    gens = reflections(G.system.matrix)
    ball = enumerate_ball(G, 5).elements
    for x in ball[:40]:
        for y in ball[::7]:
            xy = G.mul(x, y)
            assert np.allclose(word_matrix(gens, G.word(xy)),
                               word_matrix(gens, G.word(x)) @ word_matrix(gens, G.word(y)))
        assert G.mul(x, G.inverse(x)) == 0


@pytest.mark.parametrize("name", ["affine_a2", "d4", "i2_6"])
def test_bruhat_order_by_subwords(name):
    c = ctx(name)
    G = c.G
    gens = reflections(G.system.matrix)
    ball = enumerate_ball(G, 6).elements
    for w in ball[::5]:
        below = bruhat_below(gens, G.word(w))
        for y in ball:
            assert G.leq(y, w) == (key(word_matrix(gens, G.word(y))) in below)
        assert set(G.interval(0, w)) == {y for y in ball if G.length(y) <= G.length(w) and G.leq(y, w)}


def test_descents():
    c = ctx("affine_a2")
    G = c.G
    for w in enumerate_ball(G, 5):
        for s in range(3):
            assert (s in G.right_descents(w)) == (G.length(G.rmul(w, s)) < G.length(w))
            assert (s in G.left_descents(w)) == (G.length(G.lmul(s, w)) < G.length(w))


def test_type_a_normal_forms_are_permutations():
    c = ctx_matrix(type_a_matrix(3))
    ball = enumerate_ball(c.G, 6)
    perms = {perm_of_word(c.G.word(w), 4) for w in ball}
    assert len(perms) == len(ball) == 24


def test_finite_parabolics_of_affine_a4():
    sys_ = ctx("affine_a4").G.system
    maximal = finite_parabolics(sys_, maximal_only=True)
    assert len(maximal) == 5 and all(len(m) == 4 for m in maximal)
    assert all(classify_parabolic(sys_, m).type_label == "A4" for m in maximal)


def test_classification_infinite_and_h3():
    h3 = CoxeterSystem(((1, 5, 2), (5, 1, 3), (2, 3, 1)))
    spec = classify_parabolic(h3, range(3))
    assert spec.finite and spec.order == 120 and spec.type_label == "H3"
    assert not classify_parabolic(ctx("triangle_237").G.system, range(3)).finite
    assert classify_parabolic(ctx("triangle_237").G.system, range(3)).order == math.inf


@pytest.mark.parametrize("matrix", [
    ((1, 3), (2, 1)),            # not symmetric
    ((1, 1), (1, 1)),            # off-diagonal 1
    ((2, 3), (3, 1)),            # diagonal not 1
    ((1, 3, 2), (3, 1)),         # ragged
    (),
])
def test_invalid_matrices(matrix):
    with pytest.raises(CoxeterInputError):
        CoxeterSystem(matrix)


def test_parse_rejects_out_of_range_labels():
    c = ctx("affine_a2")
    with pytest.raises(CoxeterInputError):
        c.G.parse("4")
    with pytest.raises(CoxeterInputError):
        c.G.parse("0")
    assert c.G.format(c.G.parse("1 2 1")) == "1 2 1"
    assert c.G.format(c.G.parse("2 1 2")) == "1 2 1"


def test_ball_resource_limit():
    with pytest.raises(ResourceLimitError):
        enumerate_ball(ctx("p6").G, 12, max_elements=1000)
