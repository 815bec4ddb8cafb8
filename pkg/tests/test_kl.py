from __future__ import annotations

import pytest

from conftest import ctx, ctx_matrix
from oracles import RPolyKL, perm_of_word, smooth_schubert, type_a_matrix
from coxcells.coxeter import enumerate_ball
from coxcells.kl import CacheError, KLTable

H3 = ((1, 5, 2), (5, 1, 3), (2, 3, 1))
B3 = ((1, 4, 2), (4, 1, 3), (2, 3, 1))


@pytest.mark.parametrize("name", ["i2_2", "i2_3", "i2_4", "i2_6", "i2_7"])
def test_dihedral_polynomials_are_one(name):
    c = ctx(name)
    G = c.G
    ball = enumerate_ball(G, 20)
    for w in ball:
        for y in ball:
            expect = (1,) if G.leq(y, w) else ()
            assert c.T.p_q(y, w) == expect


@pytest.mark.parametrize("n", [3, 4])
def test_type_a_smoothness(n):
    c = ctx_matrix(type_a_matrix(n))
    for w in enumerate_ball(c.G, 20):
        perm = perm_of_word(c.G.word(w), n + 1)
        assert (c.T.p_q(0, w) == (1,)) == smooth_schubert(perm)


def test_a3_singular_values():
    c = ctx_matrix(type_a_matrix(3), "A3", 1)
    w = c.P("2 1 3 2")
    assert c.T.p_q(0, w) == (1, 1)
    assert c.T.p_q(c.P("2"), w) == (1, 1)
    assert c.T.mu(0, w) == 0  # even length difference
    assert c.T.mu(c.P("2"), w) == 1
    assert c.T.P(0, w).render_q() == "1 + q"


@pytest.mark.parametrize("matrix,radius", [(B3, 9), (H3, 15), (type_a_matrix(3), 6),
                                           (((1, 3, 3), (3, 1, 3), (3, 3, 1)), 6),
                                           (((1, 0, 3), (0, 1, 3), (3, 3, 1)), 6)])
def test_against_r_polynomials(matrix, radius):
    c = ctx_matrix(matrix)
    oracle = RPolyKL(c.G)
    ball = enumerate_ball(c.G, radius).elements
    step = max(1, len(ball) // 40)
    for w in ball[::step]:
        for y in c.G.interval(0, w):
            assert list(c.T.p_q(y, w)) == oracle.P(y, w)


def test_symmetries_and_descents():
    c = ctx("affine_a2")
    G, T = c.G, c.T
    for w in enumerate_ball(G, 7).elements[::3]:
        for y in G.interval(0, w):
            assert T.p_q(y, w) == T.p_q(G.inverse(y), G.inverse(w))
            for s in G.left_descents(w):
                assert T.p_q(y, w) == T.p_q(G.lmul(s, y), w)


def test_mu_and_delta():
    c = ctx("affine_a2")
    G, T = c.G, c.T
    w = c.P("1 2 3 2 1")
    for z in G.coatoms(w):
        assert T.mu(z, w) == 1
    assert T.mu(w, w) == 0
    assert T.delta_pi(0) == (0, 1)
    for z, m in T.mu_list(w):
        assert G.length(z) < G.length(w) and m == T.mu(z, w)


def test_cache_round_trip(tmp_path):
    c = ctx("affine_a2")
    G = c.G
    T = KLTable(G)
    ws = enumerate_ball(G, 6).elements
    for w in ws:
        for y in G.interval(0, w):
            T.p_q(y, w)
    path = tmp_path / "kl.cache"
    n = T.save(path)
    T2 = KLTable(G)
    assert T2.load(path) == n
    assert T2.memo == T.memo
    assert T2.stats.loaded == n
    # the saved text is deterministic
    T2.save(tmp_path / "again.cache")
    assert (tmp_path / "again.cache").read_text() == path.read_text()


def test_cache_refusals(tmp_path):
    c = ctx("affine_a2")
    T = KLTable(c.G)
    T.p_q(0, c.P("1 2 1"))
    path = tmp_path / "kl.cache"
    T.save(path)
    with pytest.raises(CacheError):
        KLTable(ctx("affine_a4").G).load(path)
    bad = tmp_path / "bad.cache"
    bad.write_text("something else\n")
    with pytest.raises(CacheError):
        KLTable(c.G).load(bad)
    lines = path.read_text().splitlines()
    (tmp_path / "short.cache").write_text("\n".join(lines[:2] + ["1 2\t1 2 1"]) + "\n")
    with pytest.raises(CacheError):
        KLTable(c.G).load(tmp_path / "short.cache")
    (tmp_path / "coef.cache").write_text("\n".join(lines[:2] + ["e\t1 2 1\tx"]) + "\n")
    with pytest.raises(CacheError):
        KLTable(c.G).load(tmp_path / "coef.cache")
