import json
from fractions import Fraction

import pytest

from coarselab.bigons import BigonParams, find_bigon, verify_bigon
from coarselab.embeddings import (builtin_map, factor_inclusion, homomorphism_map, identity_map, load_map,
                                  push_bigon, rebase_bigon, translate_witness, verify_coarse)
from coarselab.errors import PreconditionError


@pytest.fixture(scope="module")
def grid(balls):
    return balls("abelian(2)", 14)


@pytest.fixture(scope="module")
def product(balls):
    return balls("product(abelian(2),free(1))", 14)


def test_identity_map(grid):
    m = identity_map(grid)
    rep = verify_coarse(m)
    assert rep.K_measured == 1 and all(rep.rho[n] == n for n in rep.rho)
    assert rep.proper_flag and rep.seed is None


def test_factor_inclusion_is_isometric(grid, product):
    m = factor_inclusion(grid, product)
    rep = verify_coarse(m, pair_budget=3000, seed=5)
    assert rep.K_measured == 1 and all(rep.rho[n] == n for n in rep.rho)
    assert rep.seed == 5 and rep.pairs == 3000
    assert m.rho_at(3) == 3
    with pytest.raises(PreconditionError):
        factor_inclusion(grid, grid)


def test_doubling_map_constants(balls):
    src, tgt = balls("abelian(1)", 12), balls("abelian(1)", 24)
    m = homomorphism_map(src, tgt, {1: (1, 1)})
    rep = verify_coarse(m)
    assert m.K == rep.K_measured == 2
    assert all(rep.rho[n] == 2 * n for n in rep.rho)


def test_collapsing_map_is_not_proper(balls):
    src, tgt = balls("abelian(2)", 8), balls("abelian(1)", 8)
    m = homomorphism_map(src, tgt, {1: (1,), 2: ()})
    rep = verify_coarse(m)
    assert min(rep.envelope.values()) == 0


def test_map_json_roundtrip(grid, product):
    m = builtin_map("factor-inclusion", grid, product)
    m2 = load_map(m.to_json(), grid, product)
    assert m2.f == m.f and m2.K == m.K
    assert json.loads(m.to_json())["schema"] == "coarselab.map/1"
    with pytest.raises(PreconditionError):
        builtin_map("nope", grid)


def test_push_bigon_parameters(grid, product):
    w = find_bigon(grid, grid.vertex((1,) * 6), BigonParams(Fraction(2), 3, 6))
    assert w is not None
    m = factor_inclusion(grid, product)
    verify_coarse(m)
    pushed = push_bigon(m, w)
    K, rho = m.K, m.rho_at(3)
    assert pushed.params == BigonParams(K * Fraction(2) / Fraction(1, 2), rho - 2 * K, K * 6 + K)
    assert verify_bigon(product, pushed)


def test_push_requires_rho(grid, product):
    w = find_bigon(grid, grid.vertex((1,) * 4), BigonParams(Fraction(2), 1, 2))
    m = factor_inclusion(grid, product)
    with pytest.raises(PreconditionError):
        push_bigon(m, w)                        # rho not measured yet
    verify_coarse(m)
    with pytest.raises(PreconditionError):
        push_bigon(m, w)                        # rho(1) = 1 <= 2K


def test_rebase_and_translate(grid):
    p = BigonParams(Fraction(2), 2, 4)
    w = find_bigon(grid, grid.vertex((1,) * 6), p)
    moved = translate_witness(grid, w, (2,))
    assert grid.words[moved.alpha1[0]] == (2,)
    assert verify_bigon(grid, moved, base=moved.alpha1[0])
    rb = rebase_bigon(grid, moved, ())
    assert rb.params == BigonParams(2 * p.L + 1, p.s, p.C + 1)
    assert verify_bigon(grid, rb)


def test_a_epsilon_membership(grid, product):
    from coarselab.embeddings import in_a_epsilon
    m = factor_inclusion(grid, product)
    xs = [v for v in m.f if v != grid.basepoint]
    assert all(in_a_epsilon(m, Fraction(1, 2), xs).values())
    # strict inequality: an isometric map never satisfies eps = 1
    assert not any(in_a_epsilon(m, 1, xs).values())
