import itertools

import pytest
from hypothesis import given, strategies as st

from cocycle_lab.groupoid import (FiniteGroupoid, TransformationSystem,
                                  build_transformation_groupoid, cyclic_group, disjoint_union,
                                  fiber, is_minimal, orbits, pair_group_groupoid, pair_groupoid,
                                  units_only, validate_groupoid)
from oracles import brute_groupoid_axioms, brute_tg_triples


def _swap_inverse(g, a, b):
    inv = list(g.inverse)
    inv[a], inv[b] = inv[b], inv[a]
    return FiniteGroupoid(g.n_units, g.src, g.rng, tuple(inv), g.unit_arrow, g.compose)


# -- validation ---------------------------------------------------------------

def test_cyclic_group_valid():
    g = cyclic_group(3)
    assert g.n_units == 1 and g.n_arrows == 3
    assert validate_groupoid(g).ok


def test_pair_groupoid_valid_and_matches_brute_force():
    g = pair_groupoid(3)
    assert g.n_arrows == 9
    assert validate_groupoid(g).ok
    assert brute_groupoid_axioms(g.src, g.rng, g.inverse, g.unit_arrow, g.compose) == 0


def test_swapped_inverse_reported():
    g = pair_groupoid(3)
    a = g.labels.index((0, 0, 1))
    b = g.labels.index((0, 0, 2))
    rep = validate_groupoid(_swap_inverse(g, a, b))
    assert not rep.ok
    assert any(k.startswith("inverse") for k in rep.kinds())
    cited = {x for v in rep.violations for x in v.arrows}
    assert a in cited or b in cited


def test_broken_compose_reported():
    g = pair_groupoid(2)
    comp = dict(g.compose)
    key = next(k for k in comp if k[0] != k[1])
    comp[key] = g.unit_arrow[0] if comp[key] != g.unit_arrow[0] else g.unit_arrow[1]
    bad = FiniteGroupoid(g.n_units, g.src, g.rng, g.inverse, g.unit_arrow, comp)
    assert not validate_groupoid(bad).ok


def test_missing_composition_reported():
    g = cyclic_group(2)
    comp = dict(g.compose)
    del comp[(1, 1)]
    rep = validate_groupoid(FiniteGroupoid(1, g.src, g.rng, g.inverse, g.unit_arrow, comp))
    assert "compose_missing" in rep.kinds()


@pytest.mark.parametrize("n,q", [(1, 1), (1, 4), (2, 3), (3, 2), (4, 1)])
def test_pair_group_groupoid_brute_force(n, q):
    g = pair_group_groupoid(n, q)
    assert g.n_arrows == n * n * q
    assert validate_groupoid(g).ok
    assert brute_groupoid_axioms(g.src, g.rng, g.inverse, g.unit_arrow, g.compose) == 0


@given(st.integers(1, 4), st.integers(1, 3))
def test_bookkeeping_and_involution(n, q):
    g = pair_group_groupoid(n, q)
    for (a, b), c in g.compose.items():
        assert g.src[a] == g.rng[b]
        assert g.rng[c] == g.rng[a] and g.src[c] == g.src[b]
    assert all(g.inverse[g.inverse[a]] == a for a in range(g.n_arrows))


@given(st.integers(1, 4), st.integers(1, 3), st.data())
def test_left_translation_is_bijection(n, q, data):
    g = pair_group_groupoid(n, q)
    a = data.draw(st.integers(0, g.n_arrows - 1))
    dom = fiber(g, g.src[a], "range")
    cod = fiber(g, g.rng[a], "range")
    image = [g.compose[(a, b)] for b in dom]
    assert len(set(image)) == len(dom) == len(cod)
    assert set(image) == set(cod)


# -- orbits / minimality -------------------------------------------------------

def test_orbits_examples():
    assert orbits(pair_groupoid(3)) == [[0, 1, 2]]
    assert orbits(disjoint_union(pair_groupoid(2), pair_groupoid(2))) == [[0, 1], [2, 3]]
    assert orbits(units_only(4)) == [[0], [1], [2], [3]]


def test_is_minimal_examples():
    assert is_minimal(pair_groupoid(3))
    assert not is_minimal(disjoint_union(pair_groupoid(2), pair_groupoid(1)))
    # k = 0 alone is just the diagonal; the k = 1 connectors (x, 1, Tx) link the cycle
    sys5 = TransformationSystem((1, 2, 3, 4, 0))
    assert not is_minimal(build_transformation_groupoid(sys5, 0).groupoid)
    assert is_minimal(build_transformation_groupoid(sys5, 1).groupoid)


@given(st.lists(st.integers(1, 3), min_size=1, max_size=4))
def test_minimal_iff_one_block(sizes):
    g = pair_groupoid(sizes[0])
    for s in sizes[1:]:
        g = disjoint_union(g, pair_groupoid(s))
    assert validate_groupoid(g).ok
    blocks = orbits(g)
    assert sorted(len(b) for b in blocks) == sorted(sizes)
    assert is_minimal(g) == (len(blocks) == 1)
    assert sorted(itertools.chain(*blocks)) == list(range(sum(sizes)))


# -- fibers ---------------------------------------------------------------------

def test_fiber_examples():
    g = pair_groupoid(3)
    src0 = fiber(g, 0, "source")
    assert len(src0) == 3
    assert sorted(g.rng[a] for a in src0) == [0, 1, 2]
    z4 = cyclic_group(4)
    assert fiber(z4, 0, "source") == [0, 1, 2, 3]
    wtg = build_transformation_groupoid(TransformationSystem((0, 1, 2)), 1)
    got = [wtg.triples[a] for a in fiber(wtg, 0, "range")]
    assert got == [(0, -1, 0), (0, 0, 0), (0, 1, 0)]


def test_fiber_bad_side():
    with pytest.raises(ValueError):
        fiber(pair_groupoid(2), 0, "left")


# -- transformation groupoids ----------------------------------------------------

def test_identity_map_isotropy():
    wtg = build_transformation_groupoid(TransformationSystem((0, 1, 2)), 2)
    assert set(wtg.triples) == {(x, k, x) for x in range(3) for k in range(-2, 3)}


def test_three_cycle_k0_is_diagonal():
    # T^m x = T^m y forces x = y for a permutation; only the diagonal survives
    wtg = build_transformation_groupoid(TransformationSystem((1, 2, 0)), 0)
    assert set(wtg.triples) == {(0, 0, 0), (1, 0, 1), (2, 0, 2)}
    assert set(wtg.triples) == brute_tg_triples((1, 2, 0), 0, 6)


def test_collapse_map():
    wtg = build_transformation_groupoid(TransformationSystem((2, 2, 2)), 0)
    assert (0, 0, 1) in wtg.triples
    assert wtg.witnesses[wtg.index[(0, 0, 1)]] == (1, 1)
    assert wtg.flags["t_not_injective"]


def test_rot3_counts():
    # |k| <= 6 on a 3-cycle: k = 0 mod 3 relates x to itself, other k shift by k
    wtg = build_transformation_groupoid(TransformationSystem((1, 2, 0)), 6)
    assert len(wtg.triples) == 39


maps = st.integers(1, 6).flatmap(lambda n: st.lists(st.integers(0, n - 1), min_size=n, max_size=n))


@given(maps, st.integers(0, 4))
def test_triples_match_brute_force(T, K):
    wtg = build_transformation_groupoid(TransformationSystem(T), K)
    assert set(wtg.triples) == brute_tg_triples(T, K, 2 * len(T) + K)
    assert len(set(wtg.triples)) == len(wtg.triples)
    P = TransformationSystem(T).trajectories(wtg.m_max + 1)
    for (x, k, y), (m, n) in zip(wtg.triples, wtg.witnesses):
        assert m - n == k and P[x, m] == P[y, n]


@given(maps, st.integers(0, 4))
def test_witness_window_complete(T, K):
    # a larger exponent bound finds nothing new
    wtg = build_transformation_groupoid(TransformationSystem(T), K)
    assert set(wtg.triples) == brute_tg_triples(T, K, 3 * len(T) + K + 3)


@given(maps, st.integers(0, 4))
def test_monotone_in_window(T, K):
    small = set(build_transformation_groupoid(TransformationSystem(T), K).triples)
    big = set(build_transformation_groupoid(TransformationSystem(T), K + 1).triples)
    assert small <= big


@given(maps, st.integers(0, 3))
def test_windowed_groupoid_only_window_defects(T, K):
    wtg = build_transformation_groupoid(TransformationSystem(T), K)
    rep = validate_groupoid(wtg.groupoid)
    assert rep.ok, str(rep)
    g = wtg.groupoid
    for (a, b), c in g.compose.items():
        x, k, _ = wtg.triples[a]
        _, l, z = wtg.triples[b]
        assert wtg.triples[c] == (x, k + l, z)


def test_negative_window_rejected():
    with pytest.raises(ValueError):
        build_transformation_groupoid(TransformationSystem((0,)), -1)


def test_cycles():
    sys_ = TransformationSystem((1, 0, 3, 4, 2))
    assert sys_.cycles() == [[0, 1], [2, 3, 4]]
    assert not sys_.is_single_cycle()
    assert TransformationSystem((1, 2, 3, 4, 0)).is_single_cycle()
    assert TransformationSystem((1, 1)).cycles() == [[1]]
