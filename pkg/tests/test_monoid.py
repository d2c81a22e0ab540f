import pytest

from sandmon import errors
from sandmon.graph import (
    WeightedDigraph,
    loop_sink_graph,
    non_cycle_vertices,
    quotient_graph,
    rose_graph,
    validate_sandpile,
)
from sandmon.monoid import (
    AbelianGroupInvariants,
    abelian_invariants,
    atoms,
    classify_cyclic_sum,
    cyclic_group_monoid,
    cyclic_monoid,
    direct_sum,
    direct_sum_of_cyclic,
    enumerate_sandpile_monoid,
    enumerate_weighted_monoid,
    group_completion,
    is_atom_cancellative,
    is_conical,
    is_refinement,
    monogenic_monoid,
    monoid_isomorphic,
    quotient_by_submonoid,
    refine_equation,
    smallest_ideal,
    trivial_monoid,
    units,
    verify_monoid,
)
from sandmon.realize import make_t_graph


def diverging_graph():
    return WeightedDigraph(
        ["u", "v"],
        [("u", "u", 2), ("u", "v", 2), ("u", "v", 2), ("v", "u", 2), ("v", "v", 2)],
    )


def complete_triangle():
    return WeightedDigraph(
        ["v1", "v2", "v3"],
        [("v1", "v2", 1), ("v1", "v3", 1),
         ("v2", "v3", 1), ("v2", "v1", 1),
         ("v3", "v1", 1), ("v3", "v2", 1)],
    )


def test_monogenic_monoid_tables():
    c4 = monogenic_monoid(1, 3)
    verify_monoid(c4)
    assert len(c4) == 4
    assert c4.labels == ["0", "x", "2x", "3x"]
    # 4x = x, so 3x + 3x = 6x = 3x
    assert c4.add[3][3] == 3
    assert c4.add[1][3] == 1

    m25 = monogenic_monoid(2, 3)
    verify_monoid(m25)
    assert m25.add[4][4] == 2  # 8x = 2x under 5x = 2x

    z5 = monogenic_monoid(0, 5)
    verify_monoid(z5)
    assert all(z5.add[i][j] == (i + j) % 5 for i in range(5) for j in range(5))


def test_cyclic_and_group_constructors():
    c2 = cyclic_monoid(2)
    assert len(c2) == 2 and c2.add[1][1] == 1
    with pytest.raises(errors.BadParameters):
        cyclic_monoid(1)
    z1 = cyclic_group_monoid(1)
    assert len(z1) == 1
    with pytest.raises(errors.BadParameters):
        monogenic_monoid(-1, 2)


def test_direct_sum():
    m = direct_sum(cyclic_monoid(2), cyclic_monoid(3))
    verify_monoid(m)
    assert len(m) == 6
    assert direct_sum_of_cyclic([]).labels == ["0"]


def test_units_and_conical():
    for n, k in [(1, 1), (2, 3), (3, 2)]:
        m = monogenic_monoid(n, k)
        assert units(m) == [0]
        assert is_conical(m)
    z5 = cyclic_group_monoid(5)
    assert units(z5) == list(range(5))
    assert not is_conical(z5)
    assert units(trivial_monoid()) == [0]


def test_units_of_parallel_edge_sandpile():
    # single vertex firing straight into the sink: the monoid is a group
    g = validate_sandpile(WeightedDigraph(["a", "s"], [("a", "s", 1)] * 4))
    sp = enumerate_sandpile_monoid(g)
    assert units(sp) == list(range(4))
    assert monoid_isomorphic(sp, cyclic_group_monoid(4)) is not None


def test_atoms_of_monogenic():
    # x is the only candidate: every higher multiple splits as a sum of two
    # nonzero elements, and with index one even x decomposes
    assert atoms(monogenic_monoid(1, 3)) == []
    assert atoms(monogenic_monoid(1, 5)) == []
    for index, period in [(2, 3), (3, 2), (4, 2)]:
        m = monogenic_monoid(index, period)
        assert atoms(m) == [1]


def test_refinement_of_monogenic():
    m13 = monogenic_monoid(1, 3)
    ok, witness = is_refinement(m13)
    assert ok and witness is None
    for index, period in [(2, 3), (3, 1), (2, 1)]:
        m = monogenic_monoid(index, period)
        ok, witness = is_refinement(m)
        assert not ok
        a, b, c, d = witness
        assert m.add[a][b] == m.add[c][d]
        assert refine_equation(m, a, b, c, d) is None


def test_refine_equation_requires_equal_sums():
    m = monogenic_monoid(1, 3)
    with pytest.raises(errors.BadParameters):
        refine_equation(m, 0, 1, 0, 2)


def test_atom_cancellative():
    ok, _ = is_atom_cancellative(monogenic_monoid(1, 5))
    assert ok  # no atoms at all
    ok, witness = is_atom_cancellative(monogenic_monoid(2, 3))
    assert not ok
    a, m1, m2 = witness
    assert a in atoms(monogenic_monoid(2, 3))


def test_diverging_graph_monoid():
    M = enumerate_weighted_monoid(diverging_graph(), sink_relations=True)
    verify_monoid(M)
    assert sorted(M.labels) == ["0", "2u", "2v", "u", "v"]
    assert is_conical(M)
    assert sorted(M.labels[a] for a in atoms(M)) == ["u", "v"]
    ok, witness = is_refinement(M)
    assert not ok and witness is not None
    ok, _ = is_atom_cancellative(M)
    assert not ok
    # the defining failure: u + u equals u + 2v yet has no refinement
    u = M.generators["u"]
    two_v = M.labels.index("2v")
    assert M.add[u][u] == M.add[u][two_v]
    assert refine_equation(M, u, u, u, two_v) is None


def test_smallest_ideal_monogenic():
    for index, period in [(1, 3), (2, 3), (3, 4)]:
        m = monogenic_monoid(index, period)
        ideal = smallest_ideal(m)
        assert ideal.elements == list(range(index, index + period))
        # identity is the unique multiple of the period in the ideal range
        t = next(
            x for x in range(index, index + period) if x % period == 0
        )
        assert ideal.identity == t
        inv = abelian_invariants(ideal.group)
        expected = AbelianGroupInvariants((period,), 0) if period > 1 else AbelianGroupInvariants((), 0)
        assert inv == expected


def test_smallest_ideal_of_group_is_everything():
    z6 = cyclic_group_monoid(6)
    ideal = smallest_ideal(z6)
    assert ideal.elements == list(range(6))
    assert ideal.identity == 0


def test_group_completion_examples():
    assert group_completion(monogenic_monoid(1, 3)) == AbelianGroupInvariants((3,), 0)
    assert group_completion(trivial_monoid()) == AbelianGroupInvariants((), 0)
    MF = enumerate_weighted_monoid(complete_triangle(), sink_relations=False)
    assert len(MF) == 5
    assert group_completion(MF) == AbelianGroupInvariants((2, 2), 0)


def test_abelian_invariants_oracle():
    """Construct groups of known shape and recover their invariant factors."""
    cases = [
        ([4], AbelianGroupInvariants((4,), 0)),
        ([2, 2], AbelianGroupInvariants((2, 2), 0)),
        ([2, 3], AbelianGroupInvariants((6,), 0)),
        ([2, 4], AbelianGroupInvariants((2, 4), 0)),
        ([2, 2, 2], AbelianGroupInvariants((2, 2, 2), 0)),
        ([6, 4], AbelianGroupInvariants((2, 12), 0)),
        ([5], AbelianGroupInvariants((5,), 0)),
    ]
    from functools import reduce

    for orders, expected in cases:
        g = reduce(direct_sum, (cyclic_group_monoid(n) for n in orders))
        assert abelian_invariants(g) == expected


def test_quotient_by_submonoid():
    m = monogenic_monoid(2, 3)
    same = quotient_by_submonoid(m, [m.zero])
    assert monoid_isomorphic(m, same) is not None
    collapsed = quotient_by_submonoid(m, list(range(len(m))))
    assert len(collapsed) == 1
    with pytest.raises(errors.NotSubmonoid):
        quotient_by_submonoid(m, [1])  # does not contain zero
    with pytest.raises(errors.NotSubmonoid):
        quotient_by_submonoid(cyclic_group_monoid(5), [0, 1])  # not closed


def test_quotient_by_units_matches_quotient_graph_presentation():
    for g in [
        validate_sandpile(WeightedDigraph(["a", "s"], [("a", "s", 1)] * 4)),
        validate_sandpile(WeightedDigraph(
            ["a", "b", "s"],
            [("a", "a", 1), ("a", "b", 1), ("b", "s", 1), ("b", "s", 1)],
        )),
    ]:
        sp = enumerate_sandpile_monoid(g)
        quotient_monoid = quotient_by_submonoid(sp, units(sp))
        q = quotient_graph(g, non_cycle_vertices(g))
        presented = enumerate_weighted_monoid(q, sink_relations=False)
        assert monoid_isomorphic(quotient_monoid, presented) is not None


def test_monoid_isomorphic_examples():
    sp = enumerate_sandpile_monoid(loop_sink_graph(2, 3))
    assert monoid_isomorphic(sp, monogenic_monoid(2, 3)) is not None
    # cyclic monoid of order 4 versus the cyclic group of order 4
    assert monoid_isomorphic(cyclic_monoid(4), cyclic_group_monoid(4)) is None
    m = monogenic_monoid(3, 2)
    mapping = monoid_isomorphic(m, m)
    assert mapping == list(range(len(m)))
    # same size, both conical, different ideals
    assert monoid_isomorphic(
        direct_sum_of_cyclic([2, 2]), cyclic_monoid(4)
    ) is None
    with pytest.raises(errors.SizeOverBudget):
        monoid_isomorphic(cyclic_monoid(5), cyclic_monoid(5), cap=3)


def test_monoid_isomorphic_verifies_structure():
    m1 = direct_sum_of_cyclic([2, 3])
    m2 = direct_sum_of_cyclic([3, 2])
    mapping = monoid_isomorphic(m1, m2)
    assert mapping is not None
    assert sorted(mapping) == list(range(len(m1)))
    for a in range(len(m1)):
        for b in range(len(m1)):
            assert mapping[m1.add[a][b]] == m2.add[mapping[a]][mapping[b]]


def test_classify_cyclic_sum():
    assert classify_cyclic_sum(trivial_monoid()) == []
    assert classify_cyclic_sum(direct_sum_of_cyclic([2, 3])) == [2, 3]
    assert classify_cyclic_sum(cyclic_monoid(6)) == [6]
    assert classify_cyclic_sum(monogenic_monoid(2, 3)) is None
    assert classify_cyclic_sum(cyclic_group_monoid(5)) is None
    MF = enumerate_weighted_monoid(complete_triangle(), sink_relations=False)
    assert classify_cyclic_sum(MF) is None


def test_enumerate_sandpile_monoid_sizes():
    for n, k in [(1, 1), (2, 3), (3, 2), (5, 5)]:
        g = loop_sink_graph(n, k)
        sp = enumerate_sandpile_monoid(g)
        assert len(sp) == n + k
        assert monoid_isomorphic(sp, monogenic_monoid(n, k)) is not None
    t = make_t_graph()
    assert len(enumerate_sandpile_monoid(t)) == 27
    single = validate_sandpile(WeightedDigraph(["s"], []))
    assert len(enumerate_sandpile_monoid(single)) == 1
    with pytest.raises(errors.SizeOverBudget):
        enumerate_sandpile_monoid(t, cap=26)


def test_enumerate_weighted_monoid_roses():
    for petals, weight in [(1, 4), (2, 5), (3, 4)]:
        rose = rose_graph(petals, weight)
        M = enumerate_weighted_monoid(rose, sink_relations=False)
        # one vertex with the relation weight*v = petals*v
        assert monoid_isomorphic(
            M, monogenic_monoid(petals, weight - petals)
        ) is not None


def test_enumerate_weighted_monoid_variants():
    g = loop_sink_graph(2, 3)
    with_sinks = enumerate_weighted_monoid(g, sink_relations=True)
    assert len(with_sinks) == 5
    assert monoid_isomorphic(with_sinks, monogenic_monoid(2, 3)) is not None
    # without the sink relation the sink generates a free direction
    with pytest.raises(errors.Inconclusive):
        enumerate_weighted_monoid(g, sink_relations=False, cap=50)


def test_enumerate_weighted_monoid_inconclusive_cases():
    # unweighted two-cycle-with-loops triangle: the monoid is infinite
    tri = WeightedDigraph(
        ["u", "v", "z"],
        [("u", "v", 1), ("u", "z", 1),
         ("v", "u", 1), ("v", "v", 1),
         ("z", "u", 1), ("z", "z", 1)],
    )
    with pytest.raises(errors.Inconclusive) as info:
        enumerate_weighted_monoid(tri, sink_relations=False, cap=100)
    assert len(info.value.partial_labels) == 100

    one_loop = rose_graph(1, 1)
    with pytest.raises(errors.Inconclusive):
        enumerate_weighted_monoid(one_loop, cap=30)


def test_enumerate_weighted_monoid_rejects_uneven_weights():
    g = WeightedDigraph(["a", "b"], [("a", "b", 1), ("a", "b", 2)])
    with pytest.raises(errors.BadParameters):
        enumerate_weighted_monoid(g)


def test_verify_monoid_catches_bad_tables():
    broken = monogenic_monoid(1, 3)
    broken.add[1][2] = 0
    with pytest.raises(ValueError):
        verify_monoid(broken)


def test_monoid_tables_verify_on_examples():
    for M in [
        enumerate_sandpile_monoid(make_t_graph()),
        enumerate_weighted_monoid(diverging_graph()),
        enumerate_weighted_monoid(complete_triangle(), sink_relations=False),
        direct_sum_of_cyclic([2, 4]),
    ]:
        verify_monoid(M)
