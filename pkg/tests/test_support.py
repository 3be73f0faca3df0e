import random
from fractions import Fraction

import numpy as np
import pytest

from tame_levy.errors import EnumerationCapExceeded, LevelMismatch, OutOfBall, Unresolvable
from tame_levy.field import FieldElement, T_map, abs_level, char_chi, embed
from tame_levy.support import (
    CosetIndex,
    DualIndex,
    coset_of,
    coset_rep,
    delta_level,
    delta_level_by_trace,
    dual_enumerate,
    group_order,
    haar_cylinder,
    lemma1_surjectivity_check,
    level_group,
    pairing,
    pairing_fast,
    pairing_general,
    project,
    project_by_trace,
    ultrametric,
)
from tame_levy.tower import bundled_config

T1, T2, T3 = (bundled_config(n) for n in ("T1", "T2", "T3"))
CASES = [(T1, 2), (T1, 3), (T2, 2), (T2, 3), (T3, 2)]


def random_coset(spec, n, rng):
    grp = level_group(spec, n)
    return CosetIndex(spec, n, tuple(rng.randrange(grp.modulus) for _ in range(grp.m)))


def random_dual(spec, n, rng):
    grp = level_group(spec, n)
    return DualIndex(spec, n, tuple(rng.randrange(grp.modulus) for _ in range(grp.m)))


def test_group_orders(quad2):
    assert group_order(quad2, 1) == 2
    assert group_order(quad2, 2) == 16
    assert len(level_group(quad2, 2).enumerate_coords()) == 16


def test_haar_cylinders(quad2):
    zero = CosetIndex.zero(quad2, 2)
    assert haar_cylinder(quad2, 2, [zero]) == Fraction(1, 16)
    everything = [CosetIndex(quad2, 2, tuple(c)) for c in level_group(quad2, 2).enumerate_coords().tolist()]
    assert haar_cylinder(quad2, 2, everything) == 1
    assert haar_cylinder(quad2, 0, []) == 0


@pytest.mark.parametrize("spec,n", CASES)
def test_digits_roundtrip(spec, n):
    grp = level_group(spec, n)
    rng = np.random.default_rng(0)
    digits = rng.integers(0, grp.q, size=(50, grp.num_digits))
    assert np.array_equal(grp.coords_to_digits(grp.digits_to_coords(digits)), digits)


def test_enumeration_order_and_cap(t2):
    grp = level_group(t2, 2)
    coords = grp.enumerate_coords()
    assert np.array_equal(grp.coords_to_digits(coords)[1], [0, 0, 0, 1])
    with pytest.raises(EnumerationCapExceeded):
        level_group(t2, 3).enumerate_coords()


@pytest.mark.parametrize("spec,n", CASES)
def test_coset_arithmetic_matches_representatives(spec, n):
    rng = random.Random(n)
    for _ in range(200 if n < 3 else 40):
        g, h = random_coset(spec, n, rng), random_coset(spec, n, rng)
        assert coset_of(coset_rep(g) + coset_rep(h)) == g + h
        assert (g + (-g)).is_zero()
        assert coset_of(coset_rep(g)) == g


def test_coset_of_zero_and_out_of_ball(t2):
    assert coset_of(FieldElement.zero(t2, 2)).is_zero()
    with pytest.raises(OutOfBall):
        coset_of(FieldElement.uniformizer(t2, 2, -2))


@pytest.mark.parametrize("spec,n", CASES)
def test_rep_inside_support_ball(spec, n):
    rng = random.Random(1)
    bound = Fraction(spec.q(n)) ** spec.d(n) * abs_level(FieldElement.from_rational(spec, n, spec.m(n)))
    for _ in range(20):
        assert abs_level(coset_rep(random_coset(spec, n, rng))) <= bound


@pytest.mark.parametrize("spec,nu", [(T1, 2), (T1, 3), (T2, 2), (T3, 2)])
def test_projection_fibers(spec, nu):
    grp = level_group(spec, nu)
    coords = grp.enumerate_coords()
    for n in range(1, nu):
        proj = grp.project(coords, n)
        _, counts = np.unique(proj, axis=0, return_counts=True)
        assert len(counts) == spec.group_order(n)
        assert set(counts.tolist()) == {spec.group_order(nu) // spec.group_order(n)}


def test_p2_fibers_have_size_8(quad2):
    grp = level_group(quad2, 2)
    _, counts = np.unique(grp.project(grp.enumerate_coords(), 1), axis=0, return_counts=True)
    assert counts.tolist() == [8, 8]


@pytest.mark.parametrize("spec,nu", [(T1, 3), (T2, 3), (T3, 3)])
def test_projection_matches_trace_and_composes(spec, nu):
    rng = random.Random(2)
    for _ in range(15):
        g = random_coset(spec, nu, rng)
        for n in range(1, nu):
            assert project(g, n) == project_by_trace(g, n)
            for j in range(n + 1, nu):
                assert project(project(g, j), n) == project(g, n)
    assert project(CosetIndex.zero(spec, nu), 1).is_zero()
    with pytest.raises(LevelMismatch):
        project(CosetIndex.zero(spec, 1), 2)


def test_projection_is_homomorphism(t3):
    rng = random.Random(3)
    for _ in range(50):
        g, h = random_coset(t3, 2, rng), random_coset(t3, 2, rng)
        assert project(g + h, 1) == project(g, 1) + project(h, 1)


def test_delta_level_examples(quad2):
    one = CosetIndex.from_digits(quad2, 2, (1, 0))
    assert delta_level(one) == 1 == delta_level_by_trace(one)
    omega = CosetIndex.from_digits(quad2, 2, (2, 0))
    assert delta_level(omega) == 0 == delta_level_by_trace(omega)
    assert ultrametric(CosetIndex.zero(quad2, 2)) == 0
    assert ultrametric(one) == Fraction(1, 2)
    assert ultrametric(omega) == 1
    with pytest.raises(Unresolvable):
        ultrametric(CosetIndex.zero(quad2, 2), strict=True)


@pytest.mark.parametrize("spec,n", CASES)
def test_delta_level_matches_trace_threshold(spec, n):
    rng = random.Random(4)
    for _ in range(25):
        g = random_coset(spec, n, rng)
        assert delta_level(g) == delta_level_by_trace(g)


@pytest.mark.parametrize("spec,n", CASES)
def test_delta_level_is_representative_independent(spec, n):
    # shifting a representative by an element of Sigma_{n,n} keeps the coset
    rng = random.Random(5)
    grp = level_group(spec, n)
    for _ in range(20):
        g = random_coset(spec, n, rng)
        shift = [rng.randrange(50) * grp.modulus for _ in range(grp.m)]
        rep2 = coset_rep(g) + FieldElement.make(spec, n, shift) * coset_rep(CosetIndex(spec, n, (1,) + (0,) * (grp.m - 1)))
        h = coset_of(rep2)
        assert h == g
        assert delta_level(h) == delta_level(g)


def test_ultrametric_inequality(t1):
    rng = random.Random(6)
    for _ in range(200):
        x, y = random_coset(t1, 3, rng), random_coset(t1, 3, rng)
        assert ultrametric(x + y) <= max(ultrametric(x), ultrametric(y))


def test_dual_counts(quad2, t3):
    assert len(dual_enumerate(quad2, 1)) == 2
    for spec, n in [(quad2, 2), (t3, 2)]:
        duals = dual_enumerate(spec, n)
        assert len(duals) == spec.group_order(n)
        q = spec.q(n)
        shells = np.bincount([xi.shell for xi in duals])
        assert shells[0] == 1
        for j in range(1, len(shells)):
            assert shells[j] == (q - 1) * q ** (j - 1)


def test_pairing_examples(quad2):
    xi = DualIndex.from_shell_digits(quad2, 1, [1])
    assert xi.representative() == FieldElement.from_rational(quad2, 1, Fraction(1, 2))
    assert pairing(CosetIndex(quad2, 1, (1,)), xi).angle == Fraction(1, 2)
    for d in dual_enumerate(quad2, 2):
        assert pairing(CosetIndex.zero(quad2, 2), d).is_one()


@pytest.mark.parametrize("spec,n", CASES)
def test_pairing_literal_matches_gram(spec, n):
    rng = random.Random(7)
    for _ in range(30 if n < 3 else 10):
        g, xi = random_coset(spec, n, rng), random_dual(spec, n, rng)
        assert pairing(g, xi) == pairing_fast(g, xi)


@pytest.mark.parametrize("spec,n", CASES)
def test_pairing_bi_additive(spec, n):
    rng = random.Random(8)
    for _ in range(30):
        g, h = random_coset(spec, n, rng), random_coset(spec, n, rng)
        xi = random_dual(spec, n, rng)
        assert pairing_fast(g + h, xi) == pairing_fast(g, xi) * pairing_fast(h, xi)


def test_dual_shell_and_norm(t2):
    xi = DualIndex.from_shell_digits(t2, 2, [3, 0, 1])
    assert xi.shell == 3
    assert xi.digits == (3, 0, 1)
    assert xi.norm() == pytest.approx(5 ** 1.5)
    assert abs_level(xi.representative()) == 5**3


def test_perfect_duality_small(quad2, t3):
    for spec, n in [(quad2, 2), (t3, 1), (t3, 2)]:
        grp = level_group(spec, n)
        c = grp.enumerate_coords()
        table = grp.pairing_table(c, c)
        # only the zero coset pairs trivially with everything, and dually
        assert np.flatnonzero(~np.any(table, axis=1)).tolist() == [0]
        assert np.flatnonzero(~np.any(table, axis=0)).tolist() == [0]


@pytest.mark.parametrize("spec,n", [(T1, 1), (T1, 2), (T2, 1), (T2, 2), (T3, 1), (T3, 2)])
def test_annihilator_is_exactly_xi_n(spec, n):
    # Sigma_{n,n} = T_n(S_n) (the trace map is onto) has the Z_p-basis below
    e, f = spec.e(n), spec.f(n)
    scale = FieldElement.uniformizer(spec, n, -spec.d(n)) * FieldElement.from_rational(spec, n, spec.m(n) * spec.p**n)
    basis = [scale * FieldElement.monomial(spec, n, a, b) for b in range(e) for a in range(f)]
    rng = random.Random(9)
    for _ in range(20):
        xi = random_dual(spec, n, rng).representative()
        assert all(char_chi(T_map(xi * z, 1)).is_one() for z in basis)
    # every class just outside the ball |xi| <= q^(n e) is detected
    for digit in range(1, spec.q(n)):
        xi = FieldElement.lift_residue(spec, n, digit, -(n * e + 1))
        assert not all(char_chi(T_map(xi * z, 1)).is_one() for z in basis)


def test_annihilator_seen_from_finer_level(t1):
    # xi in Xi_1 pairs trivially with the level-2 cosets lying in S_1
    grp = level_group(t1, 2)
    coords = grp.enumerate_coords()
    inside = coords[grp.delta_levels(coords) >= 1]
    xi = embed(DualIndex.from_shell_digits(t1, 1, [1]).representative(), 2)
    for c in inside.tolist():
        assert pairing_general(CosetIndex(t1, 2, tuple(c)), xi).is_one()
    outside = xi * FieldElement.from_rational(t1, 2, Fraction(1, 2))
    assert not all(pairing_general(CosetIndex(t1, 2, tuple(c)), outside).is_one() for c in inside.tolist())


@pytest.mark.parametrize("spec", [T1, T2, T3])
def test_lemma1_surjectivity(spec):
    for nu in (2, 3):
        for n in range(1, nu):
            for N in range(0, nu + 1):
                assert lemma1_surjectivity_check(spec, nu, n, N)


def test_lemma1_examples(quad2, ram5):
    assert lemma1_surjectivity_check(quad2, 2, 1, 0)
    assert lemma1_surjectivity_check(ram5, 2, 1, 1)


@pytest.mark.parametrize("spec,nu", [(T1, 2), (T2, 2), (T3, 2)])
def test_lemma1_containment_random(spec, nu):
    # T_n maps Sigma_{nu,N} into Sigma_{n,N}: images are valid cosets of the finer subgroup
    rng = random.Random(10)
    for _ in range(100):
        N = rng.randrange(0, nu + 1)
        g = random_coset(spec, nu, rng)
        x = coset_rep(g) * FieldElement.from_rational(spec, nu, spec.p**N)
        z = T_map(x, 1) * FieldElement.from_rational(spec, 1, Fraction(1, spec.p**N))
        assert coset_of(z) is not None
