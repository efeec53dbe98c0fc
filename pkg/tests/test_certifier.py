import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import W, common_prefix_len
from hypwalk.certifier import (BruteForceReport, Certificate, FailureReport, Symbol, criterion_check,
                               cyclically_reduce, evaluate_word, signed_symbols, verify_certificate_bruteforce)
from hypwalk.errors import BudgetExceeded, CertificateRefuted, UsageError
from hypwalk.model_spaces import FreeWord, Moebius, PlaneSpace, TreeSpace, enumerate_reduced_words, random_word
from hypwalk.random_walk import sample_generator_tuple, uniform_symmetric


def oracle_margin(gens, delta=0):
    """Margin from common prefixes of the 2k signed words, computed independently."""
    signed = [w for g in gens for w in (g, g.inverse())]
    worst = max(common_prefix_len(u, v) for u, v in itertools.combinations(signed, 2))
    return min(len(g) for g in gens) - (2 * worst + 18 * delta + 1)


def test_examples(tree2):
    c = criterion_check([W("aaaaa"), W("bbbbb")], tree2, 0)
    assert isinstance(c, Certificate) and c.margin == 4
    assert c.max_product == 0 and c.min_displacement == 5 and c.lipschitz_constant == 5
    assert all(c.conclusions.values())

    f = criterion_check([W("aab"), W("aaB")], tree2, 0)
    assert isinstance(f, FailureReport) and not f.certified
    assert f.max_product == 2 and f.margin == 3 - 5
    pairs = {(str(v.pair[0]), str(v.pair[1])) for v in f.violations}
    assert pairs == {("g1", "g2")}
    assert {v.generator for v in f.violations} == {1, 2}
    assert all(v.required == 5 for v in f.violations)

    c = criterion_check([W("ab"), W("ba")], tree2, 0)
    assert c.certified and c.max_product == 0 and c.margin == 1


def test_pair_count_and_exclusion(tree2):
    assert len(list(itertools.combinations(signed_symbols(3), 2))) == math.comb(6, 2)
    # a single generator compares g with g^-1 only; (g . g) itself is excluded
    c = criterion_check([W("aab")], tree2, 0)
    assert c.certified and c.max_product == 0 and c.margin == 2


def test_validation(tree2):
    with pytest.raises(UsageError):
        criterion_check([W("a"), W("")], tree2, 0)
    with pytest.raises(UsageError):
        criterion_check([W("a")], tree2, -0.1)
    with pytest.raises(UsageError):
        criterion_check([], tree2, 0)


def test_margin_depends_on_delta(tree2):
    gens = [W("a" * 20), W("b" * 20)]
    assert criterion_check(gens, tree2, 1.0).margin == 1
    f = criterion_check(gens, tree2, 1.1)
    assert not f.certified and len(f.violations) == 2 * 6


def test_accepts_generator_tuple(tree2):
    t = sample_generator_tuple(uniform_symmetric(2), 30, 2, 4)
    assert criterion_check(t, tree2, 0) == criterion_check(list(t.elements), tree2, 0)


words3 = st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), min_size=1, max_size=12).map(
    lambda l: FreeWord.parse("", 3) * FreeWord(tuple(l), 3) if all(l[i] != -l[i + 1] for i in range(len(l) - 1))
    else None).filter(lambda w: w is not None and len(w) > 0)


@given(st.lists(words3, min_size=1, max_size=4))
def test_margin_matches_prefix_oracle(gens):
    c = criterion_check(gens, TreeSpace(3), 0)
    assert c.margin == oracle_margin(gens)
    assert c.certified == (oracle_margin(gens) >= 0)


@given(st.lists(words3, min_size=2, max_size=4), st.data())
def test_subtuple_monotonicity(gens, data):
    t = TreeSpace(3)
    full = criterion_check(gens, t, 0)
    if not full.certified:
        return
    idx = data.draw(st.lists(st.integers(0, len(gens) - 1), min_size=1, unique=True))
    sub = criterion_check([gens[i] for i in idx], t, 0)
    assert sub.certified and sub.margin >= full.margin


def test_failure_report_lists_every_violation(tree2):
    gens = [W("aab"), W("aaB"), W("ba")]
    f = criterion_check(gens, tree2, 0)
    signed = {s: (g if s.sign > 0 else g.inverse()) for s, g in zip(signed_symbols(3), [x for g in gens for x in (g, g)])}
    expected = set()
    for i, g in enumerate(gens, 1):
        for s, t in itertools.combinations(signed_symbols(3), 2):
            if len(g) < 2 * common_prefix_len(signed[s], signed[t]) + 1:
                expected.add((i, s, t))
    assert {(v.generator, *v.pair) for v in f.violations} == expected


def test_text_serialisation(tree2):
    txt = criterion_check([W("aaaaa"), W("bbbbb")], tree2, 0).to_text()
    kv = dict(line.split(": ", 1) for line in txt.splitlines())
    assert kv["result"] == "certified" and kv["margin"] == "4" and kv["delta_used"] == "0"
    assert kv["generator_1"] == "aaaaa" and kv["qi_embedding"] == "true"
    txt = criterion_check([W("aab"), W("aaB")], tree2, 0).to_text()
    assert "result: failed" in txt and "violation: i=1 pair=(g1,g2)" in txt
    assert "max_power_tested: 1" in txt


def test_cyclically_reduce_examples():
    assert str(cyclically_reduce(W("abA"))) == "b"
    assert str(cyclically_reduce(W("ab"))) == "ab"
    assert str(cyclically_reduce(W("Aba"))) == "b"
    assert cyclically_reduce(W("")).is_identity()


@given(st.lists(st.sampled_from([1, -1, 2, -2]), max_size=16))
def test_cyclic_reduction_is_minimal_conjugate(letters):
    w = TreeSpace(2).product(FreeWord((x,), 2) for x in letters)
    c = cyclically_reduce(w)
    if len(c) >= 2:
        assert c.letters[0] != -c.letters[-1]
    # every cyclic rotation of c is a conjugate of w; none is shorter after reduction
    for i in range(len(c)):
        rot = FreeWord(c.letters[i:] + c.letters[:i], 2) if len(c) else c
        assert len(rot) == len(c)
    # conjugate: c = x^-1 w x with x the stripped prefix
    x = FreeWord(w.letters[:(len(w) - len(c)) // 2], 2)
    assert x.inverse() * w * x == c


def test_evaluate_word(tree2):
    gens = [W("aab"), W("ba")]
    assert evaluate_word(W("aB"), gens, tree2) == W("aab") * W("AB")
    assert evaluate_word(W(""), gens, tree2).is_identity()


def test_bruteforce_examples(tree2):
    gens = [W("aaaaa"), W("bbbbb")]
    cert = criterion_check(gens, tree2, 0)
    rep = verify_certificate_bruteforce(gens, tree2, cert, 3)
    assert isinstance(rep, BruteForceReport)
    assert rep.words_by_length == (4, 12, 36) and rep.words_checked == 52
    assert rep.min_ratio >= 1 and rep.max_ratio <= 5
    rep1 = verify_certificate_bruteforce(gens, tree2, cert, 1)
    assert rep1.words_checked == 4 and rep1.min_ratio == rep1.max_ratio == 5


def test_bruteforce_validation(tree2):
    gens = [W("aaaaa"), W("bbbbb")]
    cert = criterion_check(gens, tree2, 0)
    with pytest.raises(UsageError):
        verify_certificate_bruteforce(gens, tree2, cert, 0)
    with pytest.raises(UsageError):
        verify_certificate_bruteforce(gens, tree2, criterion_check([W("aab"), W("aaB")], tree2, 0), 2)
    with pytest.raises(BudgetExceeded):
        verify_certificate_bruteforce(gens, tree2, cert, 13)  # 4 * 3^12 > 10^6


def test_bruteforce_refutes_forged_certificate(tree2):
    # (a, a^2) is not free; a certificate claiming otherwise must be caught
    gens = [W("a"), W("aa")]
    forged = Certificate(tuple(gens), 0.0, 1.0, 0.0, 0.0, 2.0, "tree")
    with pytest.raises(CertificateRefuted):
        verify_certificate_bruteforce(gens, tree2, forged, 3)


def test_plane_orbit_keys(plane):
    rng = np.random.default_rng(4)
    for _ in range(200):
        t = int(rng.integers(-5, 6))
        g = Moebius.from_ints(2, 1, 1, 1) @ Moebius.from_ints(1, t, 0, 1) @ Moebius.from_ints(1, 0, -1, 1)
        x, y = plane.orbit_key(g)
        p = plane.orbit_point(g)
        assert p.x == pytest.approx(x / y) and p.y == pytest.approx(1 / y)
    # the rotation by pi about i fixes the basepoint, so g and g S share an orbit point
    S = Moebius.from_ints(0, -1, 1, 0)
    g = Moebius.from_ints(2, 1, 1, 1)
    assert plane.orbit_key(g) == plane.orbit_key(g @ S) and g.exact != (g @ S).exact
    assert plane.orbit_key(Moebius(2.0, 0.0, 0.0, 0.5)) is None


def test_bruteforce_sound_on_sampled_tuples():
    mu2, mu3 = uniform_symmetric(2), uniform_symmetric(3)
    for space, mu, k in ((TreeSpace(2), mu2, 2), (TreeSpace(3), mu3, 3)):
        found = 0
        for seed in range(200):
            t = sample_generator_tuple(mu, 40, k, seed)
            if any(g.is_identity() for g in t.elements):
                continue
            c = criterion_check(t, space, 0)
            if c.certified:
                verify_certificate_bruteforce(t, space, c, 3)
                found += 1
            if found == 15:
                break
        assert found == 15


@pytest.mark.parametrize("pair, p", [(("aab", "aaB"), 2), (("ab", "ba"), 1), (("aB", "ab"), 2), (("abb", "aab"), 1), (("aaab", "aaaB"), 2)])
def test_power_trick(tree2, pair, p):
    g, h = W(pair[0]), W(pair[1])
    first = next(q for q in range(1, 20) if criterion_check([g ** q, h ** q], tree2, 0).certified)
    assert first == p
    # the products do not depend on the power for cyclically reduced, non-commensurable words
    prods = {criterion_check([g ** q, h ** q], tree2, 0).max_product for q in range(2, 8)}
    assert len(prods) == 1


def test_power_trick_random_family(tree2):
    rng = np.random.default_rng(8)
    tried = 0
    while tried < 50:
        g, h = random_word(rng, 2, 4), random_word(rng, 2, 4)
        if cyclically_reduce(g) != g or cyclically_reduce(h) != h or g * h == h * g:
            continue
        tried += 1
        prods = [criterion_check([g ** q, h ** q], tree2, 0).max_product for q in (4, 6, 8)]
        assert prods[0] == prods[1] == prods[2]
        assert any(criterion_check([g ** q, h ** q], tree2, 0).certified for q in range(1, 20))


def test_loxodromicity_witness(tree2):
    mu = uniform_symmetric(2)
    checked = 0
    for seed in range(40):
        t = sample_generator_tuple(mu, 30, 2, seed)
        if any(g.is_identity() for g in t.elements) or not criterion_check(t, tree2, 0).certified:
            continue
        for word in enumerate_reduced_words(2, 3, min_len=1):
            g = evaluate_word(word, t.elements, tree2)
            ell = len(cyclically_reduce(g))
            assert ell >= 1
            for n in range(1, 6):
                assert tree2.displacement(g ** n) >= n * ell
        checked += 1
    assert checked >= 10


def sanov_powers(m):
    return [Moebius.from_ints(1, 2, 0, 1) ** m, Moebius.from_ints(1, 0, 2, 1) ** m]


def test_plane_sanov_powers_against_delta(plane):
    # at delta = 0 the parabolic pair already clears the criterion, but a sampled
    # delta near ln 2 costs 18 delta, more than the displacement gains up to m = 10
    assert criterion_check(sanov_powers(1), plane, 0).certified
    for m in range(1, 11):
        assert criterion_check(sanov_powers(m), plane, 0.69).margin < -10


def test_plane_products_of_sanov_generators_certify(plane):
    A, B = Moebius.from_ints(1, 2, 0, 1), Moebius.from_ints(1, 0, 2, 1)
    delta = 1.04  # about 1.5 times the sampled ln 2
    first = next(m for m in range(1, 11) if criterion_check([(A @ B) ** m, (B @ A) ** m], plane, delta).certified)
    assert first == 6
    gens = [(A @ B) ** 6, (B @ A) ** 6]
    cert = criterion_check(gens, plane, delta)
    assert cert.margin > 1e-6
    rep = verify_certificate_bruteforce(gens, plane, cert, 3)
    assert rep.words_checked == 52
    for word in enumerate_reduced_words(2, 3, min_len=1):
        a, b, c, d = evaluate_word(word, gens, plane).exact
        assert abs(a + d) > 2


def test_plane_margin_strictness(plane):
    # margin exactly 0 on the plane is not enough; translation by 2 asinh(1) along the
    # imaginary axis has product 0 with its inverse, so delta = (d - 1) / 18 gives margin 0
    g = Moebius(math.exp(math.asinh(1)), 0.0, 0.0, math.exp(-math.asinh(1)))
    d = plane.displacement(g)
    assert criterion_check([g], plane, 0).margin == pytest.approx(d - 1)
    f = criterion_check([g], plane, (d - 1) / 18)
    assert not f.certified and abs(f.margin) < 1e-9
    assert criterion_check([g], plane, (d - 1 - 1e-3) / 18).certified
