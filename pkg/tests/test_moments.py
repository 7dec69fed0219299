import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bkdisk import (
    EXACT,
    AlphaTooSmall,
    NonpositiveMoment,
    float_backend,
    flat_simplex_weight,
    graded_lex_indices,
    hyperbolic_weight,
    ibp_expansion,
    moment,
    moment_table,
    series_make,
    series_scale,
    simplex_moment,
    simplex_moment_table,
    simplex_monomial_integral,
    table_from_json,
    table_to_csv,
    table_to_json,
    make_weight,
    MultiIndex,
)

from oracles import quad_moment, quad_simplex_moment_2d

FB = float_backend(256)


def test_moment_one_minus_x_j0():
    assert moment(hyperbolic_weight(), 0) == Fraction(1, 2)


def test_moment_one_minus_x_j5_closed_form():
    # closed form 1/((j+1)(j+2)); cross-checked by quadrature oracle
    w = hyperbolic_weight()
    assert moment(w, 5) == Fraction(1, 42)
    q = quad_moment(w.series, 5)
    assert abs(float(Fraction(1, 42)) - float(q)) < 1e-30


def test_moment_constant_one():
    w = make_weight(series_make(1, 1, {0: 1}, EXACT))
    assert moment(w, 9) == Fraction(1, 10)


def test_moment_rejects_nonpositive():
    f = series_make(1, 1, {0: -1}, EXACT)
    with pytest.raises(NonpositiveMoment):
        moment(f, 0)


def test_moment_table_one_minus_x():
    t = moment_table(hyperbolic_weight(), 2)
    assert t.entry(0) == Fraction(1, 2)
    assert t.entry(1) == Fraction(1, 6)
    assert t.entry(2) == Fraction(1, 12)
    assert t.n == 1 and t.alpha == 3


def test_moment_table_constant():
    w = make_weight(series_make(1, 1, {0: 1}, EXACT))
    t = moment_table(w, 1)
    assert t.entry(0) == 1 and t.entry(1) == Fraction(1, 2)


def test_moment_table_single_entry():
    t = moment_table(hyperbolic_weight(), 0)
    assert dict(t.entries) == {(0,): Fraction(1, 2)}


@st.composite
def positive_exact_weights(draw, max_order=4):
    # p(x)^2 + c stays positive on (0,1)
    order = draw(st.integers(min_value=1, max_value=max_order))
    coeffs = {m: draw(st.fractions(min_value=-2, max_value=2, max_denominator=8))
              for m in range(order // 2 + 1)}
    p = series_make(1, order, {}, EXACT)
    from bkdisk import series_add, series_mul
    base = series_make(1, order, coeffs, EXACT)
    sq = series_mul(base, base)
    c = draw(st.fractions(min_value=Fraction(1, 8), max_value=2,
                          max_denominator=8))
    return make_weight(series_add(sq, series_make(1, order, {0: c}, EXACT)))


@settings(max_examples=20, deadline=None)
@given(positive_exact_weights())
def test_moment_monotone_decreasing(w):
    values = [moment(w, j) for j in range(8)]
    assert all(a > b for a, b in zip(values, values[1:]))


@settings(max_examples=20, deadline=None)
@given(positive_exact_weights(),
       st.fractions(min_value=Fraction(1, 3), max_value=3, max_denominator=6),)
def test_moment_scaling(w, lam):
    scaled = series_scale(w.series, lam)
    assert moment(scaled, 4) == lam * moment(w, 4)


# --- simplex moments --------------------------------------------------------


def test_simplex_volume():
    w = make_weight(series_make(2, 1, {(0, 0): 1}, EXACT))
    assert simplex_moment(w, (0, 0), 4, 2) == Fraction(1, 2)


def test_simplex_monomial_vs_quadrature():
    w = make_weight(series_make(2, 1, {(0, 0): 1}, EXACT))
    v = simplex_moment(w, (1, 0), 4, 2)
    assert v == Fraction(1, 6)
    q = quad_simplex_moment_2d(w.series, (1, 0), 1)
    assert abs(float(v) - float(q)) < 1e-15


def test_simplex_flat_weight_vs_quadrature():
    w = flat_simplex_weight(2)
    v = simplex_moment(w, (0, 0), 4, 2)
    assert v == Fraction(1, 6)
    q = quad_simplex_moment_2d(w.series, (0, 0), 1)
    assert abs(float(v) - float(q)) < 1e-15


def test_simplex_alpha_too_small():
    w = flat_simplex_weight(2)
    with pytest.raises(AlphaTooSmall):
        simplex_moment(w, (0, 0), 3, 2)
    with pytest.raises(AlphaTooSmall):
        simplex_moment_table(w, 4, 2, 2)


def test_simplex_consistency_with_disk_moment():
    # alpha = 3, n = 1: integrand exponent is 1, so I_(j) = I_j
    w = hyperbolic_weight()
    for j in range(6):
        assert simplex_moment(w, (j,), 3, 1) == moment(w, j)


def test_simplex_table_graded_lex():
    w = flat_simplex_weight(2)
    t = simplex_moment_table(w, 3, 4, 2)
    keys = [J for J, _ in t.sorted_items()]
    assert keys == list(graded_lex_indices(2, 3))
    assert all(v > 0 for _, v in t.sorted_items())


def test_monomial_integral_one_var():
    assert simplex_monomial_integral((9,), 1, EXACT) == Fraction(1, 10)


def test_multi_index():
    J = MultiIndex((2, 0, 1))
    assert J.degree == 3
    assert tuple(J) == (2, 0, 1)


# --- integration by parts ---------------------------------------------------


def test_ibp_one_minus_x_j0_k1():
    w = hyperbolic_weight()
    assert ibp_expansion(w, 0, 1) == Fraction(1, 2)


def test_ibp_one_minus_x_j3_k0():
    w = hyperbolic_weight()
    assert ibp_expansion(w, 3, 0) == Fraction(1, 20)
    assert moment(w, 3) == Fraction(1, 20)


def test_ibp_constant():
    w = make_weight(series_make(1, 1, {0: 1}, EXACT))
    assert ibp_expansion(w, 0, 2) == 1


@settings(max_examples=20, deadline=None)
@given(positive_exact_weights(),
       st.integers(min_value=0, max_value=50),
       st.integers(min_value=0, max_value=5))
def test_ibp_equals_moment_exactly(w, j, k0):
    assert ibp_expansion(w, j, k0) == moment(w, j)


def test_ibp_seeded_random_polynomials():
    rng = random.Random(20260810)
    for _ in range(5):
        coeffs = {m: Fraction(rng.randint(-8, 8), rng.randint(1, 6))
                  for m in range(4)}
        from bkdisk import series_add, series_mul
        base = series_make(1, 6, coeffs, EXACT)
        w = make_weight(series_add(series_mul(base, base),
                                   series_make(1, 6, {0: Fraction(1, 7)}, EXACT)))
        for j in (0, 7, 19):
            for k0 in (0, 2, 5):
                assert ibp_expansion(w, j, k0) == moment(w, j)


# --- serialization ----------------------------------------------------------


def test_table_json_roundtrip():
    t = moment_table(hyperbolic_weight(), 4)
    t2 = table_from_json(table_to_json(t))
    assert t2.entries == t.entries
    assert (t2.n, t2.alpha, t2.max_order) == (t.n, t.alpha, t.max_order)


def test_table_csv_headers_and_order():
    t = simplex_moment_table(flat_simplex_weight(2), 1, 4, 2)
    csv_text = table_to_csv(t)
    lines = csv_text.strip().splitlines()
    assert lines[0] == "J,I"
    assert lines[1].startswith("0;0,")


def test_float_table_matches_exact():
    wf = make_weight(series_make(1, 1, {0: 1, 1: "-1"}, FB))
    t = moment_table(wf, 10)
    for j in range(11):
        exact = Fraction(1, (j + 1) * (j + 2))
        assert abs(float(t.entry(j) - FB.number(exact))) < 1e-70
