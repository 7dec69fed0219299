import math
from fractions import Fraction

import pytest

from bkdisk import (
    EXACT,
    KTooLarge,
    OrderExceedsTable,
    SingularProfile,
    UntrustedTail,
    defect_sequence,
    asymptotics_report,
    boundary_profile,
    decay_diagnostic,
    float_backend,
    hyperbolic_weight,
    growth_witness_check,
    make_weight,
    moment_table,
    series_make,
    analytic_remainder,
)

FB = float_backend(256)


# --- boundary profile -------------------------------------------------------


def test_boundary_profile_hyperbolic():
    bp = boundary_profile(hyperbolic_weight(), 3)
    assert list(bp.derivatives) == [0, -1, 0, 0]
    assert bp.all_pass


def test_boundary_profile_wrong_slope():
    f = series_make(1, 2, {0: 1, 2: -1}, EXACT)  # 1 - x^2
    bp = boundary_profile(f, 2)
    assert list(bp.derivatives) == [0, -2, -2]
    assert bp.value_zero and not bp.slope_minus_one


def test_boundary_profile_constant():
    f = series_make(1, 1, {0: 1}, EXACT)
    bp = boundary_profile(f, 1)
    assert list(bp.derivatives) == [1, 0]
    assert not bp.value_zero


def test_boundary_profile_k_too_large():
    f = series_make(1, 1, {0: 1, 1: -1}, EXACT)
    with pytest.raises(KTooLarge):
        boundary_profile(f, 2)


# --- a_j sequence ------------------------------------------------------------


def test_defect_sequence_hyperbolic_is_identically_zero():
    t = moment_table(hyperbolic_weight(), 50)
    seq = defect_sequence(t, 0, 50)
    assert all(a == 0 for a in seq)


def test_defect_sequence_constant_weight():
    w = make_weight(series_make(1, 1, {0: 1}, EXACT))
    t = moment_table(w, 2)
    # 1/I_j = j+1, so a_j = (j+1) - (j+1)(j+2) = -(j+1)^2
    assert defect_sequence(t, 0, 2) == [-1, -4, -9]


def test_defect_sequence_constant_shift():
    t = moment_table(hyperbolic_weight(), 1)
    assert defect_sequence(t, 1, 1) == [-1, -1]


def test_defect_sequence_order_exceeds_table():
    t = moment_table(hyperbolic_weight(), 5)
    with pytest.raises(OrderExceedsTable):
        defect_sequence(t, 0, 6)


# --- z remainder -------------------------------------------------------------


def test_analytic_remainder_hyperbolic_vanishes():
    vals = analytic_remainder(hyperbolic_weight())
    assert all(v == 0 for v in vals)


def test_analytic_remainder_hyperbolic_float():
    vals = analytic_remainder(make_weight(series_make(1, 4, {0: 1, 1: -1}, FB)))
    assert max(abs(float(v)) for v in vals) < 1e-70


def test_analytic_remainder_rejects_singular_profile():
    w = make_weight(series_make(1, 1, {0: 1}, EXACT))
    with pytest.raises(SingularProfile):
        analytic_remainder(w)


def test_analytic_remainder_perturbed_weight_finite_nonzero():
    # f = (1-x) + 0.1 (1-x)^3 = 1.1 - 1.3 x + 0.3 x^2 - 0.1 x^3  (exact)
    coeffs = {0: Fraction(11, 10), 1: Fraction(-13, 10),
              2: Fraction(3, 10), 3: Fraction(-1, 10)}
    w = make_weight(series_make(1, 3, coeffs, EXACT))
    x = Fraction(9, 10)
    (val,) = analytic_remainder(w, grid=[x])
    # oracle: straightforward arithmetic on the closed form, f'''(1) = -3/5
    fx = sum(c * x**m for m, c in coeffs.items())
    expected = 2 / fx**3 - 2 / (1 - x) ** 3 - Fraction(-3, 5) / (1 - x)
    assert val == expected
    assert val != 0


# --- polynomial-growth witnesses ---------------------------------------------


def test_growth_witness_constant_sequence():
    res = growth_witness_check(lambda j: 1, 0, jmax=120)
    assert res.holds
    assert abs(res.s_bound - 1.0) < 0.05
    assert res.c_bound == 1.0


def test_growth_witness_quadratic_sequence():
    res = growth_witness_check(lambda j: (j + 1) * (j + 2), 2, jmax=200)
    assert res.holds
    assert abs(res.s_bound - 2.0) < 0.1


def test_growth_witness_witnesses_match_factorial():
    for r0 in (1, 2, 3):
        res = growth_witness_check(
            lambda j, r0=r0: math.prod(j + i for i in range(1, r0 + 1)),
            r0, jmax=200)
        assert res.holds
        target = math.factorial(r0)
        assert abs(res.s_bound - target) <= 0.05 * target


def test_growth_witness_exponential_fails_on_coefficients():
    res = growth_witness_check(lambda j: 2**j, 3, jmax=60)
    assert not res.holds
    assert not res.coeff_growth_ok


def test_growth_witness_untrusted_tail_near_one():
    with pytest.raises(UntrustedTail):
        growth_witness_check(lambda j: (j + 1) * (j + 2), 2, jmax=12,
                      grid=[Fraction(999, 1000)])


# --- decay fit ----------------------------------------------------------------


def test_decay_all_zero():
    assert decay_diagnostic([Fraction(0)] * 30).all_zero


def test_decay_slope_quadratic():
    seq = [Fraction(1, (j + 1) ** 2) for j in range(200)]
    d = decay_diagnostic(seq)
    assert abs(d.slope - 2) < 0.1


def test_decay_slope_linear():
    seq = [Fraction(1, j + 1) for j in range(200)]
    d = decay_diagnostic(seq)
    assert abs(d.slope - 1) < 0.1


def test_decay_needs_twenty_terms():
    with pytest.raises(ValueError):
        decay_diagnostic([Fraction(1)] * 19)


def test_decay_skips_exact_zeros():
    seq = [Fraction(0) if j % 2 else Fraction(1, (j + 1) ** 2)
           for j in range(200)]
    d = decay_diagnostic(seq)
    assert not d.all_zero
    assert abs(d.slope - 2) < 0.15


# --- assembled report ---------------------------------------------------------


def test_asymptotics_report_hyperbolic():
    w = hyperbolic_weight()
    t = moment_table(w, 60)
    rep = asymptotics_report(w, t, K=3, jmax=60)
    assert list(rep.boundary_derivatives) == [0, -1, 0, 0]
    assert rep.all_zero
    assert rep.decay_slope is None
    obj = rep.to_json(EXACT)
    assert obj["all_zero"] is True
