"""Recursion outputs against hand-derived forms, counter bounds, and slices."""

from fractions import Fraction

import pytest

from helpers import integrated_chi, integrated_h_kdv, integrated_h_tilde, random_field
from ilwkit.hierarchy import (
    Density,
    canonicalize,
    canonicalize_integrated,
    evaluate,
    evaluate_complex,
    mono,
)
from ilwkit.hierarchy.expr import U, ap, chain, leaf_count, op_count, pr
from ilwkit.hierarchy.energies import _g_to_h
from ilwkit.hierarchy.quad import (
    deep_quadratic_reference,
    kdv_quadratic_reference,
    quadratic_part,
    shallow_quadratic_reference,
)
from ilwkit.hierarchy.recursions import (
    _linear_step_deep,
    chi_bo,
    chi_deep,
    h_kdv,
    h_shallow,
    h_tilde,
    parity_flag,
)


def expect(regime, *monos):
    return canonicalize(Density.of(tuple(monos), regime, None))


# --- deep recursion --------------------------------------------------------


def test_chi_1():
    assert chi_deep(1).monos == (mono(2, 0, 0, U),)


def test_chi_2_hand_form():
    # -2u^2 - 2(G - i)dx u - (2/delta) u
    want = expect(
        "deep",
        mono(-2, 0, 0, pr((U, U))),
        mono(-2, 0, 0, chain(["g", "dx"], U)),
        mono(2, 1, 0, ap("dx", U)),
        mono(-2, 0, -1, U),
    )
    assert chi_deep(2).monos == want.monos


def test_chi_3_integral_display():
    # int chi_3 = (8/3) int u^3 + 4 int u G dx u + 6/delta ||u||^2
    want = canonicalize_integrated(
        Density.of(
            (
                mono(Fraction(8, 3), 0, 0, pr((U, U, U))),
                mono(4, 0, 0, pr((U, chain(["g", "dx"], U)))),
                mono(6, 0, -1, pr((U, U))),
            ),
            "deep",
            None,
        )
    )
    assert integrated_chi(3).monos == want.monos


def test_chi_rank_homogeneous():
    for n in range(1, 7):
        assert chi_deep(n).rank_check() == n
        assert chi_bo(n).rank_check() == n


def test_chi_bo_alphabet_is_depth_free():
    for n in range(1, 7):
        for m in chi_bo(n).monos:
            assert m.dpow == 0
            assert op_count(m.body, "g") == 0
            assert op_count(m.body, "q") == 0


def test_chi_linear_part_is_iterated_linear_step():
    lin = Density.of((mono(2, 0, 0, U),), "deep", None)
    for n in range(1, 7):
        got = canonicalize(chi_deep(n).filter(lambda m: leaf_count(m.body) == 1))
        assert got.monos == canonicalize(lin).monos, n
        lin = Density.of((-_linear_step_deep(lin, "g")).monos, "deep", None)


def test_depth_free_slice_of_chi_is_bo():
    for n in range(1, 7):
        kept = tuple(
            mono(m.coeff, m.ipow, m.dpow, _g_to_h(m.body))
            for m in chi_deep(n).monos
            if m.dpow >= 0
        )
        sliced = canonicalize(Density.of(kept, "bo", None))
        assert sliced.monos == chi_bo(n).monos, n


def test_two_alphabets_evaluate_identically():
    v = random_field(10, 21)
    for n in range(2, 6):
        a = complex(evaluate_complex(integrated_chi(n, "g"), v, 2.0))
        b = complex(evaluate_complex(integrated_chi(n, "q"), v, 2.0))
        assert a == pytest.approx(b, abs=1e-10 * max(1.0, abs(a)))


def test_deep_quadratic_closed_form_low_orders():
    for n in range(2, 7):
        assert quadratic_part(integrated_chi(n)) == deep_quadratic_reference(n)


# --- shallow recursion -----------------------------------------------------


def test_h_shallow_first_two():
    assert h_shallow(0).monos == (mono(-1, 0, 0, U),)
    # h_1 = -i delta v^2 - (1 + i delta Gt) dx v
    want = expect(
        "shallow",
        mono(-1, 1, 1, pr((U, U))),
        mono(-1, 0, 0, ap("dx", U)),
        mono(-1, 1, 1, chain(["gt", "dx"], U)),
    )
    assert h_shallow(1).monos == want.monos


def test_h_shallow_rank():
    for n in range(0, 7):
        assert h_shallow(n).rank_check() == 1 + Fraction(n, 2)


def test_h_shallow_counter_bounds():
    # per-monomial: 0 <= #Gt <= min(#dx, #delta), #v + #dx <= n+1, 0 <= #delta <= n
    for n in range(0, 9):
        for m in h_shallow(n).monos:
            gt = op_count(m.body, "gt")
            dx = op_count(m.body, "dx")
            assert 0 <= gt <= min(dx, m.dpow), (n, m)
            assert leaf_count(m.body) + dx <= n + 1, (n, m)
            assert 0 <= m.dpow <= n, (n, m)


def test_h_shallow_linear_part_integrates_to_zero():
    for n in range(1, 7):
        lin = h_shallow(n).filter(lambda m: leaf_count(m.body) == 1)
        assert canonicalize_integrated(lin).is_zero(), n


def test_depth_zero_slice_of_h_is_kdv():
    for n in range(0, 7):
        kept = tuple(m for m in h_shallow(n).monos if m.dpow == 0)
        sliced = canonicalize(Density.of(kept, "kdv", None))
        assert sliced.monos == h_kdv(n).monos, n


def test_h_kdv_hand_forms():
    assert h_kdv(0).monos == (mono(-1, 0, 0, U),)
    assert h_kdv(1).monos == (mono(-1, 0, 0, ap("dx", U)),)
    want2 = expect(
        "kdv", mono(1, 0, 0, pr((U, U))), mono(-1, 0, 0, chain(["dx", "dx"], U))
    )
    assert h_kdv(2).monos == want2.monos
    want4 = expect(
        "kdv",
        mono(-2, 0, 0, pr((U, U, U))),
        mono(6, 0, 0, pr((chain(["dx", "dx"], U), U))),
        mono(5, 0, 0, pr((ap("dx", U), ap("dx", U)))),
        mono(-1, 0, 0, chain(["dx"] * 4, U)),
    )
    assert h_kdv(4).monos == want4.monos


def test_h_kdv_alphabet_and_rank():
    for n in range(0, 9):
        d = h_kdv(n)
        assert d.rank_check() == 1 + Fraction(n, 2)
        for m in d.monos:
            assert m.dpow == 0 and op_count(m.body, "gt") == 0


def test_h_kdv_odd_orders_integrate_to_zero():
    for n in range(0, 5):
        assert integrated_h_kdv(2 * n + 1).is_zero(), n


def test_h_kdv_even_orders_are_signed_norms():
    # int h_2n = (-1)^{n-1} ||v||^2 in the (n-1)-th derivative pairing
    for n in range(1, 5):
        assert quadratic_part(integrated_h_kdv(2 * n)) == kdv_quadratic_reference(n)


# --- telescoped laws -------------------------------------------------------


def test_parity_flag():
    assert [parity_flag(n) for n in (1, 2, 3, 4)] == [1, 0, 1, 0]


def test_h_tilde_1_hand_form():
    want = expect(
        "shallow",
        mono(-1, 0, 0, pr((U, U))),
        mono(1, 1, -1, ap("dx", U)),
        mono(-1, 0, 0, chain(["gt", "dx"], U)),
    )
    assert h_tilde(1).monos == want.monos


def test_h_tilde_rank():
    for n in range(1, 7):
        assert h_tilde(n).rank_check() == 2 + Fraction(n, 2) - Fraction(parity_flag(n), 2)


def test_h_tilde_2_integral_display():
    want = canonicalize_integrated(
        Density.of(
            (
                mono(Fraction(4, 3), 0, 0, pr((U, U, U))),
                mono(2, 0, 0, pr((U, chain(["gt", "dx"], U)))),
            ),
            "shallow",
            None,
        )
    )
    assert integrated_h_tilde(2).monos == want.monos


def test_integrated_h_tilde_counter_bounds():
    # 0 <= #Gt <= min(#dx, #delta + 1 - parity), #v + #dx <= n+1,
    # 0 <= #delta <= n + parity - 2
    for n in range(1, 9):
        p = parity_flag(n)
        for m in integrated_h_tilde(n).monos:
            gt = op_count(m.body, "gt")
            dx = op_count(m.body, "dx")
            assert 0 <= gt <= min(dx, m.dpow + 1 - p), (n, m)
            assert leaf_count(m.body) + dx <= n + 1, (n, m)
            assert 0 <= m.dpow <= n + p - 2, (n, m)


def test_shallow_quadratic_closed_form_low_orders():
    for n in range(2, 7):
        assert quadratic_part(integrated_h_tilde(n)) == shallow_quadratic_reference(n)


def test_telescoped_integrals_approach_depth_free_limit():
    from ilwkit.hierarchy.energies import delta_free_shallow

    v = random_field(8, 33)
    for n in (2, 3, 4):
        lim = evaluate(delta_free_shallow(integrated_h_tilde(n)), v, 0.0)
        gaps = [
            abs(evaluate(integrated_h_tilde(n), v, d) - lim) for d in (0.2, 0.1, 0.05)
        ]
        assert gaps[0] > gaps[1] > gaps[2], (n, gaps)
