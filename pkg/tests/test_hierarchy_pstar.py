"""Commutator functional: substitution rule, projection algebra, flow oracle."""

import numpy as np
import pytest

from helpers import pstar_energy, random_field
from ilwkit import spectral, symbols
from ilwkit.hierarchy import Density, canonicalize_integrated, evaluate, mono, re_part
from ilwkit.hierarchy.energies import energy_deep, energy_shallow
from ilwkit.hierarchy.expr import U, ap, leaf_count, op_count, pr
from ilwkit.hierarchy.pstar import p_star

BLOCK = ("ap", "pn", ("pr", (("ap", "dx", ("u",)), ("u",))))


def _contains(e, sub):
    if e == sub:
        return True
    if e[0] == "ap":
        return _contains(e[2], sub)
    if e[0] == "pr":
        return any(_contains(c, sub) for c in e[1])
    return False


def _lincomb(a, f, b, g):
    m = max(f.cutoff, g.cutoff)
    c = np.zeros(m + 1, dtype=np.complex128)
    c[1 : f.cutoff + 1] += a * f.positive
    c[1 : g.cutoff + 1] += b * g.positive
    return spectral.SpectralField(c)


def _direction(v):
    # -2 P_{>N}(v dx v), the projection defect of the truncated flow
    dv = spectral.apply_multiplier(v, symbols.DX)
    prod = spectral.product_field(v, dv)
    high = spectral.apply_multiplier(prod, symbols.proj_high(v.cutoff))
    return _lincomb(-2.0, high, 0.0, high)


def test_cubic_substitution():
    cubic = Density.of((mono(1, 0, 0, pr((U, U, U))),), "deep", 3)
    got = p_star(cubic)
    want = re_part(
        canonicalize_integrated(
            Density.of(
                (mono(-6, 0, 0, pr((U, U, ap("pn", pr((U, ap("dx", U))))))),),
                "deep",
                5,
            ),
            bandlimited=True,
        )
    )
    assert got.monos == want.monos
    assert got.declared_rank == 5


def test_quadratic_energies_map_to_zero():
    # the truncated flow conserves the projected L2 norm exactly
    assert p_star(energy_deep(0)).monos == ()
    assert p_star(energy_shallow(0)).monos == ()


def test_rejects_existing_marker():
    with pytest.raises(ValueError):
        p_star(pstar_energy("deep", 2))


def test_substitution_block_and_rank():
    for kind, k, jump in (("deep", 2, 2), ("deep", 3, 2), ("shallow", 2, 1.5)):
        base = energy_deep(k) if kind == "deep" else energy_shallow(k)
        out = pstar_energy(kind, k)
        assert out.declared_rank == base.declared_rank + jump
        for m in out.monos:
            assert leaf_count(m.body) >= 3
            assert op_count(m.body, "pn") == 1
            assert _contains(m.body, BLOCK)


def test_flow_derivative_oracle():
    # central difference of E(v + t w) at t=0 against the substituted density
    eps = 5.0e-5
    cases = (
        ("deep", 2, 2.0, 12, 31),
        ("deep", 3, 2.0, 12, 32),
        ("shallow", 2, 0.5, 10, 33),
    )
    for kind, k, delta, n, seed in cases:
        base = energy_deep(k) if kind == "deep" else energy_shallow(k)
        v = random_field(n, seed)
        w = _direction(v)
        lhs = (
            evaluate(base, _lincomb(1.0, v, eps, w), delta)
            - evaluate(base, _lincomb(1.0, v, -eps, w), delta)
        ) / (2.0 * eps)
        rhs = evaluate(pstar_energy(kind, k), v, delta, cutoff=n)
        assert abs(lhs - rhs) < 1.0e-5 * max(1.0, abs(lhs)), (kind, k)


def test_first_energies_structurally_conserved():
    # the half-step energies pair the projection defect against a gradient
    # that lives entirely below the cutoff, so the bracket vanishes
    for kind, delta in (("deep", 2.0), ("shallow", 0.5)):
        v = random_field(12, 77)
        val = evaluate(pstar_energy(kind, 1), v, delta, cutoff=12)
        assert abs(val) < 1.0e-10
