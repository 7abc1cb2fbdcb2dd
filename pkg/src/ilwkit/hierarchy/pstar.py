"""Time-derivative assembly for truncated flows.

For a mean-zero solution of the frequency-truncated equation, the working
field v = P_N u evolves by the full vector field minus the projected-out
part of the nonlinearity, so for any conserved functional E,

    d/dt E(v) = -E'(v)[ProjHigh(N) dx(v^2) ] = E'(v)[ -2 ProjHigh(N)(v dx v) ].

p_star realizes the right-hand side symbolically: each fundamental factor of
each monomial is replaced, one at a time, by -2 ProjHigh(v dx v), with any
operator decorations kept above the replacement.  The result is canonicalized
under the band-limited contract (every remaining plain leaf is P_N-truncated),
which eliminates the quadratic sector identically: only interaction monomials
contribute to the derivative.
"""

from __future__ import annotations

from fractions import Fraction

from .canon import canonicalize_integrated, re_part
from .expr import Density, Mono, U, ap, contains_op, pr

# d/dt leaf replacement: -2 ProjHigh(u dx u), decorations stay above
_BLOCK = ap("pn", pr((U, ap("dx", U))))


def _leaf_replacements(e):
    """Yield every body obtained by swapping one plain leaf for _BLOCK."""
    if e == U:
        yield _BLOCK
        return
    tag = e[0]
    if tag == "ap":
        for rep in _leaf_replacements(e[2]):
            yield ("ap", e[1], rep)
        return
    children = e[1]
    for i, child in enumerate(children):
        for rep in _leaf_replacements(child):
            yield ("pr", children[:i] + (rep,) + children[i + 1 :])


def p_star(d: Density) -> Density:
    """Assemble d/dt of the integrated density d along the truncated flow.

    The projection marker is symbolic; the numeric cutoff is supplied at
    evaluation time.  Densities that already contain a projection marker are
    rejected (markers do not nest).
    """
    for m in d.monos:
        if contains_op(m.body, "pn"):
            raise ValueError("density already contains a projection marker")
    out = []
    for m in d.monos:
        for body in _leaf_replacements(m.body):
            out.append(Mono(-2 * m.coeff, m.ipow, m.dpow, body))
    rank = d.declared_rank
    if rank is not None:
        rank = rank + (2 if d.regime in ("deep", "bo") else Fraction(3, 2))
    raw = Density.of(tuple(out), d.regime, rank)
    return re_part(canonicalize_integrated(raw, bandlimited=True))
