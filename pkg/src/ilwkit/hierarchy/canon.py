"""Canonical forms for symbolic densities.

Plain normalization rewrites every body into a sum of trees in which

  * derivatives are fully distributed over products (product rule),
  * each maximal operator run between projection barriers is sorted with
    decorations outermost and derivatives innermost,
  * repeated Hilbert factors are folded through H^2 = -Id, applied only
    where the content below the pair is provably mean-zero,
  * product children are flattened and sorted.

The integrated layer adds rules valid under the integral sign: mean-zero
terms drop, operator chains hop across binary pairings with their adjoint
signs, two-factor monomials are replaced by their exact Fourier weight
descriptors, and flat higher-degree monomials are reduced modulo the exact
linear relations generated by integration by parts (plus the trilinear
Hilbert product identity at degree three).  With a band-limited contract
two projection rules apply: a binary pairing of a high-mode factor against
a low-mode chain vanishes, and a Hilbert transform pulls out of a
projected binary product.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .expr import (
    Density,
    Mono,
    TRANSPOSE_SIGN,
    U,
    chain,
    chain_key,
    mono,
)

__all__ = [
    "normalize_expr",
    "canonicalize",
    "canonicalize_integrated",
    "re_part",
    "flat_factor",
    "weight_entries",
    "canonical_quad_body",
    "clear_caches",
]

_F1 = Fraction(1)

_NORM_CACHE: dict = {}
_IBP_CACHE: dict = {}
_QUAD_BODY_CACHE: dict = {}


def clear_caches() -> None:
    _NORM_CACHE.clear()
    _IBP_CACHE.clear()
    _QUAD_BODY_CACHE.clear()


# --- plain normalization ---------------------------------------------------


def _merge_terms(terms):
    acc: dict = {}
    for m, e in terms:
        acc[e] = acc.get(e, Fraction(0)) + m
    return tuple((c, e) for e, c in sorted(acc.items(), key=lambda kv: kv[0]) if c != 0)


def normalize_expr(e: tuple):
    """Return the canonical expansion of e as ((coeff, body), ...)."""
    cached = _NORM_CACHE.get(e)
    if cached is None:
        cached = _norm(e)
        _NORM_CACHE[e] = cached
    return cached


def _norm(e: tuple):
    if e[0] == "u":
        return ((_F1, e),)
    if e[0] == "pr":
        parts = [normalize_expr(c) for c in e[1]]
        out = []
        for combo in itertools.product(*parts):
            mult = _F1
            kids = []
            for m, c in combo:
                mult *= m
                if c[0] == "pr":
                    kids.extend(c[1])
                else:
                    kids.append(c)
            kids.sort()
            out.append((mult, ("pr", tuple(kids))))
        return _merge_terms(out)
    ops = []
    node = e
    while node[0] == "ap":
        ops.append(node[1])
        node = node[2]
    out = []
    for mult, core in normalize_expr(node):
        for m2, e2 in _apply_spine(tuple(ops), core):
            out.append((mult * m2, e2))
    return _merge_terms(out)


def _apply_spine(ops, core):
    segs = []
    cur = []
    for o in ops:
        if o == "pn":
            segs.append(tuple(cur))
            segs.append(None)  # projection barrier
            cur = []
        else:
            cur.append(o)
    segs.append(tuple(cur))
    return _build_spine(tuple(segs), core)


def _build_spine(segs, core):
    last = segs[-1]
    if core[0] == "pr" and last and "dx" in last:
        # product rule: push one derivative into the product, re-normalize
        kept = list(last)
        kept.remove("dx")
        segs2 = segs[:-1] + (tuple(kept),)
        out = []
        for i in range(len(core[1])):
            kids = list(core[1])
            kids[i] = ("ap", "dx", kids[i])
            for m, t in normalize_expr(("pr", tuple(kids))):
                for m2, e2 in _build_spine(segs2, t):
                    out.append((m * m2, e2))
        return out
    mult = _F1
    node = core
    mean_zero_below = core[0] != "pr"
    for seg in reversed(segs):
        if seg is None:
            node = ("ap", "pn", node)
            mean_zero_below = True
            continue
        h = seg.count("h")
        others = sorted((o for o in seg if o != "h"), key=chain_key)
        if h >= 2:
            if others or mean_zero_below:
                mult *= Fraction((-1) ** (h // 2))
                h %= 2
            elif h % 2:
                mult *= Fraction((-1) ** ((h - 1) // 2))
                h = 1
            else:
                mult *= Fraction((-1) ** ((h - 2) // 2))
                h = 2
        for o in reversed(others):
            node = ("ap", o, node)
        for _ in range(h):
            node = ("ap", "h", node)
        if seg:
            mean_zero_below = True
    return ((mult, node),)


def canonicalize(d: Density) -> Density:
    out = []
    for m in d.monos:
        for mult, body in normalize_expr(m.body):
            out.append(mono(m.coeff * mult, m.ipow, m.dpow, body))
    return Density(tuple(out), d.regime, d.declared_rank).merged()


# --- factor inspection -----------------------------------------------------


def flat_factor(e: tuple):
    """Decompose a multiplier chain over the field into (sig, h, alpha).

    sig collects the non-Hilbert decorations sorted in chain order, h is the
    Hilbert count (0 or 1 after folding) and alpha the derivative count.
    Returns None for anything else (products inside, projection markers).
    """
    ops = []
    node = e
    while node[0] == "ap":
        if node[1] == "pn":
            return None
        ops.append(node[1])
        node = node[2]
    if node != U:
        return None
    h = ops.count("h")
    alpha = ops.count("dx")
    sig = tuple(sorted((o for o in ops if o not in ("h", "dx")), key=chain_key))
    return (sig, h, alpha)


def _spine_has_pn(e: tuple) -> bool:
    node = e
    while node[0] == "ap":
        if node[1] == "pn":
            return True
        node = node[2]
    return False


def _chain_over_product(e: tuple):
    """Split e = chain(C, pr(...)) with C nonempty and projection-free."""
    ops = []
    node = e
    while node[0] == "ap":
        if node[1] == "pn":
            return None
        ops.append(node[1])
        node = node[2]
    if not ops or node[0] != "pr":
        return None
    return (tuple(ops), node)


def _contains_pn(e: tuple) -> bool:
    if e[0] == "u":
        return False
    if e[0] == "ap":
        return e[1] == "pn" or _contains_pn(e[2])
    return any(_contains_pn(c) for c in e[1])


# --- integrated rewrite rules ----------------------------------------------


def _find_projected_hilbert(e: tuple):
    """Locate ap(pn, pr(X, Y)) with flat X, Y and a Hilbert factor inside."""
    if e[0] == "u":
        return None
    if e[0] == "ap":
        if e[1] == "pn" and e[2][0] == "pr" and len(e[2][1]) == 2:
            fx = flat_factor(e[2][1][0])
            fy = flat_factor(e[2][1][1])
            if fx is not None and fy is not None and (fx[1] or fy[1]):
                return e
        inner = _find_projected_hilbert(e[2])
        return inner
    for c in e[1]:
        inner = _find_projected_hilbert(c)
        if inner is not None:
            return inner
    return None


def _strip_one_h(e: tuple) -> tuple:
    if e[0] == "ap" and e[1] == "h":
        return e[2]
    return ("ap", e[1], _strip_one_h(e[2]))


def _replace_node(e: tuple, old: tuple, new: tuple) -> tuple:
    if e == old:
        return new
    if e[0] == "ap":
        return ("ap", e[1], _replace_node(e[2], old, new))
    if e[0] == "pr":
        return ("pr", tuple(_replace_node(c, old, new) for c in e[1]))
    return e


def _rewrite_once(m: Mono, bandlimited: bool):
    """Apply one integrated rule; return replacement monomials or None."""
    kids = m.body[1]
    if bandlimited and len(kids) == 2:
        a, b = kids
        if _spine_has_pn(a) and flat_factor(b) is not None:
            return []
        if _spine_has_pn(b) and flat_factor(a) is not None:
            return []
    if bandlimited:
        target = _find_projected_hilbert(m.body)
        if target is not None:
            x, y = target[2][1]
            if flat_factor(x)[1]:
                inner = ("pr", tuple(sorted((_strip_one_h(x), y))))
            else:
                inner = ("pr", tuple(sorted((x, _strip_one_h(y)))))
            new_node = ("ap", "h", ("ap", "pn", inner))
            body = _replace_node(m.body, target, new_node)
            return _renorm(m, _F1, body)
    if len(kids) == 2:
        cands = []
        for i, c in enumerate(kids):
            split = _chain_over_product(c)
            if split is not None:
                cands.append((c, i, split))
        if cands:
            cands.sort(key=lambda t: t[0])
            src, i, (ops, core) = cands[-1]
            other = kids[1 - i]
            sign = _F1
            for o in ops:
                sign *= TRANSPOSE_SIGN[o]
            body = ("pr", core[1] + (chain(ops, other),))
            return _renorm(m, sign, body)
    return None


def _renorm(m: Mono, sign: Fraction, body: tuple):
    out = []
    for mult, b in normalize_expr(body):
        if b[0] != "pr":
            continue  # mean-zero under the integral
        out.append(mono(m.coeff * sign * mult, m.ipow, m.dpow, b))
    return out


# --- quadratic sector ------------------------------------------------------

# slot tables: multiplier values at a positive mode n, as polynomials in
# (n, x) with Gaussian rational coefficients (re, im); x is the depth symbol
# (coth(dn) - 1/(dn) deep, its delta-scaled form shallow)
_SLOT1 = {
    "dx": {(1, 0): (Fraction(0), Fraction(1))},
    "h": {(0, 0): (Fraction(0), Fraction(-1))},
    "g": {(0, 1): (Fraction(0), Fraction(-1))},
    "gt": {(0, 1): (Fraction(0), Fraction(-1))},
    "q": {(1, 1): (Fraction(1), Fraction(0)), (1, 0): (Fraction(-1), Fraction(0))},
    "qt": {(1, 0): (Fraction(0), Fraction(1, 3)), (0, 1): (Fraction(0), Fraction(-1))},
}

_DEEP_OPS = frozenset(("g", "q"))
_SHALLOW_OPS = frozenset(("gt", "qt"))


def _poly_mul(p, q):
    out: dict = {}
    for (a1, x1), (r1, i1) in p.items():
        for (a2, x2), (r2, i2) in q.items():
            key = (a1 + a2, x1 + x2)
            re, im = out.get(key, (Fraction(0), Fraction(0)))
            out[key] = (re + r1 * r2 - i1 * i2, im + r1 * i2 + i1 * r2)
    return out


def _chain_ops(e: tuple):
    ops = []
    node = e
    while node[0] == "ap":
        ops.append(node[1])
        node = node[2]
    if node != U:
        raise ValueError("not a flat chain")
    return ops


def weight_entries(body: tuple):
    """Exact Fourier weight of a flat two-factor body at positive modes.

    Returns a dict {(npow, xpow): Fraction} holding the real part of the
    weight; the pairing of a real field with itself only sees this part.
    """
    if body[0] != "pr" or len(body[1]) != 2:
        raise ValueError("weight requires a two-factor product")
    c1, c2 = body[1]
    ops1, ops2 = _chain_ops(c1), _chain_ops(c2)
    fam = set()
    for o in ops1 + ops2:
        if o in _DEEP_OPS:
            fam.add("deep")
        if o in _SHALLOW_OPS:
            fam.add("shallow")
    if len(fam) == 2:
        raise ValueError("mixed deep and shallow operators in one body")
    w = {(0, 0): (_F1, Fraction(0))}
    for o in ops1:
        w = _poly_mul(w, _SLOT1[o])
    for o in ops2:
        conj = {k: (r, -i) for k, (r, i) in _SLOT1[o].items()}
        w = _poly_mul(w, conj)
    return {k: r for k, (r, i) in w.items() if r != 0}


def canonical_quad_body(npow: int, xpow: int, family: str):
    """Canonical two-factor body with weight +-n^npow x^xpow; returns (body, sign)."""
    key = (npow, xpow, family)
    cached = _QUAD_BODY_CACHE.get(key)
    if cached is not None:
        return cached
    if xpow and family not in ("deep", "shallow"):
        raise ValueError("depth symbol requires a family")
    dec = "gt" if family == "shallow" else "g"
    ops = [dec] * xpow + ["dx"] * npow
    body = ("pr", (U, chain(ops, U)))
    w = weight_entries(body)
    sgn = w.get((npow, xpow), Fraction(0))
    if sgn == 0:
        body = ("pr", (U, chain(["h"] + ops, U)))
        w = weight_entries(body)
        sgn = w[(npow, xpow)]
    if sgn not in (1, -1):
        raise AssertionError(f"degenerate canonical weight {sgn}")
    _QUAD_BODY_CACHE[key] = (body, sgn)
    return (body, sgn)


def _family_of(body: tuple) -> str:
    deep = shallow = False
    for o in _chain_ops(body[1][0]) + _chain_ops(body[1][1]):
        if o in _DEEP_OPS:
            deep = True
        if o in _SHALLOW_OPS:
            shallow = True
    if deep and shallow:
        raise ValueError("mixed deep and shallow operators in one body")
    if deep:
        return "deep"
    if shallow:
        return "shallow"
    return "neutral"


def _emit_quadratic(m: Mono):
    fam = _family_of(m.body)
    out = []
    for (npow, xpow), cf in sorted(weight_entries(m.body).items()):
        body, sgn = canonical_quad_body(npow, xpow, fam)
        out.append(mono(m.coeff * cf / sgn, m.ipow, m.dpow, body))
    return out


# --- flat higher-degree sector ---------------------------------------------


def _state_of(kids):
    return tuple(sorted(flat_factor(c) for c in kids))


def _state_body(state):
    factors = []
    for sig, h, alpha in state:
        ops = ["h"] * h + sorted(sig, key=chain_key) + ["dx"] * alpha
        factors.append(chain(ops, U))
    return ("pr", tuple(sorted(factors)))


def _class_key(state):
    j = len(state)
    total = sum(a for _, _, a in state)
    if j == 3:
        sigs = tuple(sorted(s for s, _, _ in state))
        parity = sum(h for _, h, _ in state) % 2
        return (j, sigs, total, parity)
    return (j, tuple(sorted((s, h) for s, h, _ in state)), total)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _class_solution(key):
    cached = _IBP_CACHE.get(key)
    if cached is not None:
        return cached
    j, total = key[0], key[2]
    if j == 3:
        sigs = key[1]
        parity = key[3]
        hpats = [p for p in itertools.product((0, 1), repeat=3) if sum(p) % 2 == parity]
        labeled = [
            tuple((sigs[i], hp[i], al[i]) for i in range(3))
            for hp in hpats
            for al in _compositions(total, 3)
        ]
    else:
        contents = key[1]
        labeled = [
            tuple((contents[i][0], contents[i][1], al[i]) for i in range(j))
            for al in _compositions(total, j)
        ]
    states = sorted({tuple(sorted(lab)) for lab in labeled})
    index = {s: k for k, s in enumerate(states)}
    rows = []

    def add_row(pairs):
        row = [Fraction(0)] * len(states)
        for coef, lab in pairs:
            row[index[tuple(sorted(lab))]] += coef
        if any(row):
            rows.append(row)

    # integration by parts: the total derivative of any labeled product is zero
    if total >= 1:
        if j == 3:
            sigs = key[1]
            base = [
                tuple((sigs[i], hp[i]) for i in range(3))
                for hp in itertools.product((0, 1), repeat=3)
                if sum(hp) % 2 == key[3]
            ]
        else:
            base = [key[1]]
        for content in base:
            for beta in _compositions(total - 1, j):
                add_row(
                    [
                        (
                            _F1,
                            tuple(
                                (content[k][0], content[k][1], beta[k] + (k == i))
                                for k in range(j)
                            ),
                        )
                        for i in range(j)
                    ]
                )
    # trilinear Hilbert product identity, degree three only
    if j == 3:
        sigs = key[1]
        for al in _compositions(total, 3):
            slots = [(sigs[i], al[i]) for i in range(3)]
            if key[3] == 0:
                pairs = [
                    (_F1, tuple((s, 1 - (i == skip), a) for i, (s, a) in enumerate(slots)))
                    for skip in range(3)
                ]
                pairs.append((Fraction(-1), tuple((s, 0, a) for s, a in slots)))
            else:
                pairs = [(_F1, tuple((s, 1, a) for s, a in slots))]
                pairs.extend(
                    (Fraction(-1), tuple((s, (i == only), a) for i, (s, a) in enumerate(slots)))
                    for only in range(3)
                )
            add_row(pairs)

    # eliminate the worst states first: unbalanced derivative loads, then
    # Hilbert-heavy shapes; surviving states are the preferred basis
    def badness(s):
        alphas = tuple(sorted((a for _, _, a in s), reverse=True))
        return (alphas, sum(h for _, h, _ in s), s)

    order = sorted(range(len(states)), key=lambda k: badness(states[k]), reverse=True)
    pivots = _rref(rows, order)
    subs = {}
    for col, row in pivots.items():
        expr = []
        for c2 in range(len(states)):
            if c2 != col and row[c2] != 0:
                expr.append((-row[c2], states[c2]))
        subs[states[col]] = expr
    _IBP_CACHE[key] = subs
    return subs


def _rref(rows, order):
    """Gauss-Jordan over the rationals; returns {pivot column: reduced row}."""
    mat = [list(r) for r in rows]
    pivot_rows = {}
    used = set()
    for col in order:
        pick = None
        for r, row in enumerate(mat):
            if r not in used and row[col] != 0:
                pick = r
                break
        if pick is None:
            continue
        used.add(pick)
        inv = 1 / mat[pick][col]
        mat[pick] = [v * inv for v in mat[pick]]
        for r in range(len(mat)):
            if r != pick and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[pick])]
        pivot_rows[col] = pick
    return {col: mat[r] for col, r in pivot_rows.items()}


def _ibp_reduce(m: Mono):
    state = _state_of(m.body[1])
    subs = _class_solution(_class_key(state))
    if state not in subs:
        return [m]
    return [
        mono(m.coeff * coef, m.ipow, m.dpow, _state_body(s))
        for coef, s in subs[state]
    ]


# --- integrated pipeline ---------------------------------------------------


def canonicalize_integrated(d: Density, bandlimited: bool = False) -> Density:
    """Canonical form of a density regarded as an integrand over the circle."""
    d = canonicalize(d)
    queue = [m for m in d.monos if m.body[0] == "pr"]
    settled = []
    while queue:
        m = queue.pop()
        res = _rewrite_once(m, bandlimited)
        if res is None:
            settled.append(m)
        else:
            queue.extend(res)
    out = []
    for m in settled:
        kids = m.body[1]
        if all(flat_factor(c) is not None for c in kids):
            if len(kids) == 2:
                out.extend(_emit_quadratic(m))
            else:
                out.extend(_ibp_reduce(m))
        else:
            out.append(m)
    return Density(tuple(out), d.regime, d.declared_rank).merged()


def re_part(d: Density) -> Density:
    """Real part of an integrated density: drop the odd powers of i."""
    return Density(
        tuple(m for m in d.monos if m.ipow == 0), d.regime, d.declared_rank
    )
