"""Pfaffian ideals, derived systems, derived flags, and differential closures.

An ideal is represented by its one-form generators, kept in a deterministic
reduced echelon order.  All linear algebra over the coefficient function
field goes through `is_zero`-certified pivots, with numeric cross-checks at
the base point and at perturbed sample points so that a failure of the
regularity assumption surfaces as RegularityViolation instead of a silently
wrong flag.
"""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from .errors import (InconclusiveZeroTest, NoTermination, RegularityViolation)
from .expr import Expr, Point, Zeroness
from .forms import KForm, coordinate_form, exterior_derivative, wedge
from . import numlin

__all__ = [
    "PfaffianIdeal",
    "Flag",
    "Membership",
    "echelonize_forms",
    "ideal_membership",
    "derived_system",
    "derived_flag",
    "differential_closure",
    "pointwise_span",
    "augment_with_dt",
    "nullspace_function_field",
    "perturbed_points",
]


class Membership:
    MEMBER = "member"
    NON_MEMBER = "non-member"
    INCONCLUSIVE = "inconclusive"


def perturbed_points(p0: Point, count=8, seed=1, scale=Fraction(1, 4)):
    """Rational perturbations of the base point, for rank certification.
    Every coordinate moves (offsets are nonzero) so degenerate loci through
    p0 itself are left behind."""
    rng = random.Random(seed)
    pts = []
    for _ in range(count):
        vals = []
        for v in p0.values:
            q = rng.randint(1, 8)
            p = rng.randint(1, 3 * q) * rng.choice((-1, 1))
            vals.append(v + Fraction(p, q) * scale)
        pts.append(Point(p0.vars, vals))
    return pts


# ---------------------------------------------------------------------------
# linear algebra over the function field
# ---------------------------------------------------------------------------

def _row_weight(row):
    return sum(len(c.num) + len(c.den) for c in row)


def _pivot_in_column(rows, col, start, p0, require_p0):
    """Pick a pivot row for `col` among rows[start:].

    A pivot must be symbolically NonZero; when `require_p0` it must also not
    vanish numerically at the base point, which keeps the echelon basis
    regular at p0.  Among the eligible rows the sparsest one wins (simplest
    pivot entry, then simplest row, then lowest index), which keeps the
    eliminations from compounding expression sizes.  Inconclusive
    coefficients make the rank decision unsound and raise.
    """
    inconclusive = False
    best = None
    best_key = None
    for i in range(start, len(rows)):
        c = rows[i][col]
        z = c.zeroness()
        if z == Zeroness.ZERO:
            continue
        if z == Zeroness.INCONCLUSIVE:
            inconclusive = True
            continue
        if require_p0 and p0 is not None:
            try:
                val = abs(float(c.eval(p0)))
            except Exception:
                val = 0.0
            if val <= numlin.RANK_TOL:
                continue
        key = (len(c.num) + len(c.den), _row_weight(rows[i]), i)
        if best_key is None or key < best_key:
            best, best_key = i, key
    if best is not None:
        return best
    if inconclusive and not require_p0:
        raise InconclusiveZeroTest(
            "pivot decision blocked by an inconclusive zero test")
    return None


def _clear_denominators_row(row):
    """Multiply a vector by the least common multiple of its denominators."""
    from .expr import _p_gcd, _p_divexact, _p_mul, _p_const

    vars0 = row[0].vars
    lcm = _p_const(1)
    kernels = {}
    for c in row:
        if c.den == {(): Fraction(1)}:
            continue
        g = _p_gcd(lcm, c.den)
        q = _p_divexact(c.den, g)
        if q is None:
            q = c.den
        lcm = _p_mul(lcm, q)
        kernels.update(c.kernels)
    if lcm == _p_const(1):
        return list(row)
    mult = Expr._make(vars0, lcm, _p_const(1), kernels)
    return [c * mult for c in row]


def _row_primitive(row):
    """Divide a denominator-free row by the polynomial gcd of its entries."""
    from .expr import _p_gcd, _p_divexact, _p_const

    g = {}
    for c in row:
        if c.is_structural_zero():
            continue
        g = _p_gcd(g, c.num)
        if g == _p_const(1):
            return row
    if not g or g == _p_const(1):
        return row
    out = []
    for c in row:
        if c.is_structural_zero():
            out.append(c)
            continue
        q = _p_divexact(c.num, g)
        if q is None:
            return row  # shared factor was estimated too optimistically
        out.append(Expr._make(c.vars, q, c.den, c.kernels))
    return out


def _normalize_row(row):
    """Clear denominators, strip the common polynomial factor, and make the
    leading coefficient monic when it is rational."""
    row = _row_primitive(_clear_denominators_row(row))
    lead = None
    for c in row:
        if not c.is_structural_zero():
            lead = c
            break
    if lead is None:
        return row
    r = lead.as_rational()
    if r is not None and r != 0:
        inv = Expr.rational(lead.vars, Fraction(1, 1) / r)
        row = [c * inv for c in row]
    return row


def _exact_div(e, d):
    """Divide the denominator-free Expr e by the denominator-free Expr d,
    exactly when possible (Bareiss divisions always are)."""
    from .expr import _p_divexact

    if e.is_structural_zero():
        return e
    q = _p_divexact(e.num, d.num)
    if q is not None:
        return Expr._make(e.vars, q, e.den, {**e.kernels, **d.kernels})
    return e / d


def rref_function_field(rows, p0=None):
    """Echelon form over the fraction field of Expr.

    Fraction-free (Bareiss) forward elimination with two pivot passes:
    columns are pivoted left to right using only pivots that do not vanish
    at the base point, then the remaining rows are pivoted symbolically
    without the p0 requirement, so the basis stays pointwise regular at p0
    whenever the row module is.  Returns (rows, pivot_columns) in pivot
    assignment order: every row has zeros at all pivot columns assigned
    before it, which is what the back substitutions in
    nullspace_function_field and _complement_substitution rely on.
    """
    rows = [_clear_denominators_row(list(r)) for r in rows]
    if not rows:
        return [], []
    ncols = len(rows[0])
    r = 0
    pivots = []
    prev = None  # previous Bareiss pivot

    def eliminate_below(r, col):
        nonlocal prev
        pc = rows[r][col]
        for i in range(r + 1, len(rows)):
            ci = rows[i][col]
            if ci.is_structural_zero():
                new = [pc * a for a in rows[i]]
            else:
                new = [pc * a - ci * b for a, b in zip(rows[i], rows[r])]
            if prev is not None:
                new = [_exact_div(x, prev) for x in new]
            rows[i] = new
        prev = pc

    deferred = []
    for col in range(ncols):
        piv = _pivot_in_column(rows, col, r, p0, require_p0=True)
        if piv is None:
            deferred.append(col)
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        eliminate_below(r, col)
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    np1 = r  # pivots so far do not vanish at p0
    if r < len(rows):
        for col in deferred:
            piv = _pivot_in_column(rows, col, r, p0, require_p0=False)
            if piv is None:
                continue
            rows[r], rows[piv] = rows[piv], rows[r]
            eliminate_below(r, col)
            pivots.append(col)
            r += 1
            if r == len(rows):
                break
    # leftover rows must be structurally zero; NonZero leftovers mean the
    # zero tests could not support a pivot anywhere in them
    for i in range(r, len(rows)):
        for c in rows[i]:
            if c.zeroness() == Zeroness.INCONCLUSIVE:
                raise InconclusiveZeroTest(
                    "row elimination left an undecidable residual")
            if c.zeroness() == Zeroness.NONZERO:
                raise InconclusiveZeroTest(
                    "no usable pivot for a symbolically nonzero row")
    # Jordan completion among the p0-regular pivots keeps the basis clean
    # (and the generators small); pass-2 pivots may vanish at p0, so rows
    # are never divided by them
    for idx in range(np1 - 2, -1, -1):
        row = rows[idx]
        for jdx in range(np1 - 1, idx, -1):
            pc = pivots[jdx]
            if row[pc].is_structural_zero():
                continue
            factor = row[pc] / rows[jdx][pc]
            row = [a - factor * b for a, b in zip(row, rows[jdx])]
        rows[idx] = _normalize_row(row)
    out = [_normalize_row(rows[k]) for k in range(r)]
    return out, pivots


def nullspace_function_field(matrix, p0=None):
    """Basis of {x : M x = 0} over the fraction field, denominators cleared.

    Deterministic: free columns keep their natural order; the k-th basis
    vector has a 1 in the k-th free column.  Works for staircase (not fully
    reduced) echelon output via bottom-up back substitution.
    """
    if not matrix:
        return []
    ncols = len(matrix[0])
    vars0 = matrix[0][0].vars
    reduced, pivots = rref_function_field(matrix, p0)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Expr.zero(vars0) for _ in range(ncols)]
        vec[fc] = Expr.one(vars0)
        # each row reads sum_c row[c] * x_c = 0; a row has zeros at pivot
        # columns assigned before it, so reverse assignment order resolves
        # every referenced pivot value first
        for row, pc in reversed(list(zip(reduced, pivots))):
            s = Expr.zero(vars0)
            for c in range(ncols):
                if c == pc:
                    continue
                if not row[c].is_structural_zero() and not vec[c].is_structural_zero():
                    s = s + row[c] * vec[c]
            if not s.is_structural_zero():
                vec[pc] = -(s / row[pc])
        basis.append(_row_primitive(_clear_denominators_row(vec)))
    return basis


def reduce_against_rows(target, reduced_rows, pivots):
    """Remainder of `target` after elimination against echelon rows."""
    rem = list(target)
    for row, pc in zip(reduced_rows, pivots):
        c = rem[pc]
        if c.is_structural_zero():
            continue
        factor = c / row[pc]
        rem = [a - factor * b for a, b in zip(rem, row)]
    return rem


# ---------------------------------------------------------------------------
# ideals
# ---------------------------------------------------------------------------

def _forms_to_rows(forms):
    vars0 = forms[0].vars
    rows = []
    for f in forms:
        if f.degree != 1:
            raise ValueError("generators must be one-forms")
        rows.append([f.coefficient((i,)) for i in range(vars0.total)])
    return rows


def _rows_to_forms(rows, vars0):
    out = []
    for row in rows:
        terms = {(i,): c for i, c in enumerate(row) if not c.is_structural_zero()}
        out.append(KForm(vars0, 1, terms))
    return out


def echelonize_forms(forms, p0=None):
    if not forms:
        return []
    rows, _ = rref_function_field(_forms_to_rows(forms), p0)
    return _rows_to_forms(rows, forms[0].vars)


class PfaffianIdeal:
    """Finitely generated ideal of forms, represented by one-form generators.

    Generators are echelon-normalized and pointwise independent at the base
    point; both the supplied generators and the normalized basis are
    validated on construction.  Internal callers whose rows carry artifact
    scalings (cleared nullspace vectors) skip the raw check via
    `_validate_raw=False`; the normalized basis is still checked.
    """

    def __init__(self, generators, p0: Point, provenance="system",
                 _normalized=False, _validate_raw=True):
        generators = list(generators)
        if generators and not _normalized and _validate_raw:
            raw = np.array([g.at(p0) for g in generators])
            if numlin.rank(raw) != len(generators):
                raise RegularityViolation(
                    "supplied generators are pointwise dependent at the "
                    "base point")
        if generators and not _normalized:
            generators = echelonize_forms(generators, p0)
        self.generators = list(generators)
        self.p0 = p0
        self.provenance = provenance
        self.vars = p0.vars
        self._reduced_rows = None
        self._pivots = None
        if self.generators:
            m = np.array([g.at(p0) for g in self.generators])
            if numlin.rank(m) != len(self.generators):
                raise RegularityViolation(
                    "generators are pointwise dependent at the base point")

    def __len__(self):
        return len(self.generators)

    def rows(self):
        if self._reduced_rows is None:
            if self.generators:
                self._reduced_rows, self._pivots = rref_function_field(
                    _forms_to_rows(self.generators), self.p0)
            else:
                self._reduced_rows, self._pivots = [], []
        return self._reduced_rows, self._pivots

    def at(self, p: Point):
        if not self.generators:
            return np.zeros((0, self.vars.total))
        return np.array([g.at(p) for g in self.generators])

    def contains_form(self, a: KForm):
        return ideal_membership(a, self)

    def same_span(self, other: "PfaffianIdeal"):
        """Symbolic two-way membership plus equal generator count."""
        if len(self) != len(other):
            return False
        for g in self.generators:
            if ideal_membership(g, other) != Membership.MEMBER:
                return False
        for g in other.generators:
            if ideal_membership(g, self) != Membership.MEMBER:
                return False
        return True

    def __repr__(self):
        gens = ", ".join(repr(g) for g in self.generators) or "0"
        return f"<{self.provenance} ideal ({len(self.generators)} gens): {gens}>"


def augment_with_dt(ideal: PfaffianIdeal, provenance=None) -> PfaffianIdeal:
    dt = coordinate_form(ideal.vars, 0)
    return PfaffianIdeal(list(ideal.generators) + [dt], ideal.p0,
                         provenance or f"{ideal.provenance}+dt")


def ideal_membership(a: KForm, ideal: PfaffianIdeal) -> str:
    """Is the one-form `a` a function-coefficient combination of generators?"""
    if a.degree != 1:
        raise ValueError("membership is defined for one-forms")
    if a.is_structural_zero():
        return Membership.MEMBER
    if not ideal.generators:
        return Membership.NON_MEMBER
    rows, pivots = ideal.rows()
    target = [a.coefficient((i,)) for i in range(ideal.vars.total)]
    rem = reduce_against_rows(target, rows, pivots)
    verdict = Membership.MEMBER
    for c in rem:
        z = c.zeroness()
        if z == Zeroness.NONZERO:
            return Membership.NON_MEMBER
        if z == Zeroness.INCONCLUSIVE:
            verdict = Membership.INCONCLUSIVE
    return verdict


def _factor_product(vars0, factors):
    out = Expr.one(vars0)
    for e, mult in factors.values():
        for _ in range(mult):
            out = out * e
    return out


def _factor_sum(a, b):
    out = {k: (e, m) for k, (e, m) in a.items()}
    for k, (e, m) in b.items():
        if k in out:
            out[k] = (e, out[k][1] + m)
        else:
            out[k] = (e, m)
    return out


def _factor_max(a, b):
    out = {k: (e, m) for k, (e, m) in a.items()}
    for k, (e, m) in b.items():
        if k in out:
            out[k] = (e, max(out[k][1], m))
        else:
            out[k] = (e, m)
    return out


def _factor_diff(a, b):
    out = {}
    for k, (e, m) in a.items():
        mm = m - b.get(k, (None, 0))[1]
        if mm > 0:
            out[k] = (e, mm)
    return out


def _complement_substitution(ideal: PfaffianIdeal):
    """For each pivot coordinate of the echelon generators, a fraction-free
    replacement dv_pivot === form/den mod I with the numerator form supported
    on complement coordinates only.  Denominators are kept as factor
    multisets so later products never need polynomial division or gcd.
    Pivots are solved in reverse assignment order."""
    rows, pivots = ideal.rows()
    vars0 = ideal.vars
    subs = {}  # pivot col -> (KForm numerator, factor multiset)
    for row, pc in reversed(list(zip(rows, pivots))):
        cp = row[pc]
        # common denominator over the resolved pivots this row references
        common = {}
        for c in range(vars0.total):
            if c == pc or row[c].is_structural_zero() or c not in subs:
                continue
            common = _factor_max(common, subs[c][1])
        q_common = _factor_product(vars0, common)
        acc = KForm.zero(vars0, 1)
        for c in range(vars0.total):
            if c == pc or row[c].is_structural_zero():
                continue
            if c in subs:
                form_c, den_c = subs[c]
                scale = _factor_product(vars0, _factor_diff(common, den_c))
                acc = acc + form_c.scale(row[c] * scale)
            else:
                acc = acc + coordinate_form(vars0, c).scale(row[c] * q_common)
        den = _factor_sum({cp.key(): (cp, 1)} if cp.as_rational() != 1 else {},
                          common)
        subs[pc] = (acc.scale(Expr.rational(vars0, -1)), den)
    return subs, pivots


def _reduce_pieces(w: KForm, subs):
    """Substitution terms of a 2-form and the denominator multiset they
    need; assembled later against a shared denominator."""
    vars0 = w.vars
    empty = {}
    pieces = []
    need = {}
    for (i, j), c in w.terms.items():
        fi, di = subs.get(i, (None, empty))
        fj, dj = subs.get(j, (None, empty))
        if fi is None:
            fi = coordinate_form(vars0, i)
        if fj is None:
            fj = coordinate_form(vars0, j)
        den = _factor_sum(di, dj)
        pieces.append((c, fi, fj, den))
        need = _factor_max(need, den)
    return pieces, need


def _assemble_pieces(vars0, pieces, need):
    out = KForm.zero(vars0, 2)
    for c, fi, fj, den in pieces:
        scale = _factor_product(vars0, _factor_diff(need, den))
        out = out + wedge(fi, fj).scale(c * scale)
    return out


def _reduce_two_form(w: KForm, subs):
    """Rewrite a 2-form modulo the algebraic ideal, scaled by a nonzero
    function (the common denominator of the substitutions it touches)."""
    pieces, need = _reduce_pieces(w, subs)
    return _assemble_pieces(w.vars, pieces, need)


def derived_system(ideal: PfaffianIdeal) -> PfaffianIdeal:
    """I' = {w in I : dw in I}.

    Express each d(generator) modulo the algebraic ideal in the complement
    2-form basis; the function-coefficient nullspace of the resulting linear
    system gives the generators of the derived system.
    """
    vars0 = ideal.vars
    if not ideal.generators:
        return PfaffianIdeal([], ideal.p0, "derived-from", _normalized=True)
    subs, pivots = _complement_substitution(ideal)
    # one shared denominator scale across all generators so the nullspace of
    # the scaled conditions is the nullspace of the true ones
    all_pieces = []
    need = {}
    for g in ideal.generators:
        pieces, n = _reduce_pieces(exterior_derivative(g), subs)
        all_pieces.append(pieces)
        need = _factor_max(need, n)
    reduced = []
    pair_index = {}
    for pieces in all_pieces:
        r = _assemble_pieces(vars0, pieces, need)
        reduced.append(r)
        for idx in r.terms:
            pair_index.setdefault(idx, len(pair_index))
    n_gens = len(ideal.generators)
    if not pair_index:
        # every d(generator) already reduces to zero: differential ideal
        return PfaffianIdeal(list(ideal.generators), ideal.p0,
                             "derived-from", _normalized=True)
    matrix = [[Expr.zero(vars0) for _ in range(n_gens)]
              for _ in range(len(pair_index))]
    for col, r in enumerate(reduced):
        for idx, c in r.terms.items():
            matrix[pair_index[idx]][col] = c
    # rows are linear conditions; scaling a row is free
    matrix = [_row_primitive(_clear_denominators_row(row)) for row in matrix]
    pts = [ideal.p0] + perturbed_points(ideal.p0)
    exact_ranks = _exact_ranks(matrix, pts)
    if any(r == n_gens for r in exact_ranks):
        # the conditions have full column rank at an exactly evaluated
        # rational point, hence generically: the derived system is zero
        return PfaffianIdeal([], ideal.p0, "derived-from", _normalized=True)
    basis = nullspace_function_field(matrix, ideal.p0)
    sym_rank = n_gens - len(basis)
    if exact_ranks:
        # exact point ranks never exceed the generic rank; catching the
        # converse guards the symbolic elimination itself
        if max(exact_ranks) > sym_rank:
            raise RegularityViolation(
                "exact rank exceeds the generic rank of the derived-step "
                "conditions")
        if len(exact_ranks) > 1 and all(r < sym_rank for r in exact_ranks[1:]):
            raise RegularityViolation(
                f"generic rank {sym_rank} of the derived-step conditions "
                "is not attained at any sample point")
    else:
        # kernel-bearing coefficients: certify with the float policy; the
        # coefficient matrix may legitimately drop rank at p0 itself, so
        # only perturbed points are consulted
        _certify_rank(matrix, ideal.p0, include_base=False)
    new_gens = []
    for vec in basis:
        g = KForm.zero(vars0, 1)
        for lam, gen in zip(vec, ideal.generators):
            if not lam.is_structural_zero():
                g = g + gen.scale(lam)
        if not g.is_structural_zero():
            new_gens.append(g)
    out = PfaffianIdeal(new_gens, ideal.p0, "derived-from",
                        _validate_raw=False)
    for g in out.generators:
        if ideal_membership(g, ideal) == Membership.NON_MEMBER:
            raise RegularityViolation(
                "derived-system generator escaped the parent ideal")
    return out


def _exact_ranks(matrix, points):
    """Exact Fraction ranks of the matrix at the given points; points where
    some entry does not evaluate to a rational are skipped."""
    ranks = []
    for p in points:
        rows = []
        ok = True
        for row in matrix:
            vals = []
            for c in row:
                if c.has_kernels():
                    ok = False
                    break
                try:
                    v = c.eval(p)
                except Exception:
                    ok = False
                    break
                if not isinstance(v, Fraction):
                    ok = False
                    break
                vals.append(v)
            if not ok:
                break
            rows.append(vals)
        if not ok:
            continue
        ranks.append(_fraction_rank(rows))
    return ranks


def _fraction_rank(rows):
    rows = [list(r) for r in rows]
    if not rows:
        return 0
    ncols = len(rows[0])
    rank = 0
    for col in range(ncols):
        piv = None
        for i in range(rank, len(rows)):
            if rows[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pr = rows[rank]
        pv = pr[col]
        for i in range(rank + 1, len(rows)):
            ci = rows[i][col]
            if ci:
                f = ci / pv
                rows[i] = [a - f * b for a, b in zip(rows[i], pr)]
        rank += 1
        if rank == len(rows):
            break
    return rank


def _certify_rank(matrix, p0, n_points=8, seed=1, include_base=True):
    """Certify the symbolic generic rank numerically.

    A numeric rank above the symbolic one anywhere means the elimination
    lost rows and is a hard failure.  Numeric rank below the symbolic one is
    expected on the (measure-zero) degenerate locus, so it only counts as a
    regularity violation when required at p0 or when no sample point attains
    the generic rank.
    """
    rows, _ = rref_function_field(matrix, p0)
    sym_rank = len(rows)
    pts = ([p0] if include_base else []) + perturbed_points(
        p0, count=n_points, seed=seed)
    attained = 0
    evaluable = 0
    for k, p in enumerate(pts):
        num = np.zeros((len(matrix), len(matrix[0])))
        ok = True
        for i, row in enumerate(matrix):
            for j, c in enumerate(row):
                try:
                    num[i, j] = float(c.eval(p))
                except Exception:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        evaluable += 1
        r = numlin.rank(num)
        if r > sym_rank:
            raise RegularityViolation(
                f"numeric rank {r} exceeds generic rank {sym_rank}")
        if r == sym_rank:
            attained += 1
        elif include_base and k == 0:
            raise RegularityViolation(
                f"coefficient rank {r} at p0 differs from generic rank "
                f"{sym_rank}")
    if evaluable and not attained:
        raise RegularityViolation(
            f"generic rank {sym_rank} not attained at any sample point")
    return sym_rank


class Flag:
    """Descending chain of ideals from I^(0) to the terminal differential
    ideal; `terminal_verified` records that one more derived step reproduced
    the terminal span."""

    def __init__(self, entries, terminal_verified=True):
        self.entries = list(entries)
        self.terminal_verified = terminal_verified

    @property
    def terminal_index(self):
        return len(self.entries) - 1

    def entry(self, k):
        """I^(k), with entries frozen past the terminal index."""
        if k < 0:
            raise ValueError("flag index must be >= 0")
        return self.entries[min(k, self.terminal_index)]

    def generator_counts(self):
        return tuple(len(e) for e in self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def derived_flag(ideal: PfaffianIdeal, max_steps=None) -> Flag:
    if max_steps is None:
        max_steps = ideal.vars.total + 1
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    entries = [ideal]
    for _ in range(max_steps):
        nxt = derived_system(entries[-1])
        if len(nxt) == len(entries[-1]):
            if not nxt.same_span(entries[-1]):
                raise RegularityViolation(
                    "derived step preserved the generator count but moved "
                    "the span")
            return Flag(entries)
        if len(nxt) > len(entries[-1]):
            raise RegularityViolation("derived system gained generators")
        entries.append(nxt)
        if len(nxt) == 0:
            return Flag(entries)
    raise NoTermination(
        f"derived flag did not stabilize within {max_steps} steps")


def differential_closure(ideal: PfaffianIdeal) -> PfaffianIdeal:
    """Terminal ideal of the derived flag; the largest differential ideal
    inside `ideal` under the regularity assumption."""
    flag = derived_flag(ideal)
    out = flag.entries[-1]
    return PfaffianIdeal(list(out.generators), out.p0,
                         f"closure-of {ideal.provenance}", _normalized=True)


def two_form_membership(w: KForm, ideal: PfaffianIdeal) -> str:
    """Is the 2-form w in the algebraic ideal of the generators, i.e. a sum
    of wedges alpha_i ^ gamma_i?"""
    if w.degree != 2:
        raise ValueError("expected a 2-form")
    if w.is_structural_zero():
        return Membership.MEMBER
    if not ideal.generators:
        return Membership.NON_MEMBER
    subs, _ = _complement_substitution(ideal)
    r = _reduce_two_form(w, subs)
    verdict = Membership.MEMBER
    for c in r.terms.values():
        z = c.zeroness()
        if z == Zeroness.NONZERO:
            return Membership.NON_MEMBER
        if z == Zeroness.INCONCLUSIVE:
            verdict = Membership.INCONCLUSIVE
    return verdict


def pointwise_span(ideal: PfaffianIdeal, p: Point):
    """Row basis of the generators evaluated at p (row-reduced, deterministic
    pivot order)."""
    return numlin.row_reduce(ideal.at(p))
