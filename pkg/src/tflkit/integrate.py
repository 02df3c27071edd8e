"""Exact first integrals for integrable Pfaffian systems and the adaptation
machinery that makes their leading components vanish on the lifted target
manifold.

Closed-form quadrature is not decidable in the expression class, so the
integrator is deliberately layered: closed generators are integrated
directly, closed polynomial-coefficient combinations of generators are found
by a finite ansatz, single generators are repaired with an exponential
integrating factor, and user hints fill whatever remains.  A failure
surfaces the residual directions so the caller can supply hints and re-run.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np

from .errors import (AdaptationFailed, HintRejected, IntegrationFailed,
                     SubsumptionFailed)
from .expr import Expr, Point, Zeroness
from .forms import (KForm, coordinate_field, contract, d_of_function,
                    exterior_derivative, wedge)
from .lift import ControlSystem, LiftedSystem
from .pfaffian import (Membership, PfaffianIdeal, ideal_membership,
                       reduce_against_rows, two_form_membership,
                       _clear_denominators_row, _row_primitive)
from . import numlin

__all__ = [
    "SmoothMapAdapted",
    "antiderivative",
    "poincare_potential",
    "frobenius_integrate",
    "adapt_to_L",
    "subsume",
    "adapt_subordinate",
    "restricted_rank_on_L",
]


@dataclass
class SmoothMapAdapted:
    """Components whose differentials span a differential closure, with the
    leading `vanish_count` components vanishing on L (t always among them)."""

    components: list
    vanish_count: int
    k: int
    provenance: list = dfield(default_factory=list)

    def __post_init__(self):
        if not self.provenance:
            self.provenance = ["integrated"] * len(self.components)

    def differentials(self):
        return [d_of_function(c) for c in self.components]

    def rank_at(self, p: Point):
        rows = np.array([d.at(p) for d in self.differentials()])
        return numlin.rank(rows)

    def vanishing(self):
        return self.components[:self.vanish_count]

    def non_vanishing(self):
        return self.components[self.vanish_count:]


# ---------------------------------------------------------------------------
# symbolic antiderivatives within the expression class
# ---------------------------------------------------------------------------

def _kernel_linear_in(arg: Expr, v: int):
    """If arg = q*v + r with rational q != 0 and r independent of v, return
    (q, r)."""
    d = arg.diff(v)
    q = d.as_rational()
    if q is None or q == 0:
        return None
    r = arg - Expr.var_index(arg.vars, v) * q
    if r.depends_on(v):
        return None
    return q, r


def _int_power_kernel(vars0, v, a, kind, arg, q):
    """Antiderivative of v^a * kernel(arg) with arg = q*v + r, by parts."""
    vexp = Expr.var_index(vars0, v)
    K = Expr.kernel(kind, arg)
    if kind == "exp":
        # integral of v^a e^(qv+r) dv
        #   = e^(qv+r) * sum_j (-1)^j (a!/(a-j)!) v^(a-j) / q^(j+1)
        total = Expr.zero(vars0)
        ratio = Fraction(1)
        for j in range(a + 1):
            c = ((-1) ** j) * ratio / (q ** (j + 1))
            total = total + Expr.rational(vars0, c) * vexp ** (a - j)
            if a - j > 0:
                ratio *= (a - j)
        return K * total
    if a == 0:
        if kind == "sin":
            return -(Expr.kernel("cos", arg) / q)
        if kind == "cos":
            return Expr.kernel("sin", arg) / q
        return None  # ln has no antiderivative in the class
    if kind == "sin":
        head = -(vexp ** a) * Expr.kernel("cos", arg) / q
        tail = _int_power_kernel(vars0, v, a - 1, "cos", arg, q)
        return None if tail is None else head + tail * Fraction(a, 1) / q
    if kind == "cos":
        head = (vexp ** a) * Expr.kernel("sin", arg) / q
        tail = _int_power_kernel(vars0, v, a - 1, "sin", arg, q)
        return None if tail is None else head - tail * Fraction(a, 1) / q
    return None


def antiderivative(e: Expr, v) -> Expr | None:
    """An F with dF/dv = e, staying inside the expression class, or None."""
    vars0 = e.vars
    if isinstance(v, str):
        v = vars0.index(v)
    if not e.depends_on(v):
        return e * Expr.var_index(vars0, v)
    num, den = e.num, e.den
    den_expr = Expr._make(vars0, den, {(): Fraction(1)}, e.kernels)
    den_dep = den_expr.depends_on(v)
    v_atom = (0, v)
    out = Expr.zero(vars0)
    if den_dep:
        # only simple poles: den = c * v^k with everything else v-free
        uni = {}
        rest_den = {}
        for mono, c in den.items():
            k = 0
            rest = []
            for atom, ex in mono:
                if atom == v_atom:
                    k = ex
                else:
                    rest.append((atom, ex))
            uni.setdefault(k, {})[tuple(rest)] = c
        if len(uni) != 1:
            return None
        k = next(iter(uni))
        rest_den = uni[k]
        rest_expr = Expr._make(vars0, rest_den, {(): Fraction(1)}, e.kernels)
        if rest_expr.depends_on(v):
            return None
        for mono, c in num.items():
            a = 0
            others = []
            for atom, ex in mono:
                if atom == v_atom:
                    a = ex
                else:
                    others.append((atom, ex))
            rest = Expr._make(vars0, {tuple(others): c}, {(): Fraction(1)},
                              e.kernels) / rest_expr
            if rest.depends_on(v):
                return None
            p = a - k
            vexp = Expr.var_index(vars0, v)
            if p == -1:
                out = out + rest * Expr.kernel("ln", vexp)
            else:
                out = out + rest * vexp ** (p + 1) / (p + 1)
        return out
    for mono, c in num.items():
        a = 0
        kernel_factors = []
        others = []
        for atom, ex in mono:
            if atom == v_atom:
                a = ex
            elif atom[0] == 1 and e.kernels[atom].depends_on(v):
                kernel_factors.append((atom, ex))
            else:
                others.append((atom, ex))
        rest = Expr._make(vars0, {tuple(others): c}, {(): Fraction(1)},
                          e.kernels) / den_expr
        if not kernel_factors:
            vexp = Expr.var_index(vars0, v)
            out = out + rest * vexp ** (a + 1) / (a + 1)
            continue
        if len(kernel_factors) > 1 or kernel_factors[0][1] != 1:
            return None
        atom, _ = kernel_factors[0]
        kind, arg = atom[1], e.kernels[atom]
        lin = _kernel_linear_in(arg, v)
        if lin is None:
            return None
        q, _r = lin
        piece = _int_power_kernel(vars0, v, a, kind, arg, q)
        if piece is None:
            return None
        out = out + rest * piece
    return out


def poincare_potential(omega: KForm) -> Expr | None:
    """A potential for a closed one-form, by sequential antiderivatives."""
    if omega.degree != 1:
        raise ValueError("potential of a one-form expected")
    vars0 = omega.vars
    F = Expr.zero(vars0)
    residual = omega
    for v in range(vars0.total):
        c = residual.coefficient((v,))
        if c.is_structural_zero():
            continue
        E = antiderivative(c, v)
        if E is None:
            return None
        F = F + E
        residual = omega - d_of_function(F)
    if residual.is_structural_zero():
        return F
    return None


def _anchor(e: Expr, p0: Point, bindings):
    """Subtract the value at p0 so components vanish there."""
    c = e.substitute(bindings)
    return e - c


def _p0_bindings(vars0, p0: Point):
    out = {}
    for i, v in enumerate(p0.values):
        if isinstance(v, Fraction):
            out[i] = Expr.rational(vars0, v)
        else:
            out[i] = Expr.rational(vars0, Fraction(v).limit_denominator(10 ** 12))
    return out


# ---------------------------------------------------------------------------
# rational linear algebra for the ansatz layers
# ---------------------------------------------------------------------------

def rational_nullspace(rows, ncols):
    """Nullspace basis of an exact rational matrix, deterministic: the k-th
    vector has a 1 in the k-th free column."""
    rows = [list(r) for r in rows if any(x != 0 for x in r)]
    pivots = []
    r = 0
    for col in range(ncols):
        piv = None
        for i in range(r, len(rows)):
            if rows[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pr = rows[r]
        pv = pr[col]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col] / pv
                rows[i] = [a - f * b for a, b in zip(rows[i], pr)]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for row, pc in zip(rows[:r], pivots):
            if row[fc]:
                vec[pc] = -row[fc] / row[pc]
        basis.append(vec)
    return basis


def _collect_linear_system(exprs):
    """Rows of rational coefficients for a list of polynomial-in-atoms
    expressions: one column per expression, one row per monomial seen."""
    index = {}
    cols = []
    for e in exprs:
        if e.den != {(): Fraction(1)}:
            raise ValueError("linear collection expects cleared denominators")
        col = {}
        for mono, c in e.num.items():
            key = mono
            if key not in index:
                index[key] = len(index)
            col[index[key]] = c
        cols.append(col)
    rows = [[Fraction(0)] * len(cols) for _ in range(len(index))]
    for j, col in enumerate(cols):
        for i, c in col.items():
            rows[i][j] = c
    return rows


# ---------------------------------------------------------------------------
# the integrator
# ---------------------------------------------------------------------------

def _variable_monomials(vars0, degree):
    """1, v_i, v_i v_j, ... up to total degree `degree`."""
    out = [Expr.one(vars0)]
    idxs = list(range(vars0.total))
    for d in range(1, degree + 1):
        for combo in combinations_with_replacement(idxs, d):
            m = Expr.one(vars0)
            for i in combo:
                m = m * Expr.var_index(vars0, i)
            out.append(m)
    return out


def _closed_combinations(ideal: PfaffianIdeal, degree):
    """Closed combinations with polynomial coefficients, then with the
    generators' pivot product as a shared denominator (catching rational
    coefficient functions like 1/x)."""
    out = _closed_combinations_q(ideal, degree, plain=True)
    out += _closed_combinations_q(ideal, degree, plain=False)
    return out


def _closed_combinations_q(ideal: PfaffianIdeal, degree, plain):
    """Closed one-forms (1/Q) sum mu_i gamma_i with polynomial mu of total
    degree <= degree, where Q is 1 (plain) or the product of the generators'
    non-rational pivot coefficients.  d((1/Q) sigma) = 0 is the polynomial
    condition Q d(sigma) - dQ ^ sigma = 0, linear in the mu coefficients."""
    vars0 = ideal.vars
    gens = ideal.generators
    Q = Expr.one(vars0)
    if not plain:
        seen = set()
        for g in gens:
            for v in range(vars0.total):
                c = g.coefficient((v,))
                if c.is_structural_zero():
                    continue
                if c.as_rational() is None and c.key() not in seen:
                    seen.add(c.key())
                    Q = Q * c
                break
    dQ = d_of_function(Q)
    q_is_one = Q.as_rational() == 1
    if not plain and q_is_one:
        return []  # identical to the plain pass
    monos = _variable_monomials(vars0, degree)
    columns = []  # (i, mono)
    two_forms = []
    for i, g in enumerate(gens):
        dg = exterior_derivative(g)
        for mu in monos:
            sigma_term = g.scale(mu)
            w = (dg.scale(mu) + wedge(d_of_function(mu), g))
            if not q_is_one:
                w = w.scale(Q) - wedge(dQ, sigma_term)
            columns.append((i, mu))
            two_forms.append(w)
    # linear conditions: every coefficient of every 2-form basis pair is 0;
    # everything above is denominator-free
    index = {}
    cols = []
    for w in two_forms:
        col = {}
        for pair, c in w.terms.items():
            if c.den != {(): Fraction(1)}:
                raise ValueError("closed-combination ansatz expects "
                                 "denominator-free generators")
            for mono, q in c.num.items():
                key = (pair, mono)
                if key not in index:
                    index[key] = len(index)
                col[index[key]] = q
        cols.append(col)
    rows = [[Fraction(0)] * len(cols) for _ in range(len(index))]
    for j, col in enumerate(cols):
        for i, q in col.items():
            rows[i][j] = q
    basis = rational_nullspace(rows, len(cols))
    out = []
    for vec in basis:
        form = KForm.zero(vars0, 1)
        for coeff, (i, mu) in zip(vec, columns):
            if coeff:
                form = form + gens[i].scale(mu * coeff)
        if form.is_structural_zero():
            continue
        if not q_is_one:
            form = form.scale(Expr.one(vars0) / Q)
        if exterior_derivative(form).is_structural_zero():
            out.append(form)
    return out


def _integrating_factor_candidate(gen: KForm):
    """exp-integrating-factor repair for a single generator: find theta with
    d(gen) = gen ^ theta, a potential T of theta, and return exp(T)*gen."""
    vars0 = gen.vars
    dg = exterior_derivative(gen)
    if dg.is_structural_zero():
        return gen
    pivot = None
    for v in range(vars0.total):
        c = gen.coefficient((v,))
        if not c.is_structural_zero():
            pivot = (v, c)
            break
    if pivot is None:
        return None
    v, c = pivot
    theta = contract(coordinate_field(vars0, v), dg).scale(Expr.one(vars0) / c)
    if not (dg - wedge(gen, theta)).is_structural_zero():
        return None
    if not exterior_derivative(theta).is_structural_zero():
        return None
    T = poincare_potential(theta)
    if T is None:
        return None
    mu = Expr.kernel("exp", T)
    candidate = gen.scale(mu)
    if not exterior_derivative(candidate).is_structural_zero():
        return None
    return candidate


def frobenius_integrate(ideal: PfaffianIdeal, ls: LiftedSystem = None,
                        hints=(), k=None, combo_degree=1,
                        warnings=None) -> SmoothMapAdapted:
    """Map components whose differentials span the (differential) ideal.

    Layers: closed generators, closed polynomial combinations, integrating
    factors, then verified hints; fails with the residual directions when
    the span cannot be completed.
    """
    vars0 = ideal.vars
    p0 = ideal.p0
    warnings = warnings if warnings is not None else []
    for g in ideal.generators:
        m = two_form_membership(exterior_derivative(g), ideal)
        if m == Membership.NON_MEMBER:
            raise ValueError("the ideal handed to the integrator is not "
                             "differential")
        if m == Membership.INCONCLUSIVE:
            warnings.append("differential-ideal precondition inconclusive")
    target = len(ideal)
    bindings = _p0_bindings(vars0, p0)
    found = []          # (component, provenance)
    found_rows = []     # numeric dF rows at p0

    def try_add(comp: Expr, tag):
        row = d_of_function(comp).at(p0)
        if found_rows:
            stack = np.vstack(found_rows + [row])
            if numlin.rank(stack) <= len(found_rows):
                return False
        elif numlin.rank(row[None, :]) == 0:
            return False
        found.append((_anchor(comp, p0, bindings), tag))
        found_rows.append(row)
        return True

    # layer: generators that are already exact
    for g in ideal.generators:
        if len(found) == target:
            break
        if exterior_derivative(g).is_structural_zero():
            F = poincare_potential(g)
            if F is not None:
                try_add(F, "integrated")
    # layer: closed polynomial-coefficient combinations
    if len(found) < target:
        for form in _closed_combinations(ideal, combo_degree):
            if len(found) == target:
                break
            F = poincare_potential(form)
            if F is not None:
                try_add(F, "integrated")
    # layer: integrating factors on the residual generators
    if len(found) < target:
        rref_rows = [[d_of_function(c).coefficient((i,))
                      for i in range(vars0.total)] for c, _ in found]
        for g in ideal.generators:
            if len(found) == target:
                break
            if rref_rows:
                from .pfaffian import rref_function_field
                rows, pivots = rref_function_field(rref_rows, p0)
                target_row = [g.coefficient((i,)) for i in range(vars0.total)]
                rem = reduce_against_rows(target_row, rows, pivots)
                rem = _row_primitive(_clear_denominators_row(rem))
                residual = KForm(vars0, 1, {(i,): c for i, c in enumerate(rem)
                                            if not c.is_structural_zero()})
            else:
                residual = g
            if residual.is_structural_zero():
                continue
            candidate = _integrating_factor_candidate(residual)
            if candidate is None:
                continue
            F = poincare_potential(candidate)
            if F is not None:
                try_add(F, "integrated")
    # layer: user hints
    for hint in hints:
        if len(found) == target:
            if warnings is not None:
                warnings.append(f"hint '{hint}' unused: span already complete")
            continue
        m = ideal_membership(d_of_function(hint), ideal)
        if m == Membership.NON_MEMBER:
            raise HintRejected(
                f"hint '{hint}' has differential outside the target ideal")
        if m == Membership.INCONCLUSIVE:
            warnings.append(f"hint '{hint}' membership inconclusive; skipped")
            continue
        if not try_add(hint, "hint"):
            warnings.append(f"hint '{hint}' is rank-redundant; skipped")

    if len(found) < target:
        from .pfaffian import rref_function_field
        rref_rows = [[d_of_function(c).coefficient((i,))
                      for i in range(vars0.total)] for c, _ in found]
        residuals = []
        if rref_rows:
            rows, pivots = rref_function_field(rref_rows, p0)
        else:
            rows, pivots = [], []
        for g in ideal.generators:
            target_row = [g.coefficient((i,)) for i in range(vars0.total)]
            rem = reduce_against_rows(target_row, rows, pivots)
            rem = _row_primitive(_clear_denominators_row(rem))
            form = KForm(vars0, 1, {(i,): c for i, c in enumerate(rem)
                                    if not c.is_structural_zero()})
            if not form.is_structural_zero():
                residuals.append(repr(form))
        raise IntegrationFailed(
            f"integrated {len(found)} of {target} directions; residual "
            f"generators need hints: {residuals}", residual=residuals, k=k)

    comps = [c for c, _ in found]
    tags = [t for _, t in found]
    if ls is not None:
        return _classify_and_order(comps, tags, ls, k)
    return SmoothMapAdapted(list(comps), 0, k if k is not None else -1,
                            provenance=list(tags))


def component_vanishes_on_L(sys: ControlSystem, e: Expr, samples=None):
    restricted = e.substitute({0: 0})
    return sys.vanishes_on_N(restricted, samples=samples)


def _classify_and_order(comps, tags, ls: LiftedSystem, k, samples=None):
    """Order components [vanishing-on-L (t last)] ++ [rest]."""
    t_expr = Expr.var_index(ls.vars, 0)
    van, van_tags, rest, rest_tags = [], [], [], []
    t_present = False
    for c, tag in zip(comps, tags):
        if c == t_expr:
            t_present = True
            continue
        if component_vanishes_on_L(ls.base, c, samples) == Zeroness.ZERO:
            van.append(c)
            van_tags.append(tag)
        else:
            rest.append(c)
            rest_tags.append(tag)
    if t_present:
        van.append(t_expr)
        van_tags.append("time")
    ordered = van + rest
    return SmoothMapAdapted(ordered, len(van), k if k is not None else -1,
                            provenance=van_tags + rest_tags)


# ---------------------------------------------------------------------------
# adaptation
# ---------------------------------------------------------------------------

def _component_monomials(comps, degree):
    """Monomials of total degree <= degree in the given component
    expressions, constants included; returned with their exponent tags."""
    out = [((), None)]
    for d in range(1, degree + 1):
        for combo in combinations_with_replacement(range(len(comps)), d):
            out.append((combo, None))
    return [c for c, _ in out]


def _monomial_value(comps, combo, vars0):
    m = Expr.one(vars0)
    for i in combo:
        m = m * comps[i]
    return m


def adapt_to_L(F: SmoothMapAdapted, ls: LiftedSystem, target_vanish: int,
               degree: int = 2, samples=None,
               warnings=None) -> SmoothMapAdapted:
    """Rewrite the map so exactly `target_vanish` leading components vanish
    on L, preserving the span of the differentials.

    New vanishing components are polynomial combinations (total degree <=
    `degree`, constants allowed) of the non-vanishing components, found by
    restricting to L and solving for the rational nullspace.
    """
    vars0 = ls.vars
    p0 = ls.base.x0_point()
    sys = ls.base
    ell = len(F.components)
    if target_vanish > ell:
        raise AdaptationFailed(
            f"target vanish count {target_vanish} exceeds the component "
            f"count {ell}", k=F.k)
    current = _classify_and_order(F.components, F.provenance, ls, F.k, samples)
    have = current.vanish_count
    if have > target_vanish:
        raise AdaptationFailed(
            f"{have} components already vanish on L, more than the expected "
            f"{target_vanish}; the rank data is inconsistent", k=F.k)
    needed = target_vanish - have
    if needed == 0:
        return current
    pool = current.non_vanishing()
    monos = _component_monomials(pool, degree)
    mono_exprs = [_monomial_value(pool, combo, vars0) for combo in monos]
    bindings, leftovers = sys.reduction()
    new_comps = []
    if not leftovers:
        restricted = [e.substitute({0: 0}).substitute(bindings)
                      for e in mono_exprs]
        # one shared multiplier keeps the vanishing conditions equivalent
        if any(e.den != {(): Fraction(1)} for e in restricted):
            common = Expr.one(vars0)
            for e in restricted:
                if e.den != {(): Fraction(1)}:
                    common = common * Expr._make(vars0, e.den,
                                                 {(): Fraction(1)}, e.kernels)
            restricted = [e * common for e in restricted]
        rows = _collect_linear_system(restricted)
        null = rational_nullspace(rows, len(mono_exprs))
    else:
        if samples is None:
            raise AdaptationFailed(
                "defining functions are not solvable and no samples were "
                "provided for the sample-nullspace fallback", k=F.k)
        A = np.array([[float(e.eval(p)) for e in mono_exprs]
                      for p in samples])
        _, s, vh = np.linalg.svd(A)
        cut = numlin.RANK_TOL * max(s[0] if len(s) else 1.0, 1.0)
        rank_a = int(np.sum(s > cut))
        null_f = vh[rank_a:]
        null = []
        for vec in null_f:
            null.append([Fraction(x).limit_denominator(10 ** 6)
                         for x in vec])
    for vec in null:
        if len(new_comps) == needed:
            break
        comb = Expr.zero(vars0)
        for c, combo in zip(vec, monos):
            if c:
                comb = comb + _monomial_value(pool, combo, vars0) * c
        if comb.is_structural_zero() or comb.as_rational() is not None:
            continue
        verdict = component_vanishes_on_L(sys, comb, samples)
        if verdict == Zeroness.NONZERO:
            continue
        if verdict == Zeroness.INCONCLUSIVE:
            if warnings is not None:
                warnings.append(
                    f"vanishing of adapted component '{comb}' rests on "
                    "samples only")
        row = d_of_function(comb).at(p0)
        existing = [d_of_function(c).at(p0)
                    for c in current.vanishing() + new_comps]
        if numlin.rank(np.vstack(existing + [row])) <= len(existing):
            continue
        new_comps.append(comb)
    if len(new_comps) < needed:
        raise AdaptationFailed(
            f"no degree-<={degree} combination closes the vanishing block "
            f"({len(new_comps)} of {needed} found); raise the ansatz degree "
            "or supply hints", k=F.k)
    # completion: keep enough old non-vanishing components for full rank
    vanish_block = new_comps + current.vanishing()
    rows = [d_of_function(c).at(p0) for c in vanish_block]
    completion = []
    for c, tag in zip(current.non_vanishing(),
                      current.provenance[current.vanish_count:]):
        stack = np.vstack(rows + [d_of_function(c).at(p0)])
        if numlin.rank(stack) > len(rows):
            completion.append((c, tag))
            rows.append(d_of_function(c).at(p0))
    comps = vanish_block + [c for c, _ in completion]
    if len(comps) != ell or numlin.rank(np.vstack(rows)) != ell:
        raise AdaptationFailed(
            "adapted map lost rank; the combination consumed more "
            "directions than it added", k=F.k)
    tags = (["adapted"] * len(new_comps)
            + current.provenance[:current.vanish_count]
            + [t for _, t in completion])
    return SmoothMapAdapted(comps, target_vanish, F.k, provenance=tags)


def _span_ideal(components, p0):
    forms = [d_of_function(c) for c in components]
    return PfaffianIdeal(forms, p0, "map-span")


def subsume(F_lower: SmoothMapAdapted, F_higher: SmoothMapAdapted,
            p0: Point) -> SmoothMapAdapted:
    """Rewrite F_lower so its leading components are exactly F_higher's,
    completed by differentially independent components of F_lower."""
    if F_higher.k < F_lower.k:
        raise SubsumptionFailed("subsume expects k_lower <= k_higher")
    lower_ideal = _span_ideal(F_lower.components, p0)
    for c in F_higher.components:
        if ideal_membership(d_of_function(c), lower_ideal) != Membership.MEMBER:
            raise SubsumptionFailed(
                f"dF of component '{c}' is not in the span of the lower map")
    comps = list(F_higher.components)
    rows = [d_of_function(c).at(p0) for c in comps]
    tags = ["subsumed"] * len(comps)
    for c, tag in zip(F_lower.components, F_lower.provenance):
        if len(comps) == len(F_lower.components):
            break
        stack = np.vstack(rows + [d_of_function(c).at(p0)])
        if numlin.rank(stack) > len(rows):
            comps.append(c)
            rows.append(d_of_function(c).at(p0))
            tags.append(tag)
    if len(comps) != len(F_lower.components):
        raise SubsumptionFailed("completion failed to restore the rank")
    return SmoothMapAdapted(comps, F_lower.vanish_count, F_lower.k,
                            provenance=tags)


def adapt_subordinate(F: SmoothMapAdapted, h, kappa, ls: LiftedSystem,
                      k: int, samples=None) -> SmoothMapAdapted:
    """Rewrite F so each h^i and its Lie derivatives L_f^j h^i with
    kappa_i - j > k appear verbatim in the vanishing block, keeping the span
    of the differentials."""
    if not h:
        return F
    sys = ls.base
    vars0 = ls.vars
    p0 = ls.p0
    towers = []
    for hi, ki in zip(h, kappa):
        if ki <= k:
            raise AdaptationFailed(
                f"output component with relative degree {ki} cannot be "
                f"subordinate at level {k}", k=k)
        entry = hi
        for j in range(ki - k):
            towers.append(entry)
            entry = sys.lie_f(entry)
    span = _span_ideal(F.components, p0)
    for entry in towers:
        if ideal_membership(d_of_function(entry), span) != Membership.MEMBER:
            raise AdaptationFailed(
                f"tower entry '{entry}' has differential outside the map "
                "span; flag data corrupted", k=k)
    t_expr = Expr.var_index(vars0, 0)
    head = []  # vanishing non-tower components that stay independent
    rows = [d_of_function(c).at(p0) for c in towers]
    tags = []
    for c, tag in zip(F.vanishing(), F.provenance[:F.vanish_count]):
        if c == t_expr or any(c == te for te in towers):
            continue
        stack = np.vstack(rows + [d_of_function(c).at(p0)])
        if numlin.rank(stack) > len(rows):
            head.append(c)
            rows.append(d_of_function(c).at(p0))
            tags.append(tag)
    comps = head + towers + [t_expr]
    rows = [d_of_function(c).at(p0) for c in comps]
    out_tags = tags + ["tower"] * len(towers) + ["time"]
    vanish_count = len(comps)
    for c, tag in zip(F.components, F.provenance):
        if len(comps) == len(F.components):
            break
        stack = np.vstack(rows + [d_of_function(c).at(p0)])
        if numlin.rank(stack) > len(rows):
            comps.append(c)
            rows.append(d_of_function(c).at(p0))
            out_tags.append(tag)
    if len(comps) != len(F.components):
        raise AdaptationFailed(
            "subordination lost rank while rebuilding the component list",
            k=k)
    return SmoothMapAdapted(comps, vanish_count, F.k, provenance=out_tags)


def restricted_rank_on_L(F: SmoothMapAdapted, ls: LiftedSystem):
    """Rank of the Jacobian of F restricted to L at p0 (numeric)."""
    from .lift import ann_tangent_L

    ann = ann_tangent_L(ls, ls.p0)
    # tangent basis of L at p0 = nullspace of the annihilator rows
    _, s, vh = np.linalg.svd(ann)
    rank_a = int(np.sum(s > numlin.RANK_TOL * max(s[0], 1.0)))
    tangent = vh[rank_a:]
    rows = np.array([d.at(ls.p0) for d in F.differentials()])
    return numlin.rank(rows @ tangent.T)
