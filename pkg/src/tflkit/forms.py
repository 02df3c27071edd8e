"""Differential forms and vector fields on the lifted manifold.

A k-form is a sparse map from strictly increasing coordinate-index tuples to
Expr coefficients; degree-0 forms wrap a single Expr under the empty tuple.
Vector fields hold one Expr component per coordinate.  Everything is an
immutable value.
"""

from __future__ import annotations

import numpy as np

from .errors import DegreeOverflow
from .expr import Expr, Point, VariableSpace

__all__ = [
    "VectorField",
    "KForm",
    "wedge",
    "exterior_derivative",
    "contract",
    "lie_derivative",
    "lie_bracket",
    "coordinate_form",
    "coordinate_field",
    "d_of_function",
]


class VectorField:
    """Sum of components[i] * d/dv_i over the coordinates of the space."""

    __slots__ = ("vars", "components")

    def __init__(self, vars: VariableSpace, components):
        components = tuple(components)
        if len(components) != vars.total:
            raise ValueError(
                f"need {vars.total} components, got {len(components)}")
        self.vars = vars
        self.components = components

    @classmethod
    def zero(cls, vars):
        z = Expr.zero(vars)
        return cls(vars, [z] * vars.total)

    @classmethod
    def from_state_components(cls, vars, state_components):
        """Lift a field on R^n: zero d/dt and d/du parts."""
        z = Expr.zero(vars)
        comps = [z] * (1 + vars.m) + list(state_components)
        return cls(vars, comps)

    def __add__(self, other):
        return VectorField(self.vars,
                           [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        return VectorField(self.vars,
                           [a - b for a, b in zip(self.components, other.components)])

    def scale(self, e):
        return VectorField(self.vars, [e * c for c in self.components])

    def at(self, p: Point):
        return np.array([float(c.eval(p)) for c in self.components])

    def is_structural_zero(self):
        return all(c.is_structural_zero() for c in self.components)

    def __eq__(self, other):
        return (isinstance(other, VectorField)
                and self.components == other.components)

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        terms = [f"({c})*d/d{self.vars.names[i]}"
                 for i, c in enumerate(self.components)
                 if not c.is_structural_zero()]
        return " + ".join(terms) if terms else "0"


class KForm:
    """Sparse differential k-form with Expr coefficients."""

    __slots__ = ("vars", "degree", "terms")

    def __init__(self, vars: VariableSpace, degree: int, terms):
        self.vars = vars
        self.degree = degree
        clean = {}
        for idx, c in terms.items():
            if len(idx) != degree:
                raise ValueError(f"index tuple {idx} has wrong length")
            if any(idx[i] >= idx[i + 1] for i in range(len(idx) - 1)):
                raise ValueError(f"index tuple {idx} not strictly increasing")
            if not c.is_structural_zero():
                clean[idx] = c
        self.terms = clean

    @classmethod
    def zero(cls, vars, degree=1):
        return cls(vars, degree, {})

    @classmethod
    def of_function(cls, e: Expr):
        return cls(e.vars, 0, {(): e})

    def as_function(self):
        if self.degree != 0:
            raise ValueError("not a 0-form")
        return self.terms.get((), Expr.zero(self.vars))

    def coefficient(self, idx):
        return self.terms.get(tuple(idx), Expr.zero(self.vars))

    def __add__(self, other):
        if self.degree != other.degree:
            raise ValueError("degree mismatch in form addition")
        terms = dict(self.terms)
        for idx, c in other.terms.items():
            terms[idx] = terms[idx] + c if idx in terms else c
        return KForm(self.vars, self.degree, terms)

    def __sub__(self, other):
        return self + other.scale(Expr.rational(self.vars, -1))

    def __neg__(self):
        return self.scale(Expr.rational(self.vars, -1))

    def scale(self, e: Expr):
        return KForm(self.vars, self.degree,
                     {idx: e * c for idx, c in self.terms.items()})

    def is_structural_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, KForm) or self.degree != other.degree:
            return NotImplemented
        return (self - other).is_structural_zero()

    def __hash__(self):
        return hash((self.degree, tuple(sorted((i, c.key()) for i, c in self.terms.items()))))

    def at(self, p: Point):
        """One-forms only: the covector as a float row vector."""
        if self.degree != 1:
            raise ValueError("pointwise rows only defined for one-forms")
        row = np.zeros(self.vars.total)
        for (i,), c in self.terms.items():
            row[i] = float(c.eval(p))
        return row

    def __repr__(self):
        if not self.terms:
            return "0"
        names = self.vars.names
        parts = []
        for idx in sorted(self.terms):
            c = self.terms[idx]
            base = "^".join(f"d{names[i]}" for i in idx) if idx else ""
            parts.append(f"({c}) {base}".strip())
        return " + ".join(parts)


def coordinate_form(vars, i):
    """dv_i"""
    if isinstance(i, str):
        i = vars.index(i)
    return KForm(vars, 1, {(i,): Expr.one(vars)})


def coordinate_field(vars, i):
    """d/dv_i"""
    if isinstance(i, str):
        i = vars.index(i)
    comps = [Expr.zero(vars)] * vars.total
    comps[i] = Expr.one(vars)
    return VectorField(vars, comps)


def _merge_indices(a, b):
    """Merge two strictly increasing tuples; returns (tuple, sign) or None
    when an index repeats."""
    out = []
    sign = 1
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            return None
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        else:
            # b[j] moves left past the remaining len(a) - i entries of a
            if (len(a) - i) % 2:
                sign = -sign
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), sign


def wedge(a: KForm, b: KForm) -> KForm:
    deg = a.degree + b.degree
    if deg > a.vars.total:
        raise DegreeOverflow(
            f"wedge degree {deg} exceeds manifold dimension {a.vars.total}")
    terms = {}
    for ia, ca in a.terms.items():
        for ib, cb in b.terms.items():
            merged = _merge_indices(ia, ib)
            if merged is None:
                continue
            idx, sign = merged
            c = ca * cb
            if sign < 0:
                c = -c
            terms[idx] = terms[idx] + c if idx in terms else c
    return KForm(a.vars, deg, terms)


def exterior_derivative(a: KForm) -> KForm:
    vars = a.vars
    terms = {}
    for idx, c in a.terms.items():
        for j in range(vars.total):
            dc = c.diff(j)
            if dc.is_structural_zero():
                continue
            merged = _merge_indices((j,), idx)
            if merged is None:
                continue
            full, sign = merged
            coeff = dc if sign > 0 else -dc
            terms[full] = terms[full] + coeff if full in terms else coeff
    return KForm(vars, a.degree + 1, terms)


def d_of_function(e: Expr) -> KForm:
    return exterior_derivative(KForm.of_function(e))


def contract(X: VectorField, a: KForm) -> KForm:
    """Interior product i_X a."""
    if a.degree < 1:
        raise ValueError("contraction needs degree >= 1")
    terms = {}
    for idx, c in a.terms.items():
        for pos, i in enumerate(idx):
            xc = X.components[i]
            if xc.is_structural_zero():
                continue
            rest = idx[:pos] + idx[pos + 1:]
            coeff = xc * c
            if pos % 2:
                coeff = -coeff
            terms[rest] = terms[rest] + coeff if rest in terms else coeff
    return KForm(a.vars, a.degree - 1, terms)


def lie_derivative(X: VectorField, a):
    """Cartan's formula for forms; directional derivative for Expr/0-forms."""
    if isinstance(a, Expr):
        out = Expr.zero(a.vars)
        for i, comp in enumerate(X.components):
            if comp.is_structural_zero():
                continue
            out = out + comp * a.diff(i)
        return out
    if a.degree == 0:
        return KForm.of_function(lie_derivative(X, a.as_function()))
    return contract(X, exterior_derivative(a)) + exterior_derivative(contract(X, a))


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    comps = []
    for i in range(X.vars.total):
        c = lie_derivative(X, Y.components[i]) - lie_derivative(Y, X.components[i])
        comps.append(c)
    return VectorField(X.vars, comps)
