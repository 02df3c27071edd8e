"""Control systems, their lift to the time-control-state manifold, and the
bracket modules used as cross-check oracles.

The plant is control-affine with a target manifold N given by defining
functions, a base point x0 on N, and a feedback u* rendering N invariant.
Everything downstream works on the lifted manifold M = R x R^m x R^n whose
coordinates are (t, u, x) in that order.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import (InvarianceViolation, PointNotOnL, RankDeficientN,
                     RegularityViolation)
from .expr import Expr, Point, VariableSpace, Zeroness
from .forms import (VectorField, coordinate_field, coordinate_form,
                    contract, d_of_function, lie_bracket)
from .pfaffian import PfaffianIdeal, rref_function_field
from . import numlin

__all__ = [
    "ControlSystem",
    "LiftedSystem",
    "lift_system",
    "ann_tangent_L",
    "g_module",
    "s_module",
    "involutive_closure",
]

_VANISH_TOL = 1e-10


class ControlSystem:
    """Control-affine plant with target manifold data.

    f and the g_j are given by their state components (expressions over the
    state variables only); N_defs cut out the target manifold, x0 lies on
    it, and u_star renders it invariant.
    """

    def __init__(self, vars: VariableSpace, f, g, N_defs, x0, u_star,
                 parametrization=None):
        self.vars = vars
        self.f = list(f)
        self.g = [list(gj) for gj in g]
        self.N_defs = list(N_defs)
        self.u_star = list(u_star)
        self.parametrization = list(parametrization) if parametrization else None
        n, m = vars.n, vars.m
        if len(self.f) != n:
            raise ValueError(f"f needs {n} components")
        if len(self.g) != m or any(len(gj) != n for gj in self.g):
            raise ValueError(f"g needs {m} columns of {n} components")
        if len(self.u_star) != m:
            raise ValueError(f"u_star needs {m} components")
        if len(x0) != n:
            raise ValueError(f"x0 needs {n} coordinates")
        self.x0 = [v if isinstance(v, (Fraction, float)) else Fraction(v)
                   for v in x0]
        for e in self.f + [c for gj in self.g for c in gj] + self.u_star:
            bad = [i for i in e.free_variables()
                   if i not in vars.state_indices()]
            if bad:
                raise ValueError(
                    f"state-space data may only involve state variables, "
                    f"got {[vars.names[i] for i in bad]} in '{e}'")
        self._x0_bindings = {
            1 + m + i: Expr.rational(vars, v) if isinstance(v, Fraction)
            else Expr.rational(vars, Fraction(v).limit_denominator(10**9))
            for i, v in enumerate(self.x0)}
        self._reduction = None
        self._validate()

    # -- geometry of N -------------------------------------------------------

    def x0_point(self):
        """x0 extended to a full point of M: t = 0, u = u*(x0)."""
        vals = [Fraction(0)] * self.vars.total
        for i, v in enumerate(self.x0):
            vals[1 + self.vars.m + i] = v
        for j, us in enumerate(self.u_star):
            vals[1 + j] = us.substitute(self._x0_bindings).as_rational()
        return Point(self.vars, vals)

    @property
    def n_star(self):
        return self.vars.n - len(self.N_defs)

    def _build_reduction(self):
        """Solve the defining functions for variables that appear linearly
        with a rational coefficient; the resulting substitution chain
        restricts expressions to N exactly.  Defs that cannot be solved are
        kept for sample-based checking."""
        bindings = {}
        leftovers = []
        # t = 0 restriction for the lifted manifold is handled separately
        for phi in self.N_defs:
            phi = phi.substitute(bindings) if bindings else phi
            solved = False
            for i in sorted(phi.free_variables()):
                if i in bindings or i not in self.vars.state_indices():
                    continue
                dphi = phi.diff(i)
                c = dphi.as_rational()
                if c is None or c == 0:
                    continue
                rest = phi - Expr.var_index(self.vars, i) * c
                if rest.depends_on(i):
                    continue
                value = -(rest / c)
                # fold into existing bindings so the chain stays triangular
                bindings = {k: v.substitute({i: value})
                            for k, v in bindings.items()}
                bindings[i] = value
                solved = True
                break
            if not solved:
                leftovers.append(phi)
        return bindings, leftovers

    def reduction(self):
        if self._reduction is None:
            self._reduction = self._build_reduction()
        return self._reduction

    def restrict_to_N(self, e: Expr) -> Expr:
        bindings, _ = self.reduction()
        return e.substitute(bindings) if bindings else e

    def vanishes_on_N(self, e: Expr, samples=None):
        """Zero / NonZero / Inconclusive verdict for vanishing on N.

        Exact when the defining functions were fully solvable (the
        restriction is then a faithful substitution); otherwise the verdict
        combines the partial restriction with evaluation at on-manifold
        samples.
        """
        bindings, leftovers = self.reduction()
        restricted = e.substitute(bindings) if bindings else e
        z = restricted.zeroness()
        if not leftovers and self.parametrization is None:
            return z
        if z == Zeroness.ZERO:
            return z
        if self.parametrization is not None:
            par = {1 + self.vars.m + i: pe
                   for i, pe in enumerate(self.parametrization)}
            z2 = e.substitute(par).zeroness()
            return z2
        if samples:
            vals = [abs(float(e.eval(p))) for p in samples]
            if all(v <= _VANISH_TOL for v in vals):
                return Zeroness.INCONCLUSIVE
            return Zeroness.NONZERO
        return Zeroness.INCONCLUSIVE

    # -- Lie derivatives on the plant ----------------------------------------

    def lie_f(self, h: Expr) -> Expr:
        out = Expr.zero(self.vars)
        for i, fi in enumerate(self.f):
            idx = 1 + self.vars.m + i
            dh = h.diff(idx)
            if not dh.is_structural_zero():
                out = out + fi * dh
        return out

    def lie_g(self, j: int, h: Expr) -> Expr:
        out = Expr.zero(self.vars)
        for i, gi in enumerate(self.g[j]):
            idx = 1 + self.vars.m + i
            dh = h.diff(idx)
            if not dh.is_structural_zero():
                out = out + gi * dh
        return out

    def grad_at_x0(self, h: Expr):
        """Row of state-partials of h at x0."""
        p = self.x0_point()
        return np.array([float(h.diff(i).eval(p))
                         for i in self.vars.state_indices()])

    # -- validation ----------------------------------------------------------

    def _validate(self):
        p = self.x0_point()
        for phi in self.N_defs:
            v = float(phi.eval(p))
            if abs(v) > _VANISH_TOL:
                raise ValueError(f"x0 is not on N: |{phi}| = {v:g} there")
        jac = np.array([self.grad_at_x0(phi) for phi in self.N_defs])
        if len(self.N_defs) == 0 or len(self.N_defs) > self.vars.n:
            raise RankDeficientN(
                "N must have codimension between 1 and n")
        if numlin.rank(jac) != len(self.N_defs):
            raise RankDeficientN(
                "defining functions of N drop rank at x0")
        if self.parametrization is not None:
            par = {1 + self.vars.m + i: pe
                   for i, pe in enumerate(self.parametrization)}
            for phi in self.N_defs:
                if phi.substitute(par).zeroness() != Zeroness.ZERO:
                    raise ValueError(
                        "parametrization does not satisfy the defining "
                        f"functions: {phi}")
        # invariance of N under the closed loop f + g u*
        for phi in self.N_defs:
            lphi = self.lie_f(phi)
            for j in range(self.vars.m):
                lphi = lphi + self.u_star[j] * self.lie_g(j, phi)
            verdict = self.vanishes_on_N(lphi)
            if verdict == Zeroness.NONZERO:
                raise InvarianceViolation(
                    f"u* does not render N invariant: L(f+g u*) of '{phi}' "
                    "does not vanish on N")


class LiftedSystem:
    """The plant lifted to M, with the system ideal and control module."""

    def __init__(self, base: ControlSystem):
        self.base = base
        self.vars = base.vars
        vars0 = base.vars
        m = vars0.m
        self.f = VectorField.from_state_components(vars0, base.f)
        self.g = [VectorField.from_state_components(vars0, gj)
                  for gj in base.g]
        Y = coordinate_field(vars0, 0) + self.f
        for j in range(m):
            Y = Y + self.g[j].scale(Expr.var_index(vars0, 1 + j))
        self.Y = Y
        dt = coordinate_form(vars0, 0)
        omegas = []
        for i in range(vars0.n):
            drift = base.f[i]
            for j in range(m):
                drift = drift + base.g[j][i] * Expr.var_index(vars0, 1 + j)
            omegas.append(coordinate_form(vars0, 1 + m + i) - dt.scale(drift))
        self.omega = omegas
        self.p0 = base.x0_point()
        for w in omegas:
            if not contract(Y, w).as_function().is_structural_zero():
                raise AssertionError("system ideal fails to annihilate Y")
        self.I0 = PfaffianIdeal(omegas, self.p0, "system")
        self.U_module = [coordinate_field(vars0, 1 + j) for j in range(m)]
        self.L_defs = [Expr.var_index(vars0, 0)] + list(base.N_defs)

    def on_L(self, p: Point, tol=_VANISH_TOL):
        return all(abs(float(phi.eval(p))) <= tol for phi in self.L_defs)


def lift_system(sys: ControlSystem) -> LiftedSystem:
    return LiftedSystem(sys)


def ann_tangent_L(ls: LiftedSystem, p: Point):
    """Rows spanning Ann(T_p L): differentials of the defining functions of
    the lifted manifold, evaluated at p."""
    if not ls.on_L(p):
        raise PointNotOnL("point does not satisfy the defining functions of L")
    rows = np.array([d_of_function(phi).at(p) for phi in ls.L_defs])
    if numlin.rank(rows) != len(ls.L_defs):
        raise RankDeficientN("Ann(T_pL) rows drop rank at the point")
    return rows


def g_module(ls: LiftedSystem, k: int):
    """Generators ad_f^j g_i for 0 <= j <= k."""
    if k < 0:
        raise ValueError("k must be >= 0")
    out = list(ls.g)
    layer = list(ls.g)
    for _ in range(k):
        layer = [lie_bracket(ls.f, X) for X in layer]
        out.extend(layer)
    return out


def _field_rows(fields):
    return [[c for c in X.components] for X in fields]


def reduce_fields(fields, p0):
    """Echelon-reduced generator list spanning the same module."""
    if not fields:
        return []
    vars0 = fields[0].vars
    rows, _ = rref_function_field(_field_rows(fields), p0)
    return [VectorField(vars0, r) for r in rows]


def generic_field_rank(fields, p0):
    if not fields:
        return 0
    rows, _ = rref_function_field(_field_rows(fields), p0)
    return len(rows)


def s_module(ls: LiftedSystem, k: int):
    """S^0 = G^0; S^k = span{S^{k-1}, [S^{k-1}, S^{k-1}], G^k}."""
    if k < 0:
        raise ValueError("k must be >= 0")
    current = list(ls.g)
    for step in range(1, k + 1):
        brackets = []
        for i in range(len(current)):
            for j in range(i + 1, len(current)):
                b = lie_bracket(current[i], current[j])
                if not b.is_structural_zero():
                    brackets.append(b)
        gk = g_module(ls, step)
        current = reduce_fields(current + brackets + gk, ls.p0)
    return current


def involutive_closure(fields, p0, max_rounds=None):
    """Append pairwise brackets until the generic rank stabilizes."""
    if not fields:
        return []
    vars0 = fields[0].vars
    if max_rounds is None:
        max_rounds = vars0.total
    basis = reduce_fields(fields, p0)
    rank = len(basis)
    for _ in range(max_rounds):
        brackets = []
        for i in range(len(basis)):
            for j in range(i + 1, len(basis)):
                b = lie_bracket(basis[i], basis[j])
                if not b.is_structural_zero():
                    brackets.append(b)
        new_basis = reduce_fields(basis + brackets, p0)
        if len(new_basis) == rank:
            return new_basis
        if len(new_basis) < rank:
            raise RegularityViolation("involutive closure lost rank")
        basis, rank = new_basis, len(new_basis)
    raise RegularityViolation(
        "involutive closure failed to stabilize within the round bound")
