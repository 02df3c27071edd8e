"""Exact scalar expressions over time, control, and state variables.

An expression is stored as a fraction of two multivariate polynomials with
exact rational coefficients.  The indeterminates ("atoms") are the problem
variables plus kernel terms exp(a), sin(a), cos(a), ln(a) whose arguments are
themselves expressions in canonical form; kernels with distinct canonical
arguments are independent atoms, so structural equality of canonical forms is
decidable while identities that mix kernels (sin^2 + cos^2 = 1) are left
alone.  Expressions are immutable values and may be shared freely across
threads; there is no global mutable state.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

from .errors import DomainError, ExprSyntaxError, UnknownVariable

__all__ = [
    "Zeroness",
    "VariableSpace",
    "Point",
    "Expr",
    "parse_expr",
    "diff",
    "substitute",
    "eval_at",
    "is_zero",
]

KERNEL_NAMES = ("exp", "sin", "cos", "ln")

# Randomized falsifier policy (see is_zero): number of sample points, the
# magnitude threshold below which a float sample counts as vanishing, and the
# coordinate box [-3, 3] with denominators <= 8.
FALSIFIER_SAMPLES = 16
FALSIFIER_TOL = 1e-9
FALSIFIER_SEED = 0
_FALSIFIER_DEN = 8
_FALSIFIER_BOX = 3

_GCD_TERM_CAP = 4000  # skip fraction reduction when polynomials get this big


class Zeroness:
    ZERO = "zero"
    NONZERO = "nonzero"
    INCONCLUSIVE = "inconclusive"


class VariableSpace:
    """Ordered variable list: t, then controls, then states.

    The ordering is fixed for the lifetime of a problem instance; variable
    indices are used as atom identities throughout the package.
    """

    def __init__(self, states, inputs):
        states = list(states)
        inputs = list(inputs)
        names = ["t"] + inputs + states
        if len(set(names)) != len(names):
            raise ValueError(f"variable names not unique: {names}")
        for nm in names:
            if not nm.isidentifier():
                raise ValueError(f"bad variable name: {nm!r}")
            if nm in KERNEL_NAMES:
                raise ValueError(f"variable name {nm!r} collides with a function")
        self.names = tuple(names)
        self.n = len(states)
        self.m = len(inputs)
        self.state_names = tuple(states)
        self.input_names = tuple(inputs)
        self._index = {nm: i for i, nm in enumerate(names)}

    @classmethod
    def canonical(cls, n, m):
        return cls([f"x{i}" for i in range(1, n + 1)],
                   [f"u{j}" for j in range(1, m + 1)])

    @property
    def total(self):
        return 1 + self.m + self.n

    def index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariable(name) from None

    def state_indices(self):
        return range(1 + self.m, self.total)

    def input_indices(self):
        return range(1, 1 + self.m)

    def __eq__(self, other):
        return isinstance(other, VariableSpace) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return f"VariableSpace({self.names})"


class Point:
    """A full binding of every variable to an exact rational or a float."""

    def __init__(self, vars: VariableSpace, values):
        values = tuple(values)
        if len(values) != vars.total:
            raise ValueError(
                f"point needs {vars.total} values, got {len(values)}")
        self.vars = vars
        self.values = tuple(
            v if isinstance(v, (Fraction, float)) else Fraction(v)
            for v in values)

    @classmethod
    def from_map(cls, vars, mapping):
        return cls(vars, [mapping[nm] for nm in vars.names])

    def value(self, index):
        return self.values[index]

    def of(self, name):
        return self.values[self.vars.index(name)]

    def replace(self, **kw):
        vals = list(self.values)
        for nm, v in kw.items():
            vals[self.vars.index(nm)] = v
        return Point(self.vars, vals)

    def as_float_tuple(self):
        return tuple(float(v) for v in self.values)

    def __repr__(self):
        body = ", ".join(f"{nm}={v}" for nm, v in zip(self.vars.names, self.values))
        return f"Point({body})"


# ---------------------------------------------------------------------------
# polynomial layer: dict {monomial: Fraction}
#
# A monomial is a tuple of (atom, exponent) pairs sorted by atom; atoms are
# (0, var_index) for variables and (1, kind, fingerprint) for kernels, where
# the fingerprint is the canonical key of the kernel's argument.  That makes
# atoms directly comparable and the canonical form independent of the order
# in which subexpressions were constructed.
# ---------------------------------------------------------------------------

_ONE = Fraction(1)


def _p_zero():
    return {}


def _p_const(c):
    c = Fraction(c)
    return {(): c} if c else {}


def _p_var(i):
    return {(((0, i), 1),): _ONE}


def _p_atom(atom):
    return {((atom, 1),): _ONE}


def _mono_mul(a, b):
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i][0] == b[j][0]:
            out.append((a[i][0], a[i][1] + b[j][1]))
            i += 1
            j += 1
        elif a[i][0] < b[j][0]:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


def _p_add(A, B):
    if not A:
        return dict(B)
    if not B:
        return dict(A)
    out = dict(A)
    for m, c in B.items():
        s = out.get(m)
        if s is None:
            out[m] = c
        else:
            s = s + c
            if s:
                out[m] = s
            else:
                del out[m]
    return out


def _p_neg(A):
    return {m: -c for m, c in A.items()}


def _p_scale(A, c):
    c = Fraction(c)
    if not c:
        return {}
    return {m: co * c for m, co in A.items()}


def _p_mul(A, B):
    if not A or not B:
        return {}
    out = {}
    for ma, ca in A.items():
        for mb, cb in B.items():
            m = _mono_mul(ma, mb)
            c = ca * cb
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s = s + c
                if s:
                    out[m] = s
                else:
                    del out[m]
    return out


def _p_pow(A, k):
    out = _p_const(1)
    base = A
    while k:
        if k & 1:
            out = _p_mul(out, base)
        base_sq = base if k == 1 else _p_mul(base, base)
        base = base_sq
        k >>= 1
    return out


def _mono_deg(m):
    return sum(e for _, e in m)


def _grlex_greater(m1, m2):
    """Graded lexicographic order; 'earlier atom with a larger exponent wins'."""
    d1, d2 = _mono_deg(m1), _mono_deg(m2)
    if d1 != d2:
        return d1 > d2
    i = j = 0
    while i < len(m1) and j < len(m2):
        a1, e1 = m1[i]
        a2, e2 = m2[j]
        if a1 == a2:
            if e1 != e2:
                return e1 > e2
            i += 1
            j += 1
        elif a1 < a2:
            return True
        else:
            return False
    return len(m1) > len(m2)


def _p_leading(A):
    it = iter(A)
    best = next(it)
    for m in it:
        if _grlex_greater(m, best):
            best = m
    return best


def _mono_divides(m1, m2):
    """Does m1 divide m2?  Returns the quotient monomial or None."""
    out = []
    j = 0
    m2 = list(m2)
    for a, e in m1:
        while j < len(m2) and m2[j][0] < a:
            out.append(m2[j])
            j += 1
        if j >= len(m2) or m2[j][0] != a or m2[j][1] < e:
            return None
        if m2[j][1] > e:
            out.append((a, m2[j][1] - e))
        j += 1
    out.extend(m2[j:])
    return tuple(out)


def _p_divexact(A, B):
    """Exact polynomial division A / B, or None when not divisible."""
    if not A:
        return {}
    if not B:
        return None
    lb = _p_leading(B)
    cb = B[lb]
    R = dict(A)
    Q = {}
    while R:
        lr = _p_leading(R)
        q = _mono_divides(lb, lr)
        if q is None:
            return None
        c = R[lr] / cb
        Q[q] = Q.get(q, Fraction(0)) + c
        for m, co in B.items():
            mm = _mono_mul(m, q)
            s = R.get(mm, Fraction(0)) - co * c
            if s:
                R[mm] = s
            else:
                R.pop(mm, None)
    return {m: c for m, c in Q.items() if c}


def _p_atoms(A):
    out = set()
    for m in A:
        for a, _ in m:
            out.add(a)
    return out


def _as_univariate(A, atom):
    """View A as a polynomial in `atom` with polynomial coefficients."""
    out = {}
    for m, c in A.items():
        deg = 0
        rest = []
        for a, e in m:
            if a == atom:
                deg = e
            else:
                rest.append((a, e))
        coeff = out.setdefault(deg, {})
        rest = tuple(rest)
        coeff[rest] = coeff.get(rest, 0) + c
    return {d: {m: c for m, c in p.items() if c} for d, p in out.items() if p}


def _from_univariate(U, atom):
    out = {}
    for d, p in U.items():
        for m, c in p.items():
            if d:
                mm = _mono_mul(m, ((atom, d),))
            else:
                mm = m
            out[mm] = out.get(mm, 0) + c
    return {m: c for m, c in out.items() if c}


def _p_gcd_list(polys):
    g = {}
    for p in polys:
        g = _p_gcd(g, p)
        if g == _p_const(1):
            return g
    return g


# GCD internals run on integer-coefficient dicts for speed; Fractions only
# at the boundary.

def _to_int_poly(A):
    den = 1
    for c in A.values():
        den = den * c.denominator // math.gcd(den, c.denominator)
    return {m: int(c * den) for m, c in A.items()}


def _int_content(A):
    g = 0
    for c in A.values():
        g = math.gcd(g, abs(c))
        if g == 1:
            return 1
    return g or 1


def _int_primitive(A):
    g = _int_content(A)
    if g > 1:
        return {m: c // g for m, c in A.items()}
    return dict(A)


def _ip_mul(A, B):
    out = {}
    for ma, ca in A.items():
        for mb, cb in B.items():
            m = _mono_mul(ma, mb)
            s = out.get(m, 0) + ca * cb
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return out


def _ip_divexact(A, B):
    if not A:
        return {}
    lb = _p_leading(B)
    cb = B[lb]
    R = dict(A)
    Q = {}
    while R:
        lr = _p_leading(R)
        q = _mono_divides(lb, lr)
        if q is None:
            return None
        c, rem = divmod(R[lr], cb)
        if rem:
            return None
        Q[q] = Q.get(q, 0) + c
        for m, co in B.items():
            mm = _mono_mul(m, q)
            s = R.get(mm, 0) - co * c
            if s:
                R[mm] = s
            else:
                R.pop(mm, None)
    return {m: c for m, c in Q.items() if c}


_GCD_PRS_CAP = 240  # above this many combined terms, settle for the content


def _ip_gcd(A, B, depth=0):
    """Primitive PRS gcd of integer-coefficient polynomials; falls back to
    the integer content for large inputs (a smaller-than-true gcd keeps all
    callers correct, they just reduce less)."""
    if not A:
        return _int_primitive(B)
    if not B:
        return _int_primitive(A)
    if (() in A and len(A) == 1) or (() in B and len(B) == 1):
        return {(): math.gcd(_int_content(A), _int_content(B))}
    if len(A) + len(B) > _GCD_PRS_CAP:
        return {(): math.gcd(_int_content(A), _int_content(B))}
    atoms = _p_atoms(A) | _p_atoms(B)
    if not atoms:
        return {(): math.gcd(_int_content(A), _int_content(B))}
    atom = max(atoms)
    ua = _as_univariate(A, atom)
    ub = _as_univariate(B, atom)
    ca = {}
    for p in ua.values():
        ca = _ip_gcd(ca, p, depth + 1)
        if ca == {(): 1}:
            break
    cb = {}
    for p in ub.values():
        cb = _ip_gcd(cb, p, depth + 1)
        if cb == {(): 1}:
            break
    cont = _ip_gcd(ca, cb, depth + 1)
    pa = {d: _ip_divexact(p, ca) for d, p in ua.items()}
    pb = {d: _ip_divexact(p, cb) for d, p in ub.items()}
    g = _iuni_gcd(pa, pb)
    if g is None:
        return {(): 1}
    return _int_primitive(_ip_mul(cont, _from_univariate(g, atom)))


def _uni_deg(U):
    return max(U) if U else -1


def _iuni_gcd(A, B):
    while B:
        if _uni_deg(A) < _uni_deg(B):
            A, B = B, A
            continue
        R = _iuni_prem(A, B)
        if R is None:
            return None
        if R:
            cont = {}
            for p in R.values():
                cont = _ip_gcd(cont, p)
                if cont == {(): 1}:
                    break
            if cont and cont != {(): 1}:
                R = {d: _ip_divexact(p, cont) for d, p in R.items()}
        A, B = B, R
    if A:
        cont = {}
        for p in A.values():
            cont = _ip_gcd(cont, p)
            if cont == {(): 1}:
                break
        if cont and cont != {(): 1}:
            A = {d: _ip_divexact(p, cont) for d, p in A.items()}
    return A


def _iuni_prem(A, B):
    da, db = _uni_deg(A), _uni_deg(B)
    if da - db + 1 > 40:
        return None  # give up; caller treats gcd as 1
    lb = B[db]
    R = dict(A)
    while R and _uni_deg(R) >= db:
        if sum(len(p) for p in R.values()) > 600:
            return None  # intermediate swell; give up
        dr = _uni_deg(R)
        lr = R[dr]
        R = {d: _ip_mul(p, lb) for d, p in R.items()}
        for d, p in B.items():
            dd = d + dr - db
            cur = R.get(dd, {})
            neg = _ip_mul(p, lr)
            out = dict(cur)
            for m, c in neg.items():
                s = out.get(m, 0) - c
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
            if out:
                R[dd] = out
            else:
                R.pop(dd, None)
        R = {d: p for d, p in R.items() if p}
    return R


def _p_gcd(A, B):
    """GCD over Q[atoms] up to a rational unit, returned with integer
    primitive coefficients.  Bails out to 1 on large inputs (reduction is
    then simply skipped by the caller, which stays correct)."""
    if not A and not B:
        return {}
    if not A:
        return _p_monic(B)
    if not B:
        return _p_monic(A)
    if (() in A and len(A) == 1) or (() in B and len(B) == 1):
        return _p_const(1)
    if len(A) + len(B) > _GCD_TERM_CAP:
        return _p_const(1)
    g = _ip_gcd(_to_int_poly(A), _to_int_poly(B))
    return {m: Fraction(c) for m, c in g.items()}


def _p_monic(A):
    if not A:
        return {}
    lc = A[_p_leading(A)]
    if lc == 1:
        return dict(A)
    return {m: c / lc for m, c in A.items()}


def _p_key(A):
    return tuple(sorted((m, (c.numerator, c.denominator)) for m, c in A.items()))


# ---------------------------------------------------------------------------
# Expr
# ---------------------------------------------------------------------------

class Expr:
    """Immutable exact expression in canonical fraction form."""

    __slots__ = ("vars", "num", "den", "kernels", "_key", "_zero", "_str")

    def __init__(self, vars, num, den, kernels, _internal=False):
        if not _internal:
            raise TypeError("use the Expr factory methods")
        self.vars = vars
        self.num = num
        self.den = den
        self.kernels = kernels
        self._key = None
        self._zero = None
        self._str = None

    # -- construction -------------------------------------------------------

    @staticmethod
    def _make(vars, num, den, kernels):
        if not den:
            raise DomainError("division by zero expression")
        if not num:
            return Expr(vars, {}, _p_const(1), {}, _internal=True)
        lc = den[_p_leading(den)]
        if lc != 1:
            num = {m: c / lc for m, c in num.items()}
            den = {m: c / lc for m, c in den.items()}
        if den != _p_const(1):
            g = _p_gcd(num, den)
            if g and g != _p_const(1):
                qn = _p_divexact(num, g)
                qd = _p_divexact(den, g)
                if qn is not None and qd is not None:
                    num, den = qn, qd
                    lc = den[_p_leading(den)]
                    if lc != 1:
                        num = {m: c / lc for m, c in num.items()}
                        den = {m: c / lc for m, c in den.items()}
        used = _p_atoms(num) | _p_atoms(den)
        kernels = {a: e for a, e in kernels.items() if a in used}
        return Expr(vars, num, den, kernels, _internal=True)

    @staticmethod
    def rational(vars, c):
        return Expr._make(vars, _p_const(c), _p_const(1), {})

    @staticmethod
    def zero(vars):
        return Expr.rational(vars, 0)

    @staticmethod
    def one(vars):
        return Expr.rational(vars, 1)

    @staticmethod
    def var(vars, name):
        return Expr._make(vars, _p_var(vars.index(name)), _p_const(1), {})

    @staticmethod
    def var_index(vars, i):
        return Expr._make(vars, _p_var(i), _p_const(1), {})

    @staticmethod
    def kernel(kind, arg: "Expr"):
        if kind not in KERNEL_NAMES:
            raise ValueError(f"unknown kernel {kind!r}")
        c = arg.as_rational()
        if c is not None:
            if kind == "exp" and c == 0:
                return Expr.one(arg.vars)
            if kind == "sin" and c == 0:
                return Expr.zero(arg.vars)
            if kind == "cos" and c == 0:
                return Expr.one(arg.vars)
            if kind == "ln" and c == 1:
                return Expr.zero(arg.vars)
        atom = (1, kind, arg.key())
        kernels = dict(arg.kernels)
        kernels[atom] = arg
        return Expr._make(arg.vars, _p_atom(atom), _p_const(1), kernels)

    # -- inspection ----------------------------------------------------------

    def key(self):
        if self._key is None:
            self._key = (_p_key(self.num), _p_key(self.den))
        return self._key

    def is_structural_zero(self):
        return not self.num

    def as_rational(self):
        """The exact rational value, or None when not a constant."""
        if not self.num:
            return Fraction(0)
        if set(self.num) <= {()} and set(self.den) <= {()}:
            return self.num[()] / self.den[()]
        return None

    def has_kernels(self):
        return bool(self.kernels)

    def atoms(self):
        return _p_atoms(self.num) | _p_atoms(self.den)

    def depends_on(self, index):
        """Does the expression involve variable `index`, possibly inside a
        kernel argument?"""
        for a in self.atoms():
            if a[0] == 0 and a[1] == index:
                return True
            if a[0] == 1 and self.kernels[a].depends_on(index):
                return True
        return False

    def free_variables(self):
        out = set()
        for a in self.atoms():
            if a[0] == 0:
                out.add(a[1])
            else:
                out |= self.kernels[a].free_variables()
        return out

    def __eq__(self, other):
        if not isinstance(other, Expr):
            return NotImplemented
        return self.vars == other.vars and self.key() == other.key()

    def __hash__(self):
        return hash((self.vars, self.key()))

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Expr):
            if other.vars != self.vars:
                raise ValueError("mixing expressions over different variable spaces")
            return other
        if isinstance(other, (int, Fraction)):
            return Expr.rational(self.vars, other)
        return None

    def _merge_kernels(self, other):
        if not other.kernels:
            return self.kernels
        if not self.kernels:
            return other.kernels
        out = dict(self.kernels)
        out.update(other.kernels)
        return out

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        num = _p_add(_p_mul(self.num, o.den), _p_mul(o.num, self.den))
        return Expr._make(self.vars, num, _p_mul(self.den, o.den),
                          self._merge_kernels(o))

    __radd__ = __add__

    def __neg__(self):
        return Expr._make(self.vars, _p_neg(self.num), self.den, self.kernels)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Expr._make(self.vars, _p_mul(self.num, o.num),
                          _p_mul(self.den, o.den), self._merge_kernels(o))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Expr._make(self.vars, _p_mul(self.num, o.den),
                          _p_mul(self.den, o.num), self._merge_kernels(o))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("exponents must be integers")
        if k < 0:
            return Expr._make(self.vars, _p_pow(self.den, -k),
                              _p_pow(self.num, -k), self.kernels)
        return Expr._make(self.vars, _p_pow(self.num, k),
                          _p_pow(self.den, k), self.kernels)

    # -- calculus ------------------------------------------------------------

    def diff(self, name_or_index):
        i = (name_or_index if isinstance(name_or_index, int)
             else self.vars.index(name_or_index))
        dn = self._poly_diff(self.num, i)
        if self.den == _p_const(1):
            return dn
        dd = self._poly_diff(self.den, i)
        den_e = Expr._make(self.vars, self.den, _p_const(1), self.kernels)
        num_e = Expr._make(self.vars, self.num, _p_const(1), self.kernels)
        return (dn * den_e - num_e * dd) / (den_e * den_e)

    def _poly_diff(self, poly, i):
        out = Expr.zero(self.vars)
        for mono, c in poly.items():
            for pos, (atom, e) in enumerate(mono):
                da = self._atom_diff(atom, i)
                if da.is_structural_zero():
                    continue
                rest = list(mono)
                if e == 1:
                    rest.pop(pos)
                else:
                    rest[pos] = (atom, e - 1)
                term = Expr._make(self.vars, {tuple(rest): c * e},
                                  _p_const(1), self.kernels)
                out = out + term * da
        return out

    def _atom_diff(self, atom, i):
        if atom[0] == 0:
            return Expr.one(self.vars) if atom[1] == i else Expr.zero(self.vars)
        kind = atom[1]
        arg = self.kernels[atom]
        da = arg.diff(i)
        if da.is_structural_zero():
            return da
        if kind == "exp":
            return Expr.kernel("exp", arg) * da
        if kind == "sin":
            return Expr.kernel("cos", arg) * da
        if kind == "cos":
            return -(Expr.kernel("sin", arg) * da)
        return da / arg  # ln

    def substitute(self, bindings):
        """Simultaneous substitution; keys are variable names or indices,
        values are Expr or exact numbers."""
        if not bindings:
            return self
        by_index = {}
        for k, v in bindings.items():
            i = k if isinstance(k, int) else self.vars.index(k)
            if not isinstance(v, Expr):
                v = Expr.rational(self.vars, v)
            by_index[i] = v
        num = self._poly_subst(self.num, by_index)
        den = self._poly_subst(self.den, by_index)
        return num / den

    def _poly_subst(self, poly, by_index):
        out = Expr.zero(self.vars)
        for mono, c in poly.items():
            term = Expr.rational(self.vars, c)
            for atom, e in mono:
                if atom[0] == 0:
                    i = atom[1]
                    if i in by_index:
                        base = by_index[i]
                    else:
                        base = Expr.var_index(self.vars, i)
                else:
                    arg = self.kernels[atom].substitute(by_index)
                    base = Expr.kernel(atom[1], arg)
                term = term * base ** e
            out = out + term
        return out

    def eval(self, point: Point):
        """Exact Fraction when no kernels are hit and the point is rational;
        float otherwise."""
        num = self._poly_eval(self.num, point)
        den = self._poly_eval(self.den, point)
        if isinstance(num, Fraction) and isinstance(den, Fraction):
            if den == 0:
                raise DomainError("denominator vanishes at the point")
            return num / den
        den_f = float(den)
        if den_f == 0.0:
            raise DomainError("denominator vanishes at the point")
        return float(num) / den_f

    def _poly_eval(self, poly, point):
        total = Fraction(0)
        for mono, c in poly.items():
            v = c
            for atom, e in mono:
                if atom[0] == 0:
                    base = point.value(atom[1])
                else:
                    base = self._kernel_eval(atom, point)
                if isinstance(base, Fraction) and isinstance(v, Fraction):
                    v = v * base ** e
                else:
                    v = float(v) * float(base) ** e
            if isinstance(total, Fraction) and isinstance(v, Fraction):
                total = total + v
            else:
                total = float(total) + float(v)
        return total

    def _kernel_eval(self, atom, point):
        kind = atom[1]
        a = self.kernels[atom].eval(point)
        a = float(a)
        if kind == "exp":
            try:
                return math.exp(a)
            except OverflowError:
                raise DomainError("exp overflow") from None
        if kind == "sin":
            return math.sin(a)
        if kind == "cos":
            return math.cos(a)
        if a <= 0:
            raise DomainError(f"ln of non-positive argument {a}")
        return math.log(a)

    # -- zero decision -------------------------------------------------------

    def zeroness(self, seed=FALSIFIER_SEED):
        """Zero iff the canonical form is zero.  Kernel-free expressions are
        decided exactly (the rational function field has no zero divisors);
        with kernels present a seeded rational sampling falsifier is used and
        Inconclusive is possible."""
        if self._zero is not None:
            return self._zero
        if not self.num:
            self._zero = Zeroness.ZERO
        elif not self.kernels:
            self._zero = Zeroness.NONZERO
        else:
            self._zero = self._sample_falsify(seed)
        return self._zero

    def _sample_falsify(self, seed):
        rng = random.Random(seed)
        seen_valid = 0
        for _ in range(FALSIFIER_SAMPLES):
            vals = []
            for _ in range(self.vars.total):
                q = rng.randint(1, _FALSIFIER_DEN)
                p = rng.randint(-_FALSIFIER_BOX * q, _FALSIFIER_BOX * q)
                vals.append(Fraction(p, q))
            try:
                v = self.eval(Point(self.vars, vals))
            except DomainError:
                continue
            seen_valid += 1
            if isinstance(v, Fraction):
                if v != 0:
                    return Zeroness.NONZERO
            elif abs(v) > FALSIFIER_TOL:
                return Zeroness.NONZERO
        return Zeroness.INCONCLUSIVE

    # -- printing ------------------------------------------------------------

    def __str__(self):
        if self._str is None:
            if not self.num:
                self._str = "0"
            elif self.den == _p_const(1):
                self._str = self._poly_str(self.num)
            else:
                self._str = (f"({self._poly_str(self.num)})"
                             f"/({self._poly_str(self.den)})")
        return self._str

    def __repr__(self):
        return f"Expr({self})"

    def _poly_str(self, poly):
        monos = sorted(poly, key=_cmp_key_grlex, reverse=True)
        parts = []
        for m in monos:
            c = poly[m]
            factors = []
            for atom, e in m:
                s = self._atom_str(atom)
                factors.append(s if e == 1 else f"{s}^{e}")
            body = "*".join(factors)
            coeff = abs(c)
            if not body:
                text = str(coeff)
            elif coeff == 1:
                text = body
            else:
                text = f"{coeff}*{body}"
            parts.append((c < 0, text))
        out = []
        for i, (neg, text) in enumerate(parts):
            if i == 0:
                out.append(f"-{text}" if neg else text)
            else:
                out.append(f" - {text}" if neg else f" + {text}")
        return "".join(out)

    def _atom_str(self, atom):
        if atom[0] == 0:
            return self.vars.names[atom[1]]
        return f"{atom[1]}({self.kernels[atom]})"


class _GrlexKey:
    __slots__ = ("m",)

    def __init__(self, m):
        self.m = m

    def __lt__(self, other):
        return _grlex_greater(other.m, self.m)

    def __eq__(self, other):
        return self.m == other.m


def _cmp_key_grlex(m):
    return _GrlexKey(m)


# ---------------------------------------------------------------------------
# parser: precedence `^` > unary minus > `*` `/` > `+` `-`, `^` restricted to
# integer literal exponents
# ---------------------------------------------------------------------------

_TOK_NUM = "number"
_TOK_NAME = "name"
_TOK_OP = "op"
_TOK_END = "end"


def _tokenize(text):
    toks = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < len(text) and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < len(text) and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            toks.append((_TOK_NUM, text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append((_TOK_NAME, text[i:j], i))
            i = j
            continue
        if ch in "+-*/^()":
            toks.append((_TOK_OP, ch, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", i)
    toks.append((_TOK_END, "", len(text)))
    return toks


class _Parser:
    def __init__(self, text, vars):
        self.text = text
        self.vars = vars
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect_op(self, op):
        kind, val, at = self.next()
        if kind != _TOK_OP or val != op:
            raise ExprSyntaxError(f"expected {op!r}", at, expected={op})

    def parse(self):
        e = self.sum()
        kind, val, at = self.peek()
        if kind != _TOK_END:
            raise ExprSyntaxError(f"unexpected {val!r}", at, expected={"end of input"})
        return e

    def sum(self):
        e = self.product()
        while True:
            kind, val, _ = self.peek()
            if kind == _TOK_OP and val in "+-":
                self.next()
                rhs = self.product()
                e = e + rhs if val == "+" else e - rhs
            else:
                return e

    def product(self):
        e = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == _TOK_OP and val in "*/":
                self.next()
                rhs = self.unary()
                e = e * rhs if val == "*" else e / rhs
            else:
                return e

    def unary(self):
        kind, val, _ = self.peek()
        if kind == _TOK_OP and val == "-":
            self.next()
            return -self.unary()
        if kind == _TOK_OP and val == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, at = self.peek()
        if kind == _TOK_OP and val == "^":
            self.next()
            e = self.int_literal()
            kind2, val2, at2 = self.peek()
            if kind2 == _TOK_OP and val2 == "^":
                raise ExprSyntaxError("exponent must be a single integer literal",
                                      at2, expected={"operator", "end of input"})
            return base ** e
        return base

    def int_literal(self):
        sign = 1
        kind, val, at = self.peek()
        if kind == _TOK_OP and val == "-":
            self.next()
            sign = -1
            kind, val, at = self.peek()
        if kind != _TOK_NUM or "." in val:
            raise ExprSyntaxError("exponent must be an integer literal", at,
                                  expected={"integer"})
        self.next()
        return sign * int(val)

    def atom(self):
        kind, val, at = self.next()
        if kind == _TOK_NUM:
            if "." in val:
                return Expr.rational(self.vars, Fraction(val))
            return Expr.rational(self.vars, int(val))
        if kind == _TOK_NAME:
            nxt_kind, nxt_val, _ = self.peek()
            if nxt_kind == _TOK_OP and nxt_val == "(":
                if val not in KERNEL_NAMES:
                    raise ExprSyntaxError(
                        f"unknown function {val!r}", at, expected=KERNEL_NAMES)
                self.next()
                arg = self.sum()
                self.expect_op(")")
                return Expr.kernel(val, arg)
            if val not in self.vars._index:
                raise UnknownVariable(val, at)
            return Expr.var(self.vars, val)
        if kind == _TOK_OP and val == "(":
            e = self.sum()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(f"unexpected {val!r}", at,
                              expected={"number", "variable", "("})


# ---------------------------------------------------------------------------
# module-level operation surface
# ---------------------------------------------------------------------------

def parse_expr(text: str, vars: VariableSpace) -> Expr:
    return _Parser(text, vars).parse()


def diff(e: Expr, v) -> Expr:
    return e.diff(v)


def substitute(e: Expr, bindings) -> Expr:
    return e.substitute(bindings)


def eval_at(e: Expr, p: Point) -> float:
    return float(e.eval(p))


def is_zero(e: Expr, seed=FALSIFIER_SEED) -> str:
    return e.zeroness(seed)
