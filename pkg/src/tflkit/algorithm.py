"""The transverse feedback linearization driver.

Walks the flag from k = kappa_1 down to 1, integrating a closure and
harvesting new vanishing components exactly at the distinct transverse
controllability indices, builds the nested zero-dynamics manifolds, verifies
the produced output by the direct Lie-derivative test and by the dual
membership test, asserts that the final zero-dynamics manifold is N, and
assembles the normal-form transformation.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import (CertificateMismatch, CompletionFailed,
                     IndependenceViolation)
from .expr import Expr, Point, Zeroness
from .forms import d_of_function
from .lift import ControlSystem, LiftedSystem, lift_system
from .pfaffian import (Membership, augment_with_dt, derived_flag,
                       ideal_membership)
from .conditions import (ConditionReport, compute_closures,
                         evaluate_conditions)
from .integrate import (adapt_subordinate, adapt_to_L,
                        frobenius_integrate)
from . import numlin

__all__ = [
    "RelativeDegree",
    "NoRelativeDegree",
    "TransverseOutput",
    "ZeroDynFlag",
    "NormalFormData",
    "TFLReport",
    "vector_relative_degree",
    "dual_rd_check",
    "zero_dynamics_manifold",
    "run_tfl",
    "normal_form",
]


@dataclass
class RelativeDegree:
    kappa: list
    decoupling: np.ndarray
    warnings: list = dfield(default_factory=list)


@dataclass
class NoRelativeDegree:
    reason: str
    warnings: list = dfield(default_factory=list)


@dataclass
class TransverseOutput:
    components: list
    kappa: list
    decoupling: np.ndarray
    provenance: list = dfield(default_factory=list)


@dataclass
class ZeroDynFlag:
    """Manifolds Z^(kappa_1+1) down to Z^(1), one entry per level k holding
    the defining functions (empty list = the whole state space)."""
    levels: dict  # k -> list of Expr


@dataclass
class NormalFormData:
    xi: list          # list of towers, tower i = [h_i, L_f h_i, ...]
    eta: list         # completion coordinate functions
    alpha: list       # L_f^{kappa_i} h^i per output
    beta: np.ndarray  # decoupling matrix at x0 (rows = outputs)
    beta_sym: list    # symbolic decoupling rows
    jacobian_condition: float


@dataclass
class TFLReport:
    system_summary: dict
    conditions: ConditionReport
    flag_counts: tuple
    flag_ranks_p0: tuple
    closure_counts: tuple
    output: TransverseOutput | None
    zero_dynamics: ZeroDynFlag | None
    normal_form: NormalFormData | None
    verified: bool
    warnings: list = dfield(default_factory=list)

    @property
    def success(self):
        return (self.conditions.all_hold and self.output is not None
                and self.verified)


def vector_relative_degree(sys: ControlSystem, h, x0: Point = None):
    """Direct Lie-derivative relative degree test at x0.

    kappa_i is the least r+1 for which some L_{g_j} L_f^r h^i is not the
    zero function; all lower mixed derivatives must be identically zero and
    the decoupling matrix must have full row rank at x0.  Inconclusive zero
    tests poison the certificate and yield NoRelativeDegree.
    """
    if x0 is None:
        x0 = sys.x0_point()
    m = sys.vars.m
    n = sys.vars.n
    warnings = []
    grads = np.array([sys.grad_at_x0(hi) for hi in h])
    if numlin.rank(grads) != len(h):
        raise IndependenceViolation(
            "output components have dependent differentials at x0")
    kappa = []
    rows = []
    for hi in h:
        cur = hi
        found = None
        for r in range(n + 1):
            lg = [sys.lie_g(j, cur) for j in range(m)]
            states = [lg_j.zeroness() for lg_j in lg]
            if any(z == Zeroness.INCONCLUSIVE for z in states):
                return NoRelativeDegree(
                    "a mixed Lie derivative has an inconclusive zero test",
                    warnings)
            if any(z == Zeroness.NONZERO for z in states):
                found = r + 1
                rows.append([float(lg_j.eval(x0)) for lg_j in lg])
                break
            cur = sys.lie_f(cur)
        if found is None:
            return NoRelativeDegree(
                f"no input reaches output '{hi}' within {n} derivatives",
                warnings)
        kappa.append(found)
    D = np.array(rows)
    if numlin.rank(D) != len(h):
        return NoRelativeDegree(
            "decoupling matrix is row-rank deficient at x0", warnings)
    return RelativeDegree(kappa=kappa, decoupling=D, warnings=warnings)


def dual_rd_check(ls: LiftedSystem, flag, closures, h, kappa1: int) -> bool:
    """Uniform dual test: dh^i in the closure of <I^(kappa1-1), dt> and
    span{dh}_p0 meeting span{I^(kappa1)_p0, dt_p0} trivially."""
    closure = closures[kappa1 - 1]
    for hi in h:
        if ideal_membership(d_of_function(hi), closure) != Membership.MEMBER:
            return False
    raw = augment_with_dt(flag.entry(kappa1))
    dh_rows = np.array([d_of_function(hi).at(ls.p0) for hi in h])
    span = raw.at(ls.p0)
    from .forms import coordinate_form
    dt_row = coordinate_form(ls.vars, 0).at(ls.p0)
    span = np.vstack([span, dt_row[None, :]]) if span.size else dt_row[None, :]
    return numlin.intersection_dim(dh_rows, span) == 0


def zero_dynamics_manifold(sys: ControlSystem, h, kappa):
    """Defining functions {L_f^j h^i : 0 <= j <= kappa_i - 1}."""
    defs = []
    for hi, ki in zip(h, kappa):
        cur = hi
        for _ in range(ki):
            defs.append(cur)
            cur = sys.lie_f(cur)
    x0 = sys.x0_point()
    grads = np.array([sys.grad_at_x0(d) for d in defs])
    if numlin.rank(grads) != len(defs):
        raise IndependenceViolation(
            "zero-dynamics defining functions are dependent at x0")
    return defs


def _z_equals_n(sys: ControlSystem, z_defs, samples, warnings):
    """Local set equality of Z^(1) and N: equal codimension at x0 plus
    mutual vanishing (reduction when exact, samples otherwise)."""
    if len(z_defs) != len(sys.N_defs):
        return False
    for phi in z_defs:
        v = sys.vanishes_on_N(phi, samples=samples)
        if v == Zeroness.NONZERO:
            return False
        if v == Zeroness.INCONCLUSIVE:
            warnings.append(
                f"vanishing of '{phi}' on N certified by samples only")
    # reverse containment at sample points of Z^(1)
    z_samples = _newton_samples_for(sys, z_defs, count=4)
    if z_samples is None:
        warnings.append("could not sample Z^(1); reverse containment "
                        "checked at x0 only")
        z_samples = [sys.x0_point()]
    for p in z_samples:
        for phi in sys.N_defs:
            if abs(float(phi.eval(p))) > 1e-8:
                return False
    return True


def _newton_samples_for(sys: ControlSystem, defs, count=4, seed=3,
                        radius=0.05):
    import random
    rng = random.Random(seed)
    state_idx = list(sys.vars.state_indices())
    grads = [[phi.diff(i) for i in state_idx] for phi in defs]
    x0 = np.array([float(v) for v in sys.x0])
    out = []
    attempts = 0
    while len(out) < count and attempts < 40 * count:
        attempts += 1
        x = x0 + np.array([rng.gauss(0.0, radius) for _ in range(len(x0))])
        ok = None
        for _ in range(50):
            vals_pt = [0.0] * sys.vars.total
            for i, xi in enumerate(x):
                vals_pt[1 + sys.vars.m + i] = float(xi)
            p = Point(sys.vars, vals_pt)
            vals = np.array([float(phi.eval(p)) for phi in defs])
            if np.max(np.abs(vals)) <= 1e-12:
                ok = p
                break
            J = np.array([[float(g.eval(p)) for g in row] for row in grads])
            step, *_ = np.linalg.lstsq(J, vals, rcond=None)
            x = x - step
        if ok is not None:
            out.append(ok)
    return out if len(out) == count else None


def normal_form(sys: ControlSystem, h, kappa) -> NormalFormData:
    """Lie-derivative towers, greedy coordinate completion, and the
    linearizing feedback data."""
    vars0 = sys.vars
    x0 = sys.x0_point()
    xi = []
    alpha = []
    beta_sym = []
    for hi, ki in zip(h, kappa):
        tower = [hi]
        for _ in range(ki - 1):
            tower.append(sys.lie_f(tower[-1]))
        xi.append(tower)
        alpha.append(sys.lie_f(tower[-1]))
        beta_sym.append([sys.lie_g(j, tower[-1]) for j in range(vars0.m)])
    rows = [sys.grad_at_x0(c) for tower in xi for c in tower]
    eta = []
    for i in range(vars0.n):
        if len(rows) == vars0.n:
            break
        cand = Expr.var_index(vars0, 1 + vars0.m + i)
        row = sys.grad_at_x0(cand)
        if numlin.rank(np.vstack(rows + [row])) > len(rows):
            eta.append(cand)
            rows.append(row)
    if len(rows) != vars0.n:
        raise CompletionFailed(
            "no coordinate completion reaches full rank at x0")
    jac = np.vstack(rows)
    cond = float(np.linalg.cond(jac))
    if numlin.rank(jac) != vars0.n:
        raise CompletionFailed("coordinate chart is singular at x0")
    beta = np.array([[float(b.eval(x0)) for b in row] for row in beta_sym])
    return NormalFormData(xi=xi, eta=eta, alpha=alpha, beta=beta,
                          beta_sym=beta_sym, jacobian_condition=cond)


def run_tfl(sys: ControlSystem, hints=None, n_samples=8, radius=0.1,
            seed=0, ansatz_degree=2, combo_degree=1,
            conditions_only=False) -> TFLReport:
    """Execute the full algorithm and re-verify its certificate."""
    hints = {int(k): [e for e in v] for k, v in (hints or {}).items()}
    warnings = []
    ls = lift_system(sys)
    flag = derived_flag(ls.I0)
    nn = sys.vars.n - sys.n_star
    closures = compute_closures(ls, flag, nn)
    report_cond = evaluate_conditions(ls, flag, n_samples=n_samples,
                                      radius=radius, seed=seed)
    warnings.extend(report_cond.warnings)
    flag_ranks = tuple(int(numlin.rank(e.at(ls.p0))) for e in flag.entries)
    summary = {
        "n": sys.vars.n, "m": sys.vars.m, "n_star": sys.n_star,
        "states": list(sys.vars.state_names),
        "inputs": list(sys.vars.input_names),
    }
    base_report = dict(
        system_summary=summary, conditions=report_cond,
        flag_counts=flag.generator_counts(), flag_ranks_p0=flag_ranks,
        closure_counts=tuple(len(c) for c in closures))
    if conditions_only or not report_cond.all_hold:
        return TFLReport(output=None, zero_dynamics=None, normal_form=None,
                         verified=False, warnings=warnings, **base_report)

    rho = list(report_cond.indices.rho)
    kappa_target = list(report_cond.indices.kappa)
    kappa1 = kappa_target[0] if kappa_target else 0
    rho_at = lambda i: rho[i] if 0 <= i < len(rho) else 0
    samples = report_cond.samples_used

    h = []
    h_kappa = []
    h_prov = []
    z_levels = {kappa1 + 1: []}
    t_expr = Expr.var_index(sys.vars, 0)
    for k in range(kappa1, 0, -1):
        if rho_at(k - 1) == rho_at(k):
            z_levels[k] = z_levels[k + 1]
            continue
        mu = rho_at(k - 1) - rho_at(k)
        F = frobenius_integrate(closures[k - 1], ls,
                                hints=hints.get(k - 1, ()), k=k - 1,
                                combo_degree=combo_degree, warnings=warnings)
        F = adapt_subordinate(F, h, h_kappa, ls, k - 1, samples=samples)
        target_vanish = 1 + sum(rho_at(i) for i in range(k - 1, nn))
        F = adapt_to_L(F, ls, target_vanish, degree=ansatz_degree,
                       samples=samples, warnings=warnings)
        new = [c for c in F.vanishing()
               if c != t_expr and not any(c == te for te in _towers(sys, h, h_kappa, k - 1))]
        if len(new) != mu:
            raise CertificateMismatch(
                f"expected {mu} new vanishing components at level {k}, "
                f"found {len(new)}")
        h = h + new
        h_kappa = h_kappa + [k] * mu
        h_prov = h_prov + [f"harvested at k={k}"] * mu
        rd = vector_relative_degree(sys, h)
        if isinstance(rd, NoRelativeDegree) or rd.kappa != h_kappa:
            got = None if isinstance(rd, NoRelativeDegree) else rd.kappa
            raise CertificateMismatch(
                f"loop invariant failed at level {k}: partial output has "
                f"relative degree {got}, expected {h_kappa}")
        z_levels[k] = zero_dynamics_manifold(sys, h, h_kappa)

    if sorted(h_kappa, reverse=True) != kappa_target:
        raise CertificateMismatch(
            f"harvested tower lengths {h_kappa} do not match the "
            f"transverse controllability indices {kappa_target}")

    # certificate closure: re-verify from scratch
    verified = True
    rd = vector_relative_degree(sys, h)
    if isinstance(rd, NoRelativeDegree):
        raise CertificateMismatch(f"final output rejected: {rd.reason}")
    if rd.kappa != h_kappa or sum(rd.kappa) != nn:
        raise CertificateMismatch(
            f"final relative degree {rd.kappa} does not certify; expected "
            f"{h_kappa} with sum {nn}")
    for hi in h:
        v = sys.vanishes_on_N(hi, samples=samples)
        if v == Zeroness.NONZERO:
            raise CertificateMismatch(f"output '{hi}' does not vanish on N")
        if v == Zeroness.INCONCLUSIVE:
            warnings.append(
                f"vanishing of output '{hi}' on N certified by samples only")
    for c in sorted(set(h_kappa), reverse=True):
        group = [hi for hi, ki in zip(h, h_kappa) if ki == c]
        if not dual_rd_check(ls, flag, closures, group, c):
            raise CertificateMismatch(
                f"dual relative-degree check fails for the kappa={c} group")
    if not _z_equals_n(sys, z_levels[1], samples, warnings):
        raise CertificateMismatch(
            "the final zero-dynamics manifold does not coincide with N")
    nf = normal_form(sys, h, h_kappa)
    output = TransverseOutput(components=h, kappa=h_kappa,
                              decoupling=rd.decoupling, provenance=h_prov)
    return TFLReport(output=output,
                     zero_dynamics=ZeroDynFlag(levels=z_levels),
                     normal_form=nf, verified=verified, warnings=warnings,
                     **base_report)


def _towers(sys, h, h_kappa, k):
    out = []
    for hi, ki in zip(h, h_kappa):
        cur = hi
        for _ in range(ki - k):
            out.append(cur)
            cur = sys.lie_f(cur)
    return out
