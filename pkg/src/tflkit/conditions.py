"""Transverse controllability indices and the three TFL conditions.

The controllability condition asks the annihilator of T_p0 L to meet the
span of the terminal ideal (plus dt) in the dt-line only; the involutivity
condition asks each such intersection to fall inside the corresponding
differential closure; the constant-dimensionality condition asks the
intersection dimensions to be the same at sampled points of L as at p0.
The last two are certified at p0 plus a finite sample set, which is a
documented soundness gap: pointwise conditions on an open set are not
finitely decidable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .errors import SamplingFailed
from .expr import Point
from .forms import coordinate_form
from .lift import ControlSystem, LiftedSystem, ann_tangent_L
from .pfaffian import PfaffianIdeal, Flag, augment_with_dt, differential_closure
from . import numlin

__all__ = [
    "IndexProfile",
    "ConditionReport",
    "sample_on_N",
    "sample_points_on_L",
    "intersection_dimension",
    "compute_closures",
    "rho_indices",
    "check_con",
    "check_dim",
    "check_inv",
    "evaluate_conditions",
]


@dataclass
class IndexProfile:
    rho: list
    kappa: list
    n_minus_nstar: int

    def __post_init__(self):
        assert all(self.kappa[i] >= self.kappa[i + 1]
                   for i in range(len(self.kappa) - 1))


@dataclass
class ConditionReport:
    con: bool
    inv: bool
    dim: bool
    indices: IndexProfile
    dim_table: dict = field(default_factory=dict)
    inv_detail: dict = field(default_factory=dict)
    samples_used: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def all_hold(self):
        return self.con and self.inv and self.dim


def sample_on_N(sys: ControlSystem, count: int, radius: float = 0.1,
                seed: int = 0, max_attempts_factor: int = 25):
    """Points on N near x0 by Newton projection of random perturbations.

    Deterministic under a fixed seed; the Newton iteration drives the
    defining functions below 1e-12 within 50 steps or the attempt is
    discarded.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = random.Random(seed)
    n = sys.vars.n
    state_idx = list(sys.vars.state_indices())
    x0 = np.array([float(v) for v in sys.x0])
    phis = sys.N_defs
    grads = [[phi.diff(i) for i in state_idx] for phi in phis]

    def newton(x):
        for _ in range(50):
            p = _state_point(sys, x)
            vals = np.array([float(phi.eval(p)) for phi in phis])
            if np.max(np.abs(vals)) <= 1e-12:
                return x
            J = np.array([[float(g.eval(p)) for g in row] for row in grads])
            step, *_ = np.linalg.lstsq(J, vals, rcond=None)
            x = x - step
        return None

    out = []
    attempts = 0
    while len(out) < count and attempts < max_attempts_factor * count:
        attempts += 1
        x = x0 + np.array([rng.gauss(0.0, radius) for _ in range(n)])
        got = newton(x)
        if got is None:
            continue
        out.append(_state_point(sys, got))
    if len(out) < count:
        raise SamplingFailed(
            f"Newton projection produced {len(out)}/{count} points on N")
    return out


def _state_point(sys: ControlSystem, x):
    """Full point of M for a state vector: t = 0, u = u*(x)."""
    vals = [0.0] * sys.vars.total
    for i, xi in enumerate(x):
        vals[1 + sys.vars.m + i] = float(xi)
    p = Point(sys.vars, vals)
    for j, us in enumerate(sys.u_star):
        vals[1 + j] = float(us.eval(p))
    return Point(sys.vars, vals)


def sample_points_on_L(sys: ControlSystem, count: int, radius: float = 0.1,
                       seed: int = 0):
    return sample_on_N(sys, count, radius, seed)


def intersection_dimension(ls: LiftedSystem, ideal: PfaffianIdeal,
                           p: Point) -> int:
    """dim( Ann(T_pL)  intersect  span{ideal_p, dt_p} )."""
    ann = ann_tangent_L(ls, p)
    dt_row = coordinate_form(ls.vars, 0).at(p)
    span = np.vstack([ideal.at(p), dt_row[None, :]]) if len(ideal) \
        else dt_row[None, :]
    return numlin.intersection_dim(ann, span)


def compute_closures(ls: LiftedSystem, flag: Flag, up_to: int):
    """Differential closures of <I^(k), dt> for k = 0..up_to; entries past
    the flag's terminal index reuse the terminal closure."""
    closures = []
    cache = {}
    for k in range(up_to + 1):
        key = min(k, flag.terminal_index)
        if key not in cache:
            cache[key] = differential_closure(
                augment_with_dt(flag.entry(key), f"I({key})+dt"))
        closures.append(cache[key])
    return closures


def _intersection_dims_at(ls, ideals, p):
    return [intersection_dimension(ls, ideal, p) for ideal in ideals]


def rho_indices(ls: LiftedSystem, flag: Flag, closures=None) -> IndexProfile:
    """rho_i = dim drop of Ann(T_p0 L) cap span{., dt} from level i to i+1;
    kappa = conjugate partition (the transverse controllability indices).

    Uses the closures' pointwise spans when available (equivalent under the
    involutivity condition); falls back to the raw dt-augmented ideals.
    """
    nn = ls.vars.n - ls.base.n_star
    if closures is None:
        ideals = [augment_with_dt(flag.entry(k)) for k in range(nn + 1)]
    else:
        ideals = closures
    dims = _intersection_dims_at(ls, ideals, ls.p0)
    rho_full = [dims[i] - dims[i + 1] for i in range(nn)]
    kappa1 = sum(1 for r in rho_full if r >= 1)
    rho0 = rho_full[0] if rho_full else 0
    kappa = [sum(1 for r in rho_full if r >= i) for i in range(1, rho0 + 1)]
    keep = min(kappa1, nn - 1) if nn > 0 else 0
    rho = rho_full[:keep + 1]
    return IndexProfile(rho=rho, kappa=kappa, n_minus_nstar=nn)


def check_con(ls: LiftedSystem, flag: Flag, closures=None) -> bool:
    """Terminal intersection is the dt line only."""
    nn = ls.vars.n - ls.base.n_star
    if closures is not None:
        terminal = closures[nn]
    else:
        terminal = differential_closure(
            augment_with_dt(flag.entry(nn), f"I({nn})+dt"))
    if intersection_dimension(ls, terminal, ls.p0) != 1:
        return False
    ann = ann_tangent_L(ls, ls.p0)
    dt_row = coordinate_form(ls.vars, 0).at(ls.p0)
    span = np.vstack([terminal.at(ls.p0), dt_row[None, :]]) \
        if len(terminal) else dt_row[None, :]
    basis = numlin.intersection_basis(ann, span)
    if basis.shape[0] != 1:
        return False
    direction = numlin.row_reduce(basis)[0]
    off_dt = np.abs(direction).copy()
    off_dt[0] = 0.0
    return bool(np.max(off_dt) <= numlin.RANK_TOL * max(1.0, np.abs(direction[0])))


def check_dim(ls: LiftedSystem, flag: Flag, samples) -> bool:
    """Intersection dimensions at every sample equal their value at p0,
    for each level of the raw dt-augmented flag."""
    if not samples:
        raise ValueError("check_dim needs at least one sample")
    nn = ls.vars.n - ls.base.n_star
    ideals = [augment_with_dt(flag.entry(k)) for k in range(nn + 1)]
    base = _intersection_dims_at(ls, ideals, ls.p0)
    for p in samples:
        if _intersection_dims_at(ls, ideals, p) != base:
            return False
    return True


def dim_table(ls: LiftedSystem, flag: Flag, samples):
    nn = ls.vars.n - ls.base.n_star
    ideals = [augment_with_dt(flag.entry(k)) for k in range(nn + 1)]
    table = {"p0": _intersection_dims_at(ls, ideals, ls.p0)}
    for i, p in enumerate(samples):
        table[f"sample{i}"] = _intersection_dims_at(ls, ideals, p)
    return table


def check_inv(ls: LiftedSystem, flag: Flag, closures, samples,
              detail=None) -> bool:
    """Each intersection with the raw ideal span lies inside the closure's
    span, at p0 and at every sample.  Levels whose dt-augmented ideal is
    already differential hold trivially and are skipped."""
    nn = ls.vars.n - ls.base.n_star
    ok = True
    for k in range(nn + 1):
        raw = augment_with_dt(flag.entry(k))
        closure = closures[k]
        if len(closure) == len(raw):
            # closure equals the ideal: containment is trivial
            if detail is not None:
                detail[k] = "differential"
            continue
        level_ok = True
        for p in [ls.p0] + list(samples):
            ann = ann_tangent_L(ls, p)
            dt_row = coordinate_form(ls.vars, 0).at(p)
            raw_span = np.vstack([raw.at(p), dt_row[None, :]])
            inter = numlin.intersection_basis(ann, raw_span)
            closure_span = np.vstack([closure.at(p), dt_row[None, :]]) \
                if len(closure) else dt_row[None, :]
            if not numlin.contained_in_span(inter, closure_span):
                level_ok = False
                break
        if detail is not None:
            detail[k] = "holds" if level_ok else "fails"
        ok = ok and level_ok
    return ok


def evaluate_conditions(ls: LiftedSystem, flag: Flag, n_samples: int = 8,
                        radius: float = 0.1, seed: int = 0) -> ConditionReport:
    """Run (Con), (Inv), (Dim) and the index computation in one sweep."""
    nn = ls.vars.n - ls.base.n_star
    closures = compute_closures(ls, flag, nn)
    samples = sample_on_N(ls.base, n_samples, radius, seed)
    warnings = []
    con = check_con(ls, flag, closures)
    inv_detail = {}
    inv = check_inv(ls, flag, closures, samples, detail=inv_detail)
    dim = check_dim(ls, flag, samples)
    if inv:
        indices = rho_indices(ls, flag, closures)
    else:
        indices = rho_indices(ls, flag, None)
        warnings.append(
            "involutivity fails: indices computed from the raw ideals are "
            "advisory only")
    if con and sum(indices.rho) != nn:
        warnings.append(
            f"controllability holds but sum(rho) = {sum(indices.rho)} != "
            f"{nn}; regularity of the flag is suspect")
    return ConditionReport(con=con, inv=inv, dim=dim, indices=indices,
                           dim_table=dim_table(ls, flag, samples),
                           inv_detail=inv_detail, samples_used=samples,
                           warnings=warnings)
