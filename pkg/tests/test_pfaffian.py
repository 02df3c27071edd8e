"""Pfaffian ideals: membership, derived systems, flags, closures."""

import random

import numpy as np
import pytest

import tflkit.numlin as numlin
from tflkit.errors import RegularityViolation
from tflkit.expr import Point, VariableSpace, parse_expr
from tflkit.forms import coordinate_form, d_of_function, exterior_derivative
from tflkit.lift import g_module, s_module
from tflkit.pfaffian import (Flag, Membership, PfaffianIdeal, augment_with_dt,
                             derived_flag, derived_system,
                             differential_closure, ideal_membership,
                             pointwise_span, two_form_membership)

VS = VariableSpace.canonical(7, 2)
E = lambda s: parse_expr(s, VS)
DX = lambda nm: coordinate_form(VS, nm)


def simple_point(vs, **kw):
    vals = {nm: 0 for nm in vs.names}
    vals.update(kw)
    return Point.from_map(vs, vals)


class TestMembership:
    def test_worked_generator_in_augmented_ideal(self, sec5_flag):
        # The dx5+dx7 direction lives in <I^(1), dt>; the bare I^(1)
        # generators carry dt terms, so the dt-augmented ideal is the right
        # home for the coordinate-only covector.
        aug = augment_with_dt(sec5_flag.entry(1))
        assert ideal_membership(DX("x5") + DX("x7"), aug) == Membership.MEMBER

    def test_dt_not_in_system_ideal(self, sec5_lifted):
        assert ideal_membership(DX("t"), sec5_lifted.I0) == Membership.NON_MEMBER

    def test_combination_by_construction(self, sec5_lifted):
        om = sec5_lifted.omega
        p0 = sec5_lifted.p0
        ideal = PfaffianIdeal(om[:2], p0)
        cand = om[0].scale(E("x1")) + om[1]
        assert ideal_membership(cand, ideal) == Membership.MEMBER

    def test_zero_form_is_member(self, sec5_lifted):
        from tflkit.forms import KForm
        assert ideal_membership(KForm.zero(VS, 1), sec5_lifted.I0) \
            == Membership.MEMBER


class TestDerivedSystem:
    def test_worked_first_step_matches_bracket_dual(self, sec5_lifted,
                                                    sec5_flag):
        """span{I^(1), dt}_p équals Ann(U + S^0)_p: the bracket-module dual
        gives an independent oracle for the derived system."""
        ls = sec5_lifted
        I1 = sec5_flag.entry(1)
        assert len(I1) == 5
        fields = ls.U_module + s_module(ls, 0)
        rng = random.Random(2)
        for _ in range(6):
            p = Point(VS, [v + random.Random(rng.random()).uniform(-0.2, 0.2)
                           for v in ls.p0.as_float_tuple()])
            field_rows = np.array([X.at(p) for X in fields])
            span = np.vstack([I1.at(p),
                              coordinate_form(VS, 0).at(p)[None, :]])
            # every covector of <I1, dt> annihilates U + S^0
            assert np.max(np.abs(span @ field_rows.T)) < 1e-8
            assert numlin.rank(span) + numlin.rank(field_rows) == VS.total

    def test_exact_generator_fixed_point(self, sec5_lifted):
        ideal = PfaffianIdeal([DX("x1")], sec5_lifted.p0)
        out = derived_system(ideal)
        assert len(out) == 1
        assert ideal_membership(DX("x1"), out) == Membership.MEMBER

    def test_terminal_step_reaches_zero(self, sec5_flag):
        assert len(derived_system(sec5_flag.entry(2))) == 0

    def test_generators_nest(self, sec5_flag):
        for k in range(1, len(sec5_flag.entries)):
            for g in sec5_flag.entry(k).generators:
                assert ideal_membership(g, sec5_flag.entry(k - 1)) \
                    == Membership.MEMBER


class TestDerivedFlag:
    def test_worked_counts(self, sec5_flag):
        # The bracket modules (below) force rank 3 at the second step:
        # a widely quoted two-generator count for this system drops one
        # direction.
        assert sec5_flag.generator_counts() == (7, 5, 3, 0)

    def test_worked_counts_bracket_oracle(self, sec5_lifted, sec5_flag):
        """dim I^(k) = dim M - dim(D^(0) + S^(k-1)) at generic points."""
        ls = sec5_lifted
        rng = random.Random(4)
        for k in (1, 2, 3):
            fields = [ls.Y] + ls.U_module + s_module(ls, k - 1)
            p = Point(VS, [v + rng.uniform(0.05, 0.3)
                           for v in ls.p0.as_float_tuple()])
            rows = np.array([X.at(p) for X in fields])
            expect = VS.total - numlin.rank(rows)
            assert len(sec5_flag.entry(k)) == expect

    def test_already_differential(self, sec5_lifted):
        ideal = PfaffianIdeal([DX("x1"), DX("x2")], sec5_lifted.p0)
        flag = derived_flag(ideal)
        assert len(flag.entries) == 1

    def test_lti_chain(self):
        vs = VariableSpace.canonical(3, 1)
        dt = coordinate_form(vs, 0)
        Ep = lambda s: parse_expr(s, vs)
        om = [coordinate_form(vs, "x1") - dt.scale(Ep("x2")),
              coordinate_form(vs, "x2") - dt.scale(Ep("x3")),
              coordinate_form(vs, "x3") - dt.scale(Ep("u1"))]
        p0 = simple_point(vs)
        flag = derived_flag(PfaffianIdeal(om, p0))
        assert flag.generator_counts() == (3, 2, 1, 0)

    def test_counts_non_increasing_and_ranks(self, sec5_flag, sec5_lifted):
        counts = sec5_flag.generator_counts()
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        for entry, count in zip(sec5_flag.entries, counts):
            assert numlin.rank(entry.at(sec5_lifted.p0)) == count


class TestClosure:
    def test_worked_k2_closure(self, sec5_lifted, sec5_closures):
        cl = sec5_closures[2]
        assert len(cl) == 2
        p0 = sec5_lifted.p0
        target = np.array([(DX("x5") + DX("x7")).at(p0), DX("t").at(p0)])
        got = cl.at(p0)
        assert numlin.rank(got) == 2
        assert numlin.rank(np.vstack([got, target])) == 2

    def test_dt_alone_is_closed(self, sec5_lifted):
        ideal = PfaffianIdeal([DX("t")], sec5_lifted.p0)
        assert len(differential_closure(ideal)) == 1

    def test_worked_k1_closure_contains_map_differentials(self, sec5_lifted,
                                                          sec5_closures):
        """The k=1 closure must contain the differential of every component
        of the known integrated map for this system."""
        cl = sec5_closures[1]
        assert len(cl) == 6
        comps = ["x5 + x7", "x5 + x6", "1/2*x1^2 + x2*x7 - 2", "x2",
                 "x3*exp(-x4) - 4", "t"]
        for s in comps:
            assert ideal_membership(d_of_function(E(s)), cl) \
                == Membership.MEMBER

    def test_closure_is_differential(self, sec5_closures):
        for cl in sec5_closures[:4]:
            for g in cl.generators:
                assert two_form_membership(exterior_derivative(g), cl) \
                    == Membership.MEMBER


class TestPointwiseSpan:
    def test_terminal_is_empty(self, sec5_flag, sec5_lifted):
        m = pointwise_span(sec5_flag.entry(3), sec5_lifted.p0)
        assert m.shape[0] == 0

    def test_dt_row(self, sec5_lifted):
        ideal = PfaffianIdeal([DX("t")], sec5_lifted.p0)
        m = pointwise_span(ideal, sec5_lifted.p0)
        assert m.shape == (1, VS.total)
        assert m[0, 0] == 1.0

    def test_rank_five(self, sec5_flag, sec5_lifted):
        assert pointwise_span(sec5_flag.entry(1), sec5_lifted.p0).shape[0] == 5


class TestRegularity:
    def test_degenerate_generators_rejected(self, sec5_lifted):
        # x2 vanishes at x0, so x2*dx1 is pointwise zero there
        with pytest.raises(RegularityViolation):
            PfaffianIdeal([DX("x1").scale(E("x2"))], sec5_lifted.p0)
