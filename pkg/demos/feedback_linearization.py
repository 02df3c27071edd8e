"""The point-target degeneration: with N = {x0}, transverse feedback
linearization collapses to exact full-state feedback linearization.

On the three-state integrator chain the construction recovers the flat
output x1 and the identity normal form; on the double integrator with the
zero-velocity axis as target it returns the single output x2 with relative
degree 1.

Run:  python demos/feedback_linearization.py
"""

from tflkit import run_tfl
from tflkit.expr import VariableSpace, parse_expr
from tflkit.lift import ControlSystem


def chain():
    vs = VariableSpace.canonical(3, 1)
    E = lambda s: parse_expr(s, vs)
    return ControlSystem(vs, [E("x2"), E("x3"), E("0")],
                         [[E("0"), E("0"), E("1")]],
                         [E("x1"), E("x2"), E("x3")], [0, 0, 0], [E("0")])


def double_integrator():
    vs = VariableSpace.canonical(2, 1)
    E = lambda s: parse_expr(s, vs)
    return ControlSystem(vs, [E("x2"), E("0")], [[E("0"), E("1")]],
                         [E("x2")], [1, 0], [E("0")])


def show(name, sys):
    print(f"== {name} ==")
    rep = run_tfl(sys)
    out = rep.output
    print("  indices: rho =", tuple(rep.conditions.indices.rho),
          " kappa =", tuple(rep.conditions.indices.kappa))
    for c, k in zip(out.components, out.kappa):
        print(f"  output (relative degree {k}): {c}")
    nf = rep.normal_form
    print("  xi towers:", [[str(c) for c in t] for t in nf.xi])
    print("  eta:", [str(c) for c in nf.eta] or "(none)")
    print("  beta at x0:", nf.beta.tolist())
    print()


if __name__ == "__main__":
    show("integrator chain, N = {0}", chain())
    show("double integrator, N = {x2 = 0}", double_integrator())
