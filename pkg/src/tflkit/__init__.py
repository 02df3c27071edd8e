"""tflkit: transverse feedback linearization for multi-input control-affine
systems.

Given a plant, a target manifold N with a base point x0 on it, and a
feedback rendering N invariant, the package decides local transverse
feedback linearizability through dual Pfaffian-system conditions and, when
they hold, constructs a certified transverse output, the transverse
controllability indices, the nested zero-dynamics manifolds, and the
normal-form coordinate/feedback transformation.
"""

from .expr import (Expr, Point, VariableSpace, Zeroness, diff, eval_at,
                   is_zero, parse_expr, substitute)
from .forms import (KForm, VectorField, contract, coordinate_field,
                    coordinate_form, d_of_function, exterior_derivative,
                    lie_bracket, lie_derivative, wedge)
from .pfaffian import (Flag, Membership, PfaffianIdeal, augment_with_dt,
                       derived_flag, derived_system, differential_closure,
                       ideal_membership, pointwise_span)
from .lift import (ControlSystem, LiftedSystem, ann_tangent_L, g_module,
                   involutive_closure, lift_system, s_module)
from .conditions import (ConditionReport, IndexProfile, check_con, check_dim,
                         check_inv, evaluate_conditions,
                         intersection_dimension, rho_indices, sample_on_N)
from .integrate import (SmoothMapAdapted, adapt_subordinate, adapt_to_L,
                        frobenius_integrate, subsume)
from .algorithm import (NoRelativeDegree, NormalFormData, RelativeDegree,
                        TFLReport, TransverseOutput, ZeroDynFlag,
                        dual_rd_check, normal_form, run_tfl,
                        vector_relative_degree, zero_dynamics_manifold)
from .problem import (ProblemFile, cmd_check, cmd_solve, load_problem,
                      loads_problem)
from . import errors

__version__ = "0.1.0"
