"""Random controllable LTI systems with an invariant subspace, plus the
matrix-rank reduction of the transverse controllability condition."""

import random

import numpy as np

from tflkit.expr import Expr, VariableSpace
from tflkit.lift import ControlSystem


def random_lti_instance(rng: random.Random):
    """(ControlSystem, A, B, r): controllable pair with N = {x_1..x_r = 0}
    rendered invariant by a linear feedback."""
    while True:
        n = rng.choice((3, 3, 4))
        m = rng.choice((1, 2))
        r = rng.randint(1, n)
        Acl = np.array([[rng.randint(-2, 2) for _ in range(n)]
                        for _ in range(n)], dtype=object)
        # closed-loop invariance of span{e_{r+1}..e_n}
        for i in range(r):
            for j in range(r, n):
                Acl[i][j] = 0
        B = np.array([[rng.randint(-2, 2) for _ in range(m)]
                      for _ in range(n)], dtype=object)
        F = np.array([[rng.randint(-1, 1) for _ in range(n)]
                      for _ in range(m)], dtype=object)
        A = Acl - B @ F
        kal = np.hstack([np.linalg.matrix_power(A.astype(float), j)
                         @ B.astype(float) for j in range(n)])
        if np.linalg.matrix_rank(kal) != n:
            continue
        vs = VariableSpace.canonical(n, m)
        x = [Expr.var_index(vs, 1 + m + j) for j in range(n)]
        f = [sum((Expr.rational(vs, int(A[i][j])) * x[j] for j in range(n)),
                 Expr.zero(vs)) for i in range(n)]
        g = [[Expr.rational(vs, int(B[i][j])) for i in range(n)]
             for j in range(m)]
        u_star = [sum((Expr.rational(vs, int(F[j][i])) * x[i]
                       for i in range(n)), Expr.zero(vs))
                  for j in range(m)]
        defs = [x[i] for i in range(r)]
        sysm = ControlSystem(vs, f, g, defs, [0] * n, u_star)
        return sysm, A.astype(float), B.astype(float), r


def rank_test_oracle(A, B, r):
    """rank [basis(N) | B | AB | ... | A^(r-1) B] == n."""
    n = A.shape[0]
    n_basis = np.eye(n)[:, r:]
    blocks = [n_basis] if n_basis.shape[1] else []
    for j in range(r):
        blocks.append(np.linalg.matrix_power(A, j) @ B)
    stacked = np.hstack(blocks)
    return np.linalg.matrix_rank(stacked, tol=1e-9) == n
