"""Error norms, convergence rates, and functional-analytic diagnostics.

The diagnostics realize three constants of the discretization:

  * infsup_discrete: extreme singular values of the space-time form after
    normalizing trial and test sides by their natural norms (both are 1 for
    this pair of spaces);
  * cs_constant: the norm-equivalence constant between the true test norm
    (with ||X||_V) and the computable one (with ||Pi_q X||_V), obtained as a
    generalized eigenvalue between the two Gram matrices;
  * cfl_constant: k_max * lambda_max(K, M), the quantity whose boundedness
    keeps cs_constant uniform under refinement.

Dual norms on V_h are spectral: ||w||_{H^-1}^2 = w^T M K^-1 M w.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import fem
from .solver import assemble_bilinear, global_layout
from .timegrid import ReferenceBlocks, TemporalBasis, gauss_rule, _segments

DIAGNOSTIC_GUARD = 2000


@dataclass
class ErrorReport:
    err_u1_L2V: float
    err_u2_nodal_max: float
    err_u2_nodal_final: float
    per_node: np.ndarray

    def to_dict(self):
        return {
            "err_u1_L2V": self.err_u1_L2V,
            "err_u2_nodal_max": self.err_u2_nodal_max,
            "err_u2_nodal_final": self.err_u2_nodal_final,
        }


@dataclass
class DiagnosticsReport:
    c_B: float
    C_B: float
    c_S: float
    C_CFL: float

    def to_dict(self):
        return {"c_B": self.c_B, "C_B": self.C_B, "c_S": self.c_S, "C_CFL": self.C_CFL}


def error_norms(solution, problem, time_quad=None, space_quad=None):
    """L2(V) error of U1 and nodal H errors of U2 against the exact solution.

    Both errors integrate the true pointwise difference: the V part compares
    discrete gradients with the exact gradient at spatial quadrature points,
    the nodal part integrates (U2 - u(., t_n))^2 directly.
    """
    if problem.exact is None:
        raise ValueError("error computation requires an exact solution")
    space, part, q = solution.space, solution.partition, solution.q
    if time_quad is None:
        time_quad = gauss_rule(q + 4)
    if space_quad is None:
        space_quad = space.degree + 4
    x, w, B, D = space.line_tables(space_quad)
    trial = TemporalBasis(q, "legendre")

    err1_sq = 0.0
    for i in range(part.num_intervals):
        a, b = part.nodes[i], part.nodes[i + 1]
        k = float(part.widths[i])
        C = solution.u1[i]  # (q+1, dof)
        for s0, s1 in _segments(a, b, problem.time_breakpoints):
            ds = s1 - s0
            taus = (s0 - a) / k + time_quad.points * (ds / k)
            pvals = trial.eval_all(taus)              # (q+1, nt)
            coeffs = pvals.T @ C                      # (nt, dof)
            for g, (tau, wt) in enumerate(zip(time_quad.points, time_quad.weights)):
                t = s0 + ds * tau
                if space.dimension == 1:
                    gh = D.T @ coeffs[g]
                    ge = problem.exact.grad(x, t)
                    sp = np.sum(w * (gh - ge) ** 2)
                else:
                    d = B.shape[0]
                    Cm = coeffs[g].reshape(d, d)
                    gx = D.T @ Cm @ B
                    gy = B.T @ Cm @ D
                    ex, ey = problem.exact.grad(x[:, None], x[None, :], t)
                    sp = np.sum(np.outer(w, w) * ((gx - ex) ** 2 + (gy - ey) ** 2))
                err1_sq += wt * ds * sp

    # Nodal error of U2 against the projected exact trace.  The projection
    # realizes the exact trace in the discrete H = V_h, matching the
    # semidiscrete superconvergence statement; measuring against u itself
    # would re-add the best-approximation floor ~ h^(p+1) that the nodal
    # component cannot beat.
    Bw = B * w
    nn = part.num_intervals + 1
    per_node = np.empty(nn)
    for nidx in range(nn):
        t = part.nodes[nidx]
        if space.dimension == 1:
            loadv = Bw @ problem.exact.u(x, t)
        else:
            loadv = (Bw @ problem.exact.u(x[:, None], x[None, :], t) @ Bw.T).ravel()
        diff = solution.u2[nidx] - scipy.linalg.cho_solve(space.mass_cho(), loadv)
        per_node[nidx] = np.sqrt(float(diff @ space.mass @ diff))

    return ErrorReport(
        err_u1_L2V=float(np.sqrt(err1_sq)),
        err_u2_nodal_max=float(per_node.max()),
        err_u2_nodal_final=float(per_node[-1]),
        per_node=per_node,
    )


def fit_rate(pairs):
    """Least-squares slope of log(error) against log(k)."""
    pairs = [(float(k), float(e)) for k, e in pairs]
    if len(pairs) < 2:
        raise ValueError("need at least two (k, error) pairs")
    if any(k <= 0.0 or e <= 0.0 for k, e in pairs):
        raise ValueError("rate fitting needs positive step sizes and errors")
    logk = np.log([k for k, _ in pairs])
    loge = np.log([e for _, e in pairs])
    return float(np.polyfit(logk, loge, 1)[0])


def _dual_gram(space):
    """Gram matrix of the discrete H^-1 norm: M K^-1 M."""
    Kinv_M = scipy.linalg.cho_solve(space.stiffness_cho(), space.mass)
    G = space.mass @ Kinv_M
    return 0.5 * (G + G.T)


def _check_guard(space, partition, q):
    dim = (partition.num_intervals * (q + 1) + 1) * space.dof_count
    if dim > DIAGNOSTIC_GUARD:
        raise ValueError(
            "diagnostics limited to %d space-time unknowns, got %d"
            % (DIAGNOSTIC_GUARD, dim))
    return dim


def gram_trial(space, partition, q):
    """Gram of the trial norm: ||y1||_{L2(V)}^2 + ||y2||_H^2, block diagonal."""
    N = partition.num_intervals
    dof = space.dof_count
    dim, trial_slice, u2_slice, _, _ = global_layout(N, q, dof)
    G = np.zeros((dim, dim))
    for i in range(N):
        k = float(partition.widths[i])
        for m in range(q + 1):
            s = trial_slice(i, m)
            G[s, s] = (k / (2 * m + 1)) * space.stiffness
    G[u2_slice, u2_slice] = space.mass
    return G


def gram_test(space, partition, q, projected):
    """Gram of the test norm over the nodal test layout.

    The squared norm is sum_i int_{I_i} (||dX/dt||_{H^-1}^2 + ||Y||_V^2) ds
    + ||X(0)||_H^2 with Y = Pi_q X when projected, Y = X otherwise.
    """
    N = partition.num_intervals
    dof = space.dof_count
    dim, _, _, test_slice, node_block = global_layout(N, q, dof)
    rb = ReferenceBlocks(q)
    if projected:
        r = np.arange(q + 1)
        Lq = rb.L[:, : q + 1]
        vterm = Lq @ np.diag(1.0 / (2 * r + 1)) @ Lq.T
    else:
        vterm = rb.GL2
    dualM = _dual_gram(space)
    K = space.stiffness
    G = np.zeros((dim, dim))
    for i in range(N):
        k = float(partition.widths[i])
        for j in range(q + 2):
            rows = test_slice(i, j)
            for jp in range(q + 2):
                cols = test_slice(i, jp)
                G[rows, cols] += (rb.E[j, jp] / k) * dualM + k * vterm[j, jp] * K
    s = node_block(0) * dof
    sl = slice(s, s + dof)
    G[sl, sl] += space.mass
    return G


def infsup_discrete(space, partition, q):
    """Extreme singular values (c_B, C_B) of the norm-normalized form."""
    _check_guard(space, partition, q)
    B = assemble_bilinear(space, partition, q)
    GY = gram_trial(space, partition, q)
    GX = gram_test(space, partition, q, projected=True)
    try:
        Lx = scipy.linalg.cholesky(GX, lower=True)
        Ly = scipy.linalg.cholesky(GY, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise RuntimeError("norm Gram matrix is not positive definite") from exc
    A = scipy.linalg.solve_triangular(Lx, B, lower=True)
    A = scipy.linalg.solve_triangular(Ly, A.T, lower=True).T
    svals = np.linalg.svd(A, compute_uv=False)
    return float(svals.min()), float(svals.max())


def cs_constant(space, partition, q):
    """Equivalence constant between the true and projected test norms."""
    _check_guard(space, partition, q)
    Gc = gram_test(space, partition, q, projected=False)
    Gd = gram_test(space, partition, q, projected=True)
    vals = scipy.linalg.eigh(Gc, Gd, eigvals_only=True)
    return float(np.sqrt(vals[-1]))


def cfl_constant(space, k_max):
    """k_max times the largest generalized eigenvalue of (K, M)."""
    lam_max = float(fem.spectral(space).eigenvalues[-1])
    return float(k_max) * lam_max


def stability_check(solution, problem, c_s, time_quad=None):
    """Evaluate both sides of the discrete stability bound.

    Returns a dict with lhs = ||U1||_{L2(V)}^2 + ||U2^(N)||_H^2 and
    rhs = c_s^2 ||f||_{L2(H^-1)}^2 + ||u0||_H^2, all realized on V_h.
    """
    if problem.impulses:
        raise ValueError("stability bound implemented for impulse-free forcing")
    space, part, q = solution.space, solution.partition, solution.q
    if time_quad is None:
        time_quad = gauss_rule(q + 4)
    u1_sq = 0.0
    for i in range(part.num_intervals):
        k = float(part.widths[i])
        for m in range(q + 1):
            c = solution.u1[i, m]
            u1_sq += (k / (2 * m + 1)) * float(c @ space.stiffness @ c)
    u2N_sq = float(solution.u2[-1] @ space.mass @ solution.u2[-1])
    u0_sq = float(solution.u2[0] @ space.mass @ solution.u2[0])
    f_sq = 0.0
    if problem.rhs is not None:
        for i in range(part.num_intervals):
            a, b = part.nodes[i], part.nodes[i + 1]
            for s0, s1 in _segments(a, b, problem.time_breakpoints):
                ds = s1 - s0
                for tau, w in zip(time_quad.points, time_quad.weights):
                    t = s0 + ds * tau
                    if space.dimension == 1:
                        load = fem.load_vector(space, lambda xx: problem.rhs(xx, t))
                    else:
                        load = fem.load_vector(space, lambda xx, yy: problem.rhs(xx, yy, t))
                    f_sq += (w * ds) * float(load @ scipy.linalg.cho_solve(
                        space.stiffness_cho(), load))
    lhs = u1_sq + u2N_sq
    rhs = c_s ** 2 * f_sq + u0_sq
    return {
        "lhs": lhs,
        "rhs": rhs,
        "u1_L2V_sq": u1_sq,
        "u2_final_H_sq": u2N_sq,
        "f_dual_sq": f_sq,
        "u0_H_sq": u0_sq,
        "satisfied": bool(lhs <= rhs * (1.0 + 1e-9)),
    }
