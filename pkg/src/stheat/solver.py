"""Space-time discretization of the heat equation in its weak (second) form.

Trial functions pair a time-discontinuous piecewise polynomial of degree q
(Legendre coefficients per interval, values in V_h) with one extra V_h
function carrying the final-time trace.  Test functions are continuous
piecewise polynomials of degree q+1 in time (nodal Lagrange at Gauss-Lobatto
points per interval).  Testing the form

    sum_i int_{I_i} <U1, -dX/dt + A X> ds + <U2, X(T)>
        = sum_i int_{I_i} <f, X> ds + <u0, X(0)> + sum_j <zeta_j, X(t_j)>

against all X yields one square linear system; because each interval's
interior test functions only see that interval, the system decomposes into
an interval-by-interval march (step_interval / run_decomposed) that is
algebraically identical to the coupled solve (solve_global).

On interval [a, a+k] with U1 = sum_m c_m P_m(tau), tau = (s-a)/k, testing
with X = l_j(tau) v gives for j = 0 .. q+1

    sum_m (-D[j,m] M + k G[j,m] K) c_m + delta_{j,q+1} M u2_out
        = k b_j + delta_{j,0} M u2_in + delta_{j,q+1} load(zeta),

where b_j = int_0^1 load(f(a + k tau)) l_j(tau) dtau.  The rows j <= q close
over the c_m alone; the last row then yields u2_out through a mass solve.
"""

import json

import numpy as np
import scipy.linalg

from . import fem
from .timegrid import ReferenceBlocks, TemporalBasis, gauss_rule, legendre_eval, _segments


class SpaceTimeSolution:
    """Discrete solution pair: U1 per interval, U2 at the nodes.

    u1 has shape (N, q+1, dof) holding shifted-Legendre coefficients of U1 on
    each interval; u2 has shape (N+1, dof) with u2[0] the projected initial
    datum and u2[N] the final-time component.
    """

    def __init__(self, q, partition, space, u1, u2, problem=None):
        u1 = np.asarray(u1, dtype=float)
        u2 = np.asarray(u2, dtype=float)
        N = partition.num_intervals
        dof = u2.shape[1]
        if u1.shape != (N, q + 1, dof) or u2.shape != (N + 1, dof):
            raise ValueError("solution arrays inconsistent with q=%d, N=%d" % (q, N))
        if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))):
            raise ValueError("solution contains non-finite entries")
        self.q = q
        self.partition = partition
        self.space = space
        self.u1 = u1
        self.u2 = u2
        self.problem = problem

    def u1_at(self, i, t):
        """Coefficient vector of U1 at time t inside interval i."""
        a, b = self.partition.nodes[i], self.partition.nodes[i + 1]
        return legendre_eval(self.u1[i], (a, b), t)


class LocalBlockSystem:
    """Factorized interval system for one width k (reused across intervals)."""

    def __init__(self, space, k, q):
        if k <= 0.0:
            raise ValueError("interval width must be positive")
        self.space = space
        self.k = float(k)
        self.q = int(q)
        self.blocks = ReferenceBlocks(q)
        M, K = space.mass, space.stiffness
        top_D = self.blocks.D[: q + 1]
        top_G = self.blocks.G[: q + 1]
        A = np.kron(-top_D, M) + self.k * np.kron(top_G, K)
        try:
            if q == 0:
                # A = M + (k/2) K is symmetric positive definite
                self._factor = scipy.linalg.cho_factor(A)
                self._solve = lambda rhs: scipy.linalg.cho_solve(self._factor, rhs)
            else:
                self._factor = scipy.linalg.lu_factor(A)
                self._solve = lambda rhs: scipy.linalg.lu_solve(self._factor, rhs)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            cond = float(np.linalg.cond(A))
            raise RuntimeError(
                "singular local block system for k=%g (cond ~ %.3e)" % (k, cond)) from exc

    def step(self, u2_in, moments=None, impulse_load=None):
        """Advance one interval; returns (c, u2_out) with c of shape (q+1, dof)."""
        space, k, q = self.space, self.k, self.q
        dof = space.dof_count
        u2_in = np.asarray(u2_in, dtype=float)
        rhs = np.zeros((q + 1, dof))
        if moments is not None:
            rhs += k * moments[: q + 1]
        rhs[0] += space.mass @ u2_in
        c = self._solve(rhs.ravel()).reshape(q + 1, dof)
        bottom = np.zeros(dof)
        if moments is not None:
            bottom += k * moments[q + 1]
        if impulse_load is not None:
            bottom += impulse_load
        D_last, G_last = self.blocks.D[q + 1], self.blocks.G[q + 1]
        for m in range(q + 1):
            bottom += D_last[m] * (space.mass @ c[m]) - k * G_last[m] * (space.stiffness @ c[m])
        u2_out = scipy.linalg.cho_solve(space.mass_cho(), bottom)
        return c, u2_out


def step_interval(space, interval, q, u2_in, moments=None, impulse_load=None, system=None):
    """One step of the decomposed scheme on the given interval.

    moments: reference load moments, shape (q+2, dof); see interval_moments.
    impulse_load: load vector of a jump placed at the right endpoint.
    """
    a, b = float(interval[0]), float(interval[1])
    if system is None:
        system = LocalBlockSystem(space, b - a, q)
    return system.step(u2_in, moments, impulse_load)


def interval_moments(problem, space, interval, q, rule=None):
    """Load moments b_j = int_0^1 load(f(a + k tau)) l_j(tau) dtau, shape (q+2, dof).

    Quadrature splits at the problem's temporal breakpoints so kinks inside
    the interval do not degrade accuracy.
    """
    dof = space.dof_count
    if problem.rhs is None:
        return np.zeros((q + 2, dof))
    a, b = float(interval[0]), float(interval[1])
    k = b - a
    if rule is None:
        rule = gauss_rule(q + 3)
    test = TemporalBasis(q + 1, "nodal-lagrange")
    out = np.zeros((q + 2, dof))
    for s0, s1 in _segments(a, b, problem.time_breakpoints):
        ds = s1 - s0
        for tau, w in zip(rule.points, rule.weights):
            t = s0 + ds * tau
            if problem.dimension == 1:
                load = fem.load_vector(space, lambda x: problem.rhs(x, t))
            else:
                load = fem.load_vector(space, lambda x, y: problem.rhs(x, y, t))
            tau_ref = (t - a) / k
            out += (w * ds / k) * np.outer(test.eval_all(tau_ref)[:, 0], load)
    return out


def _initial_coefficients(problem, space):
    if problem.initial is None:
        return np.zeros(space.dof_count)
    return fem.l2_project(space, problem.initial)


def impulse_loads(problem, space, partition):
    """Load vectors of the impulses keyed by their node index."""
    if not problem.impulses:
        return {}
    nodes = partition.nodes
    tol = 1e-12 * max(1.0, partition.final_time)
    loads = {}
    for t_star, zeta in problem.impulses:
        idx = int(np.argmin(np.abs(nodes - t_star)))
        if abs(nodes[idx] - t_star) > tol or idx == 0:
            raise ValueError(
                "impulse time %g does not coincide with an interior or final "
                "partition node" % (t_star,))
        vec = fem.load_vector(space, zeta)
        loads[idx] = loads.get(idx, 0.0) + vec
    return loads


def run_decomposed(problem, space, partition, q, rule=None):
    """March the decomposed scheme over all intervals."""
    N = partition.num_intervals
    dof = space.dof_count
    jumps = impulse_loads(problem, space, partition)
    u1 = np.empty((N, q + 1, dof))
    u2 = np.empty((N + 1, dof))
    u2[0] = _initial_coefficients(problem, space)
    systems = {}
    for i in range(N):
        a, b = partition.nodes[i], partition.nodes[i + 1]
        k = float(partition.widths[i])
        if k not in systems:
            systems[k] = LocalBlockSystem(space, k, q)
        moments = interval_moments(problem, space, (a, b), q, rule=rule)
        try:
            c, out = systems[k].step(u2[i], moments, jumps.get(i + 1))
        except RuntimeError as exc:
            raise RuntimeError("interval %d: %s" % (i, exc)) from exc
        u1[i] = c
        u2[i + 1] = out
    return SpaceTimeSolution(q, partition, space, u1, u2, problem=problem)


# -- global coupled formulation ---------------------------------------------

def global_layout(N, q, dof):
    """Index layout shared by the coupled solve and the diagnostics.

    Trial vector: intervals outer, Legendre mode inner, then the final-trace
    block; trial_slice(i, m) and u2_slice address them.  Test vector: one
    block per partition node followed by per-interval interior blocks;
    test_slice(i, j) addresses the block of local Lagrange function j on
    interval i (j = 0 and j = q+1 land on the shared node blocks).
    """
    nblocks = N * (q + 1) + 1

    def trial_slice(i, m):
        s = (i * (q + 1) + m) * dof
        return slice(s, s + dof)

    u2_slice = slice(N * (q + 1) * dof, nblocks * dof)

    def node_block(j):
        return j

    def interior_block(i, l):
        return (N + 1) + i * q + (l - 1)

    def test_slice(i, j):
        if j == 0:
            b = node_block(i)
        elif j == q + 1:
            b = node_block(i + 1)
        else:
            b = interior_block(i, j)
        return slice(b * dof, (b + 1) * dof)

    dim = nblocks * dof
    return dim, trial_slice, u2_slice, test_slice, node_block


def assemble_bilinear(space, partition, q):
    """Dense matrix of the space-time form; rows test, columns trial."""
    N = partition.num_intervals
    dof = space.dof_count
    dim, trial_slice, u2_slice, test_slice, node_block = global_layout(N, q, dof)
    rb = ReferenceBlocks(q)
    M, K = space.mass, space.stiffness
    B = np.zeros((dim, dim))
    for i in range(N):
        k = float(partition.widths[i])
        for j in range(q + 2):
            rows = test_slice(i, j)
            for m in range(q + 1):
                B[rows, trial_slice(i, m)] += -rb.D[j, m] * M + k * rb.G[j, m] * K
    rows = slice(node_block(N) * dof, (node_block(N) + 1) * dof)
    B[rows, u2_slice] += M
    return B


def assemble_load(problem, space, partition, q, rule=None):
    """Dense load functional vector matching assemble_bilinear's test layout."""
    N = partition.num_intervals
    dof = space.dof_count
    dim, _, _, test_slice, node_block = global_layout(N, q, dof)
    F = np.zeros(dim)
    for i in range(N):
        a, b = partition.nodes[i], partition.nodes[i + 1]
        k = float(partition.widths[i])
        moments = interval_moments(problem, space, (a, b), q, rule=rule)
        for j in range(q + 2):
            F[test_slice(i, j)] += k * moments[j]
    if problem.initial is not None:
        s = node_block(0) * dof
        F[s: s + dof] += fem.load_vector(space, problem.initial)
    for idx, vec in impulse_loads(problem, space, partition).items():
        s = node_block(idx) * dof
        F[s: s + dof] += vec
    return F


def solve_global(problem, space, partition, q, rule=None):
    """Solve the coupled space-time system in one shot.

    Intended for small configurations (splitting checks, diagnostics); the
    production path is run_decomposed.
    """
    N = partition.num_intervals
    dof = space.dof_count
    dim = (N * (q + 1) + 1) * dof
    if dim > 6000:
        raise ValueError("global solve limited to 6000 unknowns, got %d" % dim)
    B = assemble_bilinear(space, partition, q)
    F = assemble_load(problem, space, partition, q, rule=rule)
    try:
        x = scipy.linalg.solve(B, F)
    except scipy.linalg.LinAlgError as exc:
        raise RuntimeError("global space-time system is singular") from exc
    _, trial_slice, u2_slice, _, _ = global_layout(N, q, dof)
    u1 = np.empty((N, q + 1, dof))
    for i in range(N):
        for m in range(q + 1):
            u1[i, m] = x[trial_slice(i, m)]
    u2 = np.empty((N + 1, dof))
    u2[0] = _initial_coefficients(problem, space)
    u2[N] = x[u2_slice]
    sol = SpaceTimeSolution(q, partition, space, u1, u2, problem=problem)
    for n in range(1, N):
        sol.u2[n] = reconstruct_u2(sol, n, rule=rule)
    return sol


def reconstruct_u2(solution, n, rule=None):
    """Nodal component U2 at node n, rebuilt from U1 on interval n-1.

    Applies the last test equation of that interval (the one ending at node
    n), so it needs the problem data for the load moments.
    """
    if n == 0:
        raise ValueError("U2 at node 0 is the projected initial datum, not reconstructible")
    if solution.problem is None:
        raise ValueError("reconstruction needs the problem attached to the solution")
    part, space, q = solution.partition, solution.space, solution.q
    if not (1 <= n <= part.num_intervals):
        raise ValueError("node index %d outside partition" % (n,))
    i = n - 1
    a, b = part.nodes[i], part.nodes[i + 1]
    k = float(part.widths[i])
    rb = ReferenceBlocks(q)
    moments = interval_moments(solution.problem, space, (a, b), q, rule=rule)
    jumps = impulse_loads(solution.problem, space, part)
    bottom = k * moments[q + 1]
    if n in jumps:
        bottom = bottom + jumps[n]
    for m in range(q + 1):
        bottom += rb.D[q + 1, m] * (space.mass @ solution.u1[i, m]) \
            - k * rb.G[q + 1, m] * (space.stiffness @ solution.u1[i, m])
    return scipy.linalg.cho_solve(space.mass_cho(), bottom)


def crank_nicolson(problem, space, partition, rule=None):
    """Reference primal solver: trapezoidal step with exact-in-quadrature loads.

    Returns the (N+1, dof) array of nodal iterates W.  Impulse forcing is not
    supported here.
    """
    if problem.impulses:
        raise ValueError("Crank-Nicolson reference path does not take impulses")
    if rule is None:
        rule = gauss_rule(4)
    N = partition.num_intervals
    dof = space.dof_count
    M, K = space.mass, space.stiffness
    W = np.empty((N + 1, dof))
    W[0] = _initial_coefficients(problem, space)
    factors = {}
    for i in range(N):
        a, b = partition.nodes[i], partition.nodes[i + 1]
        k = float(partition.widths[i])
        if k not in factors:
            factors[k] = scipy.linalg.cho_factor(M + 0.5 * k * K)
        rhs = (M - 0.5 * k * K) @ W[i]
        if problem.rhs is not None:
            for s0, s1 in _segments(a, b, problem.time_breakpoints):
                ds = s1 - s0
                for tau, w in zip(rule.points, rule.weights):
                    t = s0 + ds * tau
                    if problem.dimension == 1:
                        rhs = rhs + (w * ds) * fem.load_vector(space, lambda x: problem.rhs(x, t))
                    else:
                        rhs = rhs + (w * ds) * fem.load_vector(
                            space, lambda x, y: problem.rhs(x, y, t))
        W[i + 1] = scipy.linalg.cho_solve(factors[k], rhs)
    return W


# -- serialization ------------------------------------------------------------

def solution_to_dict(solution):
    """Plain-JSON layout: {q, nodes, u1[interval][mode][dof], u2[node][dof]}."""
    return {
        "q": solution.q,
        "nodes": solution.partition.nodes.tolist(),
        "u1": solution.u1.tolist(),
        "u2": solution.u2.tolist(),
    }


def solution_from_dict(data, space=None, problem=None):
    from .timegrid import TimePartition
    part = TimePartition(np.asarray(data["nodes"], dtype=float))
    u1 = np.asarray(data["u1"], dtype=float)
    u2 = np.asarray(data["u2"], dtype=float)
    if space is None:
        space = fem.FemSpace.from_matrices(np.eye(u2.shape[1]), np.eye(u2.shape[1]))
    return SpaceTimeSolution(int(data["q"]), part, space, u1, u2, problem=problem)


def save_solution(solution, path):
    with open(path, "w") as fh:
        json.dump(solution_to_dict(solution), fh, sort_keys=True)


def load_solution(path, space=None, problem=None):
    with open(path) as fh:
        return solution_from_dict(json.load(fh), space=space, problem=problem)
