"""Temporal partitions, polynomial bases on [0,1], quadrature, and interval-wise L2 projection.

The time discretization works interval by interval.  On the reference
interval [0,1] two bases appear: shifted Legendre polynomials (trial side,
orthogonal, so interval mass matrices are diagonal) and nodal Lagrange
polynomials at Gauss-Lobatto points (test side, so the endpoint values of a
test function are single coefficients).  Everything here is exact polynomial
arithmetic up to round-off.
"""

import numpy as np
from numpy.polynomial import legendre as npleg


class TimePartition:
    """Strictly increasing time nodes t_0 < t_1 < ... < t_N."""

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a time partition needs at least two nodes")
        widths = np.diff(nodes)
        if np.any(widths <= 0.0):
            raise ValueError("time nodes must be strictly increasing")
        self.nodes = nodes
        self.widths = widths
        self.k_max = float(widths.max())
        self.num_intervals = nodes.size - 1

    @property
    def final_time(self):
        return float(self.nodes[-1])

    def __repr__(self):
        return "TimePartition(N=%d, k_max=%g)" % (self.num_intervals, self.k_max)


def make_uniform_partition(T, N):
    """Partition of [0, T] into N equal intervals."""
    if T <= 0.0:
        raise ValueError("final time must be positive, got %r" % (T,))
    if int(N) != N or N < 1:
        raise ValueError("number of intervals must be a positive integer, got %r" % (N,))
    return TimePartition(np.linspace(0.0, float(T), int(N) + 1))


class QuadratureRule:
    """Points and positive weights on the reference interval [0,1]."""

    def __init__(self, points, weights):
        points = np.asarray(points, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if points.shape != weights.shape or points.ndim != 1:
            raise ValueError("points and weights must be 1d arrays of equal length")
        if np.any(weights <= 0.0):
            raise ValueError("quadrature weights must be positive")
        self.points = points
        self.weights = weights

    @property
    def npoints(self):
        return self.points.size


def gauss_rule(n):
    """Gauss-Legendre rule with n points on [0,1]; exact for degree <= 2n-1."""
    if n < 1:
        raise ValueError("need at least one quadrature point")
    x, w = npleg.leggauss(int(n))
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w)


def lobatto_points(m):
    """m Gauss-Lobatto points on [0,1] (endpoints included), m >= 2."""
    if m < 2:
        raise ValueError("Lobatto rule needs at least the two endpoints")
    if m == 2:
        interior = np.empty(0)
    else:
        # interior points are the roots of P'_{m-1}
        coeffs = np.zeros(m)
        coeffs[m - 1] = 1.0
        interior = npleg.legroots(npleg.legder(coeffs))
    pts = np.concatenate(([-1.0], np.sort(interior), [1.0]))
    return 0.5 * (pts + 1.0)


def lagrange_coefficient_matrix(nodes):
    """Monomial coefficients of the Lagrange basis on the given nodes.

    Column j holds the coefficients of the polynomial that is 1 at nodes[j]
    and 0 at the others, lowest order first.
    """
    nodes = np.asarray(nodes, dtype=float)
    m = nodes.size
    V = np.vander(nodes, m, increasing=True)
    return np.linalg.solve(V, np.eye(m))


class TemporalBasis:
    """Polynomial basis of the given degree on [0,1].

    kind='legendre' gives shifted Legendre polynomials (orthogonal,
    int_0^1 P_m^2 = 1/(2m+1)); kind='nodal-lagrange' gives the Lagrange basis
    at the Gauss-Lobatto points, so basis 0 is the only one nonzero at tau=0
    and basis `degree` the only one nonzero at tau=1.
    """

    def __init__(self, degree, kind):
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        if kind not in ("legendre", "nodal-lagrange"):
            raise ValueError("unknown basis kind %r" % (kind,))
        self.degree = int(degree)
        self.kind = kind
        if kind == "nodal-lagrange":
            self.nodes = lobatto_points(self.degree + 1)
            self._coeffs = lagrange_coefficient_matrix(self.nodes)
        else:
            self.nodes = None
            self._coeffs = None

    @property
    def size(self):
        return self.degree + 1

    def eval_all(self, tau):
        """Values of all basis functions; shape (size, len(tau))."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if self.kind == "legendre":
            # legvander returns (npts, size) on [-1,1]
            return npleg.legvander(2.0 * tau - 1.0, self.degree).T
        powers = np.vander(tau, self.size, increasing=True)  # (npts, size)
        return (powers @ self._coeffs).T

    def deriv_all(self, tau):
        """Derivatives d/dtau of all basis functions; shape (size, len(tau))."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        out = np.empty((self.size, tau.size))
        if self.kind == "legendre":
            for m in range(self.size):
                coeff = np.zeros(m + 1)
                coeff[m] = 1.0
                out[m] = 2.0 * npleg.legval(2.0 * tau - 1.0, npleg.legder(coeff))
            return out
        for j in range(self.size):
            dcoef = np.polynomial.polynomial.polyder(self._coeffs[:, j])
            out[j] = np.polynomial.polynomial.polyval(tau, dcoef)
        return out


def _segments(a, b, breakpoints):
    """Subintervals of [a,b] cut at the interior breakpoints."""
    cuts = sorted(t for t in breakpoints if a < t < b)
    pts = [a] + cuts + [b]
    return list(zip(pts[:-1], pts[1:]))


def temporal_moment(f, interval, basis_fn, rule, breakpoints=()):
    """Approximate int_a^b f(s) * basis_fn(s) ds with the given rule.

    The rule lives on [0,1] and is mapped to each segment of [a,b] obtained
    by cutting at the breakpoints (used when f has a kink inside the
    interval).  f and basis_fn take physical times; f may return scalars or
    arrays (the moment is accumulated component-wise).
    """
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError("interval must be nondegenerate")
    total = 0.0
    for s0, s1 in _segments(a, b, breakpoints):
        ds = s1 - s0
        for tau, w in zip(rule.points, rule.weights):
            t = s0 + ds * tau
            total = total + (w * ds) * np.asarray(f(t)) * basis_fn(t)
    return total


def project_Pq(f, interval, q, rule, breakpoints=()):
    """Legendre coefficients of the L2([a,b]) projection of f onto degree <= q.

    Returns c with c[m] the coefficient of the shifted Legendre polynomial
    P_m((t-a)/(b-a)); the projection is sum_m c[m] P_m(tau(t)).
    """
    if q < 0:
        raise ValueError("projection degree must be nonnegative")
    a, b = float(interval[0]), float(interval[1])
    k = b - a
    if not k > 0.0:
        raise ValueError("interval must be nondegenerate")
    basis = TemporalBasis(q, "legendre")
    moments = None
    for s0, s1 in _segments(a, b, breakpoints):
        ds = s1 - s0
        taus = (s0 - a) / k + rule.points * (ds / k)
        vals = basis.eval_all(taus)  # (q+1, npts)
        fvals = np.array([np.asarray(f(s0 + ds * tau), dtype=float) for tau in rule.points])
        seg = np.tensordot(vals * rule.weights, fvals, axes=(1, 0)) * (ds / k)
        moments = seg if moments is None else moments + seg
    scale = 2.0 * np.arange(q + 1) + 1.0
    if moments.ndim > 1:
        return moments * scale[:, None]
    return moments * scale


def legendre_eval(coeffs, interval, t):
    """Evaluate a shifted-Legendre expansion on [a,b] at times t.

    coeffs has shape (q+1,) or (q+1, d); result matches the trailing shape.
    """
    a, b = float(interval[0]), float(interval[1])
    tau = (np.atleast_1d(np.asarray(t, dtype=float)) - a) / (b - a)
    coeffs = np.asarray(coeffs)
    vals = TemporalBasis(coeffs.shape[0] - 1, "legendre").eval_all(tau)
    return np.tensordot(vals, coeffs, axes=(0, 0))


class ReferenceBlocks:
    """Reference-interval couplings between trial degree q and test degree q+1.

    With P_m the shifted Legendre basis (trial) and l_j the Gauss-Lobatto
    Lagrange basis of degree q+1 (test), all on [0,1]:

      D[j, m]   = int dl_j/dtau * P_m
      G[j, m]   = int l_j * P_m
      E[i, j]   = int dl_i/dtau * dl_j/dtau
      GL2[i, j] = int l_i * l_j
      L[j, r]   = coefficient of P_r in l_j (r = 0..q+1)

    These scale to a physical interval of width k by the chain rule; the
    solver and the norm Gram matrices are assembled from them.
    """

    def __init__(self, q):
        self.q = int(q)
        trial = TemporalBasis(q, "legendre")
        test = TemporalBasis(q + 1, "nodal-lagrange")
        full = TemporalBasis(q + 1, "legendre")
        rule = gauss_rule(q + 3)
        tau, w = rule.points, rule.weights
        tv = trial.eval_all(tau)          # (q+1, npts)
        xv = test.eval_all(tau)           # (q+2, npts)
        xd = test.deriv_all(tau)          # (q+2, npts)
        fv = full.eval_all(tau)           # (q+2, npts)
        self.D = (xd * w) @ tv.T
        self.G = (xv * w) @ tv.T
        self.E = (xd * w) @ xd.T
        self.GL2 = (xv * w) @ xv.T
        # l_j = sum_r L[j,r] P_r with int P_r^2 = 1/(2r+1)
        self.L = ((xv * w) @ fv.T) * (2.0 * np.arange(q + 2) + 1.0)
        self.trial = trial
        self.test = test
