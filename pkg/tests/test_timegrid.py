import numpy as np
import pytest

from stheat.timegrid import (
    QuadratureRule,
    ReferenceBlocks,
    TemporalBasis,
    TimePartition,
    gauss_rule,
    legendre_eval,
    lobatto_points,
    make_uniform_partition,
    project_Pq,
    temporal_moment,
)


def test_uniform_partition_nodes():
    part = make_uniform_partition(1.0, 4)
    assert np.allclose(part.nodes, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert part.num_intervals == 4
    assert part.k_max == 0.25


def test_uniform_partition_single_interval():
    part = make_uniform_partition(1.0, 1)
    assert np.allclose(part.nodes, [0.0, 1.0])


def test_uniform_partition_widths():
    part = make_uniform_partition(2.0, 5)
    assert np.allclose(part.widths, 0.4)


@pytest.mark.parametrize("T,N", [(0.0, 4), (-1.0, 4), (1.0, 0)])
def test_uniform_partition_rejects_bad_input(T, N):
    with pytest.raises(ValueError):
        make_uniform_partition(T, N)


def test_partition_widths_sum_to_span():
    rng = np.random.default_rng(7)
    for _ in range(20):
        nodes = np.concatenate([[0.0], np.cumsum(rng.uniform(0.01, 1.0, size=rng.integers(1, 12)))])
        part = TimePartition(nodes)
        span = part.nodes[-1] - part.nodes[0]
        assert abs(part.widths.sum() - span) <= 1e-13 * span


def test_partition_rejects_nonmonotone_nodes():
    with pytest.raises(ValueError):
        TimePartition([0.0, 0.5, 0.5, 1.0])
    with pytest.raises(ValueError):
        TimePartition([0.7])


@pytest.mark.parametrize("npts", [1, 2, 3, 5, 8])
def test_gauss_rule_exactness(npts):
    """n-point Gauss integrates monomials up to degree 2n-1 on [0,1]."""
    rule = gauss_rule(npts)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(rule.weights > 0)
    for d in range(2 * npts):
        approx = np.sum(rule.weights * rule.points ** d)
        assert approx == pytest.approx(1.0 / (d + 1), abs=5e-15)


def test_lobatto_points_include_endpoints():
    for m in (2, 3, 4, 6):
        pts = lobatto_points(m)
        assert pts[0] == 0.0 and pts[-1] == 1.0
        assert np.all(np.diff(pts) > 0)


def test_lagrange_basis_cardinal_and_partition_of_unity():
    basis = TemporalBasis(3, "nodal-lagrange")
    vals = basis.eval_all(basis.nodes)
    assert np.allclose(vals, np.eye(4), atol=1e-12)
    tau = np.linspace(0.0, 1.0, 11)
    assert np.allclose(basis.eval_all(tau).sum(axis=0), 1.0, atol=1e-12)


def test_legendre_basis_orthogonality():
    basis = TemporalBasis(4, "legendre")
    rule = gauss_rule(6)
    vals = basis.eval_all(rule.points)
    gram = (vals * rule.weights) @ vals.T
    # shifted Legendre P~_m on [0,1]: int P~_i P~_j = delta_ij / (2i+1)
    expected = np.diag(1.0 / (2.0 * np.arange(5) + 1.0))
    assert np.allclose(gram, expected, atol=1e-10)


def test_temporal_moment_hat_function():
    # right hat on [0, 0.1]: integral of 1 * (s/k) ds = k/2
    moment = temporal_moment(lambda s: 1.0, (0.0, 0.1), lambda s: s / 0.1, gauss_rule(3))
    assert moment == pytest.approx(0.05, abs=1e-15)


def test_temporal_moment_zero_integrand():
    moment = temporal_moment(lambda s: 0.0, (0.2, 0.9), lambda s: s ** 3, gauss_rule(4))
    assert moment == 0.0


def test_temporal_moment_two_point_gauss_linear():
    moment = temporal_moment(lambda s: s, (0.0, 1.0), lambda s: 1.0, gauss_rule(2))
    assert moment == pytest.approx(0.5, abs=1e-15)


def test_temporal_moment_rejects_degenerate_interval():
    with pytest.raises(ValueError):
        temporal_moment(lambda s: s, (0.5, 0.5), lambda s: 1.0, gauss_rule(2))


def test_project_constant_mean():
    coeffs = project_Pq(lambda s: s, (0.0, 1.0), 0, gauss_rule(3))
    assert coeffs.shape == (1,)
    assert coeffs[0] == pytest.approx(0.5, abs=1e-14)


def test_project_square_degree_one():
    # s^2 on [0,1] projected to degree 1 is s - 1/6; in shifted Legendre
    # {1, 2s-1} the coefficients are (1/3, 1/2)
    coeffs = project_Pq(lambda s: s ** 2, (0.0, 1.0), 1, gauss_rule(4))
    assert np.allclose(coeffs, [1.0 / 3.0, 0.5], atol=1e-14)


@pytest.mark.parametrize("q", [0, 1, 2, 3])
def test_projection_idempotent(q):
    rng = np.random.default_rng(42 + q)
    mono = rng.standard_normal(q + 1)
    interval = (0.3, 1.1)

    def f(s):
        return sum(c * s ** j for j, c in enumerate(mono))

    once = project_Pq(f, interval, q, gauss_rule(q + 3))
    twice = project_Pq(lambda s: float(legendre_eval(once, interval, s)[0]),
                       interval, q, gauss_rule(q + 3))
    assert np.allclose(once, twice, atol=1e-12)


@pytest.mark.parametrize("q", [0, 1, 2])
def test_projection_orthogonality_residual(q):
    """(f - Pq f) is L2-orthogonal to polynomials of degree <= q."""
    interval = (0.0, 0.7)
    f = lambda s: np.sin(3.0 * s) + s ** 4
    coeffs = project_Pq(f, interval, q, gauss_rule(q + 6))
    scale = max(1.0, abs(temporal_moment(f, interval, lambda s: 1.0, gauss_rule(q + 6))))
    for d in range(q + 1):
        resid = temporal_moment(
            lambda s: f(s) - legendre_eval(coeffs, interval, s),
            interval, lambda s, d=d: s ** d, gauss_rule(q + 6))
        assert abs(resid) <= 1e-10 * scale


def test_moment_kink_splitting_is_exact():
    # |s - 0.5| against a linear weight: piecewise quadratic, so split
    # 3-point Gauss is exact; the unsplit rule is not
    f = lambda s: abs(s - 0.5)
    phi = lambda s: s
    exact = 0.125  # int_0^1 |s-1/2| s ds
    split = temporal_moment(f, (0.0, 1.0), phi, gauss_rule(3), breakpoints=(0.5,))
    assert split == pytest.approx(exact, abs=1e-15)
    unsplit = temporal_moment(f, (0.0, 1.0), phi, gauss_rule(3))
    assert abs(unsplit - exact) > 1e-5


def test_reference_blocks_row_sums():
    """sum_j l_j == 1, so columns of G sum to the Legendre means and
    columns of D sum to zero."""
    for q in (0, 1, 2, 3):
        rb = ReferenceBlocks(q)
        colsum_G = rb.G.sum(axis=0)
        expected = np.zeros(q + 1)
        expected[0] = 1.0
        assert np.allclose(colsum_G, expected, atol=1e-13)
        assert np.allclose(rb.D.sum(axis=0), 0.0, atol=1e-13)


def test_reference_blocks_q0_values():
    rb = ReferenceBlocks(0)
    assert np.allclose(rb.D, [[-1.0], [1.0]], atol=1e-14)
    assert np.allclose(rb.G, [[0.5], [0.5]], atol=1e-14)


def test_quadrature_rule_validation():
    with pytest.raises(ValueError):
        QuadratureRule(points=np.array([0.2, 0.8]), weights=np.array([0.5, -0.1]))
