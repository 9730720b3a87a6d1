import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isingtree import (
    CouplingAssignment,
    boundary_drift_vector,
    boundary_triple_covariance,
    brute_force,
    build_tree,
    chain_factors,
    compute_messages,
    covariance_matrix,
    drift_batch,
    drift_vector,
    interpolated,
    magnetization,
    pair_covariance,
    path_marginal,
    path_partition,
    uniform,
)
from isingtree.inference import InferenceError

# frozen values from exhaustive enumeration of the 3-vertex path
# (0)-()-(1) with beta(,0)=0.4, beta(,1)=0.7 and fields (0.1, -0.3, 0.2)
PATH3_BETAS = {((), (0,)): 0.4, ((), (1,)): 0.7}
PATH3_FIELDS = np.array([0.1, -0.3, 0.2])
PATH3_MEANS = np.array(
    [0.108292364032984, -0.21422904220323363, 0.1908970310372736]
)
PATH3_COV = np.array([
    [0.9882727638921477, 0.3478896890092628, 0.5822977380994905],
    [0.3478896890092628, 0.9541059174766852, 0.20497921871328265],
    [0.5822977380994905, 0.20497921871328265, 0.9635583235411542],
])

# frozen values for the d=3 star with beta edges (0.3, 0.5, 0.8) and
# fields (0.2, -0.4, 0.6, -0.1): Cov(sigma_root sigma_c, sigma_v)
STAR_BETAS = {((), (0,)): 0.3, ((), (1,)): 0.5, ((), (2,)): 0.8}
STAR_FIELDS = np.array([0.2, -0.4, 0.6, -0.1])
STAR_MEANS = np.array(
    [0.26924798703894515, -0.28407318562354966, 0.5444321798481511,
     0.12182823700475398]
)
STAR_TRIPLES = {
    (0,): [-0.32649853280353197, 0.314009337558752, -0.11441015105149493,
           -0.21559769808638102],
    (1,): [0.417454938973868, 0.10534470845020445, 0.01249399307021626,
           0.27565919860263155],
    (2,): [-0.05190788967634502, -0.01309895031464042, -0.01818932981915911,
           0.19063656917704902],
}


def path3():
    topo = build_tree(2, 1)
    return topo, CouplingAssignment(interior=0.0, overrides=PATH3_BETAS)


def star():
    topo = build_tree(3, 1)
    return topo, CouplingAssignment(interior=0.0, overrides=STAR_BETAS)


def test_frozen_path3_means_and_covariance():
    topo, coup = path3()
    assert np.allclose(drift_vector(topo, coup, PATH3_FIELDS), PATH3_MEANS,
                       atol=1e-12, rtol=0)
    assert np.allclose(covariance_matrix(topo, coup, PATH3_FIELDS), PATH3_COV,
                       atol=1e-12, rtol=0)


def test_frozen_star_triples():
    topo, coup = star()
    assert np.allclose(drift_vector(topo, coup, STAR_FIELDS), STAR_MEANS,
                       atol=1e-12, rtol=0)
    for leaf, want in STAR_TRIPLES.items():
        for i, v in enumerate(topo.vertices):
            got = boundary_triple_covariance(
                topo, coup, STAR_FIELDS, ((), leaf), v
            )
            assert got == pytest.approx(want[i], abs=1e-12)


def test_single_vertex_mean():
    topo = build_tree(3, 0)
    for x in (-1.3, 0.0, 0.8):
        assert drift_vector(topo, uniform(0.5), np.array([x]))[0] == (
            pytest.approx(math.tanh(x), abs=1e-15)
        )


def test_two_vertex_message_closed_form():
    topo = build_tree(2, 1)
    beta, xu = 0.6, 0.9
    coup = CouplingAssignment(interior=0.0, overrides={((), (0,)): beta})
    # field only at the child (0); message (0) -> root
    x = np.array([0.0, xu, 0.0])
    mt = compute_messages(topo, coup, x)
    want = math.atanh(math.tanh(beta) * math.tanh(xu))
    assert mt.zeta((0,), ()) == pytest.approx(want, abs=1e-14)


def test_zero_field_messages_vanish():
    topo = build_tree(3, 2)
    mt = compute_messages(topo, uniform(0.5), np.zeros(10))
    for u, v in topo.edges():
        assert mt.zeta(u, v) == 0.0
        assert mt.zeta(v, u) == 0.0
    assert np.all(mt.magnetizations() == 0.0)


def test_message_fixed_point_property():
    gen = np.random.default_rng(2)
    topo = build_tree(3, 2)
    coup = uniform(0.7)
    x = gen.uniform(-2, 2, topo.n_vertices)
    mt = compute_messages(topo, coup, x)
    for u in topo.vertices:
        for v in topo.neighbors_of(u):
            lhs = math.tanh(mt.zeta(u, v))
            inc = mt.incoming_sum(u) - mt.zeta(v, u)
            rhs = math.tanh(0.7) * math.tanh(x[topo.index[u]] + inc)
            assert lhs == pytest.approx(rhs, abs=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_message_bound_holds(seed):
    gen = np.random.default_rng(seed)
    topo = build_tree(3, 2)
    overrides = {
        tuple(sorted((u, v))): float(gen.uniform(0, 2)) for u, v in topo.edges()
    }
    coup = CouplingAssignment(interior=0.0, overrides=overrides)
    x = gen.uniform(-5, 5, topo.n_vertices)
    mt = compute_messages(topo, coup, x)
    for u, v in topo.edges():
        b = coup.beta_of(topo, u, v)
        assert abs(mt.zeta(u, v)) <= b + 1e-12
        assert abs(mt.zeta(v, u)) <= b + 1e-12


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_drift_odd_symmetry(seed):
    gen = np.random.default_rng(seed)
    topo = build_tree(3, 2)
    coup = uniform(0.6)
    x = gen.uniform(-2, 2, topo.n_vertices)
    assert np.allclose(drift_vector(topo, coup, -x),
                       -drift_vector(topo, coup, x), atol=1e-12, rtol=0)
    assert np.allclose(covariance_matrix(topo, coup, -x),
                       covariance_matrix(topo, coup, x), atol=1e-12, rtol=0)


def test_drift_batch_matches_single():
    gen = np.random.default_rng(3)
    topo = build_tree(3, 2)
    coup = uniform(0.4)
    xs = gen.uniform(-2, 2, (5, 7, topo.n_vertices))
    batch = drift_batch(topo, coup, xs)
    assert batch.shape == xs.shape
    for i in range(5):
        for j in range(7):
            assert np.allclose(batch[i, j],
                               drift_vector(topo, coup, xs[i, j]),
                               atol=1e-15, rtol=0)


def test_boundary_gamma_zero_decouples():
    gen = np.random.default_rng(4)
    big = build_tree(3, 2)
    small = build_tree(3, 1)
    x = gen.uniform(-2, 2, big.n_vertices)
    f_big = drift_vector(big, interpolated(0.5, 0.0), x)
    f_small = drift_vector(small, uniform(0.5), x[:small.n_vertices])
    assert np.allclose(f_big[:small.n_vertices], f_small, atol=1e-14, rtol=0)


def test_zero_field_covariance_is_theta_power():
    topo = build_tree(3, 2)
    beta = 0.5
    theta = math.tanh(beta)
    x = np.zeros(topo.n_vertices)
    for u in topo.vertices:
        for v in topo.vertices:
            want = theta ** topo.distance(u, v)
            got = pair_covariance(topo, uniform(beta), x, u, v)
            assert got == pytest.approx(want, abs=1e-12)


def test_variance_case_agrees_with_lemma_form():
    # u = v: 1 - m^2 equals A_{u,u} / Zbar_{u,u}^2 with the one-spin sum
    gen = np.random.default_rng(5)
    topo = build_tree(3, 2)
    coup = uniform(0.6)
    x = gen.uniform(-2, 2, topo.n_vertices)
    for u in topo.vertices:
        pq = path_partition(topo, coup, x, u, u)
        m = magnetization(compute_messages(topo, coup, x), u)
        assert 1.0 / pq.z_bar ** 2 == pytest.approx(1.0 - m * m, abs=1e-12)
        assert pq.chain_weight == 1.0


def test_path_partition_basics():
    gen = np.random.default_rng(6)
    topo = build_tree(3, 2)
    coup = uniform(0.4)
    x = gen.uniform(-2, 2, topo.n_vertices)
    pq = path_partition(topo, coup, x, (0, 0), (1,))
    assert pq.z_bar >= 1.0
    assert 0.0 <= pq.chain_weight <= 1.0
    # single-vertex path partition is the one-spin sum 2 cosh(x + zeta)
    mt = compute_messages(topo, coup, x)
    pq_u = path_partition(topo, coup, x, (1,), (1,))
    want = math.log(2 * math.cosh(x[topo.index[(1,)]] + mt.incoming_sum((1,))))
    assert pq_u.log_z_field == pytest.approx(want, abs=1e-12)
    assert path_partition(topo, coup, np.zeros(10), (0, 0), (1,)).z_bar == (
        pytest.approx(1.0, abs=1e-14)
    )


def test_path_marginal_is_a_distribution():
    gen = np.random.default_rng(7)
    topo = build_tree(3, 2)
    coup = uniform(0.4)
    x = gen.uniform(-2, 2, topo.n_vertices)
    # the path (0,0) - (0) - () - (1) - (1,0) has five vertices
    p = path_marginal(topo, coup, x, (0, 0), (1, 0))
    assert p.shape == (2 ** 5,)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_zero_field_triple_vanishes_off_leaf():
    topo = build_tree(3, 2)
    x = np.zeros(topo.n_vertices)
    edge = ((0,), (0, 0))
    for v in topo.vertices:
        got = boundary_triple_covariance(topo, uniform(0.5), x, edge, v)
        if v != edge[1]:
            assert got == 0.0


def test_boundary_triple_rejects_interior_edge():
    topo = build_tree(3, 2)
    with pytest.raises(InferenceError):
        boundary_triple_covariance(
            topo, uniform(0.5), np.zeros(10), ((), (0,)), ()
        )


def test_boundary_vector_zero_when_gamma_zero():
    topo = build_tree(3, 2)
    n = boundary_drift_vector(topo, interpolated(0.5, 0.0), np.zeros(10))
    assert np.allclose(n, 0.0, atol=1e-14)


def test_boundary_vector_is_gamma_derivative():
    # N = dF/dgamma, checked by central differences at zero field
    topo = build_tree(3, 2)
    beta, gamma, h = 0.5, 0.25, 1e-6
    x = np.zeros(topo.n_vertices)
    n = boundary_drift_vector(topo, interpolated(beta, gamma), x)
    fp = drift_vector(topo, interpolated(beta, gamma + h), x)
    fm = drift_vector(topo, interpolated(beta, gamma - h), x)
    assert np.allclose(n, (fp - fm) / (2 * h), atol=1e-8, rtol=0)
    assert np.all(np.abs(n) <= len(topo.boundary_edges().boundary))


def test_covariance_matrix_is_jacobian():
    gen = np.random.default_rng(8)
    topo = build_tree(3, 2)
    coup = uniform(0.5)
    x = gen.uniform(-2, 2, topo.n_vertices)
    m = covariance_matrix(topo, coup, x)
    assert np.allclose(m, m.T, atol=1e-12)
    assert np.all(m >= 0)  # ferromagnetic monotonicity
    h = 1e-5
    jac = np.empty_like(m)
    for j in range(topo.n_vertices):
        e = np.zeros(topo.n_vertices)
        e[j] = h
        jac[:, j] = (drift_vector(topo, coup, x + e)
                     - drift_vector(topo, coup, x - e)) / (2 * h)
    assert np.abs(m - jac).max() < 1e-6


def test_chain_factors_zero_field_unity():
    topo = build_tree(3, 2)
    beta = 0.45
    path = topo.shortest_path((0, 0), (1, 0))
    cf = chain_factors(topo, uniform(beta), np.zeros(10), path, 4, 4)
    for u in cf.u_factors:
        assert u == pytest.approx(
            2 * math.cosh(beta) ** 2 / (math.cosh(2 * beta) + 1), abs=1e-12
        )
        assert u == pytest.approx(1.0, abs=1e-12)


def test_chain_factors_w_v_relation():
    gen = np.random.default_rng(9)
    topo = build_tree(3, 2)
    coup = uniform(0.5)
    x = gen.uniform(-2, 2, topo.n_vertices)
    path = topo.shortest_path((0, 0), (1, 0))
    r = 2
    cf = chain_factors(topo, coup, x, path, 1, r)
    # first W factor drops the cosh(2 zeta) numerator of V
    w0 = cf.w_factors[0]
    v0 = cf.v_factors[0]
    assert w0 == pytest.approx(v0 / math.cosh(2 * cf.zeta[r]), abs=1e-12)


def test_chain_factors_input_validation():
    topo = build_tree(3, 2)
    path = topo.shortest_path((0, 0), (1, 0))
    with pytest.raises(InferenceError):
        chain_factors(topo, uniform(0.5), np.zeros(10), path, 0, 2)
    with pytest.raises(InferenceError):
        chain_factors(topo, uniform(0.5), np.zeros(10), path[::-1][:2] + path,
                      1, 1)


def test_non_finite_fields_rejected():
    topo = build_tree(3, 1)
    with pytest.raises(InferenceError):
        compute_messages(topo, uniform(0.5), np.array([0.0, np.inf, 0, 0]))
    with pytest.raises(InferenceError):
        drift_vector(topo, uniform(0.5), np.zeros(3))


def test_oracle_cross_check_random_instance():
    # one richer instance end to end against enumeration
    gen = np.random.default_rng(10)
    topo = build_tree(3, 2)
    overrides = {
        tuple(sorted((u, v))): float(gen.uniform(0, 1)) for u, v in topo.edges()
    }
    coup = CouplingAssignment(interior=0.0, overrides=overrides)
    x = gen.uniform(-2, 2, topo.n_vertices)
    bf = brute_force(topo, coup, x)
    assert np.abs(drift_vector(topo, coup, x) - bf.means()).max() < 1e-10
    assert np.abs(
        covariance_matrix(topo, coup, x) - bf.covariance_matrix()
    ).max() < 1e-10
