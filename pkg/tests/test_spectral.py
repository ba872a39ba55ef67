import numpy as np
import pytest

from gprlab import (
    HIGH_PASS,
    LOW_PASS,
    MIXED,
    classify_filter,
    delta_weights,
    filter_response,
    ppr_limit_matrix,
    ppr_weights,
    symmetric_eigen,
    to_dense,
)
from util import (
    complete_bipartite_graph,
    complete_graph,
    normalized,
    path_graph,
    random_connected_graph,
)


def spectrum_of(g):
    return symmetric_eigen(to_dense(normalized(g))).eigenvalues


class TestFilterResponse:
    def test_delta0_is_flat(self):
        lams = np.linspace(-1, 1, 9)
        resp = filter_response(delta_weights(0, 4), lams)
        assert np.array_equal(resp.response, np.ones(9))
        assert np.array_equal(resp.ratios, np.ones(9))

    def test_horner_matches_naive_powers(self):
        rng = np.random.default_rng(0)
        gamma = rng.standard_normal(7)
        lams = rng.uniform(-1, 1, 40)
        resp = filter_response(gamma, lams)
        naive = sum(gamma[k] * lams**k for k in range(7))
        assert np.max(np.abs(resp.response - naive)) < 1e-12

    def test_ratios_none_when_filter_dies_at_top(self):
        # g(lam) = 1 - lam vanishes at lam_1 = 1
        resp = filter_response(np.array([1.0, -1.0]), np.array([-0.5, 0.0, 1.0]))
        assert resp.ratios is None
        assert resp.lambda1 == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            filter_response(np.array([]), np.array([0.0]))
        with pytest.raises(ValueError):
            filter_response(np.array([1.0]), np.array([[0.0]]))


class TestPprFilter:
    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
    def test_ppr_is_low_pass_on_random_graphs(self, alpha):
        rng = np.random.default_rng(hash(alpha) % 2**32)
        gamma = ppr_weights(alpha, 10)
        for _ in range(5):
            cls = classify_filter(gamma, spectrum_of(random_connected_graph(rng)))
            assert cls.kind == LOW_PASS
            assert cls.max_ratio_rest < 1.0

    def test_truncated_response_approaches_limit(self):
        # closed form of the tail-folded weights at lam:
        #   sum_{k<K} a(1-a)^k lam^k + (1-a)^K lam^K
        alpha, K = 0.2, 200
        gamma = ppr_weights(alpha, K)
        lams = np.linspace(-0.99, 0.99, 21)
        resp = filter_response(gamma, lams)
        limit = alpha / (1 - (1 - alpha) * lams)
        assert np.max(np.abs(resp.response - limit)) < 1e-6


class TestHighPass:
    def test_alternating_weights_amplify_negative_end(self):
        # K_{a,b} with self loops keeps a strongly negative eigenvalue
        g = complete_bipartite_graph(12, 15)
        gamma = (-0.9) ** np.arange(51)
        cls = classify_filter(gamma, spectrum_of(g))
        assert cls.kind == HIGH_PASS
        assert cls.ratio_at_most_negative > 1.0

    def test_geometric_closed_form(self):
        # raw geometric series: g(lam) = (1 - q^{K+1}) / (1 - q), q = -0.9 lam
        K = 50
        gamma = (-0.9) ** np.arange(K + 1)
        lams = np.linspace(-0.95, 0.95, 31)
        resp = filter_response(gamma, lams)
        q = -0.9 * lams
        closed = (1 - q ** (K + 1)) / (1 - q)
        assert np.max(np.abs(resp.response - closed)) < 1e-9

    def test_long_truncation_near_geometric_limit(self):
        K = 200
        gamma = (-0.9) ** np.arange(K + 1)
        lam = np.array([-0.99, 0.0, 0.99])
        resp = filter_response(gamma, lam)
        limit = 1 / (1 + 0.9 * lam)
        assert np.max(np.abs(resp.response - limit)) < 1e-3


class TestClassify:
    def test_delta_k_on_loopy_path_is_low_pass(self):
        # self loops keep |lam| < 1 below the top, so lam^10 shrinks everything
        cls = classify_filter(delta_weights(10, 10), spectrum_of(path_graph(8)))
        assert cls.kind == LOW_PASS

    def test_band_amplification_is_mixed(self):
        # quadratic through (1,1), (0.5,2), (-0.2,0.5): a middle eigenvalue is
        # amplified while the most negative one is not
        spectrum = np.array([1.0, 0.5, -0.2])
        v = np.vander(spectrum, 3, increasing=True)
        gamma = np.linalg.solve(v, np.array([1.0, 2.0, 0.5]))
        cls = classify_filter(gamma, spectrum)
        assert cls.kind == MIXED
        assert cls.max_ratio_rest == pytest.approx(2.0)
        assert cls.ratio_at_most_negative == pytest.approx(0.5)

    def test_single_node_is_low_pass(self):
        cls = classify_filter(ppr_weights(0.5, 4), np.array([1.0]))
        assert cls.kind == LOW_PASS
        assert cls.ratio_at_most_negative == 0.0

    def test_rejects_unnormalized_and_disconnected_spectra(self):
        with pytest.raises(ValueError, match="top eigenvalue"):
            classify_filter(ppr_weights(0.5, 4), np.array([0.9, 0.1]))
        with pytest.raises(ValueError, match="disconnected"):
            classify_filter(ppr_weights(0.5, 4), np.array([1.0, 1.0, 0.2]))
        with pytest.raises(ValueError, match="vanishes"):
            classify_filter(np.array([1.0, -1.0]), np.array([1.0, 0.0]))


class TestPprLimit:
    def test_alpha_one_is_identity(self):
        g = normalized(complete_graph(5))
        assert np.allclose(ppr_limit_matrix(g, 1.0), np.eye(5), atol=1e-12)

    def test_single_node(self):
        g = normalized(complete_graph(1))
        assert ppr_limit_matrix(g, 0.3) == pytest.approx(np.array([[1.0]]))

    def test_matches_truncated_series(self):
        rng = np.random.default_rng(3)
        g = normalized(random_connected_graph(rng, 12, 20))
        alpha = 0.25
        limit = ppr_limit_matrix(g, alpha)
        a = to_dense(g)
        series = np.zeros_like(a)
        term = np.eye(g.n)
        for _ in range(201):
            series += alpha * term
            term = (1 - alpha) * (a @ term)
        assert np.max(np.abs(limit - series)) < 1e-6

    def test_solves_the_defining_system(self):
        rng = np.random.default_rng(4)
        g = normalized(random_connected_graph(rng, 15, 25))
        p = ppr_limit_matrix(g, 0.1)
        a = to_dense(g)
        residual = (np.eye(g.n) - 0.9 * a) @ p - 0.1 * np.eye(g.n)
        assert np.max(np.abs(residual)) < 1e-9

    def test_guards(self):
        g = normalized(complete_graph(4))
        with pytest.raises(ValueError):
            ppr_limit_matrix(g, 0.0)
        with pytest.raises(ValueError):
            ppr_limit_matrix(complete_graph(4), 0.5)  # unnormalized
        with pytest.raises(ValueError):
            ppr_limit_matrix(g, 0.5, max_n=2)


def test_eigendecomposition_applies_filter_exactly():
    # U g(Lam) U^T H equals evaluating the polynomial on the dense matrix
    rng = np.random.default_rng(9)
    g = normalized(random_connected_graph(rng, 10, 15))
    a = to_dense(g)
    eig = symmetric_eigen(a)
    gamma = ppr_weights(0.3, 6)
    h = rng.standard_normal((g.n, 3))
    g_lam = filter_response(gamma, eig.eigenvalues).response
    via_eig = eig.eigenvectors @ (g_lam[:, None] * (eig.eigenvectors.T @ h))
    direct = sum(gamma[k] * (np.linalg.matrix_power(a, k) @ h) for k in range(7))
    assert np.max(np.abs(via_eig - direct)) < 1e-8
