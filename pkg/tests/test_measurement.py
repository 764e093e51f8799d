"""Projective jumps, metric probabilities, ensembles, Gaussian measurement."""

import numpy as np
import pytest

from qphase import (
    DensityMatrix,
    GaussianMeasurement,
    Observable,
    PhasePoint,
    StateVector,
    born_probability_via_metric,
    branch_probabilities,
    closest_point_check,
    continuous_observe,
    from_phase,
    gaussian_apply,
    measure_nonselective,
    measure_selective,
    to_phase,
)
from qphase.errors import (
    DegenerateBasisError,
    NormalizationError,
    ZeroProbabilityBranchError,
)
from qphase.steering import ladder_drift

from conftest import random_hermitian, random_point

R2 = np.sqrt(2.0)


class TestSelective:
    def test_eigenstate_is_fixed(self, rng):
        x = PhasePoint([0, 1, 0], [0, 0, 0])
        out = measure_selective(x, Observable(ladder_drift(1.0)), rng)
        assert out.value == pytest.approx(0.0)
        assert out.probability == pytest.approx(1.0)
        assert np.max(np.abs(out.post_state.flat() - x.flat())) < 1e-12

    def test_rotated_lowest_level_half_weight(self):
        x = PhasePoint([0.5, 1 / R2, 0.5], [0, 0, 0])
        probs = branch_probabilities(x, Observable(ladder_drift(1.0)))
        assert probs[1] == pytest.approx(0.5, abs=1e-12)

    def test_equal_superposition(self, rng):
        x = PhasePoint([1 / R2, 1 / R2], [0, 0])
        probs = branch_probabilities(x, Observable(np.diag([0.0, 1.0])))
        assert np.allclose(probs, [0.5, 0.5])

    def test_unnormalized_rejected(self, rng):
        with pytest.raises(NormalizationError):
            measure_selective(PhasePoint([2.0], [0.0]), Observable([[1.0]]), rng)

    def test_born_statistics_3sigma(self):
        rng = np.random.default_rng(99)
        x = PhasePoint([0.6, 0.0], [0.0, 0.8])
        obs = Observable(np.diag([0.0, 1.0]))
        n = 100_000
        hits = sum(measure_selective(x, obs, rng).branch for _ in range(n))
        p = 0.64
        se = np.sqrt(p * (1 - p) / n)
        assert abs(hits / n - p) < 3 * se


class TestMetricFormula:
    def test_eigenstate(self):
        x = PhasePoint([1, 0], [0, 0])
        assert born_probability_via_metric(x, Observable(np.diag([0.0, 1.0])), 0.0) == pytest.approx(1.0)

    def test_equal_superposition(self):
        x = PhasePoint([1 / R2, 1 / R2], [0, 0])
        assert born_probability_via_metric(x, Observable(np.diag([0.0, 1.0])), 1.0) == pytest.approx(
            0.5, abs=1e-12
        )

    def test_matches_projector_oracle(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 7))
            obs = Observable(random_hermitian(rng, n))
            x = random_point(rng, n)
            psi = from_phase(x).amplitudes
            for a, proj in obs.spectrum:
                want = float(np.real(np.vdot(psi, proj @ psi)))
                if want < 1e-12:
                    continue
                assert abs(born_probability_via_metric(x, obs, a) - want) < 1e-12

    def test_zero_branch_raises(self):
        x = PhasePoint([1, 0], [0, 0])
        with pytest.raises(ZeroProbabilityBranchError):
            born_probability_via_metric(x, Observable(np.diag([0.0, 1.0])), 1.0)


class TestClosestPoint:
    def test_vacuous_trials(self, rng):
        x = PhasePoint([1 / R2, 1 / R2], [0, 0])
        assert closest_point_check(x, Observable(np.diag([0.0, 1.0])), 0.0, 0, rng)

    def test_eigenstate_minimum(self, rng):
        x = PhasePoint([1, 0], [0, 0])
        assert closest_point_check(x, Observable(np.diag([0.0, 1.0])), 0.0, 200, rng)

    def test_random_states_degenerate_eigenspace(self, rng):
        obs = Observable(np.diag([1.0, 1.0, 2.0]))
        for _ in range(20):
            x = random_point(rng, 3)
            assert closest_point_check(x, obs, 1.0, 1000, rng)


class TestNonSelective:
    def test_basis_state_single_atom(self):
        e = measure_nonselective(PhasePoint([0, 1], [0, 0]), Observable(np.diag([0.0, 1.0])))
        assert len(e) == 1 and e.weights[0] == pytest.approx(1.0)

    def test_equal_weights(self):
        e = measure_nonselective(PhasePoint([1 / R2, 1 / R2], [0, 0]), Observable(np.diag([0.0, 1.0])))
        assert np.allclose(e.weights, [0.5, 0.5])
        for pt in e.points:
            assert pt.norm_sq() == pytest.approx(1.0)

    def test_pythagorean_weights(self):
        e = measure_nonselective(PhasePoint([0.6, 0.0], [0.0, 0.8]), Observable(np.diag([0.0, 1.0])))
        assert np.allclose(e.weights, [0.36, 0.64])
        assert e.points[0].q[0] == pytest.approx(1.0)  # q-component atom
        assert e.points[1].p[1] == pytest.approx(1.0)  # p-component atom

    def test_weights_match_selective_probabilities(self, rng):
        obs = Observable(random_hermitian(rng, 4))
        x = random_point(rng, 4)
        e = measure_nonselective(x, obs)
        assert np.max(np.abs(e.weights - branch_probabilities(x, obs))) < 1e-12

    def test_degenerate_basis_rejected(self):
        with pytest.raises(DegenerateBasisError):
            measure_nonselective(PhasePoint([1, 0, 0], [0, 0, 0]), Observable(np.diag([1.0, 1.0, 2.0])))


class TestContinuousObservation:
    def test_two_level_dephasing_rate(self):
        s = 0.7
        rho0 = DensityMatrix(np.full((2, 2), 0.5, dtype=complex))
        m = GaussianMeasurement(Observable(np.diag([1.0, -1.0])), s, 0.01)
        t_final = 1.0 / s
        times, rhos = continuous_observe(rho0, Observable(np.zeros((2, 2))), m, t_final, 4000)
        got = rhos[-1][0, 1].real
        want = 0.5 * np.exp(-2 * s * t_final)
        assert abs(got - want) / want < 1e-6
        assert abs(np.trace(rhos[-1]).real - 1.0) < 1e-9

    def test_identity_observable_no_damping(self, rng):
        h = Observable(random_hermitian(rng, 2))
        rho0 = DensityMatrix(np.diag([0.3, 0.7]).astype(complex))
        m = GaussianMeasurement(Observable(np.eye(2) * 2.0), 5.0, 0.01)
        times, rhos = continuous_observe(rho0, h, m, 1.0, 2000)
        from scipy.linalg import expm

        u = expm(-1j * h.matrix)
        want = u @ rho0.matrix @ u.conj().T
        assert np.max(np.abs(rhos[-1] - want)) < 1e-6

    def test_diagonal_fixed_point(self):
        rho0 = DensityMatrix(np.diag([0.2, 0.8]).astype(complex))
        m = GaussianMeasurement(Observable(np.diag([1.0, -1.0])), 1.0, 0.01)
        times, rhos = continuous_observe(rho0, Observable(np.zeros((2, 2))), m, 2.0, 500)
        assert np.max(np.abs(rhos[-1] - rho0.matrix)) < 1e-12

    def test_three_level_decay_exponents(self):
        s = 0.4
        lam = np.array([0.0, 1.0, 3.0])
        rho0 = DensityMatrix(np.full((3, 3), 1 / 3, dtype=complex))
        m = GaussianMeasurement(Observable(np.diag(lam)), s, 0.01)
        t_final = 0.5
        times, rhos = continuous_observe(
            rho0, Observable(np.zeros((3, 3))), m, t_final, 4000
        )
        for k in range(3):
            for kp in range(k + 1, 3):
                want = (1 / 3) * np.exp(-(s / 2) * (lam[k] - lam[kp]) ** 2 * t_final)
                got = rhos[-1][k, kp].real
                assert abs(got - want) / want < 1e-6

    def test_positivity_preserved(self, rng):
        rho0 = DensityMatrix(np.full((2, 2), 0.5, dtype=complex))
        m = GaussianMeasurement(Observable(np.diag([1.0, -1.0])), 2.0, 0.01)
        _, rhos = continuous_observe(rho0, Observable(random_hermitian(rng, 2)), m, 1.0, 1000)
        for rho in rhos[::100]:
            assert np.min(np.linalg.eigvalsh(rho)) > -1e-8
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-9


class TestGaussian:
    def test_eigenstate_readout_distribution(self):
        rng = np.random.default_rng(5)
        m = GaussianMeasurement(Observable(np.diag([1.0, -1.0])), 2.0, 0.5)
        x = PhasePoint([1, 0], [0, 0])
        alphas = np.array([gaussian_apply(x, m, rng)[0] for _ in range(20_000)])
        assert abs(alphas.mean() - 1.0) < 3 * np.sqrt(m.readout_variance / alphas.size)
        assert abs(alphas.var() - m.readout_variance) < 0.05 * m.readout_variance
        _, post = gaussian_apply(x, m, rng)
        assert np.max(np.abs(post.flat() - x.flat())) < 1e-12

    def test_strong_limit_projects(self, rng):
        m = GaussianMeasurement(Observable(np.diag([1.0, -1.0])), 1000.0, 1.0)
        x = PhasePoint([1 / R2, 1 / R2], [0, 0])
        _, post = gaussian_apply(x, m, rng)
        psi = from_phase(post).amplitudes
        assert max(abs(psi[0]) ** 2, abs(psi[1]) ** 2) > 1 - 1e-6

    def test_readout_density_mixture(self):
        m = GaussianMeasurement(Observable(np.diag([1.0, -1.0])), 1.0, 0.25)
        x = PhasePoint([1 / R2, 1 / R2], [0, 0])
        var = m.readout_variance
        grid = np.linspace(-8, 8, 5001)
        dens = m.readout_density(x, grid)
        want = 0.5 * (
            np.exp(-((grid - 1) ** 2) / (2 * var)) + np.exp(-((grid + 1) ** 2) / (2 * var))
        ) / np.sqrt(2 * np.pi * var)
        assert np.max(np.abs(dens - want)) < 1e-12
        assert abs(np.trapezoid(dens, grid) - 1.0) < 1e-9


class TestDensityMatrix:
    def test_from_state(self):
        rho = DensityMatrix.from_state(StateVector([1 / R2, 1j / R2]))
        assert rho.matrix[0, 1] == pytest.approx(-0.5j)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([1.5, -0.5]).astype(complex))
