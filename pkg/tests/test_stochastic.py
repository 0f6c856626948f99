import numpy as np
import pytest

from dispersion_lab.errors import DomainError, StabilityWarning
from dispersion_lab.grid_model import Grid, PotentialGrid
from dispersion_lab.spectral_operator import DiscreteHamiltonian, propagate
from dispersion_lab.stochastic import (
    euler_maruyama_ito,
    path_rng,
    sample_brownian,
    time_changed_propagate,
)


class TestSampleBrownian:
    def test_starts_at_zero(self):
        ens = sample_brownian(2.0, 64, 10, seed=3)
        assert np.all(ens.values[:, 0] == 0.0)

    def test_terminal_variance(self):
        # n_steps = 1: beta(T) ~ N(0, T); 1e5 draws pin the variance
        T = 3.0
        ens = sample_brownian(T, 1, 100_000, seed=5)
        var = np.var(ens.values[:, -1])
        assert 0.97 * T < var < 1.03 * T

    def test_covariance_structure(self):
        # Cov(beta_s, beta_t) = min(s, t); 4 standard errors of slack
        T = 2.0
        ens = sample_brownian(T, 2, 100_000, seed=8)
        prod = ens.values[:, 1] * ens.values[:, 2]
        se = np.std(prod) / np.sqrt(ens.n_paths)
        assert abs(np.mean(prod) - T / 2.0) < 4.0 * se

    def test_bit_reproducible(self):
        a = sample_brownian(1.0, 128, 8, seed=42)
        b = sample_brownian(1.0, 128, 8, seed=42)
        assert np.array_equal(a.increments, b.increments)
        # per-path substreams do not depend on generation order
        lone = path_rng(42, 5).normal(0.0, np.sqrt(1.0 / 128), 128)
        assert np.array_equal(a.increments[5], lone)

    def test_first_increment_stable(self):
        a = sample_brownian(1.0, 16, 1, seed=42).increments[0, 0]
        b = sample_brownian(1.0, 16, 1, seed=42).increments[0, 0]
        assert a == b

    def test_rejects_bad_sizes(self):
        with pytest.raises(DomainError):
            sample_brownian(0.0, 4, 4, 0)
        with pytest.raises(DomainError):
            sample_brownian(1.0, 0, 4, 0)


class TestTimeChangedPropagate:
    def test_time_zero_state(self, ham_gauss_1024, rng):
        H = ham_gauss_1024
        u0 = rng.normal(size=H.n) + 1j * rng.normal(size=H.n)
        ens = sample_brownian(1.0, 8, 2, seed=1)
        sols = time_changed_propagate(H, ens, u0)
        for sol in sols:
            assert np.max(np.abs(sol.states[:, 0] - u0)) < 1e-12

    def test_norm_constant_along_paths(self, ham_gauss_1024, rng):
        H = ham_gauss_1024
        u0 = rng.normal(size=H.n) + 1j * rng.normal(size=H.n)
        ens = sample_brownian(2.0, 32, 3, seed=7)
        for sol in time_changed_propagate(H, ens, u0):
            norms = np.linalg.norm(sol.states, axis=0)
            assert np.max(np.abs(norms - norms[0])) < 1e-9 * norms[0]

    def test_single_mode_diagonal_action(self, ham_free_1024_l30):
        H = ham_free_1024_l30
        k = 17
        u0 = H.eigenvectors[:, k].astype(complex)
        ens = sample_brownian(1.5, 16, 2, seed=11)
        sols = time_changed_propagate(H, ens, u0)
        for p, sol in enumerate(sols):
            expect = np.exp(-1j * H.eigenvalues[k] * ens.values[p])[None, :] * u0[:, None]
            assert np.max(np.abs(sol.states - expect)) < 1e-10

    def test_composition_of_flows(self, ham_gauss_1024, rng):
        # S(t, s) S(s, r) = S(t, r): phases add along the path
        H = ham_gauss_1024
        u0 = rng.normal(size=H.n) + 1j * rng.normal(size=H.n)
        bt, bs, br = 0.9, -0.4, 0.2
        via = propagate(H, bt - bs, propagate(H, bs - br, u0))
        direct = propagate(H, bt - br, u0)
        assert np.linalg.norm(via - direct) / np.linalg.norm(direct) < 1e-10

    def test_projected_flag(self, ham_gauss_1024, rng):
        H = ham_gauss_1024
        u0 = rng.normal(size=H.n).astype(complex)
        ens = sample_brownian(1.0, 4, 1, seed=2)
        sol = time_changed_propagate(H, ens, u0, project=True)[0]
        assert sol.ac_projected is True


def single_mode_hamiltonian(eigenvalue: float) -> DiscreteHamiltonian:
    """Hand-built 16-point operator: identity eigenbasis, one eigenvalue."""
    grid = Grid(l_box=1.0, n_points=16)
    lam = np.zeros(16)
    lam[0] = eigenvalue
    return DiscreteHamiltonian(
        grid=grid,
        potential=PotentialGrid(grid=grid, values=np.zeros(16)),
        diagonal=lam.copy(),
        off_diagonal=np.zeros(15),
        eigenvalues=lam,
        eigenvectors=np.eye(16),
        bound_state_indices=np.array([], dtype=int),
    )


class TestEulerMaruyama:
    def test_zero_eigenvalue_constant(self):
        H = single_mode_hamiltonian(0.0)
        u0 = np.zeros(16, complex)
        u0[0] = 1.0
        inc = path_rng(1, 0).normal(0.0, 0.1, 64)
        out = euler_maruyama_ito(H, inc, 1.0, u0, 64)
        assert np.array_equal(out, u0)

    def test_single_mode_strong_order(self):
        # oracle: the exact mode solution e^{-i lam beta(T)}; EM converges
        # with strong order ~ 1/2
        lam = 2.0
        H = single_mode_hamiltonian(lam)
        u0 = np.zeros(16, complex)
        u0[0] = 1.0
        T, n_fine, n_paths = 1.0, 512, 200
        levels = [2**k for k in range(4, 10)]
        errs = np.zeros(len(levels))
        for p in range(n_paths):
            inc = path_rng(33, p).normal(0.0, np.sqrt(T / n_fine), n_fine)
            exact = np.exp(-1j * lam * inc.sum())
            for li, nst in enumerate(levels):
                out = euler_maruyama_ito(H, inc, T, u0, nst)
                errs[li] += abs(out[0] - exact)
        errs /= n_paths
        dts = np.array([T / n for n in levels])
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert 0.35 <= slope <= 0.65

    def test_full_hamiltonian_converges_to_time_change(self, ham_gauss_1024):
        # the time-changed propagator is the oracle for the Ito form
        H = ham_gauss_1024
        c = np.zeros(H.n, complex)
        sel = H.eigenvalues <= 2.0
        c[sel] = np.exp(-np.arange(sel.sum()))
        c /= np.linalg.norm(c)
        u0 = H.from_eigenbasis(c)
        inc = path_rng(7, 0).normal(0.0, np.sqrt(1.0 / 1024), 1024)
        exact = propagate(H, float(inc.sum()), u0)
        errs = []
        for nst in (16, 64, 256, 1024):
            em = euler_maruyama_ito(H, inc, 1.0, u0, nst)
            errs.append(np.linalg.norm(em - exact))
        assert errs[-1] < errs[0]
        assert errs[-1] < 0.1 * np.linalg.norm(u0)

    def test_adapted_prefix(self):
        # u(t_k) depends only on increments before k
        lam = 1.0
        H = single_mode_hamiltonian(lam)
        u0 = np.zeros(16, complex)
        u0[0] = 1.0
        inc = path_rng(4, 0).normal(0.0, 0.05, 32)
        traj = euler_maruyama_ito(H, inc, 1.0, u0, 32, return_trajectory=True)
        tampered = inc.copy()
        tampered[20:] = 99.0
        traj2 = euler_maruyama_ito(H, tampered, 1.0, u0, 32, return_trajectory=True)
        assert np.array_equal(traj[:21], traj2[:21])
        assert not np.allclose(traj[21:], traj2[21:])

    def test_stability_warning(self, ham_gauss_1024):
        H = ham_gauss_1024
        u0 = np.ones(H.n, complex)  # occupies every mode
        inc = path_rng(5, 0).normal(0.0, np.sqrt(1.0 / 64), 64)
        with pytest.warns(StabilityWarning):
            euler_maruyama_ito(H, inc, 1.0, u0, 64)

    def test_steps_must_divide(self, ham_gauss_1024):
        inc = np.zeros(100)
        with pytest.raises(DomainError):
            euler_maruyama_ito(ham_gauss_1024, inc, 1.0, np.ones(1024, complex), 64)


class TestCsvExports:
    def test_ensemble_export(self, tmp_path):
        from dispersion_lab.stochastic import ensemble_to_csv

        ens = sample_brownian(1.0, 4, 2, seed=6)
        out = tmp_path / "paths.csv"
        ensemble_to_csv(ens, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "path,t,beta"
        assert len(lines) == 1 + 2 * 5
        p, t, b = lines[3].split(",")
        assert int(p) == 0
        assert float(b) == ens.values[0, 2]

    def test_path_solution_export(self, tmp_path, ham_gauss_1024, rng):
        from dispersion_lab.stochastic import path_solution_to_csv

        H = ham_gauss_1024
        u0 = rng.normal(size=H.n).astype(complex)
        ens = sample_brownian(1.0, 4, 1, seed=6)
        sol = time_changed_propagate(H, ens, u0, time_indices=np.array([0, 4]))[0]
        out = tmp_path / "snap.csv"
        path_solution_to_csv(sol, H.grid.x, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "t,x,re_u,im_u"
        assert len(lines) == 1 + 2 * H.n
        t, x, re, im = lines[1].split(",")
        assert float(re) == sol.states[0, 0].real
