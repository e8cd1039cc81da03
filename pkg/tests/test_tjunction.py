"""
Tests for the T-junction Hamiltonian and its ground-space structure
"""

import numpy as np
import pytest

from core.anyon_algebra import builtin_model, regauge_model
from core.errors import ConfigError, InvalidChannel, NonHermitian
from core.fusion_space import Chirality, Pair, enumerate_basis, pair_projector
from core.tjunction import (CouplingConfig, build_hamiltonian, cluster_ground,
                            degeneracy_profile, ground_space)


def spectrum(basis, a='1', chirality=Chirality.Plus, rel_tol=1e-9, **eps):
    config = CouplingConfig.favored_only(basis.model, a, **eps)
    return ground_space(build_hamiltonian(basis, config, chirality), rel_tol)


class TestCouplingConfig:

    def test_non_abelian_favored_channel(self, fibonacci):
        with pytest.raises(ConfigError):
            CouplingConfig.favored_only(fibonacci, 'tau', eps_B=1.0)

    def test_non_finite_coupling(self, ising):
        with pytest.raises(ConfigError):
            CouplingConfig.favored_only(ising, '1', eps_B=float('nan'))

    def test_scaled(self, fibonacci):
        config = CouplingConfig.favored_only(fibonacci, '1', eps_L=1.0, eps_R=2.0, eps_B=4.0)
        scaled = config.scaled(0.5, 0.0, 0.25)
        assert scaled.coupling(Pair.L) == 0.5
        assert scaled.coupling('R') == 0.0
        assert scaled.coupling(Pair.B) == 1.0


class TestBuildHamiltonian:

    def test_zero_couplings(self, fib_basis):
        config = CouplingConfig.favored_only(fib_basis.model, '1')
        H = build_hamiltonian(fib_basis, config)
        assert np.abs(H.entries).max() == 0.0

    def test_b_only_spectrum(self, fib_basis):
        report = spectrum(fib_basis, eps_B=1.0)
        assert report.eigenvalues == pytest.approx([-1.0, -1.0, 0.0, 0.0, 0.0], abs=1e-12)

    def test_chirality_irrelevant_without_l(self, fib_basis):
        config = CouplingConfig.favored_only(fib_basis.model, '1', eps_R=0.7, eps_B=1.3)
        plus = build_hamiltonian(fib_basis, config, Chirality.Plus)
        minus = build_hamiltonian(fib_basis, config, Chirality.Minus)
        assert np.abs(plus.entries - minus.entries).max() < 1e-15

    def test_block_diagonal(self, ising_basis):
        config = CouplingConfig.favored_only(ising_basis.model, '1', 0.3, 0.9, 1.1)
        assert build_hamiltonian(ising_basis, config).max_offblock() == 0.0

    def test_extra_channel_coupling(self, fib_basis):
        config = CouplingConfig(fib_basis.model, '1', {(Pair.B, 'tau'): 1.0})
        H = build_hamiltonian(fib_basis, config)
        expected = -pair_projector(fib_basis, Pair.B, 'tau').entries
        assert np.abs(H.entries - expected).max() < 1e-15

    def test_invalid_channel(self, ising_basis):
        config = CouplingConfig(ising_basis.model, '1', {(Pair.B, 'sigma'): 1.0})
        with pytest.raises(InvalidChannel):
            build_hamiltonian(ising_basis, config)


class TestGroundSpace:

    @pytest.mark.parametrize('eps', [
        {'eps_B': 1.0},
        {'eps_L': 1.0},
        {'eps_R': 0.4},
        {'eps_B': 1.0, 'eps_L': 1.0},
        {'eps_R': 0.8, 'eps_B': 0.3},
    ])
    def test_fibonacci_protected_degeneracy(self, fibonacci, gauge_variant, eps):
        basis = enumerate_basis(gauge_variant(fibonacci), 'tau')
        report = spectrum(basis, **eps)
        assert report.ground_degeneracy == 2

    @pytest.mark.parametrize('a', ['1', 'psi'])
    @pytest.mark.parametrize('eps', [{'eps_B': 1.0}, {'eps_L': 0.6, 'eps_R': 1.0}])
    def test_ising_protected_degeneracy(self, ising, gauge_variant, a, eps):
        basis = enumerate_basis(gauge_variant(ising), 'sigma')
        assert spectrum(basis, a=a, **eps).ground_degeneracy == 2

    @pytest.mark.parametrize('eps', [{'eps_B': 1.0}, {'eps_R': 0.4}, {'eps_B': 1.0, 'eps_L': 1.0}])
    def test_su2_3_protected_degeneracy(self, gauge_variant, eps):
        basis = enumerate_basis(gauge_variant(builtin_model('SU2_3')), '1/2')
        assert basis.size == 5
        assert spectrum(basis, a='0', **eps).ground_degeneracy == 2

    def test_fibonacci_all_three_lifts_degeneracy(self, fibonacci, gauge_variant):
        basis = enumerate_basis(gauge_variant(fibonacci), 'tau')
        report = spectrum(basis, rel_tol=1e-6, eps_L=1.0, eps_R=1.0, eps_B=1.0)
        assert report.ground_degeneracy == 1
        assert report.gap > 1e-6

    def test_spectrum_is_gauge_invariant(self, non_abelian_basis):
        model, t = non_abelian_basis.model, non_abelian_basis.t
        regauged = enumerate_basis(regauge_model(model, seed=77), t)
        eps = {'eps_L': 0.3, 'eps_R': 0.7, 'eps_B': 1.1}
        stored = spectrum(non_abelian_basis, **eps).eigenvalues
        assert np.abs(spectrum(regauged, **eps).eigenvalues - stored).max() < 1e-12

    @pytest.mark.parametrize('pair', list(Pair))
    def test_single_pair_ground_per_sector(self, fib_basis, pair):
        report = spectrum(fib_basis, **{f'eps_{pair.name}': 0.75})
        assert report.ground_energy == pytest.approx(-0.75)
        V = report.ground_basis
        P = V @ V.conj().T
        for sl in fib_basis.sector_slices().values():
            assert np.trace(P[sl, sl]).real == pytest.approx(1.0)

    def test_ground_basis_orthonormal(self, ising_basis):
        report = spectrum(ising_basis, eps_L=0.5, eps_B=1.0)
        V = report.ground_basis
        assert np.abs(V.conj().T @ V - np.eye(V.shape[1])).max() < 1e-12
        assert report.gap >= 0.0

    def test_rejects_non_hermitian(self, fib_basis):
        with pytest.raises(NonHermitian):
            ground_space(fib_basis.operator(np.triu(np.ones((5, 5)))))

    def test_cluster_ground(self):
        assert cluster_ground(np.array([-1.0, -1.0 + 1e-12, 0.0]), 1e-9) == (2, pytest.approx(1.0))
        assert cluster_ground(np.zeros(3), 1e-9) == (3, 0.0)

    def test_report_serializes(self, fib_basis):
        payload = spectrum(fib_basis, eps_B=1.0).to_dict()
        assert payload['ground_degeneracy'] == 2
        assert len(payload['eigenvalues']) == 5


class TestDegeneracyProfile:

    def test_corners(self, fib_basis):
        config = CouplingConfig.favored_only(fib_basis.model, '1', 1.0, 1.0, 1.0)
        table = degeneracy_profile(fib_basis, config, 2, rel_tol=1e-6, jobs=1)
        assert len(table) == 8
        rows = table.set_index(['s_L', 's_R', 's_B'])['ground_degeneracy']
        assert rows[(0.0, 0.0, 0.0)] == 5
        assert rows[(0.0, 0.0, 1.0)] == 2
        assert rows[(1.0, 1.0, 0.0)] == 2
        assert rows[(1.0, 1.0, 1.0)] == 1

    def test_parallel_matches_sequential(self, ising_basis):
        config = CouplingConfig.favored_only(ising_basis.model, '1', 0.5, 1.0, 0.8)
        sequential = degeneracy_profile(ising_basis, config, 3, jobs=1)
        parallel = degeneracy_profile(ising_basis, config, 3, jobs=3)
        assert sequential.equals(parallel)

    def test_grid_too_small(self, fib_basis):
        config = CouplingConfig.favored_only(fib_basis.model, '1', eps_B=1.0)
        with pytest.raises(ConfigError):
            degeneracy_profile(fib_basis, config, 1)
