import numpy as np
import pytest

from projens.ensembles import sample_haar_state
from projens.linalg import DimensionSpec, PureState, computational_zero, reduced_density_a
from projens.projected import bath_outcome_gram, build_projected_ensemble
from projens.designs import frame_potential


def bell_state():
    return PureState(np.array([1, 0, 0, 1]) / np.sqrt(2))


class TestBuildProjectedEnsemble:
    def test_product_state_single_entry(self):
        dims = DimensionSpec(1, 1)
        ens = build_projected_ensemble(computational_zero(4), dims)
        assert len(ens) == 1
        entry = ens.entries[0]
        assert entry.z == 0
        assert entry.weight == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(entry.state.amplitudes, [1, 0])

    def test_bell_state_schmidt_branches(self):
        ens = build_projected_ensemble(bell_state(), DimensionSpec(1, 1))
        assert len(ens) == 2
        for entry, basis in zip(ens.entries, ([1, 0], [0, 1])):
            assert entry.weight == pytest.approx(0.5, abs=1e-12)
            assert np.allclose(entry.state.amplitudes, basis)

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(0)
        dims = DimensionSpec(2, 4)
        for _ in range(5):
            ens = build_projected_ensemble(sample_haar_state(dims.dim, rng), dims)
            assert len(ens) <= dims.dim_b
            assert ens.weights.sum() == pytest.approx(1.0, abs=1e-10)
            for e in ens.entries:
                assert abs(np.linalg.norm(e.state.amplitudes) - 1.0) < 1e-10

    def test_zero_weight_branches_dropped(self):
        # state supported on bath outcome 0 only
        psi = PureState(np.array([1, 0, 1, 0]) / np.sqrt(2))
        ens = build_projected_ensemble(psi, DimensionSpec(1, 1))
        assert [e.z for e in ens.entries] == [0]

    def test_reconstruction(self):
        rng = np.random.default_rng(1)
        dims = DimensionSpec(2, 3)
        psi = sample_haar_state(dims.dim, rng)
        ens = build_projected_ensemble(psi, dims)
        rebuilt = np.zeros((dims.dim_a, dims.dim_b), dtype=complex)
        for e in ens.entries:
            rebuilt[:, e.z] = np.sqrt(e.weight) * e.state.amplitudes
        assert np.max(np.abs(rebuilt.reshape(-1) - psi.amplitudes)) < 1e-9

    def test_bath_relabeling_permutes_entries(self):
        rng = np.random.default_rng(2)
        dims = DimensionSpec(1, 3)
        psi = sample_haar_state(dims.dim, rng)
        perm = np.array([5, 0, 3, 7, 2, 6, 1, 4])
        amp = psi.amplitudes.reshape(dims.dim_a, dims.dim_b)[:, perm].reshape(-1)
        relabeled = PureState(amp)
        a = build_projected_ensemble(psi, dims)
        b = build_projected_ensemble(relabeled, dims)

        def fingerprint(ens):
            return sorted(
                (round(e.weight, 12), tuple(np.round(np.abs(e.state.amplitudes), 10)))
                for e in ens.entries
            )

        assert fingerprint(a) == fingerprint(b)

    def test_guards(self):
        with pytest.raises(ValueError, match="mismatch"):
            build_projected_ensemble(computational_zero(8), DimensionSpec(1, 1))
        with pytest.raises(ValueError, match="enumeration guard"):
            build_projected_ensemble(computational_zero(2 ** 16), DimensionSpec(1, 15))


class TestOutcomeGram:
    def test_diagonal_is_weights(self):
        rng = np.random.default_rng(3)
        dims = DimensionSpec(2, 2)
        psi = sample_haar_state(dims.dim, rng)
        q, gram = bath_outcome_gram(psi, dims)
        assert np.max(np.abs(gram - gram.conj().T)) < 1e-12
        assert np.allclose(np.diag(gram).real, q)
        assert q.sum() == pytest.approx(1.0, abs=1e-12)

    def test_purity_identity(self):
        # frame potential at k = 1 equals the purity of the reduced state
        rng = np.random.default_rng(4)
        dims = DimensionSpec(1, 3)
        psi = sample_haar_state(dims.dim, rng)
        ens = build_projected_ensemble(psi, dims)
        rho = reduced_density_a(psi, dims)
        purity = float(np.trace(rho @ rho).real)
        assert frame_potential(ens, 1) == pytest.approx(purity, abs=1e-10)
