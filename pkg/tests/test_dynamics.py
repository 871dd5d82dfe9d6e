from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qftbench.bench import adiabatic_threshold
from qftbench.dynamics import (
    AnnealMap,
    EvolutionConfig,
    evolve_channel,
    evolve_unitary,
    evolve_unitary_sweep,
    gauge_operator,
    propagator,
    slice_probability,
    slice_spectra,
    steps_for,
)
from qftbench.errors import CapacityError, ChannelError, ValidationError
from qftbench.model import (
    AnnealSchedule,
    ChainSpec,
    build_hamiltonian,
    default_schedule,
    density_matrix,
    ground_state,
    spin_configurations,
)
from qftbench.noise import NoiseModel

FRAME = EvolutionConfig(integrator="adiabatic-frame")


@dataclass(frozen=True)
class ConstantSchedule:
    """Time-independent amplitudes; bypasses the anneal-shape checks on purpose."""

    tau: float
    g0: float
    d0: float

    def g(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.g0)

    def delta(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.d0)


def random_state(rng, dim):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def ground_probability(psi, spec):
    spins = spin_configurations(spec.L)
    aligned = (spins[:, :-1] * spins[:, 1:]) @ np.array(spec.bond_signs)
    return float(np.sum(np.abs(psi[aligned == spec.L - 1]) ** 2))


def initial(spec, schedule):
    return ground_state(build_hamiltonian(spec, schedule, 0.0))


@pytest.mark.parametrize("h", [None, (0.2, -0.1, 0.3, 0.0)])
def test_slice_spectra_match_dense_diagonalization(h):
    spec = ChainSpec(4, (1.0, -0.5, 2.0), h)
    sch = default_schedule(1.0)
    for k, (energies, vecs) in enumerate(slice_spectra(spec, sch, 7)):
        H = build_hamiltonian(spec, sch, (k + 0.5) / 7)
        np.testing.assert_allclose(vecs @ np.diag(energies) @ vecs.T, H, atol=1e-12)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(16), atol=1e-12)


def test_identity_limit():
    spec = ChainSpec.uniform(3, 1.0)
    psi = random_state(np.random.default_rng(0), 8)
    out = evolve_unitary(psi, spec, default_schedule(1e-15), EvolutionConfig(steps=1))
    np.testing.assert_allclose(out, psi, atol=1e-9)


@pytest.mark.parametrize("steps", [1, 7, 64])
@pytest.mark.parametrize("integrator", ["midpoint", "adiabatic-frame"])
def test_time_independent_matches_expm(steps, integrator):
    spec = ChainSpec.uniform(4, 1.0)
    sch = ConstantSchedule(0.003, 0.8, 1.3)
    H = build_hamiltonian(spec, AnnealSchedule(1.0, ((0, 0.8, 0.0), (0.5, 0.8, 1.3), (1, 0.0, 1.3))), 0.5)
    psi = random_state(np.random.default_rng(1), 16)
    exact = expm(-2j * np.pi * H * sch.tau * 1e3) @ psi
    out = evolve_unitary(psi, spec, sch, EvolutionConfig(steps=steps, integrator=integrator))
    np.testing.assert_allclose(out, exact, atol=1e-8)


def test_slow_anneal_reaches_ground_manifold():
    spec = ChainSpec.uniform(6, 1.0)
    sch = default_schedule(5.0)
    assert 5.0 > 100 * adiabatic_threshold(6, sch).tau_ad
    psi = evolve_unitary(initial(spec, sch), spec, sch)
    assert ground_probability(psi, spec) >= 0.999


def test_norm_and_unitarity():
    spec = ChainSpec.uniform(4, -1.0)
    sch = default_schedule(0.2)
    U = propagator(spec, sch, EvolutionConfig(steps=10_000))
    assert np.max(np.abs(U.conj().T @ U - np.eye(16))) <= 1e-9
    psi = random_state(np.random.default_rng(2), 16)
    out = evolve_unitary(psi, spec, sch)
    assert abs(np.linalg.norm(out) - 1) <= 1e-9
    np.testing.assert_allclose(out, propagator(spec, sch) @ psi, atol=1e-10)


def test_density_matrix_input():
    spec = ChainSpec.uniform(3, 1.0)
    sch = default_schedule(0.05)
    psi = random_state(np.random.default_rng(3), 8)
    rho = evolve_unitary(density_matrix(psi), spec, sch)
    out = evolve_unitary(psi, spec, sch)
    np.testing.assert_allclose(rho, np.outer(out, out.conj()), atol=1e-12)


def test_sweep_matches_single_runs():
    spec = ChainSpec.uniform(4, 1.0)
    sch = default_schedule(1.0)
    psi = initial(spec, sch)
    taus = [0.01, 0.1, 1.0]
    for config in (EvolutionConfig(steps=300), EvolutionConfig(steps=300, integrator="adiabatic-frame")):
        outs = evolve_unitary_sweep(psi, spec, sch, taus, config)
        for tau, out in zip(taus, outs):
            np.testing.assert_allclose(out, evolve_unitary(psi, spec, sch.with_tau(tau), config), atol=1e-12)


def test_input_validation():
    spec = ChainSpec.uniform(3, 1.0)
    with pytest.raises(ValidationError):
        evolve_unitary(np.ones(8), spec, default_schedule(1.0))
    with pytest.raises(ValidationError):
        evolve_unitary(np.ones(4) / 2, spec, default_schedule(1.0))
    with pytest.raises(CapacityError):
        evolve_unitary(np.ones(8) / np.sqrt(8), spec, default_schedule(1.0), EvolutionConfig(max_qubits=2))
    with pytest.raises(ValidationError):
        EvolutionConfig(steps=0)
    with pytest.raises(ValidationError):
        EvolutionConfig(mode="lindblad")
    with pytest.raises(ValidationError):
        EvolutionConfig(mode="channel", integrator="adiabatic-frame")
    with pytest.raises(ValidationError):
        evolve_channel(np.ones(8) / np.sqrt(8), spec, default_schedule(1.0), NoiseModel())


def test_steps_for_scales_with_tau():
    spec = ChainSpec.uniform(6, 1.0)
    assert steps_for(spec, default_schedule(1e-4)) == 2000
    a, b = steps_for(spec, default_schedule(1.0)), steps_for(spec, default_schedule(2.0))
    assert b == pytest.approx(2 * a, abs=1)


def test_slice_probability_cap_warns():
    with pytest.warns(UserWarning):
        assert slice_probability(NoiseModel("dephasing", 10.0), 1.0) == 1.0
    assert slice_probability(NoiseModel("dephasing", 0.5), 0.1) == pytest.approx(0.05)


# --- noisy evolution ----------------------------------------------------------


def test_zero_noise_equals_unitary():
    spec = ChainSpec.uniform(4, 1.0)
    sch = default_schedule(0.05)
    psi = initial(spec, sch)
    rho = evolve_channel(density_matrix(psi), spec, sch, NoiseModel("dephasing", 0.0))
    out = evolve_unitary(psi, spec, sch)
    np.testing.assert_allclose(rho, np.outer(out, out.conj()), atol=1e-9)


def test_full_depolarizing_reaches_maximally_mixed():
    spec = ChainSpec.uniform(3, 1.0)
    sch = default_schedule(0.02)
    steps = 50
    # p = 3/4 per slice is complete single-qubit depolarization
    noise = NoiseModel("depolarizing", 0.75 / (sch.tau / steps))
    psi = initial(spec, sch)
    rho = evolve_channel(density_matrix(psi), spec, sch, noise, EvolutionConfig(steps=steps, mode="channel"))
    np.testing.assert_allclose(rho, np.eye(8) / 8, atol=1e-9)


def test_dephasing_step_refinement():
    spec = ChainSpec.uniform(4, 1.0)
    sch = default_schedule(0.005)
    steps = 2000
    noise = NoiseModel("dephasing", 0.01 / (sch.tau / steps))
    rho0 = density_matrix(initial(spec, sch))
    coarse = evolve_channel(rho0, spec, sch, noise, EvolutionConfig(steps=steps, mode="channel"))
    fine = evolve_channel(rho0, spec, sch, noise, EvolutionConfig(steps=4 * steps, mode="channel"))
    assert abs(np.trace(coarse) - 1) <= 1e-10
    assert np.max(np.abs(coarse - coarse.conj().T)) <= 1e-10
    assert np.linalg.eigvalsh(coarse).min() >= -1e-8
    assert np.max(np.abs(coarse - fine)) <= 1e-4


def test_step_doubling_convergence():
    spec = ChainSpec.uniform(3, 1.0)
    sch = default_schedule(0.002)
    noise = NoiseModel("amplitude_damping", 200.0)
    rho0 = density_matrix(initial(spec, sch))
    runs = [evolve_channel(rho0, spec, sch, noise, EvolutionConfig(steps=n, mode="channel")) for n in (100, 200, 400)]
    first = np.max(np.abs(runs[0] - runs[1]))
    second = np.max(np.abs(runs[1] - runs[2]))
    assert first >= 2 * second > 0


@pytest.mark.parametrize("noise", [NoiseModel(), NoiseModel("dephasing", 30.0), NoiseModel("depolarizing", 30.0)])
def test_gauge_covariance(noise):
    L = 4
    perm = gauge_operator(L)
    sch = default_schedule(0.01)
    ferro, anti = ChainSpec.uniform(L, 1.0), ChainSpec.uniform(L, -1.0)
    rho = density_matrix(random_state(np.random.default_rng(4), 16))
    config = EvolutionConfig(steps=200, mode="unitary" if noise.is_trivial else "channel")
    a = AnnealMap(ferro, sch, noise, config).apply(rho)
    b = AnnealMap(anti, sch, noise, config).apply(rho[np.ix_(perm, perm)])
    np.testing.assert_allclose(a[np.ix_(perm, perm)], b, atol=1e-12)


def test_gauge_operator_flips_alternate_sites():
    perm = gauge_operator(3)
    spins = spin_configurations(3)
    np.testing.assert_array_equal(spins[perm], spins * np.array([1, -1, 1]))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), kind=st.sampled_from(["dephasing", "depolarizing", "amplitude_damping"]))
def test_anneal_map_trace_preserving(seed, kind):
    emap = AnnealMap(ChainSpec.uniform(3, 1.0), default_schedule(0.01), NoiseModel(kind, 50.0),
                     EvolutionConfig(steps=40, mode="channel"))
    assert emap.check_trace_preserving(seed=seed) <= 1e-9


def test_trace_check_rejects_lossy_map():
    from qftbench.dynamics import QuantumMap

    class Lossy(QuantumMap):
        dim = 2

        def apply(self, ops):
            return 0.5 * np.asarray(ops)

    with pytest.raises(ChannelError):
        Lossy().check_trace_preserving()


# --- adiabatic-frame integrator -----------------------------------------------


def test_frame_integrator_agrees_with_converged_midpoint():
    spec = ChainSpec.uniform(4, 1.0)
    sch = default_schedule(0.01)
    psi = initial(spec, sch)
    reference = evolve_unitary(psi, spec, sch, EvolutionConfig(steps=steps_for(spec, sch, max_phase=0.2)))
    frame = evolve_unitary(psi, spec, sch, EvolutionConfig(steps=4000, integrator="adiabatic-frame"))
    np.testing.assert_allclose(np.abs(frame) ** 2, np.abs(reference) ** 2, atol=1e-6)


def test_frame_integrator_slow_anneal_is_tau_independent():
    spec = ChainSpec.uniform(4, 1.0)
    sch = default_schedule(5.0)
    psi = initial(spec, sch)
    outs = evolve_unitary_sweep(psi, spec, sch, [5.0, 50.0], FRAME)
    leaks = [1 - ground_probability(out, spec) for out in outs]
    assert max(leaks) < 1e-5
    assert abs(leaks[0] - leaks[1]) < 1e-6


def test_frame_integrator_is_unitary():
    spec = ChainSpec(4, (1.0, -1.0, 0.5), (0.1, 0.0, 0.0, -0.2))
    U = propagator(spec, default_schedule(3.0), FRAME)
    assert np.max(np.abs(U.conj().T @ U - np.eye(16))) <= 1e-9
    emap = AnnealMap(spec, default_schedule(3.0), config=FRAME)
    psi = random_state(np.random.default_rng(5), 16)
    np.testing.assert_allclose(emap.apply_vector(psi), U @ psi, atol=1e-10)
