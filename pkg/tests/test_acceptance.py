"""End-to-end acceptance checks, one test per criterion.

Each test records its measured numbers as it goes, so the summary line
printed by ``conftest.py`` shows them whether the check passes or fails.
"""

import math
import time

import numpy as np
import pytest

from cases import SUDDEN_AVG, random_case
from qftbench.archive import ShotArchive
from qftbench.bench import (
    adiabatic_threshold,
    analyze_archive,
    empirical_distribution,
    ft_estimate,
    kink_counts,
    verdicts,
)
from qftbench.chimera import build_chimera, expected_edge_count, random_chain, validate_embedding
from qftbench.dynamics import (
    EvolutionConfig,
    IdentityMap,
    KrausMap,
    evolve_unitary_sweep,
    slice_probability,
    steps_for,
)
from qftbench.model import (
    ChainSpec,
    build_hamiltonian,
    build_omega_final,
    build_omega_initial,
    default_schedule,
    ground_state,
    paramagnetic_state,
    spin_configurations,
)
from qftbench.noise import NoiseModel, is_unital, kraus_for
from qftbench.tpm import (
    efficacy,
    exponential_average,
    sample_shots,
    simulate_anneal,
    total_variation,
    transition_matrix,
    work_distribution,
)


@pytest.fixture
def note(record_property):
    def record(n, detail):
        record_property("criterion", n)
        record_property("detail", detail)

    return record


def test_criterion_1_fluctuation_identity(note):
    start = time.perf_counter()
    worst, kinds, sizes = 0.0, set(), set()
    for i in range(126):
        L = 2 + i % 7
        spec, rho0, emap = random_case(1000 + i, L=L)
        om_i, om_f = build_omega_initial(L), build_omega_final(L, spec.J)
        avg = exponential_average(work_distribution(transition_matrix(rho0, om_i, om_f, emap)))
        worst = max(worst, abs(avg - efficacy(rho0, om_i, om_f, emap)))
        kinds.add("kraus" if isinstance(emap, KrausMap) else emap.noise.kind)
        sizes.add(L)
    elapsed = time.perf_counter() - start
    note(1, f"126 cases, L={min(sizes)}..{max(sizes)}, max |<e^-dw> - gamma| = {worst:.2e}, {elapsed:.0f} s")
    assert {"amplitude_damping", "thermal", "kraus"} <= kinds
    assert worst <= 1e-8
    assert elapsed <= 120


def test_criterion_2_ideal_annealer(note):
    start = time.perf_counter()
    L = 6
    tau = 10 * adiabatic_threshold(L, default_schedule(1.0)).tau_ad
    results = {}
    for J in (1.0, -1.0):
        spec = ChainSpec.uniform(L, J)
        sch = default_schedule(tau)
        results[J] = simulate_anneal(spec, sch, config=EvolutionConfig(steps=steps_for(spec, sch)))
    elapsed = time.perf_counter() - start
    ferro, anti = results[1.0], results[-1.0]
    p_top = min(r.abs_final.get(L - 1, 0.0) for r in results.values())
    avg = ferro.exponential_average
    gauge = max(abs(ferro.work.get(k, 0.0) - anti.work.get(k, 0.0)) for k in set(ferro.work) | set(anti.work))
    note(2, f"tau = {tau:.4f} us, P(|w|=L-1) = {p_top:.6f}, <e^-dw> = {avg:.6f}, J/-J gap = {gauge:.1e}, "
            f"{elapsed:.0f} s")
    assert p_top >= 0.999
    assert abs(avg - 1) <= 1e-3 and abs(anti.exponential_average - 1) <= 1e-3
    assert gauge <= 1e-9
    assert elapsed <= 60


def test_criterion_3_unital_discrimination(note):
    start = time.perf_counter()
    L, rate, tau = 6, 0.05, 5.0
    spec = ChainSpec.uniform(L)
    config = EvolutionConfig(steps=2000, mode="channel")
    gaps, witness = {}, {}
    for kind in ("dephasing", "amplitude_damping"):
        noise = NoiseModel(kind, rate)
        res = simulate_anneal(spec, default_schedule(tau), noise, config)
        gaps[kind] = abs(res.exponential_average - res.efficacy)
        # witness on the per-slice channel the run applied
        p = slice_probability(noise, tau / config.steps)
        witness[kind] = is_unital(kraus_for(noise, p))[0]
        if kind == "amplitude_damping":
            archive = sample_shots(res.work, 1_000_000, seed=3, meta={"L": L, "J": 1.0, "tau_us": tau})
            report = analyze_archive(archive, spec, seed=3)
    elapsed = time.perf_counter() - start
    note(3, f"dephasing unital={witness['dephasing']} gap={gaps['dephasing']:.1e}; amplitude damping "
            f"unital={witness['amplitude_damping']} gap={gaps['amplitude_damping']:.1e} "
            f"archive verdict={'unital' if report.unital else 'non-unital'}; {elapsed:.0f} s")
    assert witness == {"dephasing": True, "amplitude_damping": False}
    assert not report.unital
    assert max(gaps.values()) <= 1e-8
    assert elapsed <= 120


def tau_pair_verdict(L, noise, config, seeds):
    spec = ChainSpec.uniform(L)
    reports = []
    for tau, seed in zip((5.0, 50.0), seeds):
        res = simulate_anneal(spec, default_schedule(tau), noise, config, with_efficacy=False)
        archive = sample_shots(res.final_state, 1_000_000, seed, {"L": L, "J": 1.0, "tau_us": tau})
        reports.append(analyze_archive(archive, spec, seed=seed))
    (flag,) = verdicts(reports, require=("tau",)).tau_dependent.values()
    return flag


def test_criterion_4_tau_dependence(note):
    start = time.perf_counter()
    damped = tau_pair_verdict(6, NoiseModel("amplitude_damping", 0.05), EvolutionConfig(steps=2000, mode="channel"),
                              seeds=(11, 12))
    closed = tau_pair_verdict(6, NoiseModel(), EvolutionConfig(steps=2000, integrator="adiabatic-frame"),
                              seeds=(21, 22))
    elapsed = time.perf_counter() - start
    note(4, f"damped TV={damped.max_tv:.4f} vs bar {damped.threshold:.4f} -> {damped.flag}; "
            f"noiseless TV={closed.max_tv:.5f} vs bar {closed.threshold:.5f} -> {closed.flag}; {elapsed:.0f} s")
    assert damped.flag
    assert not closed.flag
    assert elapsed <= 120


def test_criterion_5_adiabatic_threshold(note):
    tau_ad = adiabatic_threshold(100, delta_c=1.0).tau_ad
    note(5, f"tau_ad(L=100, 1 GHz) = {tau_ad!r} us")
    assert tau_ad == 10.0


def test_criterion_6_kibble_zurek(note):
    start = time.perf_counter()
    L = 8
    spec = ChainSpec.uniform(L)
    tau_ad = adiabatic_threshold(L, default_schedule(1.0)).tau_ad
    # quarter-decade grid from 10 tau_ad down to 1e-3 tau_ad
    ratios = 10.0 ** (1 - np.arange(17) / 4)
    taus = ratios * tau_ad
    sch = default_schedule(taus[0])
    psi0 = ground_state(build_hamiltonian(spec, sch, 0.0))
    finals = evolve_unitary_sweep(psi0, spec, sch, taus, EvolutionConfig(steps=steps_for(spec, sch)))
    kinks = kink_counts(spin_configurations(L), spec)
    mean = np.array([np.abs(psi) ** 2 @ kinks for psi in finals])[::-1]
    ratios = ratios[::-1]
    elapsed = time.perf_counter() - start
    rises = [
        f"{ratios[i]:.3g}->{ratios[i + 1]:.3g} tau_ad: {mean[i]:.3e}->{mean[i + 1]:.3e}"
        for i in range(len(mean) - 1)
        if mean[i + 1] > mean[i]
    ]
    top = mean[ratios >= 10 - 1e-9].max()
    note(6, f"<k> from {mean[0]:.3f} at 1e-3 tau_ad to {mean[-1]:.2e} at 10 tau_ad; "
            f"{len(rises)} increases [{'; '.join(rises)}]; {elapsed:.0f} s")
    assert top < 0.01
    assert not rises
    assert elapsed <= 300


def test_criterion_7_sudden_quench(note):
    start = time.perf_counter()
    rho0 = paramagnetic_state(2)
    om_i, om_f = build_omega_initial(2), build_omega_final(2)
    P = work_distribution(transition_matrix(rho0, om_i, om_f, IdentityMap(4)))
    exact_err = max(abs(P.get(0, 0) - 0.5), abs(P.get(-2, 0) - 0.5), abs(exponential_average(P) - SUDDEN_AVG))
    covered = 0
    for seed in range(100):
        archive = sample_shots(P, 100_000, seed, {"L": 2})
        covered += ft_estimate(archive, seed=seed).covers(SUDDEN_AVG)
    elapsed = time.perf_counter() - start
    note(7, f"exact error {exact_err:.1e}, CI coverage {covered}/100; {elapsed:.0f} s")
    assert exact_err <= 1e-12 and set(P) == {0, -2}
    assert covered >= 93


def test_criterion_8_estimator_round_trip(note):
    start = time.perf_counter()
    L, N = 6, 1_000_000
    spec = ChainSpec.uniform(L)
    tau = adiabatic_threshold(L, default_schedule(1.0)).tau_ad / 4
    res = simulate_anneal(spec, default_schedule(tau), config=EvolutionConfig(steps=2000), with_efficacy=False)
    P = res.work
    archive = sample_shots(P, N, seed=8, meta={"L": L, "J": 1.0, "tau_us": tau})
    emp = empirical_distribution(archive, spec)
    K = sum(1 for v in P.values() if v > 0)
    tv = total_variation(emp.work, P)
    ft = ft_estimate(emp, seed=8)
    exact = exponential_average(P)
    elapsed = time.perf_counter() - start
    note(8, f"K={K}, TV={tv:.2e} (bound {5 * math.sqrt(K / N):.2e}), CI [{ft.ci_low:.4f}, {ft.ci_high:.4f}] "
            f"vs exact {exact:.4f}; {elapsed:.0f} s")
    assert isinstance(archive, ShotArchive) and archive.N == N
    assert tv <= 5 * math.sqrt(K / N)
    assert ft.covers(exact)
    assert elapsed <= 60


def test_criterion_9_chimera(note):
    start = time.perf_counter()
    for M in range(1, 9):
        for N in range(1, 9):
            g = build_chimera(M, N)
            assert g.num_nodes == 8 * M * N
            assert len(g.edges) == expected_edge_count(M, N) == 16 * M * N + 4 * (M - 1) * N + 4 * M * (N - 1)
    g = build_chimera(12, 12)
    bad = [s for s in range(1000) if not validate_embedding(g, random_chain(g, 50, seed=s))]
    elapsed = time.perf_counter() - start
    note(9, f"counts verified for M, N <= 8; {1000 - len(bad)}/1000 chains valid; {elapsed:.1f} s")
    assert not bad
    assert elapsed <= 30
