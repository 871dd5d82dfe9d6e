"""
Defects left behind by a finite-time anneal
===========================================

Sweeping the anneal time over several decades shows the kink density
falling as the crossing is traversed more slowly, until it settles on the
small residue set by the transverse field that remains at the end of the
schedule.
"""

import numpy as np

from qftbench.bench import adiabatic_threshold, kink_counts
from qftbench.dynamics import EvolutionConfig, evolve_unitary_sweep, steps_for
from qftbench.model import ChainSpec, build_hamiltonian, default_schedule, ground_state, spin_configurations

L = 6
spec = ChainSpec.uniform(L)
tau_ad = adiabatic_threshold(L, default_schedule(1.0)).tau_ad
ratios = 10.0 ** np.arange(-3, 1.01, 0.5)
taus = ratios * tau_ad

# one set of slice spectra serves every anneal time
schedule = default_schedule(taus.max())
psi0 = ground_state(build_hamiltonian(spec, schedule, 0.0))
finals = evolve_unitary_sweep(psi0, spec, schedule, taus, EvolutionConfig(steps=steps_for(spec, schedule)))

kinks = kink_counts(spin_configurations(L), spec)
print(" tau/tau_ad    mean kinks    density")
for r, psi in zip(ratios, finals):
    mean = np.abs(psi) ** 2 @ kinks
    print(f"{r:11.4g}  {mean:12.4e}  {mean / (L - 1):9.3e}")

# the static residue: kinks in the ground pair of the final Hamiltonian
energies, vecs = np.linalg.eigh(build_hamiltonian(spec, schedule, 1.0))
print(f"\nground-pair residue of H(1): {np.abs(vecs[:, 0]) ** 2 @ kinks:.4e} kinks")
