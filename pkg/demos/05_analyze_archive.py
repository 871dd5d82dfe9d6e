"""
Analyzing shot archives
=======================

Archives from hardware or simulation are read from JSON or CSV, turned into
histograms, and compared across anneal times and coupling signs. Here a
small set of archives is written to a temporary folder and passed through
the command line tool exactly as hardware data would be.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from qftbench.archive import ShotArchive
from qftbench.bench import gauge_map
from qftbench.cli import main

rng = np.random.default_rng(3)
L, N = 8, 100_000
folder = Path(tempfile.mkdtemp(prefix="qftbench-demo-"))


def noisy_archive(tau, flip_rate):
    """Ferromagnetic readouts with independent bond defects."""
    first = rng.choice([-1, 1], size=N)
    bonds = np.where(rng.random((N, L - 1)) < flip_rate, -1, 1)
    spins = np.column_stack([first, first[:, None] * np.cumprod(bonds, axis=1)]).astype(np.int8)
    uniq, counts = np.unique(spins, axis=0, return_counts=True)
    return ShotArchive({"L": L, "J": 1.0, "tau_us": tau, "machine": "demo"}, counts, spins=uniq)


# a defect rate that grows with tau, as dissipation would cause
paths = []
for tau, rate in ((5.0, 0.01), (50.0, 0.04)):
    arch = noisy_archive(tau, rate)
    path = folder / f"ferro_tau{tau:g}.csv"
    arch.to_csv(path)
    paths.append(path)
    # the gauge image is what an antiferromagnetic chain would report
    mirror = folder / f"anti_tau{tau:g}.json"
    gauge_map(arch).to_json(mirror)
    paths.append(mirror)

code = main(["analyze", *map(str, paths), "--out", str(folder / "report")])
report = json.loads((folder / "report" / "report.json").read_text())
print("exit code", code, "- outputs in", folder / "report")
for r in report["reports"]:
    ft = r["exponential_average"]
    print(f"{Path(r['source']).name:>18}  <exp(-dw)> = {ft['estimate']:.4f} "
          f"[{ft['ci_low']:.4f}, {ft['ci_high']:.4f}]  TV to ideal = {r['tv_to_ideal']:.3f}  "
          f"kinks = {r['kinks']['mean']:.3f}")
for chain, td in report["tau_dependent"].items():
    print(f"tau-dependent ({chain}): {td['flag']}  TV {td['max_tv']:.4f} vs {td['threshold']:.4f}")
sym = report["symmetric"]
print(f"J / -J symmetric: {sym['flag']}  worst TV {sym['max_tv']:.2e}")
