"""Benchmark analysis of shot archives from simulations or hardware.

Hardware reports only the final readout, so the first outcome is taken to be
the ground-state value ``omega_i = L - 1``. The final outcome of a bitstring is
its coupling-aligned bond sum ``sum_n sign(J_n) s_n s_{n+1}``: ``L - 1`` for a
defect-free chain of either sign of coupling, lowered by 2 per kink.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import bisect

from .archive import ShotArchive
from .dynamics import GHZ_US
from .errors import ValidationError
from .model import AnnealSchedule, ChainSpec
from .tpm import WorkDistribution, exponential_average, ideal_distribution, total_variation


@dataclass(frozen=True)
class Thresholds:
    """Pass/fail bars of the verdicts; echoed in every report."""

    unital_eps: float = 0.05
    adiabatic_eps: float = 0.01
    tau_noise_factor: float = 3.0
    symmetry_eps: float = 0.02
    bootstrap: int = 1000
    level: float = 0.95


# --- per-shot quantities ------------------------------------------------------------


def final_energy(spins: Sequence[int], spec: ChainSpec) -> tuple[int, int]:
    """Bond sum ``sum_n s_n s_{n+1}`` and the number of kinks.

    A kink is a bond whose alignment violates the sign of its coupling;
    zero couplings never carry kinks.
    """
    s = np.asarray(spins)
    if s.shape != (spec.L,):
        raise ValidationError(f"expected {spec.L} spins, got shape {s.shape}")
    bonds = s[:-1] * s[1:]
    kinks = int(np.sum(np.sign(spec.J) * bonds == -1))
    return int(bonds.sum()), kinks


def aligned_energies(spins: np.ndarray, spec: ChainSpec) -> np.ndarray:
    """Coupling-aligned bond sums for a ``(samples, L)`` array."""
    spins = np.asarray(spins, dtype=np.int64)
    return (spins[:, :-1] * spins[:, 1:]) @ np.array(spec.bond_signs)


def kink_counts(spins: np.ndarray, spec: ChainSpec) -> np.ndarray:
    spins = np.asarray(spins, dtype=np.int64)
    return np.sum(np.sign(spec.J) * (spins[:, :-1] * spins[:, 1:]) == -1, axis=1)


def gauge_map(archive: ShotArchive) -> ShotArchive:
    """Flip every second spin (sites 2, 4, ...) and negate the couplings.

    The image is the archive the -J chain would produce under the same
    physics: kink counts and the |omega_f| marginal are unchanged.
    """
    if archive.spins is None:
        raise ValidationError("gauge map needs bitstring samples")
    sign = np.where(np.arange(archive.L) % 2 == 0, 1, -1).astype(np.int8)
    meta = dict(archive.meta)
    J = meta.get("J", 1.0)
    meta["J"] = [-j for j in J] if isinstance(J, list) else -J
    return ShotArchive(meta, archive.counts.copy(), spins=archive.spins * sign)


# --- empirical statistics -----------------------------------------------------------


@dataclass
class Empirical:
    """Histogram of an archive over the two-point outcome change."""

    work: WorkDistribution
    abs_final: WorkDistribution
    counts: dict[int, int]
    N: int
    L: int

    @property
    def renormalized(self) -> dict[float, float]:
        """|omega_f| / (L - 1) axis; the ideal chain sits at 1."""
        return self.abs_final.renormalized(self.L)


def empirical_distribution(archive: ShotArchive, spec: ChainSpec | None = None) -> Empirical:
    spec = spec or archive.chain_spec()
    L = spec.L
    if archive.spins is not None:
        if archive.spins.shape[1] != L:
            raise ValidationError(f"archive has {archive.spins.shape[1]} spins per shot, chain has {L}")
        dw = aligned_energies(archive.spins, spec) - (L - 1)
    else:
        dw = archive.delta_omega
    counts: dict[int, int] = defaultdict(int)
    for k, c in zip(dw.tolist(), archive.counts.tolist()):
        counts[k] += c
    N = archive.N
    work = WorkDistribution({k: c / N for k, c in counts.items()}, dict(archive.meta))
    abs_counts: dict[int, int] = defaultdict(int)
    for k, c in counts.items():
        abs_counts[abs(k + L - 1)] += c
    abs_final = WorkDistribution({k: c / N for k, c in abs_counts.items()}, {"L": L, "axis": "abs_omega"})
    return Empirical(work, abs_final, dict(sorted(counts.items())), N, L)


@dataclass(frozen=True)
class FTEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    bootstrap: int
    level: float

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def ft_estimate(
    archive_or_empirical, spec: ChainSpec | None = None, bootstrap: int = 1000, seed=0, level: float = 0.95
) -> FTEstimate:
    """<exp(-dw)> over the shots with a percentile bootstrap interval.

    Resampling the N shots with replacement is done as multinomial draws of
    the outcome counts. The interval is widened, if needed, to contain the
    point estimate.
    """
    emp = archive_or_empirical
    if not isinstance(emp, Empirical):
        emp = empirical_distribution(emp, spec)
    estimate = exponential_average(emp.work)
    keys = np.array(list(emp.counts), dtype=float)
    freqs = np.array(list(emp.counts.values()), dtype=float) / emp.N
    shift = float(np.max(-keys))
    weights = np.exp(-keys - shift)
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(emp.N, freqs, size=bootstrap)
    resampled = math.exp(shift) * (draws @ weights) / emp.N
    alpha = 1.0 - level
    lo, hi = np.quantile(resampled, [alpha / 2, 1 - alpha / 2])
    return FTEstimate(estimate, min(float(lo), estimate), max(float(hi), estimate), bootstrap, level)


@dataclass(frozen=True)
class KinkStats:
    mean: float
    density: float
    stderr: float
    N: int


def kink_statistics(archive: ShotArchive, spec: ChainSpec | None = None) -> KinkStats:
    spec = spec or archive.chain_spec()
    if archive.spins is not None:
        k = kink_counts(archive.spins, spec).astype(float)
    else:
        # without bitstrings a uniform-sign chain still has k = -dw / 2
        k = -archive.delta_omega.astype(float) / 2
    w = archive.counts.astype(float)
    N = archive.N
    mean = float(w @ k / N)
    var = float(w @ (k - mean) ** 2 / N)
    return KinkStats(mean, mean / (spec.L - 1), math.sqrt(var / N), N)


@dataclass(frozen=True)
class AdiabaticThreshold:
    tau_ad: float
    delta_c: float
    s_c: float | None = None
    t_c: float | None = None


def crossing_point(schedule: AnnealSchedule, xtol: float = 1e-14) -> float:
    """Normalized time where g(s) = Delta(s), located by bisection."""
    f = lambda s: float(schedule.g(s) - schedule.delta(s))  # noqa: E731
    return bisect(f, 0.0, 1.0, xtol=xtol)


def adiabatic_threshold(
    L: int, schedule: AnnealSchedule | None = None, delta_c: float | None = None
) -> AdiabaticThreshold:
    """tau_ad = L**2 / Delta(t_c) in microseconds (1/GHz = 1 ns).

    Give either the schedule, whose crossing fixes ``Delta(t_c)``, or the
    crossing amplitude ``delta_c`` in GHz directly.
    """
    if (schedule is None) == (delta_c is None):
        raise ValidationError("give exactly one of schedule or delta_c")
    s_c = t_c = None
    if schedule is not None:
        s_c = crossing_point(schedule)
        t_c = s_c * schedule.tau
        delta_c = float(schedule.delta(s_c))
    if not delta_c > 0:
        raise ValidationError(f"crossing amplitude must be positive, got {delta_c}")
    return AdiabaticThreshold(L**2 / delta_c / GHZ_US, delta_c, s_c, t_c)


# --- reports and verdicts ------------------------------------------------------------


@dataclass
class BenchmarkReport:
    meta: dict
    N: int
    empirical: Empirical
    ft: FTEstimate
    tv_ideal: float
    kinks: KinkStats
    tau_ad: float | None
    thresholds: Thresholds
    unital: bool
    adiabatic: bool
    source: str | None = None

    @property
    def tau(self):
        return self.meta.get("tau_us")

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "meta": self.meta,
            "N": self.N,
            "work_distribution": {str(k): v for k, v in self.empirical.work.items()},
            "abs_omega_distribution": {str(k): v for k, v in self.empirical.abs_final.items()},
            "exponential_average": {
                "estimate": self.ft.estimate,
                "ci_low": self.ft.ci_low,
                "ci_high": self.ft.ci_high,
                "bootstrap": self.ft.bootstrap,
                "level": self.ft.level,
            },
            "tv_to_ideal": self.tv_ideal,
            "kinks": asdict(self.kinks),
            "tau_ad_us": self.tau_ad,
            "verdicts": {"unital": self.unital, "adiabatic": self.adiabatic},
            "thresholds": asdict(self.thresholds),
        }

    def write_histograms(self, stem) -> tuple[Path, Path]:
        """``<stem>.work.csv`` (delta_omega) and ``<stem>.abs.csv`` (abs_omega_renorm)."""
        stem = Path(stem)
        work_path = stem.with_name(stem.name + ".work.csv")
        abs_path = stem.with_name(stem.name + ".abs.csv")
        self.empirical.work.to_csv(work_path)
        with open(abs_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["abs_omega_renorm", "probability"])
            for k, v in sorted(self.empirical.renormalized.items()):
                writer.writerow([repr(k), repr(v)])
        return work_path, abs_path


def analyze_archive(
    archive: ShotArchive,
    spec: ChainSpec | None = None,
    thresholds: Thresholds = Thresholds(),
    schedule: AnnealSchedule | None = None,
    seed=0,
) -> BenchmarkReport:
    spec = spec or archive.chain_spec()
    emp = empirical_distribution(archive, spec)
    ft = ft_estimate(emp, bootstrap=thresholds.bootstrap, seed=seed, level=thresholds.level)
    tv = total_variation(emp.abs_final, ideal_distribution(spec.L))
    tau_ad = adiabatic_threshold(spec.L, schedule).tau_ad if schedule is not None else None
    eps = thresholds.unital_eps
    unital = ft.ci_low - eps <= 1.0 <= ft.ci_high + eps
    return BenchmarkReport(
        meta=dict(archive.meta),
        N=archive.N,
        empirical=emp,
        ft=ft,
        tv_ideal=tv,
        kinks=kink_statistics(archive, spec),
        tau_ad=tau_ad,
        thresholds=thresholds,
        unital=unital,
        adiabatic=tv <= thresholds.adiabatic_eps,
        source=archive.source,
    )


def noise_floor(p: dict, n_p: int, q: dict, n_q: int) -> float:
    """Expected TV between two multinomial histograms drawn from their pooled law."""
    keys = set(p) | set(q)
    total = n_p + n_q
    acc = []
    for k in keys:
        pooled = (p.get(k, 0.0) * n_p + q.get(k, 0.0) * n_q) / total
        acc.append(math.sqrt(pooled * (1 - pooled) * (1 / n_p + 1 / n_q)))
    return 0.5 * math.sqrt(2 / math.pi) * math.fsum(acc)


def _chain_key(report: BenchmarkReport):
    J = report.meta.get("J", 1.0)
    J = tuple(J) if isinstance(J, list) else (J,)
    return report.meta.get("L"), J, report.meta.get("machine")


def _pool(reports: Sequence[BenchmarkReport]) -> tuple[dict, int]:
    counts: dict[int, int] = defaultdict(int)
    for r in reports:
        for k, c in r.empirical.counts.items():
            counts[k] += c
    N = sum(counts.values())
    return {k: c / N for k, c in counts.items()}, N


@dataclass
class TauDependence:
    flag: bool
    max_tv: float
    threshold: float
    taus: list
    pairs: list = field(default_factory=list)


def tau_dependence(reports: Sequence[BenchmarkReport], thresholds: Thresholds = Thresholds()) -> TauDependence:
    """Whether the outcome histogram changes with tau beyond sampling noise.

    Reports sharing a tau are pooled. The flag is raised if any pair of tau
    groups differs in TV by more than ``tau_noise_factor`` times the pooled
    multinomial noise floor of that pair.
    """
    groups = defaultdict(list)
    for r in reports:
        if r.tau is None:
            raise ValidationError("tau-dependence needs tau_us in every archive")
        groups[r.tau].append(r)
    if len(groups) < 2:
        raise ValidationError(f"tau-dependence needs at least two tau values, got {len(groups)}")
    pooled = {tau: _pool(rs) for tau, rs in sorted(groups.items())}
    flag, worst, worst_bar, pairs = False, 0.0, 0.0, []
    for (ta, (pa, na)), (tb, (pb, nb)) in combinations(pooled.items(), 2):
        tv = total_variation(pa, pb)
        bar = thresholds.tau_noise_factor * noise_floor(pa, na, pb, nb)
        exceeded = tv > bar
        pairs.append({"tau_a": ta, "tau_b": tb, "tv": tv, "threshold": bar, "exceeded": exceeded})
        if exceeded:
            flag = True
        if tv >= worst:
            worst, worst_bar = tv, bar
    return TauDependence(flag, worst, worst_bar, sorted(groups), pairs)


@dataclass
class Symmetry:
    flag: bool
    max_tv: float
    threshold: float
    pairs: list = field(default_factory=list)


def symmetry(reports: Sequence[BenchmarkReport], thresholds: Thresholds = Thresholds()) -> Symmetry:
    """Compare |omega_f| marginals of J and -J chains at equal tau and machine."""
    index = defaultdict(list)
    for r in reports:
        L, J, machine = _chain_key(r)
        index[(L, J, machine, r.tau)].append(r)
    pairs = []
    for (L, J, machine, tau), rs in index.items():
        partner = index.get((L, tuple(-j for j in J), machine, tau))
        if not partner or J < tuple(-j for j in J):
            continue
        pa, _ = _pool_abs(rs)
        pb, _ = _pool_abs(partner)
        tv = total_variation(pa, pb)
        pairs.append({"L": L, "J": list(J), "tau_us": tau, "machine": machine, "tv": tv})
    if not pairs:
        raise ValidationError("symmetry test needs archives for both J and -J at a common tau")
    worst = max(p["tv"] for p in pairs)
    return Symmetry(worst <= thresholds.symmetry_eps, worst, thresholds.symmetry_eps, pairs)


def _pool_abs(reports):
    acc: dict[int, float] = defaultdict(float)
    N = sum(r.N for r in reports)
    for r in reports:
        for k, v in r.empirical.abs_final.items():
            acc[k] += v * r.N / N
    return dict(acc), N


@dataclass
class Verdicts:
    reports: list
    thresholds: Thresholds
    tau_dependent: dict = field(default_factory=dict)
    symmetric: Symmetry | None = None

    def to_dict(self) -> dict:
        return {
            "reports": [r.to_dict() for r in self.reports],
            "tau_dependent": {
                "|".join(map(str, k)): asdict(v) for k, v in self.tau_dependent.items()
            },
            "symmetric": None if self.symmetric is None else asdict(self.symmetric),
            "thresholds": asdict(self.thresholds),
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def verdicts(
    reports: Sequence[BenchmarkReport], thresholds: Thresholds = Thresholds(), require: Sequence[str] = ()
) -> Verdicts:
    """Cross-archive verdicts.

    Per-report unital and adiabatic flags are already on each report. The
    tau-dependence test runs for every chain (L, J, machine) seen at two or
    more tau values; the symmetry test runs when J and -J archives share a
    tau. Naming a test in ``require`` turns "not enough groups" into an error.
    """
    if not reports:
        raise ValidationError("need at least one report")
    by_chain = defaultdict(list)
    for r in reports:
        by_chain[_chain_key(r)].append(r)
    tau_flags = {}
    for key, rs in by_chain.items():
        if len({r.tau for r in rs}) >= 2:
            tau_flags[key] = tau_dependence(rs, thresholds)
    if "tau" in require and not tau_flags:
        raise ValidationError("tau-dependence needs at least two tau values for one chain")
    try:
        sym = symmetry(reports, thresholds)
    except ValidationError:
        if "symmetry" in require:
            raise
        sym = None
    return Verdicts(list(reports), thresholds, tau_flags, sym)
