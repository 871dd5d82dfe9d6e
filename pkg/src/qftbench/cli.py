"""Command line entry point: ``qftbench simulate | analyze | chimera``.

Exit codes: 0 success, 2 validation or usage error, 3 capacity error,
4 I/O error, 5 embedding failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .archive import ingest
from .bench import Thresholds, analyze_archive, verdicts
from .chimera import build_chimera, random_chain, validate_embedding
from .dynamics import INTEGRATORS, EvolutionConfig, steps_for
from .errors import CapacityError, EmbeddingError, QFTBenchError, ValidationError
from .model import MAX_QUBITS, ChainSpec, check_capacity, default_schedule, read_schedule_csv
from .noise import NoiseModel
from .tpm import exponential_average, sample_shots, simulate_anneal

log = logging.getLogger("qftbench")

EXIT_OK, EXIT_VALIDATION, EXIT_CAPACITY, EXIT_IO, EXIT_EMBEDDING = 0, 2, 3, 4, 5


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def _steps(text: str):
    if text == "auto":
        return text
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"steps must be an integer or 'auto', got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("steps must be positive")
    return n


def _add_thresholds(p):
    d = Thresholds()
    p.add_argument("--unital-eps", type=float, default=d.unital_eps)
    p.add_argument("--adiabatic-eps", type=float, default=d.adiabatic_eps)
    p.add_argument("--tau-noise-factor", type=float, default=d.tau_noise_factor)
    p.add_argument("--symmetry-eps", type=float, default=d.symmetry_eps)
    p.add_argument("--bootstrap", type=int, default=d.bootstrap)
    p.add_argument("--level", type=float, default=d.level)


def _thresholds(args) -> Thresholds:
    return Thresholds(
        args.unital_eps, args.adiabatic_eps, args.tau_noise_factor, args.symmetry_eps, args.bootstrap, args.level
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qftbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate anneals, sample shots and write exact distributions")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--J", default="1", help="uniform coupling or comma list of L-1 couplings")
    p.add_argument("--h", default=None, help="comma list of L longitudinal fields (default zeros)")
    p.add_argument("--schedule", default=None, help="CSV with header s,g_ghz,delta_ghz (default built-in)")
    p.add_argument("--tau", required=True, help="anneal time(s) in microseconds, comma separated")
    p.add_argument("--noise", default="none", help="kind:rate[:excitation], rate per microsecond")
    p.add_argument("--steps", type=_steps, default=2000, help="time slices, or 'auto'")
    p.add_argument("--integrator", choices=INTEGRATORS, default="midpoint",
                   help="closed-evolution scheme; adiabatic-frame suits slow noiseless anneals")
    p.add_argument("--shots", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--machine", default="simulator")
    p.add_argument("--max-qubits", type=int, default=MAX_QUBITS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="qftbench-out")
    _add_thresholds(p)

    p = sub.add_parser("analyze", help="benchmark report for shot archives")
    p.add_argument("archives", nargs="+")
    p.add_argument("--schedule", default=None, help="schedule CSV for the adiabatic threshold")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="qftbench-report")
    _add_thresholds(p)

    p = sub.add_parser("chimera", help="random chain embedding on a chimera graph")
    p.add_argument("--M", type=int, default=12)
    p.add_argument("--N", type=int, default=12)
    p.add_argument("--t", type=int, default=4)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-restarts", type=int, default=10_000)
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    return parser


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _tau_label(tau: float) -> str:
    return f"{tau:g}".replace(".", "p")


def _simulate_cell(cell: dict) -> dict:
    spec = ChainSpec(cell["L"], tuple(cell["J"]), tuple(cell["h"]))
    schedule = default_schedule(cell["tau"])
    if cell["knots"] is not None:
        schedule = schedule.__class__(cell["tau"], tuple(tuple(k) for k in cell["knots"]))
    noise = NoiseModel.parse(cell["noise"])
    config = EvolutionConfig(steps=cell["steps"], mode="unitary" if noise.is_trivial else "channel",
                             max_qubits=cell["max_qubits"], integrator=cell["integrator"])
    result = simulate_anneal(spec, schedule, noise, config)
    meta = {"L": spec.L, "J": list(spec.J), "tau_us": cell["tau"], "machine": cell["machine"],
            "noise": noise.describe(), "seed": cell["seed"]}
    archive = sample_shots(result.final_state, cell["shots"], cell["seed"], meta)
    return {"result": result, "archive": archive, "schedule": schedule, "spec": spec}


def cmd_simulate(args) -> int:
    # validate everything before any computation
    J = _floats(args.J)
    check_capacity(args.L, args.max_qubits)
    if len(J) == 1:
        J = J * (args.L - 1)
    h = _floats(args.h) if args.h else [0.0] * args.L
    spec = ChainSpec(args.L, tuple(J), tuple(h))
    taus = _floats(args.tau)
    if not taus:
        raise ValidationError("need at least one tau")
    schedules = [read_schedule_csv(args.schedule, t) if args.schedule else default_schedule(t) for t in taus]
    noise = NoiseModel.parse(args.noise)
    if args.integrator != "midpoint" and not noise.is_trivial:
        raise ValidationError(f"the {args.integrator} integrator only supports noiseless runs")
    if args.shots < 1:
        raise ValidationError("shots must be positive")
    thresholds = _thresholds(args)
    steps = [steps_for(spec, s) if args.steps == "auto" else args.steps for s in schedules]
    if args.integrator == "midpoint":
        for s, n in zip(schedules, steps):
            needed = steps_for(spec, s, minimum=1)
            if n < needed:
                log.warning("tau=%g us: %d slices may alias transitions (need %d); use --steps auto or "
                            "--integrator adiabatic-frame", s.tau, n, needed)
    seeds = [int(x) for x in np.random.SeedSequence(args.seed).generate_state(len(taus))]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    knots = [list(k) for k in schedules[0].knots]
    cells = [
        {
            "L": spec.L, "J": list(spec.J), "h": list(spec.h), "tau": tau, "knots": knots,
            "noise": noise.describe(), "steps": n, "integrator": args.integrator, "shots": args.shots,
            "seed": sd, "machine": args.machine, "max_qubits": args.max_qubits,
        }
        for tau, n, sd in zip(taus, steps, seeds)
    ]
    manifest = {
        "command": "simulate", "version": __version__, "L": spec.L, "J": list(spec.J), "h": list(spec.h),
        "schedule": args.schedule, "knots": knots, "taus_us": taus, "noise": noise.describe(),
        "steps": steps, "integrator": args.integrator, "shots": args.shots, "seed": args.seed,
        "cell_seeds": seeds, "machine": args.machine, "max_qubits": args.max_qubits,
        "workers": args.workers, "thresholds": vars(thresholds),
    }
    _write_json(out / "manifest.json", manifest)

    if args.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_simulate_cell, cells))
    else:
        results = [_simulate_cell(c) for c in cells]

    reports = []
    for cell, res in zip(cells, results):
        stem = out / f"L{spec.L}_tau{_tau_label(cell['tau'])}"
        archive, result = res["archive"], res["result"]
        archive.to_json(stem.with_suffix(".json"))
        result.work.to_csv(stem.with_name(stem.name + ".exact.csv"))
        result.abs_final.to_csv(stem.with_name(stem.name + ".exact_abs.csv"), key_name="abs_omega")
        report = analyze_archive(archive, spec, thresholds, res["schedule"], seed=cell["seed"])
        report.source = str(stem.with_suffix(".json"))
        report.write_histograms(stem)
        doc = report.to_dict()
        doc["exact"] = {
            "work_distribution": {str(k): v for k, v in result.work.items()},
            "exponential_average": exponential_average(result.work),
            "efficacy": result.efficacy,
        }
        _write_json(stem.with_name(stem.name + ".report.json"), doc)
        reports.append(report)
        log.info("tau=%g us: <exp(-dw)>=%.6g gamma=%.6g", cell["tau"], doc["exact"]["exponential_average"],
                 result.efficacy)
    verdicts(reports, thresholds).write_json(out / "verdicts.json")
    return EXIT_OK


def cmd_analyze(args) -> int:
    thresholds = _thresholds(args)
    archives = [ingest(path) for path in args.archives]
    reports = []
    for archive in archives:
        schedule = None
        if archive.tau is not None:
            schedule = read_schedule_csv(args.schedule, archive.tau) if args.schedule else default_schedule(archive.tau)
        reports.append(analyze_archive(archive, archive.chain_spec(), thresholds, schedule, seed=args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "manifest.json", {"command": "analyze", "version": __version__,
                                        "archives": [str(a) for a in args.archives], "schedule": args.schedule,
                                        "seed": args.seed, "thresholds": vars(thresholds)})
    for i, (path, report) in enumerate(zip(args.archives, reports)):
        report.write_histograms(out / f"{i:03d}_{Path(path).stem}")
    verdicts(reports, thresholds).write_json(out / "report.json")
    return EXIT_OK


def cmd_chimera(args) -> int:
    graph = build_chimera(args.M, args.N, args.t)
    chain = random_chain(graph, args.L, args.seed, args.max_restarts)
    report = validate_embedding(graph, chain)
    if not report:
        raise EmbeddingError(report.message)
    text = json.dumps(chain.to_dict()) + "\n"
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        manifest = {"command": "chimera", "version": __version__, "M": args.M, "N": args.N, "t": args.t,
                    "L": args.L, "seed": args.seed, "max_restarts": args.max_restarts}
        _write_json(out.with_name(out.stem + ".manifest.json"), manifest)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "analyze": cmd_analyze, "chimera": cmd_chimera}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CapacityError as exc:
        print(f"qftbench: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except EmbeddingError as exc:
        print(f"qftbench: embedding error: {exc}", file=sys.stderr)
        return EXIT_EMBEDDING
    except (ValidationError, QFTBenchError) as exc:
        print(f"qftbench: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"qftbench: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
