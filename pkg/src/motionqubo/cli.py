"""Command-line front end: ``generate``, ``build``, ``solve``, ``eval`` and ``sweep``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 solver guard.
"""
from __future__ import annotations

import argparse
import glob
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import qubo as qb
from .harness import SOLVERS, SweepConfig, run_sweep, summarize
from .metrics import evaluate
from .problem import Labeling, MotionProblem, ProblemError, all_motion_counts, labels_to_bits
from .problem import consistency_error
from .samplers import (AnnealParams, SampleSet, SolverGuardError, best_sample, brute_force,
                       random_sampler, simulated_annealing)
from .spectral import DegenerateInputError, SpectralParams, spectral_segment
from .synthetic import SyntheticConfig, generate

EXIT_USAGE, EXIT_DATA, EXIT_GUARD = 2, 3, 4
PRESETS = {"synthetic": qb.SYNTHETIC_WEIGHTS, "dataset": qb.DATASET_WEIGHTS}


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _counts(text: str | None):
    """``"8,8;8,8"`` -> ``[[8, 8], [8, 8]]`` (one group per image)."""
    if text is None:
        return None
    return [_int_list(part) for part in text.split(";")]


def _points(text: str):
    vals = _int_list(text)
    return vals[0] if len(vals) == 1 else tuple(vals)


def _weights(args) -> dict:
    w = dict(PRESETS[args.weights])
    for name in ("lambda1", "lambda2", "lambda3"):
        v = getattr(args, name)
        if v is not None:
            w[name] = v
    return w


def _add_qubo_flags(p):
    p.add_argument("--variant", choices=("v1", "v2"), default="v1")
    p.add_argument("--fill", choices=qb.FILL_MODES, default="zeroed")
    p.add_argument("--weights", choices=tuple(PRESETS), default="synthetic",
                   help="penalty weight preset (default: synthetic)")
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--lambda3", type=float)
    p.add_argument("--counts", help='per-image motion counts for v2, e.g. "8,8;8,8"; '
                                    "defaults to the ground-truth counts")


def _problem_counts(problem: MotionProblem, args):
    counts = _counts(args.counts)
    if counts is None and problem.ground_truth is not None:
        counts = all_motion_counts(problem.ground_truth, problem.d)
    return counts


def _build(problem: MotionProblem, args) -> qb.QuboInstance:
    w = _weights(args)
    counts = None
    if args.variant == "v2":
        counts = _problem_counts(problem, args)
        if counts is None:
            raise ProblemError("v2 needs motion counts: pass --counts or use a file with ground truth")
    return qb.build(problem, args.variant, fill=args.fill, counts=counts, **w)


def _write(obj: dict, out: str | None, indent: int | None = 1) -> None:
    text = json.dumps(obj, indent=indent)
    if out:
        Path(out).write_text(text)
    else:
        print(text)


def cmd_generate(args) -> int:
    cfg = SyntheticConfig(
        n=args.n, d=args.d, points=_points(args.points),
        motion_counts=_counts(args.motion_counts), noise=args.noise,
        complete=not args.path_graph, seed=args.seed, noise_side=args.noise_side,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for inst in range(args.instances):
        problem = generate(cfg, inst)
        path = out / f"{cfg.digest()}-{inst}.json"
        problem.save(path)
        print(f"{path}\tk={problem.k}\tconsistency_error_gt="
              f"{consistency_error(problem, problem.ground_truth)}")
    return 0


def cmd_build(args) -> int:
    problem = MotionProblem.load(args.problem)
    _write(_build(problem, args).to_dict(), args.out, indent=None)
    return 0


def _solve(problem: MotionProblem, args):
    if args.solver == "synch":
        lab = spectral_segment(problem, SpectralParams(problem.d, seed=args.seed))
        return None, labels_to_bits(lab, problem.d), lab
    q = _build(problem, args)
    if args.solver == "sa":
        ss = simulated_annealing(q, AnnealParams(reads=args.reads, sweeps=args.sweeps, seed=args.seed))
    elif args.solver == "brute":
        ss = brute_force(q, keep=args.keep)
    else:
        ss = random_sampler(q, args.reads, args.seed)
    return ss, best_sample(ss), None


def _report(problem, y, args) -> dict:
    q = _build(problem, args)
    counts = _problem_counts(problem, args) if args.variant == "v2" else None
    rep = evaluate(y, problem, energy=qb.energy(q, y), counts=counts)
    return rep.to_dict()


def cmd_solve(args) -> int:
    problem = MotionProblem.load(args.problem)
    if args.eval and problem.ground_truth is None:
        raise ProblemError("--eval requested but the problem has no ground truth")
    ss, y, lab = _solve(problem, args)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        if ss is not None:
            ss.save(out / "samples.json")
        if lab is not None:
            (out / "labeling.json").write_text(json.dumps({"labels": lab.to_list()}))
    result = {"y": "".join(map(str, np.asarray(y).tolist()))}
    if ss is not None:
        result["energy"] = float(ss.energies[0])
    if args.eval:
        result["report"] = _report(problem, y, args)
        if out:
            (out / "report.json").write_text(json.dumps(result["report"], indent=1))
    print(json.dumps(result))
    return 0


def cmd_eval(args) -> int:
    problem = MotionProblem.load(args.problem)
    if problem.ground_truth is None:
        raise ProblemError("evaluation needs a problem with ground truth")
    if args.samples:
        y = best_sample(SampleSet.load(args.samples))
    elif args.labeling:
        lab = Labeling(tuple(json.loads(Path(args.labeling).read_text())["labels"]))
        y = labels_to_bits(lab, problem.d)
    else:
        raise UsageError("eval needs --samples or --labeling")
    _write(_report(problem, y, args), args.out)
    return 0


def cmd_sweep(args) -> int:
    if args.config:
        data = json.loads(Path(args.config).read_text())
        configs = tuple(SyntheticConfig(**c) for c in data.pop("configs", []))
        data["problem_files"] = tuple(data.get("problem_files", ()))
        for key in ("noise_grid", "solvers"):
            if key in data:
                data[key] = tuple(data[key])
        cfg = SweepConfig(configs=configs, **data)
    else:
        files = tuple(sorted(f for pat in args.problems or () for f in glob.glob(pat)))
        configs = tuple(
            SyntheticConfig(n=n, d=args.d, points=_points(args.points), seed=args.seed)
            for n in (args.n or ())
        )
        preset = args.weights or ("dataset" if files and not configs else "synthetic")
        args.weights = preset
        w = _weights(args)
        cfg = SweepConfig(
            configs=configs, problem_files=files, noise_grid=tuple(_float_list(args.noise_grid)),
            instances=args.instances, solvers=tuple(args.solvers.split(",")), fill=args.fill,
            reads=args.reads, sweeps=args.sweeps, seed=args.seed, out=args.out,
            persist=args.persist, timing=not args.no_timing, **w,
        )
    rows = run_sweep(cfg, workers=args.workers)
    for s in summarize(rows):
        print(f"config={s['config']} n={s['n']} k={s['qubits']} noise={s['noise']:g} "
              f"{s['solver']:<10} acc={s['acc_raw']:.4f} aligned={s['acc_aligned']:.4f} "
              f"std={s['std_aligned']:.4f} errors={s['errors']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motionqubo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write synthetic problem files")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--points", default="16", help="points per image, or a comma list")
    p.add_argument("--motion-counts", help='explicit counts per image, e.g. "8,8;8,8;8,8"')
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--noise-side", choices=("both", "one"), default="both")
    p.add_argument("--path-graph", action="store_true", help="chain edges instead of complete graph")
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("build", help="compile a problem file into a QUBO JSON")
    p.add_argument("problem")
    _add_qubo_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", help="solve a problem file")
    p.add_argument("problem")
    _add_qubo_flags(p)
    p.add_argument("--solver", choices=("sa", "brute", "random", "synch"), default="sa")
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--sweeps", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keep", type=int, default=16, help="rows kept by brute force")
    p.add_argument("--eval", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="score a sample set or labeling against ground truth")
    p.add_argument("problem")
    _add_qubo_flags(p)
    p.add_argument("--samples")
    p.add_argument("--labeling")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run a solver x instance x noise sweep")
    p.add_argument("--config", help="JSON file with SweepConfig fields")
    p.add_argument("--n", type=int, nargs="*")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--points", default="16")
    p.add_argument("--problems", nargs="*", help="problem file globs")
    p.add_argument("--noise-grid", default="0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--solvers", default="v1-sa,v2-sa",
                   help=f"comma list from {','.join(SOLVERS)}")
    p.add_argument("--fill", choices=qb.FILL_MODES, default="zeroed")
    p.add_argument("--weights", choices=tuple(PRESETS))
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--lambda3", type=float)
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--sweeps", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, help="defaults to $MOTIONQUBO_WORKERS or 1")
    p.add_argument("--persist", action="store_true", help="also write problems and sample sets")
    p.add_argument("--no-timing", action="store_true", help="write 0 for wall_time_ms")
    p.add_argument("--out", default="sweep-out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except SolverGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ProblemError, DegenerateInputError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
