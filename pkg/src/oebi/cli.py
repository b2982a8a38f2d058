"""Command-line entry point: ``oebi {sample,solve,evaluate,bruteforce,verify,bench}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import harness
from .diffusion import exact_f, monte_carlo_samples
from .errors import ValidationError
from .ris import RRCollection

log = logging.getLogger("oebi")

EXIT_OK, EXIT_FAILED, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3
# arguments that never enter a manifest
_TRANSIENT = {"out", "manifest", "func", "command", "verbose"}


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="edge list: 'src dst [pp [pr]]' per line")
    p.add_argument("--undirected", action="store_true", help="add each edge in both directions")
    p.add_argument("--prob-rule", default="indegree",
                   help="indegree (1/in-degree), explicit (file columns), or a constant in (0,1]")
    p.add_argument("--weights", help="optional 'node p q' file; otherwise weights are drawn from --seed")
    p.add_argument("--rival", default="top:10", help="rival seeds: top:r, random:r, ids:a,b,c, or none")
    p.add_argument("--seed", type=int, default=0, help="experiment seed (split into named streams)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--manifest", help="rerun with the parameters recorded in this manifest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oebi", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw and persist an RR-set collection")
    _add_instance_args(p)
    p.add_argument("--theta", type=int, default=20000, help="number of RR-sets of each kind")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("solve", help="run solvers and baselines, one row per (method, k)")
    _add_instance_args(p)
    p.add_argument("--theta", type=int, default=20000)
    p.add_argument("--collection", help="collection.json written by 'sample' (its manifest must match)")
    p.add_argument("--k", type=_int_list, default=[5, 10, 15, 20, 25, 30])
    p.add_argument("--method", type=_str_list, default=list(harness.METHODS))
    p.add_argument("--alpha", default="alpha2", choices=["alpha1", "alpha2", "alpha3", "alpha4"])
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--timing", action="store_true", help="add a wall_time column (not reproducible)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="expected overall benefit of a seed set")
    _add_instance_args(p)
    p.add_argument("--seeds", type=_int_list, default=[], help="positive seed ids")
    p.add_argument("--mode", choices=["exact", "mc"], default="mc")
    p.add_argument("--samples", type=int, default=100000)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bruteforce", help="exact optimum over all |S| <= k (tiny graphs)")
    _add_instance_args(p)
    p.add_argument("--k", type=int, default=2)
    p.set_defaults(func=cmd_bruteforce)

    p = sub.add_parser("verify", help="oracle checks on a small instance")
    _add_instance_args(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--theta", type=int, default=2000)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--corrupt-estimator", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="sampling/solve time and ratio versus theta")
    _add_instance_args(p)
    p.add_argument("--theta", type=_int_list, default=[5000, 10000, 15000, 20000])
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--alpha", default="alpha2", choices=["alpha1", "alpha2", "alpha3", "alpha4"])
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(func=cmd_bench)
    return parser


def _params(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _TRANSIENT}


def _apply_manifest(args) -> None:
    doc = json.loads(Path(args.manifest).read_text())
    if doc.get("command") != args.command:
        raise ValidationError(f"manifest is for '{doc.get('command')}', not '{args.command}'")
    for key, value in doc["params"].items():
        setattr(args, key, value)
    expected = doc.get("dataset_sha256")
    if expected and args.dataset and harness.sha256_file(args.dataset) != expected:
        raise ValidationError(f"dataset {args.dataset} changed since the manifest was written")


def _spec(args, **extra) -> harness.ExperimentSpec:
    if not args.dataset:
        raise ValidationError("--dataset is required")
    return harness.ExperimentSpec(
        dataset=args.dataset, prob_rule=str(args.prob_rule), undirected=args.undirected, weights=args.weights,
        rival=args.rival, seed=args.seed, **extra)


def _outdir(args) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _instance_extra(args) -> dict:
    extra = {}
    if args.dataset:
        extra["dataset_sha256"] = harness.sha256_file(args.dataset)
    if getattr(args, "weights", None):
        extra["weights_sha256"] = harness.sha256_file(args.weights)
    return extra


def _emit(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def cmd_sample(args) -> int:
    spec = _spec(args, theta=args.theta)
    spec.validate()
    out = _outdir(args)
    if out is None:
        raise ValidationError("sample needs --out")
    network, profile = harness.load_instance(spec)
    t0 = time.perf_counter()
    coll = harness.build_collection(network, profile, spec.theta, spec.seed)
    elapsed = time.perf_counter() - t0
    path = out / "collection.json"
    path.write_text(json.dumps(coll.to_json()) + "\n")
    harness.write_manifest(out / "manifest.json", "sample", _params(args), {"collection.json": path},
                           {"sampling_seconds": elapsed}, _instance_extra(args))
    _emit({"collection": str(path), "lambda": coll.lam, "mu": coll.mu, "seconds": elapsed})
    return EXIT_OK


def _load_collection(args, network, profile) -> RRCollection:
    path = Path(args.collection)
    manifest = path.parent / "manifest.json"
    if not manifest.exists():
        raise ValidationError(f"no manifest next to {path}")
    doc = json.loads(manifest.read_text())
    mine = _instance_extra(args)
    theirs = doc["params"]
    same = (doc.get("dataset_sha256") == mine.get("dataset_sha256")
            and doc.get("weights_sha256") == mine.get("weights_sha256")
            and all(theirs.get(k) == getattr(args, k) for k in ("prob_rule", "undirected", "seed")))
    if not same:
        raise ValidationError(f"collection {path} was sampled for a different dataset or weight draw")
    if doc["outputs"].get("collection.json") != harness.sha256_file(path):
        raise ValidationError(f"collection {path} does not match its manifest hash")
    return RRCollection.from_json(json.loads(path.read_text()), network, profile)


def cmd_solve(args) -> int:
    spec = _spec(args, theta=args.theta, budgets=args.k, methods=args.method, delta=args.delta,
                 alpha=args.alpha, max_iterations=args.max_iterations)
    network, profile = harness.load_instance(spec)
    if args.collection:
        coll = _load_collection(args, network, profile)
        spec.theta = coll.lam
    else:
        coll = None
    spec.validate(network.n)
    t0 = time.perf_counter()
    if coll is None:
        coll = harness.build_collection(network, profile, spec.theta, spec.seed)
    t_sample = time.perf_counter() - t0
    s_r = harness.select_rival(network, spec.rival, spec.seed)
    rows, reports = harness.solve_rows(spec, network, coll, s_r, with_timing=args.timing)
    table = harness.rows_to_csv(rows)
    out = _outdir(args)
    if out is None:
        sys.stdout.write(table)
        return EXIT_OK
    (out / "results.csv").write_text(table)
    (out / "reports.json").write_text(json.dumps(reports, indent=1) + "\n")
    timings = {"sampling_seconds": t_sample, "solve_seconds": {f"{r['method']}:{r['k']}": r["wall_time"] for r in reports}}
    harness.write_manifest(out / "manifest.json", "solve", _params(args), {"results.csv": out / "results.csv"},
                           timings, _instance_extra(args))
    sys.stdout.write(table)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    spec = _spec(args)
    network, profile = harness.load_instance(spec)
    s_p = network.to_dense_ids(args.seeds)
    s_r = harness.select_rival(network, spec.rival, spec.seed)
    if args.mode == "exact":
        val = exact_f(network, profile, s_p, s_r)
        doc = {"mode": "exact", "f": val.f, "w": val.w, "z": val.z}
    else:
        if args.samples < 1:
            raise ValidationError("samples must be >= 1")
        f, w, z = monte_carlo_samples(network, profile, s_p, s_r, args.samples,
                                      harness.stream(spec.seed, "monte_carlo"), components=True)
        doc = {"mode": "mc", "samples": args.samples, "f": float(f.mean()), "w": float(w.mean()),
               "z": float(z.mean()), "f_stderr": float(f.std(ddof=1) / np.sqrt(len(f))) if len(f) > 1 else None}
    doc.update({"seeds": network.to_labels(s_p), "rival": network.to_labels(s_r)})
    _finish(args, "evaluate", doc)
    return EXIT_OK


def cmd_bruteforce(args) -> int:
    spec = _spec(args)
    network, profile = harness.load_instance(spec)
    if args.k < 0 or args.k > network.n:
        raise ValidationError(f"k must lie in 0..{network.n}")
    s_r = harness.select_rival(network, spec.rival, spec.seed)
    best, value = harness.exhaustive_optimum(lambda y: exact_f(network, profile, y, s_r).f, network.n, args.k)
    doc = {"k": args.k, "best_set": network.to_labels(best), "best_f": value, "rival": network.to_labels(s_r)}
    _finish(args, "bruteforce", doc)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.trials < 1:
        raise ValidationError("trials must be >= 1")
    if args.dataset:
        network, profile = harness.load_instance(_spec(args))
        s_r = harness.select_rival(network, args.rival, args.seed)
    else:
        network, profile, s_r = harness.default_verify_instance(args.seed)
    results = harness.verify_suite(network, profile, s_r, args.k, args.theta, args.delta, args.trials,
                                   args.seed, estimator_bias=args.corrupt_estimator)
    for r in results:
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['property']}", file=sys.stderr)
    doc = {"all_passed": all(r["passed"] for r in results), "results": results}
    _finish(args, "verify", doc)
    return EXIT_OK if doc["all_passed"] else EXIT_FAILED


def cmd_bench(args) -> int:
    spec = _spec(args, alpha=args.alpha, delta=args.delta, max_iterations=args.max_iterations)
    network, profile = harness.load_instance(spec)
    s_r = harness.select_rival(network, spec.rival, spec.seed)
    rows = harness.bench(spec, network, profile, s_r, args.theta, args.repeats, args.k)
    _finish(args, "bench", {"rows": rows})
    return EXIT_OK


def _finish(args, command: str, doc: dict) -> None:
    _emit(doc)
    out = _outdir(args)
    if out is not None:
        path = out / f"{command}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        harness.write_manifest(out / "manifest.json", command, _params(args), {path.name: path}, {},
                               _instance_extra(args))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.manifest:
            _apply_manifest(args)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
