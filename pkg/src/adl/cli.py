"""Command-line harness: ``adl {train,stability,bench,distill,metrics}``.

Exit codes: 0 success, 2 usage, configuration or file error, 3 numerical failure.
``ADL_THREADS`` caps BLAS threads (default 1, which keeps outputs bit-identical
across reruns).
"""

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io
from .benchmarks import (
    BenchSettings,
    gen_identifiability,
    gen_planted,
    gen_plausibility,
    run_identifiability,
    run_plausibility,
)
from .config import ConfigError, distill_config, load_config, train_config
from .distillation import distill
from .errors import (
    InvalidInputError,
    TrainingDivergedError,
    UndefinedClassError,
    UndefinedMetricError,
)
from .metrics import model_report, stability_protocol
from .training import standardize_fit, train

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


def _load_input(doc):
    src = doc.get("input")
    if src is None:
        raise ConfigError("config needs an 'input'")
    if isinstance(src, dict):
        p = src["planted"]
        X, _, _ = gen_planted(n=p["n"], d=p["d"], c=p["c"], sparsity=p["sparsity"],
                              noise_std=p.get("noise_std", 0.05), rng=p.get("seed", 0))
        return X
    if not Path(src).is_file():
        raise ConfigError(f"input file not found: {src}")
    return io.read_matrix(src)


def _out_dir(args, doc):
    out = args.out or doc.get("out")
    if not out:
        raise ConfigError("no output directory: pass --out or set 'out'")
    return Path(out)


def _archetypes(doc, A, seed):
    if doc.get("archetypes"):
        path = doc["archetypes"]
        if not Path(path).is_file():
            raise ConfigError(f"archetypes file not found: {path}")
        return io.read_adlm(path)
    standardize = doc.get("train", {}).get("standardize", True)
    X = standardize_fit(A)[1] if standardize else A
    return distill(X, distill_config(doc, seed))


def cmd_train(args):
    doc = load_config(args.config)
    A = _load_input(doc)
    cfg = train_config(doc, args.seed)
    out = _out_dir(args, doc)
    kind = doc.get("dictionary", "free")
    variant = doc.get("variant", "topk")
    C = _archetypes(doc, A, args.seed) if kind == "archetypal" else None
    model = train(A, cfg, variant, kind, C=C)
    out.mkdir(parents=True, exist_ok=True)
    io.save_model(model, out / "model")
    io.write_history_csv(out / "training_curve.csv", model.history)
    rep = model_report(model, A, seed=cfg.seed, dictionary=kind, k_active=cfg.k_active)
    io.dump_json(out / "metrics.json", rep.to_dict())
    return EXIT_OK


def cmd_stability(args):
    doc = load_config(args.config)
    A = _load_input(doc)
    cfg = train_config(doc, args.seed)
    out = _out_dir(args, doc)
    seeds = doc.get("seeds", [0, 1, 2, 3])
    runs = doc.get("runs") or [{
        "name": f"{doc.get('variant', 'topk')}-{doc.get('dictionary', 'free')}",
    }]
    C = None
    result = {"seeds": seeds, "runs": {}}
    rows = ["name,variant,dictionary,delta,mean_stability,min_pair,max_pair"]
    for run in runs:
        variant = run.get("variant", doc.get("variant", "topk"))
        kind = run.get("dictionary", doc.get("dictionary", "free"))
        delta = run.get("delta", cfg.delta)
        if kind == "archetypal" and C is None:
            C = _archetypes(doc, A, args.seed)
        res = stability_protocol(A, replace(cfg, delta=delta), variant, kind, seeds=seeds,
                                 C=C if kind == "archetypal" else None)
        pairs = [{"i": i, "j": j, "seed_i": seeds[i], "seed_j": seeds[j], "stability": v}
                 for (i, j), v in sorted(res.pairwise.items())]
        reports = []
        for i, model in enumerate(res.models):
            ref = 1 if i == 0 else 0
            rep = model_report(model, A, D_other=res.models[ref].atoms(), seed=seeds[i],
                               reference_seed=seeds[ref], dictionary=kind, delta=delta)
            reports.append(rep.to_dict())
        result["runs"][run["name"]] = {"variant": variant, "dictionary": kind, "delta": delta,
                                       "mean": res.mean, "pairs": pairs, "reports": reports}
        vals = [p["stability"] for p in pairs]
        rows.append(f"{run['name']},{variant},{kind},{delta!r},{res.mean!r},"
                    f"{min(vals)!r},{max(vals)!r}")
    out.mkdir(parents=True, exist_ok=True)
    io.dump_json(out / "stability.json", result)
    (out / "stability.csv").write_text("\n".join(rows) + "\n")
    return EXIT_OK


def _bench_settings(doc, seed, default_k):
    train_doc = dict(doc.get("train", {}))
    train_doc.setdefault("k_active", default_k)
    cfg = train_config({"train": train_doc, "seed": seed})
    b = doc.get("bench", {})
    dc = doc.get("distill", {})
    return BenchSettings(train=cfg, ra_delta=b.get("ra_delta", 0.1),
                         n_prime=dc.get("n_prime", 512), kmeans_iters=dc.get("kmeans_iters", 50),
                         nmf_iters=b.get("nmf_iters", 1000), nmf_l1=b.get("nmf_l1", 0.0),
                         seed=seed)


def cmd_bench(args):
    doc = load_config(args.config)
    b = doc.get("bench", {})
    methods = b.get("methods")
    if not methods:
        raise ConfigError("bench.methods must list at least one method")
    out = _out_dir(args, doc)
    seed = int(args.seed if args.seed is not None else doc.get("seed", 0))
    if args.kind == "identifiability":
        ds = gen_identifiability(c=b.get("c", 12), d=b.get("d", 64), n=b.get("n", 4000),
                                 objects_per_image=b.get("objects_per_image", 4),
                                 noise_std=b.get("noise_std", 0.05), rng=seed,
                                 decorrelate=b.get("decorrelate", True))
        settings = _bench_settings(doc, seed, ds.objects_per_image)
        table = run_identifiability(ds, methods, settings)
        c = ds.Y.shape[1]
        rows = ["method,mean_accuracy," + ",".join(f"class_{j}" for j in range(c))]
        for m, (per, mean) in table.items():
            rows.append(f"{m},{mean!r}," + ",".join(repr(float(v)) for v in per))
        payload = {m: {"mean": mean, "per_class": per.tolist()} for m, (per, mean) in table.items()}
        matrices = {"X": ds.X, "Y": ds.Y, "prototypes": ds.prototypes}
        manifest = {"kind": "identifiability", "seed": seed,
                    "objects_per_image": ds.objects_per_image, "split": 0.5}
    else:
        sizes = b.get("dict_sizes", [64, 128])
        X, V = gen_plausibility(c=b.get("c", 32), d=b.get("d", 64), n=b.get("n", 4000),
                                sparsity=b.get("sparsity", 4),
                                noise_std=b.get("noise_std", 0.05), rng=seed)
        settings = _bench_settings(doc, seed, b.get("sparsity", 4))
        table = run_plausibility(X, V, methods, sizes, settings)
        rows = ["method," + ",".join(f"k={k}" for k in sizes)]
        for m, scores in table.items():
            rows.append(f"{m}," + ",".join(repr(scores[k]) for k in sizes))
        payload = {m: {str(k): v for k, v in scores.items()} for m, scores in table.items()}
        matrices = {"X": X, "V": V}
        manifest = {"kind": "plausibility", "seed": seed}
    out.mkdir(parents=True, exist_ok=True)
    io.save_dataset(out / "dataset", manifest, **matrices)
    io.dump_json(out / "bench.json", {"kind": args.kind, "seed": seed, "results": payload})
    (out / "bench.csv").write_text("\n".join(rows) + "\n")
    return EXIT_OK


def cmd_distill(args):
    doc = load_config(args.config)
    A = _load_input(doc)
    dcfg = distill_config(doc, args.seed)
    out = _out_dir(args, doc)
    if dcfg.n_prime > A.shape[0]:
        raise ConfigError(f"distill.n_prime={dcfg.n_prime} exceeds n={A.shape[0]}")
    standardize = doc.get("train", {}).get("standardize", True)
    X = standardize_fit(A)[1] if standardize else A
    C = distill(X, dcfg)
    out.mkdir(parents=True, exist_ok=True)
    io.write_adlm(out / "C.adlm", C)
    io.dump_json(out / "C.json", {"n_prime": dcfg.n_prime, "seed": dcfg.seed,
                                  "kmeans_iters": dcfg.kmeans_iters, "standardized": standardize,
                                  "source_sha256": io.digest(A), "shape": list(C.shape)})
    return EXIT_OK


def cmd_metrics(args):
    doc = load_config(args.config)
    A = _load_input(doc)
    out = _out_dir(args, doc)
    if not doc.get("model"):
        raise ConfigError("metrics needs 'model' (a saved model directory)")
    for key in ("model", "reference_model"):
        if doc.get(key) and not (Path(doc[key]) / "model.json").is_file():
            raise ConfigError(f"{key} directory has no model.json: {doc[key]}")
    model = io.load_model(doc["model"])
    other = io.load_model(doc["reference_model"]).atoms() if doc.get("reference_model") else None
    rep = model_report(model, A, D_other=other)
    out.mkdir(parents=True, exist_ok=True)
    io.dump_json(out / "metrics.json", rep.to_dict())
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="adl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.set_defaults(func=func)
        return p

    add("train", cmd_train, "train one SAE and write model, curve and metrics")
    add("stability", cmd_stability, "multi-seed stability protocol")
    bench = add("bench", cmd_bench, "synthetic plausibility / identifiability benchmark")
    bench.add_argument("kind", choices=["plausibility", "identifiability"])
    add("distill", cmd_distill, "K-Means distillation of the input into archetype candidates")
    add("metrics", cmd_metrics, "recompute the metrics report for a saved model")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    threads = int(os.environ.get("ADL_THREADS", "1"))
    try:
        with threadpool_limits(limits=max(threads, 1)):
            return args.func(args)
    except (ConfigError, InvalidInputError, UndefinedClassError, OSError) as exc:
        print(f"adl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDivergedError, UndefinedMetricError, FloatingPointError) as exc:
        print(f"adl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
