"""Unified command-line interface.

Subcommands: map, gen-data, train, grid-search, eval, infer, baseline-eval,
serve, bench-infer, bench-load.  Every command prints a human-readable
summary; report files are CSV or JSON.  With --assert, commands that check
thresholds exit nonzero when a threshold fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset as ds
from . import tuning
from .baseline import evaluate_baseline, load_rule_based_model
from .bench import DEFAULT_QUERY_PATH, measure_inference, run_load
from .encoding import encode_query
from .forest import ForestParams, evaluate_model, load_model, predict, save_model, train_forest
from .labels import LABEL_SPACE
from .policy import policy_to_dict, save_policy
from .service import ServiceConfig, run_service
from .textmap import Lexicon, analyze


def _info(message: str) -> None:
    print(message)


def _write(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
    _info(f"wrote {path}")


def cmd_map(args) -> int:
    text = Path(args.text_file).read_text(encoding="utf-8")
    lexicon = Lexicon.from_file(args.lexicon) if args.lexicon else None
    result = analyze(text, lexicon)
    _info(f"tokens: {len(result.stream)}  entities: {len(result.entities)}  "
          f"relations: {len(result.relations)}  policies: {len(result.policies)}")
    for issue in result.issues:
        _info(f"  issue {issue.code} at {issue.path}: {issue.message}")
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for i, policy in enumerate(result.policies):
        _info(f"  [{i}] {policy.policy_name}: "
              + ", ".join(
                  f"{cat}={sorted(labels)}" for cat, labels in policy.action.by_category().items() if labels
              ))
        if out_dir:
            save_policy(policy, out_dir / f"policy_{i:03d}.pdl.json")
    if out_dir:
        _info(f"wrote {len(result.policies)} policies to {out_dir}")
    return 0


def _load_table(path: str | None) -> ds.RuleTable:
    return ds.load_rule_table(path) if path else ds.default_rule_table()


def cmd_gen_data(args) -> int:
    table = _load_table(args.rules)
    dataset = ds.generate_dataset(table, args.n, noise_rate=args.noise, seed=args.seed)
    ds.save_csv(dataset, args.out)
    _info(f"generated {len(dataset)} entries (noise={args.noise}, seed={args.seed}) -> {args.out}")
    if args.noise > 0:
        _info("note: --noise flips bits uniformly across the whole file; "
              "training pipelines that need a clean test side should split first")
    return 0


def _forest_params(args) -> ForestParams:
    return ForestParams(
        n_trees=args.trees,
        max_depth=args.depth,
        min_samples_split=args.min_split,
        min_samples_leaf=args.min_leaf,
        seed=args.seed,
    )


def cmd_train(args) -> int:
    data = ds.load_csv(args.data)
    if args.split:
        train, test = ds.split_dataset(data, args.split, seed=args.seed)
        if args.train_noise > 0:
            train = ds.apply_label_noise(train, args.train_noise, seed=args.seed + 2)
    else:
        train, test = data, None
    model = train_forest(train, _forest_params(args), n_jobs=args.jobs)
    path = save_model(model, args.out)
    _info(f"trained {model.n_trees} trees on {len(train)} rows -> {path}")
    if test is not None and len(test):
        report = evaluate_model(model, test)
        macro = report.macro_overall
        _info(f"holdout macro: P={macro.precision:.4f} R={macro.recall:.4f} F1={macro.f1:.4f}")
    return 0


def cmd_grid_search(args) -> int:
    data = ds.load_csv(args.data)
    grid = json.loads(Path(args.grid).read_text()) if args.grid else None

    done = []

    def progress(cv):
        done.append(cv)
        p = cv.params
        _info(f"[{len(done):3d}] trees={p.n_trees:<3d} depth={p.max_depth:<2d} "
              f"split={p.min_samples_split:<2d} leaf={p.min_samples_leaf:<2d} "
              f"mean F1={cv.mean_f1:.4f}")

    result = tuning.grid_search(data, grid, k=args.k, base_params=ForestParams(seed=args.seed),
                                progress=progress if args.verbose else None)
    best = result.best_params
    _info(f"best: trees={best.n_trees} depth={best.max_depth} split={best.min_samples_split} "
          f"leaf={best.min_samples_leaf}  mean macro F1={result.best_mean_f1:.4f}")
    if args.report:
        _write(args.report, result.to_csv())
    if args.out:
        model = train_forest(data, best, n_jobs=args.jobs)
        path = save_model(model, args.out)
        _info(f"trained final model with best parameters -> {path}")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data = ds.load_csv(args.data)
    report = evaluate_model(model, data)
    macro = report.macro_overall
    _info(f"macro over {macro.n_labels} labels: P={macro.precision:.4f} R={macro.recall:.4f} F1={macro.f1:.4f}")
    for jur, m in report.macro_by_jurisdiction.items():
        _info(f"  {jur}: P={m.precision:.4f} R={m.recall:.4f} F1={m.f1:.4f} ({m.n_labels} labels)")
    if args.report:
        _write(args.report, report.to_csv())
    if args.assert_thresholds and macro.f1 < args.min_f1:
        _info(f"ASSERT FAILED: macro F1 {macro.f1:.4f} < {args.min_f1}")
        return 1
    return 0


def cmd_baseline_eval(args) -> int:
    model = load_rule_based_model(args.tiers, args.roles)
    data = ds.load_csv(args.data)
    report = evaluate_baseline(model, data)
    macro = report.macro_overall
    _info(f"rule-based macro over {macro.n_labels} labels: "
          f"P={macro.precision:.4f} R={macro.recall:.4f} F1={macro.f1:.4f}")
    if args.report:
        _write(args.report, report.to_csv())
    return 0


def cmd_infer(args) -> int:
    model = load_model(args.model)
    fv = encode_query(args.category, args.sensitivity, args.source, args.target)
    bits, scores = predict(model, fv)
    from .encoding import decode_labels

    policies = decode_labels(bits, args.source, args.target, args.category, version=model.version())
    if args.json:
        doc = {
            "labels": "".join(str(int(b)) for b in bits),
            "policies": [policy_to_dict(p) for p in policies],
        }
        print(json.dumps(doc, indent=1, sort_keys=True))
        return 0
    required = [LABEL_SPACE.label_at(i) for i in range(len(LABEL_SPACE)) if bits[i]]
    _info(f"{args.category} (level {args.sensitivity}) {args.source} -> {args.target}: "
          f"{len(required)} required actions")
    for label in required:
        _info(f"  {label.jurisdiction:<5} {label.category:<24} {label.name}  "
              f"(score {scores[LABEL_SPACE.index(label.jurisdiction, label.name)]:.2f})")
    return 0


def cmd_serve(args) -> int:
    if args.config:
        config = ServiceConfig.from_file(
            args.config, host=args.host, port=args.port, workers=args.workers,
            model_path=args.model, stores_dir=args.stores,
        )
    else:
        config = ServiceConfig.from_env(
            host=args.host, port=args.port, workers=args.workers,
            model_path=args.model, stores_dir=args.stores,
        )
    _info(f"serving on http://{config.host}:{config.port} with {config.workers} worker(s)")
    run_service(config)
    return 0


def cmd_bench_infer(args) -> int:
    model = load_model(args.model)
    report = measure_inference(model, repetitions=args.repetitions, warmup=args.warmup)
    for (source, target), stats in report.per_pair.items():
        _info(f"{source}->{target}: median={stats.median_ms:.3f}ms mean={stats.mean_ms:.3f}ms "
              f"std={stats.std_ms:.3f}ms p99={stats.p99_ms:.3f}ms (n={stats.count})")
    combined = report.combined
    _info(f"combined: median={combined.median_ms:.3f}ms std={combined.std_ms:.3f}ms")
    if args.json:
        _write(args.json, json.dumps(report.to_dict(), indent=1))
    if args.assert_thresholds:
        if combined.median_ms > args.max_median_ms or combined.std_ms > args.max_std_ms:
            _info(f"ASSERT FAILED: median {combined.median_ms:.3f}ms (max {args.max_median_ms}) "
                  f"std {combined.std_ms:.3f}ms (max {args.max_std_ms})")
            return 1
    return 0


def cmd_bench_load(args) -> int:
    report = run_load(args.url, workers=args.workers, rate=args.rate,
                      duration_s=args.duration, path=args.path)
    _info(f"workers={report.workers} offered={report.offered_rate}rps "
          f"achieved={report.achieved_rps:.1f}rps errors={report.errors}")
    stats = report.latency
    _info(f"latency: median={stats.median_ms:.2f}ms mean={stats.mean_ms:.2f}ms "
          f"p95={stats.p95_ms:.2f}ms p99={stats.p99_ms:.2f}ms")
    if args.json:
        _write(args.json, json.dumps(report.to_dict(), indent=1))
    if args.assert_thresholds and report.failed:
        _info(f"ASSERT FAILED: {report.errors} errors out of {report.attempted} requests")
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbcms", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", help="map policy text to PDL documents")
    p.add_argument("text_file")
    p.add_argument("--lexicon")
    p.add_argument("--out")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("gen-data", help="generate a synthetic annotated dataset CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rules", help="rule-table JSON (default: shipped table)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a forest on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=15)
    p.add_argument("--min-split", type=int, default=5)
    p.add_argument("--min-leaf", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=0.0, help="holdout ratio for a quick report")
    p.add_argument("--train-noise", type=float, default=0.0, help="label noise applied to the train side")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid-search", help="exhaustive parameter search with k-fold CV")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", help="JSON file {param: [values]}; default: built-in 81-point grid")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="CV table CSV path")
    p.add_argument("--out", help="train a final model with the best parameters")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("eval", help="evaluate a model on a dataset CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", help="per-label CSV path")
    p.add_argument("--assert", dest="assert_thresholds", action="store_true")
    p.add_argument("--min-f1", type=float, default=0.95)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline-eval", help="evaluate the rule-based reference")
    p.add_argument("--data", required=True)
    p.add_argument("--tiers", help="tier table JSON (default: shipped)")
    p.add_argument("--roles", help="role table JSON (default: shipped)")
    p.add_argument("--report")
    p.set_defaults(func=cmd_baseline_eval)

    p = sub.add_parser("infer", help="one compliance query against a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--category", required=True)
    p.add_argument("--sensitivity", type=int, required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("serve", help="run the compliance query service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--model")
    p.add_argument("--stores")
    p.add_argument("--config", help="JSON config file; env vars CBCMS_* also apply")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench-infer", help="measure single-query inference latency")
    p.add_argument("--model", required=True)
    p.add_argument("--repetitions", type=int, default=500)
    p.add_argument("--warmup", type=int, default=50)
    p.add_argument("--json", help="write the report as JSON")
    p.add_argument("--assert", dest="assert_thresholds", action="store_true")
    p.add_argument("--max-median-ms", type=float, default=15.0)
    p.add_argument("--max-std-ms", type=float, default=2.0)
    p.set_defaults(func=cmd_bench_infer)

    p = sub.add_parser("bench-load", help="open-loop load generation against a running service")
    p.add_argument("--url", required=True)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--rate", type=float, default=100.0)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--path", default=DEFAULT_QUERY_PATH)
    p.add_argument("--json", help="write the report as JSON")
    p.add_argument("--assert", dest="assert_thresholds", action="store_true")
    p.set_defaults(func=cmd_bench_load)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
