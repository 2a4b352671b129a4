"""Command-line pipelines: vocab, estimate, eval, sweep, simulate, correlate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import exemplar as ex
from . import metrics as metrics_mod
from . import simulate as sim
from . import vocab as vocab_mod
from .estimator import EnsembleParams, MultiLabelParams, estimate_ensemble, estimate_multilabel

CONFIG_FORMAT_VERSION = 1


class CliError(ValueError):
    pass


# Option names accepted per subcommand, both as flags and as config keys.
_SUBCOMMAND_KEYS = {
    "vocab": ["records", "rules", "top_n", "min_count", "out"],
    "estimate": ["vocab", "exemplar_tags", "rules", "method", "score_matrix",
                 "features", "queries", "temperature", "n_tilde", "p", "theta", "out"],
    "eval": ["predictions", "truth", "vocab", "out"],
    "sweep": ["vocab", "exemplar_tags", "rules", "score_matrix", "features",
              "queries", "temperature", "truth", "n_range", "p_list", "out"],
    "simulate": ["n_fonts", "feature_dim", "vocab_size", "tags_per_font",
                 "miss_rate", "noise_rate", "seed", "n_tilde", "p", "theta",
                 "temperature", "sigma", "target_accuracy", "out_dir"],
    "correlate": ["corpus", "vocab", "genres", "out_dir"],
}


def _load_config(path: str, subcommand: str) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != CONFIG_FORMAT_VERSION:
        raise CliError(f"config must declare format_version: {CONFIG_FORMAT_VERSION}")
    unknown = set(doc) - set(_SUBCOMMAND_KEYS[subcommand]) - {"format_version"}
    if unknown:
        raise CliError(f"unknown config keys for {subcommand!r}: {sorted(unknown)}")
    return doc


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """CLI flags override config values override defaults."""
    config = _load_config(args.config, args.subcommand) if args.config else {}
    out = {}
    for key, default in defaults.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            out[key] = cli_value
        elif key in config:
            out[key] = config[key]
        else:
            out[key] = default
    return out


def _require(opts: dict, *keys: str) -> None:
    for key in keys:
        if opts[key] is None:
            raise CliError(f"missing required option --{key.replace('_', '-')}")


class _OutputTracker:
    """Registers written paths so partial outputs can be removed on failure."""

    def __init__(self):
        self.paths: list[Path] = []

    def register(self, path) -> Path:
        p = Path(path)
        self.paths.append(p)
        return p

    def cleanup(self):
        for p in self.paths:
            if p.is_file():
                p.unlink()


def _load_rules(path: str | None) -> vocab_mod.MergeRules:
    return vocab_mod.read_merge_rules(path) if path else vocab_mod.MergeRules.empty()


# ---------------------------------------------------------------------------
# Subcommands


def cmd_vocab(opts: dict, track: _OutputTracker) -> None:
    _require(opts, "records", "out")
    records = vocab_mod.read_tag_records(opts["records"])
    if not records:
        raise CliError("no tag records found in input")
    rules = _load_rules(opts["rules"])
    vocab = vocab_mod.build_vocabulary(records, rules, top_n=opts["top_n"],
                                       min_count=opts["min_count"])
    vocab_mod.write_vocabulary(vocab, track.register(opts["out"]))
    print(f"vocabulary: {vocab.size} tags -> {opts['out']}")


def _score_rows(opts: dict, exemplars: ex.ExemplarSet):
    """Yield (sample_ids, list of ScoreVector) from either scoring backend."""
    if opts["score_matrix"]:
        sample_ids, exemplar_ids, matrix = ex.read_score_matrix(opts["score_matrix"])
        if list(exemplar_ids) != list(exemplars.font_ids):
            raise CliError("score matrix exemplar columns do not match the exemplar set")
        rows = [ex.score_from_matrix(row, exemplars.size) for row in matrix]
        return sample_ids, rows
    if opts["features"] and opts["queries"]:
        feat_ids, feats = ex.read_feature_store(opts["features"])
        if list(feat_ids) != list(exemplars.font_ids):
            raise CliError("feature store font_ids do not match the exemplar set")
        query_ids, queries = ex.read_feature_store(opts["queries"])
        rows = [ex.nearest_exemplar_scores(q, feats, opts["temperature"]) for q in queries]
        return query_ids, rows
    raise CliError("provide either --score-matrix or both --features and --queries")


def cmd_estimate(opts: dict, track: _OutputTracker) -> None:
    _require(opts, "vocab", "out")
    vocab = vocab_mod.read_vocabulary(opts["vocab"])
    out = track.register(opts["out"])
    selected_path = track.register(str(opts["out"]) + ".selected")
    jsonl_path = track.register(str(opts["out"]) + ".jsonl")

    if opts["method"] == "multilabel":
        sample_ids, tag_names, matrix = ex.read_score_matrix(opts["score_matrix"])
        params = MultiLabelParams(theta=opts["theta"])
        lines, sel_lines, jsonl = [], [], []
        for sid, row in zip(sample_ids, matrix):
            tag_scores = dict(zip(tag_names, row))
            selected = sorted(estimate_multilabel(tag_scores, params, vocab))
            lines.append(sid)
            sel_lines.append(",".join([sid] + selected))
            jsonl.append(json.dumps({"sample_id": sid, "selected": selected},
                                    sort_keys=True))
    elif opts["method"] == "ensemble":
        _require(opts, "exemplar_tags")
        rules = _load_rules(opts["rules"])
        records = vocab_mod.read_tag_records(opts["exemplar_tags"])
        oov = sum(vocab_mod.count_out_of_vocab(r.tags, rules, vocab) for r in records)
        exemplars = ex.load_exemplars(records, vocab, rules)
        sample_ids, rows = _score_rows(opts, exemplars)
        params = EnsembleParams(n_tilde=opts["n_tilde"], p=opts["p"])
        lines, sel_lines, jsonl = [], [], []
        for sid, scores in zip(sample_ids, rows):
            est = estimate_ensemble(scores, exemplars, params)
            counts = sorted(est.tag_counts.items(), key=lambda kv: (-kv[1], kv[0]))
            selected = sorted(est.selected)
            lines.append(",".join([sid] + [f"{t}:{c}" for t, c in counts]))
            sel_lines.append(",".join([sid] + selected))
            jsonl.append(json.dumps({
                "sample_id": sid,
                "selected": selected,
                "tag_counts": dict(counts),
                "contributing": list(est.contributing),
            }, sort_keys=True))
        if oov:
            print(f"warning: {oov} out-of-vocabulary exemplar tags dropped", file=sys.stderr)
    else:
        raise CliError(f"unknown method {opts['method']!r}")

    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    selected_path.write_text("\n".join(sel_lines) + "\n", encoding="utf-8")
    jsonl_path.write_text("\n".join(jsonl) + "\n", encoding="utf-8")
    print(f"estimates for {len(lines)} samples -> {opts['out']}")


def _read_tag_sets(path: str) -> dict[str, frozenset[str]]:
    records = vocab_mod.read_tag_records(path)
    return {r.font_id: frozenset(r.tags) for r in records}


def cmd_eval(opts: dict, track: _OutputTracker) -> None:
    _require(opts, "predictions", "truth", "vocab", "out")
    vocab = vocab_mod.read_vocabulary(opts["vocab"])
    preds = _read_tag_sets(opts["predictions"])
    truth = _read_tag_sets(opts["truth"])
    if set(preds) != set(truth):
        raise CliError("prediction and ground-truth sample ids do not match")
    ids = sorted(preds)
    report = metrics_mod.evaluate([preds[i] for i in ids], [truth[i] for i in ids], vocab)
    metrics_mod.write_report_rows(report, vocab, track.register(opts["out"]))
    print(metrics_mod.format_report(report, vocab))


def _parse_int_list(spec: str) -> list[int]:
    """Either 'lo:hi' (inclusive) or a comma list '1,2,3'."""
    spec = str(spec)
    if ":" in spec:
        lo, hi = spec.split(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in spec.split(",")]


def cmd_sweep(opts: dict, track: _OutputTracker) -> None:
    _require(opts, "vocab", "exemplar_tags", "truth", "out")
    vocab = vocab_mod.read_vocabulary(opts["vocab"])
    rules = _load_rules(opts["rules"])
    exemplars = ex.load_exemplars(vocab_mod.read_tag_records(opts["exemplar_tags"]),
                                  vocab, rules)
    sample_ids, rows = _score_rows(opts, exemplars)
    truth = _read_tag_sets(opts["truth"])
    if set(sample_ids) != set(truth):
        raise CliError("ground-truth sample ids do not match score rows")
    truth_sets = [truth[i] for i in sample_ids]
    result = metrics_mod.sweep(rows, truth_sets, exemplars, vocab,
                               _parse_int_list(opts["n_range"]),
                               _parse_int_list(opts["p_list"]))
    lines = ["n_tilde,p,macro_f1"]
    lines += [f"{n},{p},{f1!r}" for n, p, f1 in result.grid]
    lines.append(f"best,{result.best[0]},{result.best[1]}")
    track.register(opts["out"]).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"best n_tilde={result.best[0]} p={result.best[1]} "
          f"macro_f1={result.best_f1:.4f}")


def cmd_simulate(opts: dict, track: _OutputTracker) -> None:
    _require(opts, "out_dir")
    params = sim.CorruptionParams(miss_rate=opts["miss_rate"],
                                  noise_rate=opts["noise_rate"], seed=opts["seed"])
    model = sim.generate_corpus(opts["n_fonts"], opts["feature_dim"],
                                opts["vocab_size"], opts["tags_per_font"], params)
    sigma = opts["sigma"]
    if sigma is None:
        sigma = sim.calibrate_sigma(model, target_accuracy=opts["target_accuracy"],
                                    seed=opts["seed"])
    queries = sim.make_queries(model, sigma=sigma, seed=opts["seed"] + 1)
    result = sim.run_comparison(
        model, queries,
        EnsembleParams(n_tilde=opts["n_tilde"], p=opts["p"]),
        MultiLabelParams(theta=opts["theta"]),
        temperature=opts["temperature"],
    )
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    sim.export_corpus(model, out_dir)
    for name in ("features.csv", "observed_tags.csv", "true_tags.csv"):
        track.register(out_dir / name)
    vocab = model.vocabulary()
    metrics_mod.write_report_rows(result.ensemble_report, vocab,
                                  track.register(out_dir / "report_ensemble.csv"))
    metrics_mod.write_report_rows(result.baseline_report, vocab,
                                  track.register(out_dir / "report_baseline.csv"))
    summary = {
        "sigma": sigma,
        "top1_accuracy": sim.top1_accuracy(model, sigma, opts["seed"]),
        "ensemble_macro_f1": result.ensemble_report.macro_f1,
        "baseline_macro_f1": result.baseline_report.macro_f1,
        "ensemble_macro_precision": result.ensemble_report.macro_precision,
        "baseline_macro_precision": result.baseline_report.macro_precision,
    }
    track.register(out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"ensemble macro_f1={summary['ensemble_macro_f1']:.4f}  "
          f"baseline macro_f1={summary['baseline_macro_f1']:.4f}")


def cmd_correlate(opts: dict, track: _OutputTracker) -> None:
    _require(opts, "corpus", "vocab", "out_dir")
    vocab = vocab_mod.read_vocabulary(opts["vocab"])
    items = corpus_mod.read_corpus(opts["corpus"])
    if not items:
        raise CliError("corpus file contains no items")
    if opts["genres"]:
        genres = [g for g in Path(opts["genres"]).read_text(encoding="utf-8").splitlines()
                  if g.strip()]
    else:
        genres = sorted({item.genre for item in items})
    matrix = corpus_mod.build_matrix(items, vocab, genres)
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_mod.emit_heatmap(matrix, track.register(out_dir / "heatmap.svg"),
                            track.register(out_dir / "matrix.csv"))
    corpus_mod.write_orders(matrix, track.register(out_dir / "tag_order.txt"),
                            track.register(out_dir / "genre_order.txt"))
    print(f"matrix {matrix.raw.shape[0]}x{matrix.raw.shape[1]} -> {out_dir}")


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fontimp",
        description="Exemplar-based font impression tagging, evaluation, and analytics.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file (flags override it)")
        return p

    p = add("vocab", "build the canonical tag vocabulary")
    p.add_argument("--records")
    p.add_argument("--rules")
    p.add_argument("--top-n", dest="top_n", type=int)
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--out")

    p = add("estimate", "predict tags for query samples")
    p.add_argument("--vocab")
    p.add_argument("--exemplar-tags", dest="exemplar_tags")
    p.add_argument("--rules")
    p.add_argument("--method", choices=["ensemble", "multilabel"])
    p.add_argument("--score-matrix", dest="score_matrix")
    p.add_argument("--features")
    p.add_argument("--queries")
    p.add_argument("--temperature", type=float)
    p.add_argument("--n-tilde", dest="n_tilde", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--out")

    p = add("eval", "macro-averaged evaluation of predictions")
    p.add_argument("--predictions")
    p.add_argument("--truth")
    p.add_argument("--vocab")
    p.add_argument("--out")

    p = add("sweep", "grid-search n_tilde and p by macro F1")
    p.add_argument("--vocab")
    p.add_argument("--exemplar-tags", dest="exemplar_tags")
    p.add_argument("--rules")
    p.add_argument("--score-matrix", dest="score_matrix")
    p.add_argument("--features")
    p.add_argument("--queries")
    p.add_argument("--temperature", type=float)
    p.add_argument("--truth")
    p.add_argument("--n-range", dest="n_range")
    p.add_argument("--p-list", dest="p_list")
    p.add_argument("--out")

    p = add("simulate", "synthetic corpus + ensemble-vs-baseline comparison")
    p.add_argument("--n-fonts", dest="n_fonts", type=int)
    p.add_argument("--feature-dim", dest="feature_dim", type=int)
    p.add_argument("--vocab-size", dest="vocab_size", type=int)
    p.add_argument("--tags-per-font", dest="tags_per_font", type=int)
    p.add_argument("--miss-rate", dest="miss_rate", type=float)
    p.add_argument("--noise-rate", dest="noise_rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-tilde", dest="n_tilde", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--temperature", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--target-accuracy", dest="target_accuracy", type=float)
    p.add_argument("--out-dir", dest="out_dir")

    p = add("correlate", "genre-vs-impression matrix and heatmap")
    p.add_argument("--corpus")
    p.add_argument("--vocab")
    p.add_argument("--genres")
    p.add_argument("--out-dir", dest="out_dir")
    return parser


_DEFAULTS = {
    "vocab": {"records": None, "rules": None, "top_n": 100, "min_count": 24, "out": None},
    "estimate": {"vocab": None, "exemplar_tags": None, "rules": None,
                 "method": "ensemble", "score_matrix": None, "features": None,
                 "queries": None, "temperature": 1.0, "n_tilde": 11, "p": 3,
                 "theta": 0.1, "out": None},
    "eval": {"predictions": None, "truth": None, "vocab": None, "out": None},
    "sweep": {"vocab": None, "exemplar_tags": None, "rules": None,
              "score_matrix": None, "features": None, "queries": None,
              "temperature": 1.0, "truth": None, "n_range": "1:21",
              "p_list": "1,2,3,5", "out": None},
    "simulate": {"n_fonts": 300, "feature_dim": 1, "vocab_size": 84,
                 "tags_per_font": 4, "miss_rate": 0.3, "noise_rate": 0.1,
                 "seed": 0, "n_tilde": 11, "p": 3, "theta": 0.3,
                 "temperature": 0.1, "sigma": None, "target_accuracy": 0.8,
                 "out_dir": None},
    "correlate": {"corpus": None, "vocab": None, "genres": None, "out_dir": None},
}

_HANDLERS = {
    "vocab": cmd_vocab,
    "estimate": cmd_estimate,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "correlate": cmd_correlate,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    track = _OutputTracker()
    try:
        opts = _merged(args, _DEFAULTS[args.subcommand])
        _HANDLERS[args.subcommand](opts, track)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        track.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
