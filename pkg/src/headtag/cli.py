"""Command-line pipelines: stats, project, train, search, tag, eval, compare.

Every run writes a RunManifest (JSON) next to its main output recording the
resolved arguments, input digests, seed, and tool version; `headtag rerun`
re-executes a manifest.  Exit codes: 0 ok, 1 usage, 2 I/O or malformed
input, 3 empty result, 4 data mismatch.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .data import (
    Corpus,
    DomainId,
    build_vocab,
    corpus_stats,
    parse_conllu,
    parse_pairs,
    retag_corpus,
    write_conllu,
)
from .evaluation import (
    AlignmentMismatchError,
    BootstrapConfig,
    bootstrap_compare,
    emit_tag_distribution,
    evaluate,
    tag_with_final_period,
)
from .model import (
    ModelDims,
    build_model,
    load_model,
    read_word_vectors,
    save_model,
    tag_sentence,
)
from .projection import EmptyResultError, build_silver_corpus
from .training import SearchSpace, TrainConfig, random_search, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_EMPTY = 3
EXIT_MISMATCH = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_text(path: str, text: str) -> None:
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(
    args, command: str, config: dict, inputs: list[str], seed: int | None, started: float
) -> None:
    target = args.manifest or f"{args.manifest_base}.manifest.json"
    manifest = {
        "command": command,
        "argv": args.raw_argv,
        "config": config,
        "inputs": {p: _digest(p) for p in sorted(set(inputs))},
        "seed": seed,
        "tool_version": __version__,
        "started": started,
        "finished": time.time(),
    }
    _write_text(target, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _split_at_domain(value: str, flag: str) -> tuple[str, str]:
    path, sep, name = value.rpartition("@")
    if not sep or not path or not name:
        raise UsageError(f"{flag} expects FILE@DOMAIN, got {value!r}")
    return path, name


def _load_domain_corpora(values: list[str], flag: str, registry: dict[str, DomainId]):
    corpora = []
    for value in values:
        path, name = _split_at_domain(value, flag)
        if name not in registry:
            registry[name] = DomainId(name, len(registry))
        corpora.append(parse_conllu(_read_text(path), registry[name]))
    return corpora


def _load_json_config(path: str | None) -> dict:
    if path is None:
        return {}
    data = json.loads(_read_text(path))
    if not isinstance(data, dict):
        raise ValueError(f"config file {path!r} must hold a JSON object")
    return data


def cmd_stats(args) -> int:
    named = []
    inputs = []
    for i, value in enumerate(args.inputs):
        if "@" in value:
            path, name = _split_at_domain(value, "--in")
        else:
            path, name = value, Path(value).stem
        corpus = parse_conllu(_read_text(path), DomainId(name, i))
        if len(corpus) == 0:
            raise ValueError(f"input {path!r} contains no sentences")
        named.append((name, corpus_stats(corpus)))
        inputs.append(path)
    payload = {name: stats.to_dict() for name, stats in named}
    _write_text(args.out_json, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_text(args.out_csv, emit_tag_distribution(named))
    args.manifest_base = args.out_json
    _write_manifest(args, "stats", {}, inputs, None, args.started)
    return EXIT_OK


def cmd_project(args) -> int:
    pairs = parse_pairs(_read_text(args.pairs))
    model = load_model(args.tagger)
    domain = model.resolve_domain(args.tagger_domain)
    out_domain = DomainId(args.out_domain, 0)
    args.manifest_base = args.report
    config = {
        "train_frac": args.train_frac,
        "tagger_domain": domain.name,
        "out_domain": out_domain.name,
    }
    try:
        train_c, val_c, report = build_silver_corpus(
            pairs, model, domain, args.train_frac, args.seed, out_domain
        )
    except EmptyResultError as err:
        if err.report is not None:
            _write_text(args.report, json.dumps(err.report.to_dict(), indent=2) + "\n")
        print(f"error: {err}", file=sys.stderr)
        _write_manifest(args, "project", config, [args.pairs, args.tagger], args.seed, args.started)
        return EXIT_EMPTY
    _write_text(args.out_train, write_conllu(train_c))
    _write_text(args.out_val, write_conllu(val_c))
    _write_text(args.report, json.dumps(report.to_dict(), indent=2) + "\n")
    _write_manifest(args, "project", config, [args.pairs, args.tagger], args.seed, args.started)
    return EXIT_OK


def _resolve_train_config(args) -> TrainConfig:
    data = _load_json_config(args.config)
    config = TrainConfig.from_dict(data)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _build_from_args(args, config: TrainConfig, registry, train_corpora, seed: int):
    vocab = build_vocab(train_corpora, min_freq=args.min_freq)
    word_vectors = None
    if args.embeddings:
        word_vectors = read_word_vectors(_read_text(args.embeddings), ModelDims().word_dim)
    domains = sorted(registry.values(), key=lambda d: d.index)
    return build_model(
        vocab,
        domains,
        use_crf=config.use_crf,
        seed=seed,
        word_vectors=word_vectors,
    )


def cmd_train(args) -> int:
    registry: dict[str, DomainId] = {}
    train_corpora = _load_domain_corpora(args.train, "--train", registry)
    train_domains = set(registry)
    val_corpora = _load_domain_corpora(args.val or [], "--val", registry)
    for corpus in val_corpora:
        if corpus.domain.name not in train_domains:
            raise UsageError(
                f"validation domain {corpus.domain.name!r} has no training corpus"
            )
    config = _resolve_train_config(args)
    model = _build_from_args(args, config, registry, train_corpora, config.seed)
    model, history = train(model, train_corpora, val_corpora, config)
    save_model(model, args.out)
    if args.history:
        lines = [json.dumps(h.to_dict(), sort_keys=True) for h in history]
        _write_text(args.history, "\n".join(lines) + "\n")
    args.manifest_base = args.out
    inputs = [v.rpartition("@")[0] for v in args.train + (args.val or [])]
    if args.config:
        inputs.append(args.config)
    if args.embeddings:
        inputs.append(args.embeddings)
    _write_manifest(args, "train", config.to_dict(), inputs, config.seed, args.started)
    return EXIT_OK


def cmd_search(args) -> int:
    registry: dict[str, DomainId] = {}
    train_corpora = _load_domain_corpora(args.train, "--train", registry)
    train_domains = set(registry)
    val_corpora = _load_domain_corpora(args.val, "--val", registry)
    for corpus in val_corpora:
        if corpus.domain.name not in train_domains:
            raise UsageError(
                f"validation domain {corpus.domain.name!r} has no training corpus"
            )
    if args.select_domain is None:
        if len(val_corpora) != 1:
            raise UsageError("--select-domain is required with multiple --val corpora")
        selection = val_corpora[0].domain.name
    else:
        selection = args.select_domain
        if selection not in registry:
            raise UsageError(f"--select-domain {selection!r} matches no corpus")
    data = _load_json_config(args.config)
    space = SearchSpace.from_dict(data)
    if args.budget is not None:
        space = replace(space, budget=args.budget)
    if args.seeds_per_trial is not None:
        space = replace(space, seeds_per_trial=args.seeds_per_trial)
    base_config = TrainConfig.from_dict(data)
    seed = args.seed if args.seed is not None else base_config.seed

    def factory(run_seed: int):
        return _build_from_args(args, base_config, registry, train_corpora, run_seed)

    best, trials = random_search(
        space, factory, train_corpora, val_corpora, selection, base_seed=seed
    )
    save_model(best.model, args.out)
    records = []
    for i, trial in enumerate(trials):
        for j, run_seed in enumerate(trial.seeds):
            records.append(
                json.dumps(
                    {
                        "trial": i,
                        "seed": run_seed,
                        "config": trial.config.to_dict(),
                        "epochs": [h.to_dict() for h in trial.per_seed_history[j]],
                        "val_token_accuracy": trial.per_seed_val_token_acc[j],
                        "selected": trial is best,
                    },
                    sort_keys=True,
                )
            )
    _write_text(args.trial_log, "\n".join(records) + "\n")
    print(
        f"best trial: mean val acc {best.mean:.4f} "
        f"(lr {best.config.learning_rate:.3g}, dropout {best.config.dropout_rate:.3g}, "
        f"epochs {best.config.epochs}, head {best.selected_head.name})"
    )
    args.manifest_base = args.out
    inputs = [v.rpartition("@")[0] for v in args.train + args.val]
    if args.config:
        inputs.append(args.config)
    if args.embeddings:
        inputs.append(args.embeddings)
    search_config = {
        "space": {
            "lr_exponent_range": list(space.lr_exponent_range),
            "dropout_range": list(space.dropout_range),
            "epoch_range": list(space.epoch_range),
            "budget": space.budget,
            "seeds_per_trial": space.seeds_per_trial,
        },
        "select_domain": selection,
    }
    _write_manifest(args, "search", search_config, inputs, seed, args.started)
    return EXIT_OK


def cmd_tag(args) -> int:
    model = load_model(args.model)
    domain = model.resolve_domain(args.domain)
    corpus = parse_conllu(_read_text(args.infile), DomainId("input", 0))
    tagged = []
    for sentence in corpus:
        if args.append_period:
            pred = tag_with_final_period(model, sentence, domain)
        else:
            pred = tag_sentence(model, sentence, domain)
        tagged.append(sentence.with_tags(pred))
    _write_text(args.out, write_conllu(Corpus(tuple(tagged), corpus.domain)))
    args.manifest_base = args.out
    config = {"domain": domain.name, "append_period": bool(args.append_period)}
    _write_manifest(args, "tag", config, [args.model, args.infile], None, args.started)
    return EXIT_OK


def _load_eval_pair(gold_path: str, pred_path: str):
    gold = parse_conllu(_read_text(gold_path), DomainId("gold", 0))
    pred = parse_conllu(_read_text(pred_path), DomainId("pred", 0))
    if len(pred) != len(gold):
        raise AlignmentMismatchError(
            f"{pred_path}: {len(pred)} sentences, gold has {len(gold)}"
        )
    for g, p in zip(gold, pred):
        if len(g) != len(p):
            raise AlignmentMismatchError(
                f"sentence {g.id!r}: gold has {len(g)} tokens, prediction has {len(p)}",
                sentence_id=g.id,
            )
    return gold, [p.tags for p in pred]


def cmd_eval(args) -> int:
    gold, pred = _load_eval_pair(args.gold, args.pred)
    report = evaluate(gold, pred)
    _write_text(args.report, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    print(
        f"token accuracy {report.token_accuracy:.4f}, "
        f"headline accuracy {report.sequence_accuracy:.4f}"
    )
    args.manifest_base = args.report
    _write_manifest(args, "eval", {}, [args.gold, args.pred], None, args.started)
    return EXIT_OK


def cmd_compare(args) -> int:
    gold, pred_a = _load_eval_pair(args.gold, args.pred_a)
    _, pred_b = _load_eval_pair(args.gold, args.pred_b)
    data = _load_json_config(args.bootstrap_config)
    cfg = BootstrapConfig(
        batch_fraction=data.get("batch_fraction", 0.2),
        replications=int(data.get("replications", 2000)),
        alpha=data.get("alpha", 0.01),
        seed=int(data.get("seed", 0)),
    )
    if args.replications is not None:
        cfg = replace(cfg, replications=args.replications)
    if args.fraction is not None:
        cfg = replace(cfg, batch_fraction=args.fraction)
    if args.alpha is not None:
        cfg = replace(cfg, alpha=args.alpha)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = bootstrap_compare(gold, pred_a, pred_b, cfg)
    payload = result.to_dict()
    payload["config"] = cfg.to_dict()
    _write_text(args.report, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print("significant" if result.significant else "not significant")
    args.manifest_base = args.report
    _write_manifest(
        args, "compare", cfg.to_dict(), [args.gold, args.pred_a, args.pred_b],
        cfg.seed, args.started,
    )
    return EXIT_OK


def cmd_rerun(args) -> int:
    manifest = json.loads(_read_text(args.manifest_file))
    argv = manifest.get("argv")
    if not isinstance(argv, list) or not argv:
        raise ValueError(f"manifest {args.manifest_file!r} has no argv to rerun")
    return main(argv)


def build_parser() -> _Parser:
    parser = _Parser(prog="headtag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--manifest", help="run manifest path (default: <output>.manifest.json)")
        return p

    p = add("stats", cmd_stats, "corpus statistics and tag-distribution plot data")
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   metavar="FILE[@NAME]", help="CoNLL-U input (repeatable)")
    p.add_argument("--out-json", required=True, help="statistics JSON output")
    p.add_argument("--out-csv", required=True, help="tag distribution CSV output")

    p = add("project", cmd_project, "build a silver headline corpus from pairs")
    p.add_argument("--pairs", required=True, help="JSON-lines pair file")
    p.add_argument("--tagger", required=True, help="trained model file")
    p.add_argument("--tagger-domain", required=True, help="decoder head for tagging leads")
    p.add_argument("--train-frac", type=float, default=0.7,
                   help="training fold fraction (default 0.7)")
    p.add_argument("--seed", type=int, default=0, help="split seed (default 0)")
    p.add_argument("--out-domain", default="silver", help="domain name of the silver corpus")
    p.add_argument("--out-train", required=True, help="silver training CoNLL-U output")
    p.add_argument("--out-val", required=True, help="silver validation CoNLL-U output")
    p.add_argument("--report", required=True, help="projection report JSON output")

    for name, func, help_text in (
        ("train", cmd_train, "train one tagger on fixed hyperparameters"),
        ("search", cmd_search, "random hyperparameter search with multi-seed retraining"),
    ):
        p = add(name, func, help_text)
        p.add_argument("--train", action="append", required=True, metavar="FILE@DOMAIN",
                       help="training corpus bound to a domain (repeatable)")
        p.add_argument("--val", action="append", required=(name == "search"),
                       metavar="FILE@DOMAIN", help="validation corpus (repeatable)")
        p.add_argument("--config", help="JSON config (TrainConfig/SearchSpace fields, all optional)")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--min-freq", type=int, default=1, help="vocabulary cutoff (default 1)")
        p.add_argument("--embeddings", help="pretrained word vectors (text format)")
        p.add_argument("--out", required=True, help="model output file")
        if name == "search":
            p.add_argument("--select-domain",
                           help="domain whose validation accuracy drives selection "
                                "(default: the only --val domain)")
            p.add_argument("--budget", type=int, help="number of sampled configs (default 10)")
            p.add_argument("--seeds-per-trial", type=int, help="retraining seeds (default 3)")
            p.add_argument("--trial-log", required=True, help="JSON-lines trial log output")
        else:
            p.add_argument("--history", help="optional JSON-lines epoch history output")

    p = add("tag", cmd_tag, "tag a corpus with a trained model")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--domain", required=True, help="decoder head to use")
    p.add_argument("--in", dest="infile", required=True, help="input CoNLL-U")
    p.add_argument("--out", required=True, help="predicted CoNLL-U output")
    p.add_argument("--append-period", action="store_true",
                   help="append a final period before inference and drop its tag "
                        "(body-trained taggers on headlines)")

    p = add("eval", cmd_eval, "token/headline accuracy and confusion counts")
    p.add_argument("--gold", required=True, help="gold CoNLL-U")
    p.add_argument("--pred", required=True, help="predicted CoNLL-U")
    p.add_argument("--report", required=True, help="evaluation report JSON output")

    p = add("compare", cmd_compare, "paired bootstrap significance test (b vs a)")
    p.add_argument("--gold", required=True, help="gold CoNLL-U")
    p.add_argument("--pred-a", required=True, help="baseline predictions")
    p.add_argument("--pred-b", required=True, help="candidate predictions")
    p.add_argument("--report", required=True, help="bootstrap result JSON output")
    p.add_argument("--bootstrap-config", help="JSON file with test parameters")
    p.add_argument("--replications", type=int, help="bootstrap replications (default 2000)")
    p.add_argument("--fraction", type=float, help="resample fraction (default 0.2)")
    p.add_argument("--alpha", type=float, help="significance level (default 0.01)")
    p.add_argument("--seed", type=int, help="resampling seed (default 0)")

    p = add("rerun", cmd_rerun, "re-execute a previous run from its manifest")
    p.add_argument("manifest_file", help="manifest JSON written by a previous run")

    return parser


def main(argv: list[str] | None = None) -> int:
    raw_argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(raw_argv)
        args.raw_argv = raw_argv
        args.started = time.time()
        return args.func(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except AlignmentMismatchError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_MISMATCH
    except EmptyResultError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_EMPTY
    except (OSError, ValueError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
