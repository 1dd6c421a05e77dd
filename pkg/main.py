# main.py
import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager

from data.corpus import build_vocab, load_embeddings, random_embeddings, segment_document
from data.dataset import corpus_statistics, load_stopwords, read_jsonl
from evaluation.report import evaluate, format_table, parse_systems, write_report
from models.pointer import GREEDY, MODES
from models.summarizer import CheckpointError, UrlComSum, summarize_document
from rewards.coverage import SOLVERS, coverage_plan, top_flows
from rewards.fluency import build_ngram_lm
from rewards.reward import RewardDeps, RewardWeights, total_reward
from training.config import PROFILES, TrainConfig
from training.scst import train
from utils.visualisation import export_transport_plan, plot_reward_curve

logger = logging.getLogger("urlcomsum")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    pass


@contextmanager
def _usage():
    """Report argument, config and checkpoint problems as usage errors."""
    try:
        yield
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _require(value, flag):
    if value is None:
        raise UsageError(f"{flag} is required")
    return value


def _existing_file(path, flag):
    _require(path, flag)
    if not os.path.isfile(path):
        raise UsageError(f"{flag}: no such file: {path}")
    return path


def _text(args, name):
    """Inline --<name> text or the contents of --<name>-file."""
    inline, path = getattr(args, name), getattr(args, f"{name}_file")
    if path:
        with open(_existing_file(path, f"--{name}-file"), encoding="utf-8") as f:
            return f.read()
    return _require(inline, f"--{name} or --{name}-file")


def resolve_config(args, base=None) -> TrainConfig:
    """
    Defaults, then the dataset profile, then the config file, then explicit flags.
    """
    config = base or TrainConfig()
    with _usage():
        if getattr(args, "profile", None):
            config = config.with_profile(args.profile)
        if getattr(args, "config", None):
            config = TrainConfig.from_file(_existing_file(args.config, "--config"), base=config)
    overrides = {
        "train_path": getattr(args, "data", None),
        "out_dir": getattr(args, "out", None),
        "seed": getattr(args, "seed", None),
        "L_E": getattr(args, "L_E", None),
        "L_C": getattr(args, "L_C", None),
        "w_cov": getattr(args, "w_cov", None),
        "w_flu": getattr(args, "w_flu", None),
        "learning_rate": getattr(args, "lr", None),
        "batch_size": getattr(args, "batch_size", None),
        "epochs": getattr(args, "epochs", None),
        "embeddings_path": getattr(args, "embeddings", None),
    }
    with _usage():
        return config.with_overrides(**overrides).validate()


def _checkpoint_config(path):
    with _usage():
        model, archive = UrlComSum.load(_existing_file(path, "--checkpoint"))
    model.eval()
    saved = archive.get("train_config")
    return model, TrainConfig(**saved) if saved else None


def cmd_train(args):
    config = resolve_config(args)
    _existing_file(config.train_path, "--data")
    print("=== Training ===")
    print(json.dumps(config.to_dict(), sort_keys=True))
    result = train(config, resume=args.resume)
    if os.path.getsize(result.metrics_path):
        plot_reward_curve(result.metrics_path, os.path.join(config.out_dir, "reward_curve.png"))
    print(json.dumps({
        "checkpoint": result.checkpoint_path,
        "metrics": result.metrics_path,
        "steps": result.steps,
        "initial_reward": result.initial_reward,
        "final_reward": result.final_reward,
    }))
    return EXIT_OK


def cmd_summarize(args):
    model, saved = _checkpoint_config(_require(args.checkpoint, "--checkpoint"))
    config = resolve_config(args, base=saved)
    docs = read_jsonl(_existing_file(args.data, "--data"), with_summary=False)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for doc in docs:
            if not doc.sentences:
                logger.warning("Skipping empty document %s", doc.id)
                continue
            extractive, compressive = summarize_document(model, doc, config.L_E, config.L_C, args.mode,
                                                         seed=config.seed)
            out.write(json.dumps({"id": doc.id, "extractive": extractive.text,
                                  "compressive": compressive.text}) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def reward_deps(args, doc, summary):
    """
    Embeddings and vocabulary come from the checkpoint when one is given,
    otherwise from --embeddings (or a seeded random table) over the two texts.
    The fluency LM is trained on --data when given, else on the document itself.
    """
    config = resolve_config(args)
    if args.checkpoint:
        model, _ = _checkpoint_config(args.checkpoint)
        vocab, emb = model.vocab, model.embeddings_table()
    else:
        vocab = build_vocab([doc, summary])
        if config.embeddings_path:
            emb = load_embeddings(config.embeddings_path, vocab, config.d_emb, config.seed)
        else:
            emb = random_embeddings(vocab, config.d_emb, config.seed)
    corpus = list(read_jsonl(_existing_file(args.data, "--data"))) if args.data else [doc]
    lm = build_ngram_lm(corpus, config.lm_order)
    return config, RewardDeps(emb, vocab, load_stopwords(config.stopwords_path), lm, solver=args.solver)


def cmd_score(args):
    doc = segment_document(_text(args, "document"), doc_id="input")
    summary = segment_document(_text(args, "summary"), doc_id="summary")
    if not summary.tokens:
        raise UsageError("empty summary")
    config, deps = reward_deps(args, doc, summary)
    breakdown = total_reward(doc, summary.tokens, RewardWeights(config.w_cov, config.w_flu), deps)
    print(json.dumps(breakdown.to_dict()))
    return EXIT_OK


def cmd_explain(args):
    doc = segment_document(_text(args, "document"), doc_id="input")
    summary = segment_document(_text(args, "summary"), doc_id="summary")
    config, deps = reward_deps(args, doc, summary)
    plan = coverage_plan(deps.vocab.encode(doc.tokens), deps.vocab.encode(summary.tokens), deps.emb, deps.vocab,
                         deps.stopwords, deps.solver, deps.sinkhorn)
    paths = export_transport_plan(plan, config.out_dir, heatmap=args.heatmap)
    print(json.dumps({
        "distance": plan.distance,
        "coverage": 1.0 - plan.distance,
        "converged": plan.converged,
        "files": paths,
        "top_flows": [[token, flows] for token, flows in top_flows(plan, args.top_k)],
    }))
    return EXIT_OK


def cmd_evaluate(args):
    config = resolve_config(args)
    names = [name for item in _require(args.systems, "--systems") for name in item.split(",") if name]
    with _usage():
        systems = parse_systems(names, config.L_E, config.L_C, args.mode, config.seed)
    report = evaluate(_existing_file(args.data, "--data"), systems, args.sample_size, config.seed)
    print(format_table(report))
    if args.out:
        write_report(report, args.out)
    else:
        print(json.dumps(report.to_dict(), sort_keys=True))
    if report.compressive_violations:
        logger.error("%d compressive summaries violate the subset property", report.compressive_violations)
    return EXIT_OK


def cmd_stats(args):
    docs = list(read_jsonl(_existing_file(args.data, "--data")))
    print(json.dumps(corpus_statistics(docs)))
    return EXIT_OK


def _add_common(parser, budgets=True):
    parser.add_argument("--config", help="Flat JSON config file.")
    parser.add_argument("--data", help="JSON-lines dataset.")
    parser.add_argument("--out", help="Output directory (or file for summarize).")
    parser.add_argument("--seed", type=int)
    if budgets:
        parser.add_argument("--profile", choices=sorted(PROFILES), help="Dataset budget profile.")
        parser.add_argument("--L_E", type=int, help="Sentences to extract.")
        parser.add_argument("--L_C", type=int, help="Words to keep.")


def _add_reward_flags(parser):
    parser.add_argument("--w-cov", type=float, dest="w_cov")
    parser.add_argument("--w-flu", type=float, dest="w_flu")
    parser.add_argument("--embeddings", help="GloVe-format text embeddings.")
    parser.add_argument("--checkpoint", help="Take vocabulary and embeddings from a trained model.")
    parser.add_argument("--solver", choices=SOLVERS, default=SOLVERS[0])
    for name in ("document", "summary"):
        parser.add_argument(f"--{name}", help=f"{name.capitalize()} text.")
        parser.add_argument(f"--{name}-file", dest=f"{name}_file", help=f"File holding the {name} text.")


def build_parser():
    parser = argparse.ArgumentParser(prog="urlcomsum", description="Unsupervised compressive summarization.")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="Self-critical training of both agents.")
    _add_common(p)
    p.add_argument("--w-cov", type=float, dest="w_cov")
    p.add_argument("--w-flu", type=float, dest="w_flu")
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--epochs", type=int)
    p.add_argument("--embeddings", help="GloVe-format text embeddings.")
    p.add_argument("--resume", help="Checkpoint to resume from.")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("summarize", help="Summarize every document of a JSON-lines file.")
    _add_common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--mode", choices=MODES, default=GREEDY)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("score", help="Reward breakdown of a summary.")
    _add_common(p, budgets=False)
    _add_reward_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("explain", help="Export the coverage transport plan.")
    _add_common(p, budgets=False)
    _add_reward_flags(p)
    p.add_argument("--heatmap", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--top-k", type=int, default=3, dest="top_k")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="ROUGE report for baselines and trained models.")
    _add_common(p)
    p.add_argument("--systems", nargs="+", help="lead, leadword and/or model:<checkpoint>.")
    p.add_argument("--sample-size", type=int, dest="sample_size")
    p.add_argument("--mode", choices=MODES, default=GREEDY)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="Dataset statistics.")
    p.add_argument("--data")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
