"""Command-line pipelines: aggregate, synth, split, train, predict, baseline, evaluate.

Data goes to files; diagnostics go to stderr.  Every subcommand accepts a
JSON config through the global ``--config`` option; command-line flags win
over config values.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import baselines, dpp
from .aggregation import AnnotationSheet, Rejected, aggregate
from .corpus import CorpusError, load_corpus, save_corpus, split_corpus
from .evaluation import evaluate, format_table, gold_stats_from_histogram
from .kernel import DEFAULT_PSD_FLOOR
from .numerics import NumericalError
from .predict import predict
from .scorer import Model, SchemaError
from .synthetic import SynthConfig, calibration_summary, generate_synthetic
from .training import TrainConfig, select_best, summarize, train_seeds

log = logging.getLogger("dppanswer")

_FAILURES = (CorpusError, SchemaError, ValueError, KeyError, ArithmeticError, NumericalError, OSError)


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def _read_jsonl(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"malformed JSON: {exc.msg}", lineno) from None
            if not isinstance(obj, dict):
                raise CorpusError("record is not a JSON object", lineno)
            out.append((lineno, obj))
    return out


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _sibling(path, suffix):
    path = Path(path)
    return path.with_name(path.name + suffix)


def _section(ctx, name):
    return dict(ctx.obj["config"].get(name, {}))


def _pick(flag, section, key, default):
    if flag is not None:
        return flag
    return section.get(key, default)


def _map(ctx, fn, items):
    threads = ctx.obj["threads"]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except _FAILURES as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(1)


@click.group(cls=_Group)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON config file.")
@click.option("--seed", type=int, default=None, help="Master seed (overrides config).")
@click.option("--threads", type=int, default=None, help="Worker threads for per-question work.")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
@click.pass_context
def main(ctx, config_path, seed, threads, verbose):
    """Diverse answer-set selection with determinantal point processes."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    config = {}
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            config = json.load(fh)
    ctx.ensure_object(dict)
    ctx.obj["config"] = config
    ctx.obj["seed"] = seed if seed is not None else int(config.get("seed", 0))
    ctx.obj["seed_flag"] = seed is not None
    ctx.obj["threads"] = max(1, threads if threads is not None else int(config.get("threads", 1)))


@main.command("aggregate")
@click.argument("annotations", type=click.Path(exists=True, dir_okay=False))
@click.argument("out", type=click.Path(dir_okay=False))
@click.option("--answers", type=click.Path(exists=True, dir_okay=False), help="Corpus JSONL used to validate answer ids.")
@click.option("--min-num", type=int, default=None, help="Minimum votes for an answer set to count (default 2).")
@click.pass_context
def cmd_aggregate(ctx, annotations, out, answers, min_num):
    """Turn worker selections into gold sets (or rejections)."""
    min_num = _pick(min_num, _section(ctx, "aggregate"), "min_num", 2)
    known = None
    if answers:
        known = {inst.question_id: inst.answer_ids for inst in load_corpus(answers)}
    records = []
    sizes = {}
    reasons = {"conflict": 0, "no-agreement": 0}
    for lineno, obj in _read_jsonl(annotations):
        try:
            qid = str(obj["question_id"])
            selections = obj["selections"] if "selections" in obj else obj["annotations"]
            ids = None
            if known is not None:
                if qid not in known:
                    raise CorpusError(f"question {qid!r} is not in the answers corpus", lineno)
                ids = known[qid]
            result = aggregate(AnnotationSheet.from_lists(qid, selections, ids), min_num)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, CorpusError):
                raise
            raise CorpusError(f"invalid annotation record: {exc}", lineno) from None
        if isinstance(result, Rejected):
            reasons[result.reason] += 1
            records.append({"question_id": qid, "rejected": result.reason})
        else:
            order = {a: i for i, a in enumerate(ids)} if ids else None
            gold = sorted(result, key=order.__getitem__) if order else sorted(result)
            sizes[len(gold)] = sizes.get(len(gold), 0) + 1
            records.append({"question_id": qid, "gold": gold})
    _write_jsonl(out, records)
    stats = gold_stats_from_histogram(sizes)
    summary = {
        "questions": len(records),
        "accepted": stats.total,
        "rejected": reasons,
        "gold_size_histogram": {str(k): v for k, v in stats.histogram.items()},
        "mean_gold_size": stats.mean,
        "min_num": min_num,
    }
    _write_json(_sibling(out, ".summary.json"), summary)
    click.echo(stats.format(), err=True)


@main.command("synth")
@click.argument("out", type=click.Path(dir_okay=False))
@click.option("--questions", type=int, default=None, help="Number of questions (overrides config).")
@click.pass_context
def cmd_synth(ctx, out, questions):
    """Generate a synthetic corpus with planted gold sets."""
    section = _section(ctx, "synth")
    if ctx.obj["seed_flag"] or "seed" not in section:
        section["seed"] = ctx.obj["seed"]
    if questions is not None:
        section["n_questions"] = questions
    cfg = SynthConfig.from_dict(section)
    corpus = generate_synthetic(cfg)
    save_corpus(corpus, out)
    summary = calibration_summary(corpus)
    summary["config"] = cfg.to_dict()
    _write_json(_sibling(out, ".summary.json"), summary)
    click.echo(f"{summary['questions']} questions, mean gold size {summary['mean_gold_size']:.3f}", err=True)


@main.command("split")
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--ratios", type=(float, float, float), default=None, help="Train/dev/test ratios.")
@click.pass_context
def cmd_split(ctx, corpus, out_dir, ratios):
    """Shuffle a corpus into train.jsonl, dev.jsonl and test.jsonl."""
    ratios = _pick(ratios, _section(ctx, "split"), "ratios", (0.70, 0.10, 0.20))
    parts = split_corpus(load_corpus(corpus), tuple(ratios), ctx.obj["seed"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in zip(("train", "dev", "test"), parts):
        save_corpus(part, out / f"{name}.jsonl")
    click.echo("split sizes " + "/".join(str(len(p)) for p in parts), err=True)


@main.command("train")
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.argument("model_out", type=click.Path(dir_okay=False))
@click.option("--dev", "dev_path", type=click.Path(exists=True, dir_okay=False), help="Development corpus for model selection.")
@click.option("--epochs", type=int, default=None)
@click.option("--seeds", type=int, default=None, help="Number of seeded runs.")
@click.option("--learning-rate", type=float, default=None)
@click.option("--include-question/--no-include-question", default=None, help="Question-conditioned importance features.")
@click.pass_context
def cmd_train(ctx, corpus, model_out, dev_path, epochs, seeds, learning_rate, include_question):
    """Train the scorer heads; writes the selected model and per-run histories."""
    section = _section(ctx, "train")
    for key, val in (("epochs", epochs), ("seeds", seeds), ("learning_rate", learning_rate), ("include_question", include_question)):
        if val is not None:
            section[key] = val
    cfg = TrainConfig.from_dict(section)
    train = load_corpus(corpus)
    if dev_path:
        dev = load_corpus(dev_path)
    else:
        train, dev, _ = split_corpus(train, (0.9, 0.1, 0.0), ctx.obj["seed"])
    runs = train_seeds(train, dev, cfg, base_seed=ctx.obj["seed"], threads=ctx.obj["threads"])
    best = select_best(runs)
    best.model(cfg, {"base_seed": ctx.obj["seed"]}).save(model_out)
    for run in runs:
        _write_jsonl(_sibling(Path(model_out).with_suffix(""), f".seed{run.seed}.history.jsonl"), run.history())
    summary = summarize(runs)
    summary["selected_seed"] = best.seed
    _write_json(_sibling(Path(model_out).with_suffix(""), ".summary.json"), summary)
    click.echo(f"selected seed {best.seed} (dev accuracy {best.best_dev_accuracy:.3f})", err=True)


@main.command("predict")
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("out", type=click.Path(dir_okay=False))
@click.option("--exhaustive-cap", type=int, default=None, help="Largest answer count solved exactly.")
@click.option("--psd-floor", type=float, default=None)
@click.pass_context
def cmd_predict(ctx, corpus, model_path, out, exhaustive_cap, psd_floor):
    """Most probable answer set per question."""
    section = _section(ctx, "predict")
    model = Model.load(model_path)
    trained = model.meta.get("train_config", {})
    cap = _pick(exhaustive_cap, section, "exhaustive_cap", trained.get("exhaustive_cap", dpp.DEFAULT_EXHAUSTIVE_CAP))
    floor = _pick(psd_floor, section, "psd_floor", trained.get("psd_floor", DEFAULT_PSD_FLOOR))
    preds = predict(model, load_corpus(corpus), psd_floor=floor, cap=cap, threads=ctx.obj["threads"])
    _write_jsonl(out, [p.to_dict() for p in preds])


@main.command("baseline")
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.argument("out", type=click.Path(dir_okay=False))
@click.option("--method", type=click.Choice(["random", "wordnum", "lexrank", "external"]), default=None)
@click.option("-k", "k", type=int, default=None, help="Answers selected per question.")
@click.option("--scores", type=click.Path(exists=True, dir_okay=False), help="External scores JSONL.")
@click.pass_context
def cmd_baseline(ctx, corpus, out, method, k, scores):
    """Fixed-size baseline selection (method M with k answers is "M-k")."""
    section = _section(ctx, "baseline")
    method = _pick(method, section, "method", None)
    k = int(_pick(k, section, "k", 1))
    scores = _pick(scores, section, "scores", None)
    if method is None:
        raise click.UsageError("--method is required")
    if k < 1:
        raise click.UsageError("-k must be at least 1")
    seed = ctx.obj["seed"]
    instances = load_corpus(corpus)
    table = None
    if method == "external":
        if not scores:
            raise click.UsageError("the external method needs --scores")
        table = {str(obj["question_id"]): obj["scores"] for _, obj in _read_jsonl(scores)}

    def one(inst):
        if method == "random":
            idx = baselines.random_k(inst, k, seed)
        elif method == "wordnum":
            idx = baselines.wordnum_k(inst, k)
        elif method == "lexrank":
            idx = baselines.lexrank_k(inst, k)
        else:
            if inst.question_id not in table:
                raise KeyError(f"no external scores for question {inst.question_id!r}")
            idx = baselines.external_ranking_k(inst, table[inst.question_id], k)
        rec = {"question_id": inst.question_id, "predicted": list(inst.ids_of(idx)), "method": method, "k": k}
        if method == "random":
            rec["seed"] = seed
        return rec

    _write_jsonl(out, _map(ctx, one, instances))


@main.command("evaluate")
@click.argument("preds", type=click.Path(exists=True, dir_okay=False))
@click.argument("gold_corpus", type=click.Path(exists=True, dir_okay=False))
@click.argument("out", type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(["macro", "micro"]), default=None)
@click.option("--name", default=None, help="Row label for the text table.")
@click.pass_context
def cmd_evaluate(ctx, preds, gold_corpus, out, mode, name):
    """Accuracy, precision, recall and F1 against gold sets."""
    section = _section(ctx, "evaluate")
    mode = _pick(mode, section, "mode", "macro")
    predicted = {}
    for lineno, obj in _read_jsonl(preds):
        try:
            predicted[str(obj["question_id"])] = [str(a) for a in obj["predicted"]]
        except (KeyError, TypeError):
            raise CorpusError("prediction record needs question_id and predicted", lineno) from None
    golds = {inst.question_id: list(inst.gold) for inst in load_corpus(gold_corpus) if inst.gold is not None}
    report = evaluate(predicted, golds, mode)
    _write_json(out, report.to_dict())
    table = format_table([(name or Path(preds).stem, report)])
    _sibling(out, ".txt").write_text(table + "\n", encoding="utf-8")
    click.echo(table, err=True)


if __name__ == "__main__":
    main()
