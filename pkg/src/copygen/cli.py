"""Command-line entry point tying together preparation, statistics,
synthesis, training, evaluation, ablations, alpha sweeps, and single-query
prediction.

Option precedence is flag > config file > built-in default; the resolved
configuration (with per-key provenance) is echoed into every artifact.
Heavy imports happen inside the handlers so ``--threads`` can cap the BLAS
thread pools before numpy loads.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from . import __version__

_THREAD_ENV = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
               "NUMEXPR_NUM_THREADS")

SPLIT_RATIOS = {"80/10/10": (0.8, 0.1, 0.1), "80/20": (0.8, 0.2)}

# per-dataset mixture weights from the benchmark tuning
DATASET_ALPHA = (("icews", 0.8), ("gdelt", 0.7), ("wiki", 0.5), ("yago", 0.5))


def default_alpha_for(name: str) -> float:
    lowered = name.lower()
    for token, alpha in DATASET_ALPHA:
        if token in lowered:
            return alpha
    return 0.8


def _parse_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


@dataclasses.dataclass
class Opt:
    key: str
    type: object = str
    default: object = None
    help: str = ""
    required: bool = False
    flag: bool = False  # valueless switch; config files set it with key = true
    choices: tuple | None = None

    @property
    def option(self) -> str:
        return "--" + self.key.replace("_", "-")


_COMMON = [Opt("config", str, None, "line-based key = value config file")]

_TRAIN_OPTS = [
    Opt("data", str, help="dataset directory (train/valid/test/stat.txt)", required=True),
    Opt("out", str, "checkpoint.cyg", "checkpoint output path"),
    Opt("alpha", float, None, "copy/generation mixture weight (default: per-dataset)"),
    Opt("dim", int, 200, "embedding dimension"),
    Opt("lr", float, 0.001, "learning rate"),
    Opt("batch_size", int, 1024, "facts per optimizer step"),
    Opt("epochs", int, 30, "training epochs"),
    Opt("seed", int, 0, "random seed"),
    Opt("mask_magnitude", float, 100.0, "copy-mask suppression magnitude"),
    Opt("granularity", int, 1, "raw time units per snapshot"),
    Opt("reciprocal", _parse_bool, True, "add inverse facts for subject prediction"),
    Opt("mean_loss", None, False, "average instead of sum the batch loss", flag=True),
    Opt("patience", int, None, "stop after this many epochs without improvement"),
    Opt("log_csv", str, None, "write the per-epoch training log here"),
    Opt("threads", int, None, "cap BLAS thread pools"),
]

_EVAL_COMMON = [
    Opt("checkpoint", str, required=True, help="trained checkpoint"),
    Opt("data", str, required=True, help="dataset directory"),
    Opt("split", str, "test", "evaluation split", choices=("test", "valid")),
    Opt("filter", str, "static", "ranking regime", choices=("raw", "static", "time-aware")),
    Opt("filter_from", str, "all", "splits feeding the filter", choices=("all", "train")),
    Opt("alpha", float, None, "override the checkpoint's mixture weight"),
    Opt("granularity", int, 1, "raw time units per snapshot"),
    Opt("reciprocal", _parse_bool, True, "must match the training setting"),
    Opt("absorb_valid", None, False, "extend the vocabulary with validation facts",
        flag=True),
    Opt("threads", int, None, "cap BLAS thread pools"),
]

COMMANDS: dict[str, list[Opt]] = {
    "prepare": [
        Opt("data", str, required=True, help="input directory"),
        Opt("out", str, required=True, help="output directory"),
        Opt("granularity", int, 1, "raw time units per snapshot"),
        Opt("reciprocal", _parse_bool, True, "recorded for downstream tools"),
        Opt("split", str, None, "re-split ratios (omit to keep existing files)",
            choices=tuple(SPLIT_RATIOS)),
    ],
    "stats": [
        Opt("data", str, required=True, help="dataset directory"),
        Opt("granularity", int, 1, "raw time units per snapshot"),
        Opt("probe", str, "test", "split whose recurrence is measured",
            choices=("test", "valid")),
        Opt("csv", str, None, "also write metric,value rows here"),
    ],
    "synth": [
        Opt("out", str, required=True, help="output dataset directory"),
        Opt("entities", int, 100, "entity count"),
        Opt("relations", int, 5, "relation count"),
        Opt("snapshots", int, 20, "snapshot count"),
        Opt("facts_per_snapshot", int, 200, "fact draws per snapshot"),
        Opt("recurrence", float, 0.5, "per-fact copy-from-history probability"),
        Opt("seed", int, 0, "random seed"),
        Opt("fixed_objects", None, False, "pin each (s, p) pair to one object",
            flag=True),
        Opt("split", str, "80/10/10", "chronological split ratios",
            choices=tuple(SPLIT_RATIOS)),
    ],
    "train": _TRAIN_OPTS,
    "eval": _EVAL_COMMON + [
        Opt("mode", str, "full", "inference mode",
            choices=("full", "copy-only", "gen-only", "gen-new")),
        Opt("per_snapshot_csv", str, None, "write a per-snapshot breakdown here"),
    ],
    "ablate": _EVAL_COMMON + [
        Opt("out", str, None, "ablation CSV path (stdout when omitted)"),
    ],
    "sweep-alpha": _EVAL_COMMON + [
        Opt("out", str, None, "sweep CSV path (stdout when omitted)"),
        Opt("retrain", None, False, "retrain per alpha instead of re-mixing",
            flag=True),
        Opt("dim", int, 200, "embedding dimension (retrain only)"),
        Opt("lr", float, 0.001, "learning rate (retrain only)"),
        Opt("batch_size", int, 1024, "batch size (retrain only)"),
        Opt("epochs", int, 30, "epochs (retrain only)"),
        Opt("seed", int, 0, "seed (retrain only)"),
        Opt("mask_magnitude", float, 100.0, "mask magnitude (retrain only)"),
    ],
    "predict": [
        Opt("checkpoint", str, required=True, help="trained checkpoint"),
        Opt("data", str, required=True, help="dataset directory (historical vocabulary)"),
        Opt("subject", int, required=True, help="subject entity id"),
        Opt("relation", int, required=True, help="relation id (>= R queries subjects)"),
        Opt("time", int, required=True, help="snapshot index of the query"),
        Opt("topk", int, 5, "entities to print"),
        Opt("mode", str, "full", "inference mode",
            choices=("full", "copy-only", "gen-only", "gen-new")),
        Opt("alpha", float, None, "override the checkpoint's mixture weight"),
        Opt("granularity", int, 1, "raw time units per snapshot"),
        Opt("reciprocal", _parse_bool, True, "must match the training setting"),
        Opt("absorb_valid", None, False, "extend the vocabulary with validation facts",
            flag=True),
        Opt("threads", int, None, "cap BLAS thread pools"),
    ],
}


class RunConfig:
    """Resolved option values with per-key provenance
    (default | config-file | flag)."""

    def __init__(self, command: str):
        self.command = command
        self.values: dict[str, object] = {}
        self.sources: dict[str, str] = {}

    def set(self, key: str, value, source: str) -> None:
        self.values[key] = value
        self.sources[key] = source

    def __getattr__(self, key: str):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    def echo_lines(self) -> list[str]:
        lines = [f"version={__version__}", f"command={self.command}"]
        for key, value in self.values.items():
            if key == "config" or value is None:
                continue
            lines.append(f"{key}={value}  ({self.sources[key]})")
        return lines

    def text(self) -> str:
        out = [f"version = {__version__}", f"command = {self.command}"]
        for key, value in self.values.items():
            if key == "config" or value is None:
                continue
            out.append(f"{key} = {value}")
        return "\n".join(out) + "\n"


def parse_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blanks are skipped."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copygen",
        description="Temporal knowledge-graph completion with a copy-generation mixture.",
    )
    parser.add_argument("--version", action="version", version=f"copygen {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    for name, opts in COMMANDS.items():
        sub = subparsers.add_parser(name, help=_COMMAND_HELP.get(name, ""))
        for opt in _COMMON + opts:
            if opt.flag:
                sub.add_argument(opt.option, dest=opt.key, action="store_const",
                                 const=True, default=None, help=opt.help)
            else:
                kwargs = {"dest": opt.key, "type": opt.type, "default": None,
                          "help": opt.help}
                if opt.choices:
                    kwargs["choices"] = opt.choices
                sub.add_argument(opt.option, **kwargs)
    return parser


_COMMAND_HELP = {
    "prepare": "normalize timestamps and (optionally) re-split a dataset",
    "stats": "recurrence statistics of a probe split against its history",
    "synth": "generate a synthetic dataset with controllable recurrence",
    "train": "train a model and write a checkpoint",
    "eval": "ranking metrics of a checkpoint on one split",
    "ablate": "evaluate all four inference modes (Table-5-shaped CSV)",
    "sweep-alpha": "evaluate mixture weights 0.0..1.0 against one checkpoint",
    "predict": "rank entities for a single query",
}


def resolve(command: str, args: argparse.Namespace,
            parser: argparse.ArgumentParser) -> RunConfig:
    file_values: dict[str, str] = {}
    if args.config:
        file_values = parse_config_file(args.config)
    run = RunConfig(command)
    run.set("config", args.config, "flag" if args.config else "default")
    for opt in COMMANDS[command]:
        flag_value = getattr(args, opt.key, None)
        if flag_value is not None:
            run.set(opt.key, flag_value, "flag")
        elif opt.key in file_values:
            raw = file_values[opt.key]
            caster = _parse_bool if opt.flag else opt.type
            try:
                value = caster(raw)
            except (TypeError, ValueError, argparse.ArgumentTypeError):
                parser.error(f"config file: bad value {raw!r} for {opt.key}")
            if opt.choices and value not in opt.choices:
                parser.error(f"config file: {opt.key} must be one of {opt.choices}")
            run.set(opt.key, value, "config-file")
        else:
            run.set(opt.key, opt.default, "default")
        if opt.required and run.values[opt.key] is None:
            parser.error(f"{command}: missing required option {opt.option}")
    return run


def main(argv=None) -> int:
    try:
        return dispatch(sys.argv[1:] if argv is None else list(argv))
    except SystemExit:
        raise
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # runtime failure contract: one line, exit 1
        if os.environ.get("COPYGEN_DEBUG"):
            raise
        message = str(exc).replace("\n", " ") or exc.__class__.__name__
        print(f"error: {message}", file=sys.stderr)
        return 1


def dispatch(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    run = resolve(args.command, args, parser)
    threads = run.values.get("threads")
    if threads:
        for var in _THREAD_ENV:  # must precede the numpy import
            os.environ[var] = str(threads)
    handler = _HANDLERS[args.command]
    return handler(run)


# ---------------------------------------------------------------------------
# shared helpers (import numpy lazily)


def _load_augmented(run):
    from . import data

    ds = data.load_dataset(run.data, granularity=run.granularity)
    if run.values.get("reciprocal", True):
        train, r_aug = data.augment_reciprocal(ds.train, ds.meta)
        valid, _ = data.augment_reciprocal(ds.valid, ds.meta)
        test, _ = data.augment_reciprocal(ds.test, ds.meta)
    else:
        train, valid, test = ds.train, ds.valid, ds.test
        r_aug = ds.meta.num_relations
    return ds, train, valid, test, r_aug


def _build_vocab(run, train, valid):
    from . import history

    vocab = history.vocab_from_quads(train)
    if run.values.get("absorb_valid") and run.values.get("split", "test") == "test":
        history.absorb_quads(vocab, valid)
    return vocab.freeze()


def _check_params(params, num_entities: int, r_aug: int) -> None:
    if params.num_entities != num_entities or params.num_relations != r_aug:
        raise ValueError(
            f"checkpoint shape ({params.num_entities} entities, "
            f"{params.num_relations} relations) does not match the dataset "
            f"({num_entities}, {r_aug}); check --data and --reciprocal")


def _percent(x: float) -> str:
    return "nan" if x != x else f"{100.0 * x:.2f}"


def _emit_csv(out, header: str, rows: list[str], run: RunConfig) -> None:
    lines = [f"# {line}" for line in run.echo_lines()]
    lines.append(header)
    lines.extend(rows)
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report_lines(prefix: str, report) -> list[str]:
    if not report.defined:
        return [f"{prefix}count=0", f"{prefix}metrics=undefined"]
    return [
        f"{prefix}count={report.count}",
        f"{prefix}mrr={_percent(report.mrr)}",
        f"{prefix}hits1={_percent(report.hits1)}",
        f"{prefix}hits3={_percent(report.hits3)}",
        f"{prefix}hits10={_percent(report.hits10)}",
    ]


# ---------------------------------------------------------------------------
# handlers


def _cmd_prepare(run: RunConfig) -> int:
    import numpy as np

    from . import data

    src = Path(run.data)
    out = Path(run.out)
    out.mkdir(parents=True, exist_ok=True)
    num_entities, num_relations = data.load_stat(src / "stat.txt")
    meta = data.DatasetMeta(num_entities, num_relations, granularity=run.granularity)

    present = {name: src / f"{name}.txt"
               for name in ("all", "facts", "train", "valid", "test")
               if (src / f"{name}.txt").exists()}
    presplit = "train" in present
    if run.split is None and presplit:
        raw = {name: data.read_quadruple_file(present[name], meta)
               for name in ("train", "valid", "test") if name in present}
        origin = min(int(q[:, 3].min()) // run.granularity
                     for q in raw.values() if len(q))
        named = {name: data.dedupe(data.normalize_timestamps(q, run.granularity,
                                                             origin=origin))
                 for name, q in raw.items()}
        boundaries = ()
    else:
        if not present:
            raise FileNotFoundError(f"{src}: no fact files found")
        chunks = [data.read_quadruple_file(path, meta) for path in present.values()]
        merged = data.dedupe(data.normalize_timestamps(np.concatenate(chunks),
                                                       run.granularity))
        ratios = SPLIT_RATIOS[run.split or "80/10/10"]
        split = data.chronological_split(merged, ratios)
        named = {"train": split.train, "test": split.test}
        if len(ratios) == 3:
            named["valid"] = split.valid
        boundaries = split.boundaries

    for name, quads in named.items():
        data.write_quadruple_file(out / f"{name}.txt", quads)
    (out / "stat.txt").write_text(f"{num_entities} {num_relations}\n", encoding="utf-8")
    extra = f"boundaries = {','.join(map(str, boundaries))}\n" if boundaries else ""
    (out / "prepared.cfg").write_text(run.text() + extra, encoding="utf-8")
    for name, quads in sorted(named.items()):
        print(f"{name}_facts={len(quads)}")
    if boundaries:
        print(f"boundaries={','.join(map(str, boundaries))}")
    return 0


def _cmd_stats(run: RunConfig) -> int:
    import numpy as np

    from . import data, history

    ds = data.load_dataset(run.data, granularity=run.granularity)
    probe = ds.split(run.probe)
    if len(probe) == 0:
        raise ValueError(f"probe split {run.probe!r} is empty")
    parts = [ds.train] + ([ds.valid] if run.probe == "test" else [])
    hist = np.concatenate([p for p in parts if len(p)] or [ds.train])

    forward = history.recurrence_stats(hist, probe)
    swapped = history.recurrence_stats(hist[:, [2, 1, 0, 3]], probe[:, [2, 1, 0, 3]])
    metrics = {
        "fact_repeat_rate": forward["fact_repeat_rate"],
        "group_repeat_rate": forward["group_repeat_rate"],
        "subject_group_repeat_rate": swapped["group_repeat_rate"],
    }
    for key, value in metrics.items():
        print(f"{key}={value:.4f}")
    if run.csv:
        _emit_csv(run.csv, "metric,value",
                  [f"{k},{v:.6f}" for k, v in metrics.items()], run)
    return 0


def _cmd_synth(run: RunConfig) -> int:
    from . import data, synth

    config = synth.SynthConfig(
        num_entities=run.entities,
        num_relations=run.relations,
        num_snapshots=run.snapshots,
        facts_per_snapshot=run.facts_per_snapshot,
        recurrence=run.recurrence,
        seed=run.seed,
        fixed_objects=bool(run.fixed_objects),
    )
    sequence, rate = synth.generate(config)
    quads = sequence.to_quadruples()
    split = data.chronological_split(quads, SPLIT_RATIOS[run.split])

    out = Path(run.out)
    out.mkdir(parents=True, exist_ok=True)
    data.write_quadruple_file(out / "train.txt", split.train)
    if len(SPLIT_RATIOS[run.split]) == 3:
        data.write_quadruple_file(out / "valid.txt", split.valid)
    data.write_quadruple_file(out / "test.txt", split.test)
    (out / "stat.txt").write_text(f"{run.entities} {run.relations}\n", encoding="utf-8")
    (out / "synth.cfg").write_text(
        run.text() + f"realized_fact_repeat_rate = {rate:.6f}\n"
        f"boundaries = {','.join(map(str, split.boundaries))}\n",
        encoding="utf-8")
    print(f"facts={len(quads)}")
    print(f"realized_fact_repeat_rate={rate:.4f}")
    print(f"boundaries={','.join(map(str, split.boundaries))}")
    return 0


def _cmd_train(run: RunConfig) -> int:
    from . import model, training

    ds, train, _, _, r_aug = _load_augmented(run)
    alpha = run.alpha if run.alpha is not None else default_alpha_for(Path(run.data).name)
    config = training.TrainConfig(
        alpha=alpha,
        dim=run.dim,
        learning_rate=run.lr,
        batch_size=run.batch_size,
        epochs=run.epochs,
        seed=run.seed,
        mask_magnitude=run.mask_magnitude,
        mean_loss=bool(run.mean_loss),
        patience=run.patience,
    )
    run.set("alpha", alpha, run.sources.get("alpha", "default"))

    def progress(stats):
        print(f"epoch={stats.epoch} loss={stats.loss:.6f} "
              f"seconds={stats.seconds:.2f}", flush=True)

    params, log = training.fit(train, ds.meta.num_entities, r_aug,
                               ds.meta.num_snapshots, config, progress=progress)
    model.save_checkpoint(params, run.out, config_text=run.text())
    if run.log_csv:
        rows = [f"{e.epoch},{e.loss:.6f},{e.seconds:.3f}" for e in log.epochs]
        _emit_csv(run.log_csv, "epoch,loss,seconds", rows, run)
    print(f"checkpoint={run.out}")
    return 0


def _eval_inputs(run):
    from . import evaluation, model

    params = model.load_checkpoint(run.checkpoint)
    ds, train, valid, test, r_aug = _load_augmented(run)
    _check_params(params, ds.meta.num_entities, r_aug)
    vocab = _build_vocab(run, train, valid)
    if run.filter == "raw":
        filter_index = None
    elif run.filter_from == "train":
        filter_index = evaluation.build_filter(train)
    else:
        filter_index = evaluation.build_filter(train, valid, test)
    quads = {"test": test, "valid": valid}[run.split]
    return params, ds, quads, vocab, filter_index


def _cmd_eval(run: RunConfig) -> int:
    from . import evaluation

    params, ds, quads, vocab, filter_index = _eval_inputs(run)
    result = evaluation.evaluate(
        params, quads, vocab,
        num_relations=ds.meta.num_relations,
        alpha=run.alpha, mode=run.mode,
        filter_index=filter_index, regime=run.filter,
        per_snapshot=bool(run.per_snapshot_csv),
    )
    alpha = run.alpha if run.alpha is not None else params.alpha
    print(f"split={run.split}")
    print(f"mode={run.mode}")
    print(f"filter={run.filter}")
    print(f"alpha={alpha:g}")
    for line in _report_lines("", result.overall):
        print(line)
    for prefix, report in (("object_", result.objects), ("subject_", result.subjects)):
        for line in _report_lines(prefix, report):
            print(line)
    if run.per_snapshot_csv:
        rows = [f"{r.snapshot},{r.count},{_percent(r.mrr)},{_percent(r.hits1)},"
                f"{_percent(r.hits3)},{_percent(r.hits10)}"
                for r in result.per_snapshot]
        _emit_csv(run.per_snapshot_csv, "snapshot,count,mrr,hits1,hits3,hits10",
                  rows, run)
    return 0


def _cmd_ablate(run: RunConfig) -> int:
    from . import evaluation

    params, ds, quads, vocab, filter_index = _eval_inputs(run)
    rows = evaluation.ablate(params, quads, vocab,
                             num_relations=ds.meta.num_relations,
                             alpha=run.alpha, filter_index=filter_index,
                             regime=run.filter)
    csv_rows = [f"{mode},{_percent(r.mrr)},{_percent(r.hits1)},"
                f"{_percent(r.hits3)},{_percent(r.hits10)}" for mode, r in rows]
    _emit_csv(run.values.get("out"), "mode,mrr,hits1,hits3,hits10", csv_rows, run)
    return 0


def _cmd_sweep_alpha(run: RunConfig) -> int:
    from . import evaluation, model, training

    params, ds, quads, vocab, filter_index = _eval_inputs(run)
    alphas = [round(0.1 * i, 1) for i in range(11)]
    if run.retrain:
        _, train, _, _, r_aug = _load_augmented(run)
        rows = []
        for alpha in alphas:
            config = training.TrainConfig(
                alpha=alpha, dim=run.dim, learning_rate=run.lr,
                batch_size=run.batch_size, epochs=run.epochs, seed=run.seed,
                mask_magnitude=run.mask_magnitude)
            retrained, _ = training.fit(train, ds.meta.num_entities, r_aug,
                                        ds.meta.num_snapshots, config)
            result = evaluation.evaluate(retrained, quads, vocab,
                                         num_relations=ds.meta.num_relations,
                                         alpha=alpha, mode="full",
                                         filter_index=filter_index,
                                         regime=run.filter)
            rows.append((alpha, result.overall))
    else:
        rows = evaluation.sweep_alpha(params, quads, vocab,
                                      num_relations=ds.meta.num_relations,
                                      filter_index=filter_index,
                                      regime=run.filter, alphas=alphas)
    csv_rows = [f"{alpha:.1f},{_percent(r.mrr)},{_percent(r.hits1)},"
                f"{_percent(r.hits3)},{_percent(r.hits10)}" for alpha, r in rows]
    _emit_csv(run.values.get("out"), "alpha,mrr,hits1,hits3,hits10", csv_rows, run)
    return 0


def _cmd_predict(run: RunConfig) -> int:
    import numpy as np

    from . import model

    params = model.load_checkpoint(run.checkpoint)
    ds, train, valid, _, r_aug = _load_augmented(run)
    _check_params(params, ds.meta.num_entities, r_aug)
    if not 0 <= run.subject < params.num_entities:
        raise ValueError(f"subject id outside [0, {params.num_entities})")
    if not 0 <= run.relation < params.num_relations:
        raise ValueError(f"relation id outside [0, {params.num_relations})")
    if run.time < 0:
        raise ValueError("time must be a non-negative snapshot index")
    vocab = _build_vocab(run, train, valid)

    alpha = run.alpha if run.alpha is not None else params.alpha
    probs, copy_probs = model.score_batch(
        params, [run.subject], [run.relation], [run.time], vocab,
        alpha=alpha, mode=run.mode, return_copy=True)
    probs = probs[0]
    order = np.argsort(-probs, kind="stable")[:max(run.topk, 0)]
    for rank, entity in enumerate(order.tolist(), start=1):
        p = probs[entity]
        if run.mode == "copy-only":
            share = 1.0
        elif run.mode == "gen-only" or copy_probs is None or p <= 0.0:
            share = 0.0
        else:
            share = alpha * copy_probs[0][entity] / p
        print(f"{rank},{entity},{p:.6g},{share:.6g}")
    return 0


_HANDLERS = {
    "prepare": _cmd_prepare,
    "stats": _cmd_stats,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
    "sweep-alpha": _cmd_sweep_alpha,
    "predict": _cmd_predict,
}


if __name__ == "__main__":
    sys.exit(main())
