"""Command-line front end for the span-detection + span-correction pipeline.

Subcommands: extract, make-data, corrupt, train-esd, train-esc, run, eval,
sweep. Everything streams line by line; exit codes are 0 (success),
1 (usage), 2 (data error), 3 (model error). Set SPANGEC_LOG to control log
verbosity.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import random
import sys
from typing import Iterable, Iterator, Optional, Sequence, TextIO

from . import alignment, annotation, datagen, esc, esd, metrics
from .errors import DataError, ModelError, SpangecError

log = logging.getLogger("spangec")

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MODEL = 3

SWEEP_THRESHOLDS = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _open_in(path: str):
    if path == "-":
        return contextlib.nullcontext(sys.stdin)
    return open(path, "r", encoding="utf-8")


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8")


def read_parallel_tsv(fh: TextIO) -> Iterator[tuple[int, alignment.TokenSeq, alignment.TokenSeq]]:
    """Yield (line number, source tokens, target tokens) from source<TAB>target lines."""
    for lineno, line in enumerate(fh, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"line {lineno}: expected source<TAB>target, got {len(parts)} fields")
        source = alignment.tokenize(parts[0])
        target = alignment.tokenize(parts[1])
        try:
            annotation.check_no_reserved(source)
            annotation.check_no_reserved(target)
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from exc
        yield lineno, source, target


def _load_tagger(path: str) -> esd.EsdTagger:
    try:
        return esd.EsdTagger.load(path)
    except FileNotFoundError as exc:
        raise ModelError(f"detector model not found: {path}") from exc


def _load_corrector(path: str) -> esc.PhraseTableCorrector:
    try:
        return esc.PhraseTableCorrector.load(path)
    except FileNotFoundError as exc:
        raise ModelError(f"corrector model not found: {path}") from exc
    except (json.JSONDecodeError, KeyError) as exc:
        raise ModelError(f"corrupt corrector model: {path}: {exc}") from exc


# ---------------------------------------------------------------- commands


def cmd_extract(args) -> int:
    with _open_in(args.input) as fin, _open_out(args.output) as fout:
        for lineno, source, target in read_parallel_tsv(fin):
            try:
                instance = datagen.make_esc_gold(source, target)
                if args.merge_gap > 0:
                    spans = alignment.merge_edits(
                        [
                            alignment.EditSpan(s.src_start, s.src_end, r)
                            for (_, r), s in zip(
                                instance.correction.segments, instance.annotated.spans
                            )
                        ],
                        args.merge_gap,
                        source=source,
                    )
                    instance = datagen.make_esc_from_spans(source, target, spans)
            except (ValueError, SpangecError) as exc:
                raise DataError(f"line {lineno}: {exc}") from exc
            fout.write(
                annotation.to_json_record(instance.annotated, instance.correction) + "\n"
            )
    return 0


def cmd_make_data(args) -> int:
    cfg = datagen.SpanSampleConfig(
        geometric_p=args.geometric_p,
        max_span_len=args.max_span_len,
        coverage_budget=args.coverage_budget,
    )
    with contextlib.ExitStack() as stack:
        fin = stack.enter_context(_open_in(args.input))
        esd_out = stack.enter_context(_open_out(args.esd_out))
        esc_out = stack.enter_context(_open_out(args.esc_out))
        for lineno, source, target in read_parallel_tsv(fin):
            try:
                inst = datagen.make_esd_instance(source, target)
                esd_out.write(
                    json.dumps(
                        {"tokens": list(inst.tokens), "tags": list(inst.tags)},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
                rng = datagen.sentence_rng(args.seed, lineno)
                if source and rng.random() < args.sampled_ratio:
                    esc_inst = datagen.make_esc_sampled(source, target, cfg, rng)
                else:
                    esc_inst = datagen.make_esc_gold(source, target)
                esc_out.write(
                    annotation.to_json_record(esc_inst.annotated, esc_inst.correction)
                    + "\n"
                )
            except (ValueError, SpangecError) as exc:
                raise DataError(f"line {lineno}: {exc}") from exc
    return 0


def cmd_corrupt(args) -> int:
    with _open_in(args.input) as fin:
        lines = [line.rstrip("\n") for line in fin]
    sentences = [alignment.tokenize(line) for line in lines if line.strip()]
    if args.vocab_file:
        with _open_in(args.vocab_file) as fh:
            vocab = tuple(tok for line in fh for tok in alignment.tokenize(line))
    else:
        vocab = tuple(sorted({tok for sent in sentences for tok in sent}))
    cfg = datagen.CorruptConfig(
        p_insert=args.p_insert,
        p_delete=args.p_delete,
        p_replace=args.p_replace,
        p_swap=args.p_swap,
        vocab=vocab,
        seed=args.seed,
    )
    with _open_out(args.output) as fout:
        for index, sent in enumerate(sentences):
            rng = datagen.sentence_rng(cfg.seed, index)
            noisy = datagen.corrupt(sent, cfg, rng)
            fout.write(
                alignment.detokenize(noisy) + "\t" + alignment.detokenize(sent) + "\n"
            )
    return 0


def _read_esd_jsonl(path: str) -> list[datagen.EsdInstance]:
    instances = []
    with _open_in(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                instances.append(
                    datagen.EsdInstance(
                        tokens=tuple(record["tokens"]),
                        tags=tuple(int(t) for t in record["tags"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return instances


def _read_esc_jsonl(path: str) -> list[datagen.EscInstance]:
    instances = []
    with _open_in(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                annotated, correction = annotation.from_json_record(line)
            except (json.JSONDecodeError, KeyError, SpangecError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if correction is None:
                raise DataError(f"{path}:{lineno}: training record lacks a correction")
            instances.append(datagen.EscInstance(annotated=annotated, correction=correction))
    return instances


def cmd_train_esd(args) -> int:
    instances = _read_esd_jsonl(args.input)
    model = esd.train_tagger(instances, epochs=args.epochs, seed=args.seed)
    model.save(args.model_out)
    log.info("trained detector on %d instances -> %s", len(instances), args.model_out)
    return 0


def cmd_train_esc(args) -> int:
    instances = _read_esc_jsonl(args.input)
    model = esc.train_corrector(instances)
    model.save(args.model_out)
    log.info("trained corrector on %d instances -> %s", len(instances), args.model_out)
    return 0


def run_pipeline(
    sentences: Iterable[alignment.TokenSeq],
    tagger: esd.EsdTagger,
    corrector: esc.PhraseTableCorrector,
    decode_cfg: esd.DecodeConfig,
) -> tuple[list[alignment.TokenSeq], metrics.EfficiencyReport]:
    """Detect, correct and merge for each sentence; error-free sentences pass
    through untouched and contribute zero span decoding steps."""
    outputs: list[alignment.TokenSeq] = []
    records: list[tuple[int, int]] = []
    for tokens in sentences:
        probs = tagger.predict_probs(tokens)
        spans = esd.decode_spans(probs, decode_cfg)
        if not spans:
            corrected = tokens
            span_steps = 0
        else:
            annotated = annotation.annotate(tokens, spans)
            result = corrector.correct(annotated)
            corrected = annotation.merge_corrections(annotated, result.output)
            span_steps = result.decode_steps
        outputs.append(corrected)
        records.append((span_steps, esc.count_full_decode_steps(corrected)))
    return outputs, metrics.efficiency_report(records)


def cmd_run(args) -> int:
    tagger = _load_tagger(args.esd_model)
    corrector = _load_corrector(args.esc_model)
    decode_cfg = esd.DecodeConfig(threshold=args.threshold, merge_gap=args.merge_gap)
    with _open_in(args.input) as fin:
        sentences = []
        for lineno, line in enumerate(fin, start=1):
            tokens = alignment.tokenize(line.rstrip("\n"))
            try:
                annotation.check_no_reserved(tokens)
            except DataError as exc:
                raise DataError(f"line {lineno}: {exc}") from exc
            sentences.append(tokens)
    outputs, report = run_pipeline(sentences, tagger, corrector, decode_cfg)
    with _open_out(args.output) as fout:
        for tokens in outputs:
            fout.write(alignment.detokenize(tokens) + "\n")
    report_json = report.to_json()
    if args.report:
        with _open_out(args.report) as fh:
            fh.write(report_json + "\n")
    else:
        print(report_json, file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    def read_tokens(path: str) -> list[alignment.TokenSeq]:
        with _open_in(path) as fh:
            return [alignment.tokenize(line.rstrip("\n")) for line in fh]

    sources = read_tokens(args.source)
    hypotheses = read_tokens(args.hypothesis)
    golds = read_tokens(args.gold)
    if not (len(sources) == len(hypotheses) == len(golds)):
        raise DataError("source, hypothesis and gold must have the same line count")
    prf = metrics.correction_metrics(sources, hypotheses, golds)
    with _open_out(args.output) as fout:
        if args.format == "json":
            fout.write(prf.to_json() + "\n")
        elif args.format == "tsv":
            fout.write("P\tR\tF0.5\n" + prf.as_percent_row() + "\n")
        else:
            fout.write(
                f"P      {100 * prf.precision:5.1f}\n"
                f"R      {100 * prf.recall:5.1f}\n"
                f"F0.5   {100 * prf.f_half:5.1f}\n"
            )
    return 0


def threshold_sweep(
    tagger: esd.EsdTagger,
    pairs: Sequence[tuple[alignment.TokenSeq, alignment.TokenSeq]],
    thresholds: Sequence[float] = SWEEP_THRESHOLDS,
) -> list[tuple[float, metrics.PRF]]:
    """Token-level detection P/R/F0.5 at each probability threshold."""
    gold_tags = [datagen.make_esd_instance(src, tgt).tags for src, tgt in pairs]
    all_probs = [tagger.predict_probs(src) for src, _ in pairs]
    rows = []
    for threshold in thresholds:
        pred_tags = [
            [1 if p >= threshold else 0 for p in probs] for probs in all_probs
        ]
        rows.append((threshold, metrics.detection_metrics(pred_tags, gold_tags)))
    return rows


def cmd_sweep(args) -> int:
    tagger = _load_tagger(args.esd_model)
    thresholds = tuple(float(t) for t in args.thresholds.split(","))
    with _open_in(args.input) as fin:
        pairs = [(src, tgt) for _, src, tgt in read_parallel_tsv(fin)]
    rows = threshold_sweep(tagger, pairs, thresholds)
    with _open_out(args.output) as fout:
        if args.format == "json":
            fout.write(
                json.dumps(
                    [
                        {
                            "threshold": t,
                            "precision": prf.precision,
                            "recall": prf.recall,
                            "f0_5": prf.f_half,
                        }
                        for t, prf in rows
                    ]
                )
                + "\n"
            )
        else:
            fout.write("threshold\tP\tR\tF0.5\n")
            for t, prf in rows:
                fout.write(f"{t:g}\t" + prf.as_percent_row() + "\n")
    return 0


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spangec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[], help="gold spans from a parallel TSV")
    p.add_argument("input", help="parallel TSV (source<TAB>target), or - for stdin")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--merge-gap", type=int, default=0)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("make-data", help="detector + corrector training data")
    p.add_argument("input")
    p.add_argument("--esd-out", required=True)
    p.add_argument("--esc-out", required=True)
    p.add_argument("--sampled-ratio", type=float, default=0.5,
                   help="fraction of corrector instances using sampled spans")
    p.add_argument("--geometric-p", type=float, default=0.2)
    p.add_argument("--max-span-len", type=int, default=10)
    p.add_argument("--coverage-budget", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_data)

    p = sub.add_parser("corrupt", help="synthesize a noisy parallel corpus")
    p.add_argument("input", help="clean text, one sentence per line")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--p-insert", type=float, default=0.0)
    p.add_argument("--p-delete", type=float, default=0.0)
    p.add_argument("--p-replace", type=float, default=0.0)
    p.add_argument("--p-swap", type=float, default=0.0)
    p.add_argument("--vocab-file", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("train-esd", help="train the span detector")
    p.add_argument("input", help="detector JSONL ({tokens, tags})")
    p.add_argument("--model-out", required=True)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_esd)

    p = sub.add_parser("train-esc", help="train the span corrector")
    p.add_argument("input", help="corrector JSONL (annotated records)")
    p.add_argument("--model-out", required=True)
    p.set_defaults(func=cmd_train_esc)

    p = sub.add_parser("run", help="detect, correct and merge, end to end")
    p.add_argument("input", help="text, one sentence per line")
    p.add_argument("--esd-model", required=True)
    p.add_argument("--esc-model", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--merge-gap", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--report", default=None, help="efficiency JSON path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="edit-level correction metrics")
    p.add_argument("--source", required=True)
    p.add_argument("--hypothesis", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--format", choices=("json", "tsv", "text"), default="json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="detection metrics across thresholds")
    p.add_argument("input", help="parallel TSV with gold targets")
    p.add_argument("--esd-model", required=True)
    p.add_argument("--thresholds", default="0.2,0.3,0.4,0.5,0.6,0.7")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--format", choices=("json", "tsv", "text"), default="text")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=os.environ.get("SPANGEC_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        log.error("%s", exc)
        print(f"spangec: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (DataError, OSError) as exc:
        log.error("%s", exc)
        print(f"spangec: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SpangecError as exc:
        log.error("%s", exc)
        print(f"spangec: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
