"""Command-line entry points.

Exit codes: 0 success, 1 usage/config error, 2 data validation error,
3 backend exhaustion. Every command supports --dry-run (validate inputs
and print the work plan without touching any backend) and writes
markdown + CSV reports with an embedded effective-config header.
Verbosity comes from the EDITJUDGE_LOG environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import statistics
import sys
from pathlib import Path

from . import __version__
from .adaptation import (
    PAIR_STRATEGIES,
    RetrievalIndex,
    TadpoleTemplates,
    assign_themes,
    build_index,
    build_rag_prompt,
    generate_tadpole_tuples,
    load_tuples,
    make_preference_pairs,
    render_prompt,
    retrieve_topk,
    save_preference_pairs,
    save_tuples,
)
from .analysis import iap, pairwise_cosine, strict_agreement, theme_frequency
from .backends.base import SpanPolicy
from .backends.baseline import DEFAULT_TAU, HashedEmbedder, KeywordClassifier, OverlapMatcher
from .backends.judge_eval import evaluate_matcher
from .backends.remote import (
    RemoteBackendConfig,
    RemoteClient,
    RemoteEmbedder,
    RemoteMatcher,
    RemoteThemeClassifier,
)
from .backends.templates import load_template
from .errors import BackendError, ConfigError, DatasetError, EditJudgeError
from .metrics import evaluate_dataset, join_drafts
from .records import (
    load_drafts,
    load_judge_annotations,
    load_multi_response,
    load_samples,
)
from .reporting import Table, write_atomic, write_report
from .segmenter import SentenceSegmenter, load_abbreviations
from .taxonomy import load_taxonomy

log = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _prf_cells(prf) -> list[float]:
    return [prf.precision, prf.recall, prf.f1]


# ---------------------------------------------------------------------------
# shared option groups


def _add_segmenter_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--abbreviations", help="abbreviation list file (one per line)")
    parser.add_argument(
        "--split-semicolons", action="store_true", help="treat ';' as a sentence boundary"
    )


def _add_backend_options(parser: argparse.ArgumentParser, *, embedder: bool = False) -> None:
    parser.add_argument("--matcher", choices=["baseline", "remote"], default="baseline")
    parser.add_argument("--classifier", choices=["baseline", "remote"], default="baseline")
    if embedder:
        parser.add_argument("--embedder", choices=["baseline", "remote"], default="baseline")
    parser.add_argument("--backend-config", help="JSON config for remote backends")
    parser.add_argument(
        "--span-policy", choices=[p.value for p in SpanPolicy], default="strict"
    )
    parser.add_argument("--tau", type=float, default=DEFAULT_TAU,
                        help="baseline matcher token-overlap threshold")
    parser.add_argument("--match-template", help="override the judge prompt template file")
    parser.add_argument("--classify-template", help="override the classifier prompt template file")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--taxonomy", default="default", help="taxonomy config path or 'default'")
    parser.add_argument("--out", default="editjudge-out", help="output directory")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate inputs and print the plan; no backend calls")


class _Backends:
    """Lazily constructs backends so dry runs never open a client."""

    def __init__(self, args: argparse.Namespace, segmenter: SentenceSegmenter):
        self.args = args
        self.segmenter = segmenter
        self._client: RemoteClient | None = None

    def client(self) -> RemoteClient:
        if self._client is None:
            if not getattr(self.args, "backend_config", None):
                raise ConfigError("remote backends need --backend-config")
            config = RemoteBackendConfig.from_file(self.args.backend_config)
            self._client = RemoteClient(config)
        return self._client

    def matcher(self):
        if self.args.matcher == "remote":
            template = None
            if getattr(self.args, "match_template", None):
                template = load_template(self.args.match_template)
            return RemoteMatcher(
                self.client(), template=template, span_policy=SpanPolicy(self.args.span_policy)
            )
        return OverlapMatcher(tau=self.args.tau, segmenter=self.segmenter)

    def classifier(self):
        if self.args.classifier == "remote":
            template = None
            if getattr(self.args, "classify_template", None):
                template = load_template(self.args.classify_template)
            return RemoteThemeClassifier(self.client(), template=template)
        return KeywordClassifier()

    def embedder(self):
        if getattr(self.args, "embedder", "baseline") == "remote":
            return RemoteEmbedder(self.client())
        return HashedEmbedder()


def _segmenter_from(args: argparse.Namespace) -> SentenceSegmenter:
    abbreviations = None
    if getattr(args, "abbreviations", None):
        path = Path(args.abbreviations)
        if not path.exists():
            raise ConfigError(f"{path}: abbreviation file not found")
        abbreviations = load_abbreviations(path)
    return SentenceSegmenter(
        abbreviations=abbreviations,
        split_semicolons=getattr(args, "split_semicolons", False),
    )


def _effective_config(args: argparse.Namespace, command: str) -> dict:
    skip = {"handler", "dry_run"}
    config = {"command": command, "version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in skip or callable(value):
            continue
        config[key] = value
    return config


# ---------------------------------------------------------------------------
# commands


def cmd_evaluate(args: argparse.Namespace) -> int:
    segmenter = _segmenter_from(args)
    taxonomy = load_taxonomy(args.taxonomy)
    samples = load_samples(args.samples)
    drafts = load_drafts(args.drafts)
    pairs = join_drafts(samples, drafts)

    if args.dry_run:
        matcher_calls = sum(len(segmenter.segment(s.response)) for s, _ in pairs)
        classifier_calls = matcher_calls + sum(
            len(segmenter.segment(d.draft)) for _, d in pairs
        )
        print("dry-run: evaluate")
        print(f"samples: {len(samples)}")
        print(f"drafts: {len(drafts)}")
        print(f"pairs: {len(pairs)}")
        print(f"matcher calls: {matcher_calls}")
        print(f"classifier calls: {classifier_calls}")
        return 0

    backends = _Backends(args, segmenter)
    report = evaluate_dataset(
        samples,
        drafts,
        backends.matcher(),
        backends.classifier(),
        segmenter,
        taxonomy,
        include_other=not args.exclude_other,
        theme_presence=args.theme_presence,
        max_workers=args.workers,
    )

    tables = [
        Table(
            "summary",
            "Micro-average scores",
            ["level", "precision", "recall", "f1", "em", "ea", "ed", "samples"],
            [
                ["content", *_prf_cells(report.content_micro), report.total_counts.em,
                 report.total_counts.ea, report.total_counts.ed, report.sample_count],
                ["theme", *_prf_cells(report.theme_micro), None, None, None, report.sample_count],
            ],
        ),
        Table(
            "per_sample",
            "Per-sample scores",
            ["sample_id", "model", "adaptation", "em", "ea", "ed",
             "content_precision", "content_recall", "content_f1",
             "theme_precision", "theme_recall", "theme_f1",
             "expert_sentences", "draft_sentences", "error"],
            [
                [
                    row.sample_id, row.model, row.adaptation,
                    row.counts.em if row.counts else None,
                    row.counts.ea if row.counts else None,
                    row.counts.ed if row.counts else None,
                    *(_prf_cells(row.content) if row.content else [None, None, None]),
                    *(_prf_cells(row.theme) if row.theme else [None, None, None]),
                    row.expert_sentence_count, row.draft_sentence_count, row.error,
                ]
                for row in report.rows
            ],
        ),
        Table(
            "theme_per_class",
            "Theme-level scores by class",
            ["theme", "precision", "recall", "f1"],
            [[label, *_prf_cells(report.theme_per_class[label])] for label in report.labels],
        ),
        Table(
            "content_recall_by_theme",
            "Content-level recall of theme-labeled expert sentences",
            ["theme", "recall"],
            [[label, value] for label, value in report.content_recall_per_theme.items()],
        ),
        Table(
            "errored",
            "Errored samples",
            ["sample_id", "model", "reason"],
            [[row.sample_id, row.model, row.error] for row in report.errored],
        ),
    ]

    if len(report.per_model) > 1:
        rows = [
            [m.model, m.sample_count, *_prf_cells(m.content), *_prf_cells(m.theme)]
            for m in report.per_model
        ]
        content_f1s = [m.content.f1 for m in report.per_model]
        theme_f1s = [m.theme.f1 for m in report.per_model]
        rows.append(["mean", None, None, None, statistics.mean(content_f1s),
                     None, None, statistics.mean(theme_f1s)])
        rows.append(["stdev", None, None, None, statistics.stdev(content_f1s),
                     None, None, statistics.stdev(theme_f1s)])
        tables.append(
            Table(
                "models",
                "Per-model micro scores",
                ["model", "samples", "content_precision", "content_recall", "content_f1",
                 "theme_precision", "theme_recall", "theme_f1"],
                rows,
            )
        )

    written = write_report(args.out, tables, _effective_config(args, "evaluate"))
    print(f"content edit-F1: {report.content_micro.f1:.4f}")
    print(f"theme edit-F1:   {report.theme_micro.f1:.4f}")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_judge_eval(args: argparse.Namespace) -> int:
    segmenter = _segmenter_from(args)
    annotations = load_judge_annotations(args.annotations)
    if args.dry_run:
        print("dry-run: judge-eval")
        print(f"annotations: {len(annotations)}")
        print(f"matcher calls: {len(annotations)}")
        return 0
    backends = _Backends(args, segmenter)
    report = evaluate_matcher(annotations, backends.matcher())
    table = Table(
        "judge_eval",
        "Judge matching agreement",
        ["matcher", "agreement", "non_match_agreement", "match_agreement", "match_overlap", "n"],
        [[args.matcher, report.agreement, report.non_match_agreement,
          report.match_agreement, report.match_overlap, report.n]],
    )
    written = write_report(args.out, [table], _effective_config(args, "judge-eval"))
    print(f"agreement: {report.agreement:.4f} over {report.n} annotations")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_iap(args: argparse.Namespace) -> int:
    segmenter = _segmenter_from(args)
    taxonomy = load_taxonomy(args.taxonomy)
    multi = load_multi_response(args.multi)
    if args.dry_run:
        annotators = sorted({a for record in multi for a, _ in record.responses})
        ordered = len(annotators) * (len(annotators) - 1)
        comparisons = 0
        for record in multi:
            present = len(record.responses)
            comparisons += present * (present - 1)
        print("dry-run: iap")
        print(f"samples: {len(multi)}")
        print(f"annotators: {len(annotators)}")
        print(f"ordered pairs: {ordered}")
        print(f"comparisons: {comparisons}")
        return 0
    backends = _Backends(args, segmenter)
    report = iap(
        multi, backends.matcher(), backends.classifier(), segmenter, taxonomy,
        include_other=not args.exclude_other,
    )
    tables = [
        Table(
            "iap_summary",
            "Inter-annotator predictability (micro)",
            ["level", "precision", "recall", "f1", "comparisons", "ordered_pairs"],
            [
                ["content", *_prf_cells(report.content), report.pair_count,
                 report.ordered_pair_count],
                ["theme", *_prf_cells(report.theme), report.pair_count,
                 report.ordered_pair_count],
            ],
        ),
        Table(
            "iap_pairs",
            "Per ordered annotator pair",
            ["expert", "draft", "comparisons", "em", "ea", "ed",
             "content_precision", "content_recall", "content_f1",
             "theme_precision", "theme_recall", "theme_f1"],
            [
                [p.expert_annotator, p.draft_annotator, p.comparisons,
                 p.counts.em, p.counts.ea, p.counts.ed,
                 *_prf_cells(p.content), *_prf_cells(p.theme)]
                for p in report.per_pair
            ],
        ),
    ]
    written = write_report(args.out, tables, _effective_config(args, "iap"))
    print(f"comparisons: {report.pair_count}")
    print(f"content IAP edit-F1: {report.content.f1:.4f}")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_iaa(args: argparse.Namespace) -> int:
    segmenter = _segmenter_from(args)
    taxonomy = load_taxonomy(args.taxonomy)
    multi = load_multi_response(args.multi)
    if args.dry_run:
        annotators = sorted({a for record in multi for a, _ in record.responses})
        print("dry-run: iaa")
        print(f"samples: {len(multi)}")
        print(f"annotators: {len(annotators)}")
        print("classifier calls: one per sentence per response")
        print(f"embedder calls: {sum(len(r.responses) for r in multi)}")
        return 0
    backends = _Backends(args, segmenter)
    strict = strict_agreement(multi, backends.classifier(), segmenter, taxonomy)
    cosine_matrix = pairwise_cosine(multi, backends.embedder())
    tables = [
        Table(
            "iaa_strict",
            "Strict theme agreement across annotators",
            ["theme", "strict_inclusion", "strict_exclusion", "strict_agreement"],
            [
                [label, agreement.strict_inclusion, agreement.strict_exclusion,
                 agreement.strict_agreement]
                for label, agreement in strict.per_theme.items()
            ],
        ),
        Table(
            "iaa_cosine",
            "Mean pairwise cosine similarity",
            ["annotator", *cosine_matrix.annotators],
            [
                [a, *[cosine_matrix.value(a, b) for b in cosine_matrix.annotators]]
                for a in cosine_matrix.annotators
            ],
        ),
    ]
    written = write_report(args.out, tables, _effective_config(args, "iaa"))
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_theme_freq(args: argparse.Namespace) -> int:
    segmenter = _segmenter_from(args)
    taxonomy = load_taxonomy(args.taxonomy)
    if args.kind == "samples":
        texts = [s.response for s in load_samples(args.responses)]
    else:
        texts = [d.draft for d in load_drafts(args.responses)]
    if args.dry_run:
        sentences = sum(len(segmenter.segment(t)) for t in texts)
        print("dry-run: theme-freq")
        print(f"responses: {len(texts)}")
        print(f"classifier calls: {sentences}")
        return 0
    backends = _Backends(args, segmenter)
    report = theme_frequency(texts, backends.classifier(), segmenter, taxonomy)
    table = Table(
        "theme_freq",
        "Estimated theme frequency",
        ["theme", "sentence_count", "sentence_fraction", "response_fraction"],
        [
            [label, report.sentence_counts[label], report.sentence_fractions[label],
             report.response_fractions[label]]
            for label in taxonomy.labels
        ],
    )
    written = write_report(args.out, [table], _effective_config(args, "theme-freq"))
    print(f"responses: {report.total_responses}, sentences: {report.total_sentences}")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_rag_index(args: argparse.Namespace) -> int:
    segmenter = _segmenter_from(args)
    samples = load_samples(args.samples)
    if args.dry_run:
        print("dry-run: rag index")
        print(f"entries: {len(samples)}")
        print(f"embed calls: {len(samples)}")
        return 0
    backends = _Backends(args, segmenter)
    index = build_index(samples, backends.embedder())
    idx_path, meta_path = index.save(args.index)
    print(f"indexed {len(index)} entries (dimension {index.dimension})")
    print(f"wrote {idx_path}")
    print(f"wrote {meta_path}")
    return 0


def cmd_rag_prompt(args: argparse.Namespace) -> int:
    segmenter = _segmenter_from(args)
    queries = load_samples(args.queries)
    index = RetrievalIndex.load(args.index)
    if args.dry_run:
        print("dry-run: rag prompt")
        print(f"queries: {len(queries)}")
        print(f"k: {args.k}")
        print(f"embed calls: {len(queries)}")
        return 0
    backends = _Backends(args, segmenter)
    embedder = backends.embedder()
    rag_template = load_template(args.rag_template) if args.rag_template else None
    zero_shot_template = (
        load_template(args.zero_shot_template) if args.zero_shot_template else None
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for query in queries:
        retrieved = retrieve_topk(index, query, args.k, embedder)
        prompt = build_rag_prompt(query, retrieved, rag_template, zero_shot_template)
        lines.append(
            {
                "id": query.id,
                "prompt": prompt,
                "retrieved_ids": [r.entry.sample_id for r in retrieved],
            }
        )
    path = out_dir / "rag_prompts.jsonl"
    content = "\n".join(json.dumps(obj, ensure_ascii=False) for obj in lines)
    write_atomic(path, content + ("\n" if content else ""))
    print(f"wrote {path}")
    return 0


def cmd_tadpole_tuples(args: argparse.Namespace) -> int:
    taxonomy = load_taxonomy(args.taxonomy)
    drafts = load_drafts(args.bases)
    bases = [(d.sample_id, d.draft) for d in drafts]
    templates = (
        TadpoleTemplates.from_dir(args.templates) if args.templates else TadpoleTemplates()
    )
    if args.dry_run:
        assignments = assign_themes(len(bases), taxonomy)
        per_theme: dict[str, int] = {}
        for theme in assignments:
            per_theme[theme.name] = per_theme.get(theme.name, 0) + 1
        print("dry-run: tadpole tuples")
        print(f"bases: {len(bases)}")
        print(f"themes: {len(taxonomy.themes)}")
        print(f"enhancement calls: {len(bases)}")
        print(f"corruption calls: {len(bases)}")
        for name in [t.name for t in taxonomy.themes]:
            print(f"  {name}: {per_theme.get(name, 0)}")
        return 0
    segmenter = _segmenter_from(args)
    backends = _Backends(args, segmenter)
    tuples = generate_tadpole_tuples(bases, taxonomy, backends.client(), templates)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "tadpole_tuples.jsonl"
    save_tuples(path, tuples)
    print(f"generated {len(tuples)} tuples from {len(bases)} bases")
    print(f"wrote {path}")
    return 0


def cmd_tadpole_pairs(args: argparse.Namespace) -> int:
    tuples = load_tuples(args.tuples)
    samples = {s.id: s for s in load_samples(args.samples)}
    zero_shot_template = (
        load_template(args.zero_shot_template) if args.zero_shot_template else None
    )

    def renderer(sample_id: str) -> str:
        if sample_id not in samples:
            raise DatasetError(f"tuple references unknown sample id '{sample_id}'")
        return render_prompt("zero_shot", samples[sample_id], template=zero_shot_template)

    if args.dry_run:
        print("dry-run: tadpole pairs")
        print(f"tuples: {len(tuples)}")
        print(f"strategy: {args.strategy}")
        return 0
    pairs = make_preference_pairs(tuples, args.strategy, renderer, dedup=args.dedup)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "preference_pairs.jsonl"
    save_preference_pairs(path, pairs)
    print(f"emitted {len(pairs)} pairs from {len(tuples)} tuples")
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> _Parser:
    parser = _Parser(prog="editjudge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"editjudge {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("evaluate", help="score drafts against expert responses")
    p.add_argument("--samples", required=True)
    p.add_argument("--drafts", required=True)
    p.add_argument("--theme-presence", action="store_true",
                   help="use per-response theme presence instead of sentence counts")
    p.add_argument("--exclude-other", action="store_true",
                   help="drop the Other label from theme-level scoring")
    p.add_argument("--workers", type=int, default=1,
                   help="threads for per-sample evaluation (results stay input-ordered)")
    _add_backend_options(p)
    _add_segmenter_options(p)
    _add_common(p)
    p.set_defaults(handler=cmd_evaluate)

    p = subparsers.add_parser("judge-eval", help="score a matcher against gold annotations")
    p.add_argument("--annotations", required=True)
    _add_backend_options(p)
    _add_segmenter_options(p)
    _add_common(p)
    p.set_defaults(handler=cmd_judge_eval)

    p = subparsers.add_parser("iap", help="inter-annotator predictability")
    p.add_argument("--multi", required=True)
    p.add_argument("--exclude-other", action="store_true")
    _add_backend_options(p)
    _add_segmenter_options(p)
    _add_common(p)
    p.set_defaults(handler=cmd_iap)

    p = subparsers.add_parser("iaa", help="inter-annotator agreement (strict + cosine)")
    p.add_argument("--multi", required=True)
    _add_backend_options(p, embedder=True)
    _add_segmenter_options(p)
    _add_common(p)
    p.set_defaults(handler=cmd_iaa)

    p = subparsers.add_parser("theme-freq", help="estimated theme frequencies")
    p.add_argument("--responses", required=True)
    p.add_argument("--kind", choices=["samples", "drafts"], default="samples")
    _add_backend_options(p)
    _add_segmenter_options(p)
    _add_common(p)
    p.set_defaults(handler=cmd_theme_freq)

    rag = subparsers.add_parser("rag", help="retrieval-augmented prompting")
    rag_sub = rag.add_subparsers(dest="rag_command", required=True)

    p = rag_sub.add_parser("index", help="build and persist a retrieval index")
    p.add_argument("--samples", required=True)
    p.add_argument("--index", required=True, help="output index stem (<stem>.idx/.meta)")
    _add_backend_options(p, embedder=True)
    _add_segmenter_options(p)
    _add_common(p)
    p.set_defaults(handler=cmd_rag_index)

    p = rag_sub.add_parser("prompt", help="render top-k retrieval prompts")
    p.add_argument("--index", required=True, help="index stem to load")
    p.add_argument("--queries", required=True, help="samples file of query messages")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--rag-template")
    p.add_argument("--zero-shot-template")
    _add_backend_options(p, embedder=True)
    _add_segmenter_options(p)
    _add_common(p)
    p.set_defaults(handler=cmd_rag_prompt)

    tadpole = subparsers.add_parser("tadpole", help="preference-pair data construction")
    tadpole_sub = tadpole.add_subparsers(dest="tadpole_command", required=True)

    p = tadpole_sub.add_parser("tuples", help="generate enhanced/base/corrupted tuples")
    p.add_argument("--bases", required=True, help="drafts file of base responses")
    p.add_argument("--templates", help="directory of tadpole templates")
    _add_backend_options(p)
    _add_segmenter_options(p)
    _add_common(p)
    p.set_defaults(handler=cmd_tadpole_tuples)

    p = tadpole_sub.add_parser("pairs", help="pair tuples into a preference dataset")
    p.add_argument("--tuples", required=True)
    p.add_argument("--samples", required=True, help="samples file for prompt rendering")
    p.add_argument("--strategy", choices=[*PAIR_STRATEGIES, "blend"], required=True)
    p.add_argument("--dedup", action="store_true",
                   help="drop exact duplicate (prompt, chosen, rejected) pairs")
    p.add_argument("--zero-shot-template")
    _add_segmenter_options(p)
    _add_common(p)
    p.set_defaults(handler=cmd_tadpole_pairs)

    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("EDITJUDGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"editjudge: {exc}", file=sys.stderr)
        return 1
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"editjudge: config error: {exc}", file=sys.stderr)
        return 1
    except DatasetError as exc:
        print(f"editjudge: data error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(f"editjudge: backend error: {exc}", file=sys.stderr)
        return 3
    except EditJudgeError as exc:
        print(f"editjudge: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
