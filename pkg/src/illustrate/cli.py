"""Command-line surface.

Subcommands: ingest, analyze, assign, evaluate, oracle, sim-convert.
Settings resolve with precedence flags > ILLUSTRATE_* environment
variables > config file (--config, JSON object keyed by setting name) >
defaults. Every output document embeds the resolved run configuration.

Exit codes: 0 success, 1 usage, 2 data/schema problems, 3
numeric/integrity problems. Output files are written atomically (temp
file in the target directory, then rename), and runs with identical
inputs and configuration produce byte-identical artifacts regardless of
the worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, NoReturn, Sequence

from . import analysis, assign, evalmetrics, oracle
from .corpus import Split, WindowConfig, parse_corpus, parse_ratio
from .errors import (
    EmptyInputError,
    IntegrityError,
    NumericError,
    SchemaError,
    UnknownIdError,
)
from .objectives import AllocScore, Mode, ObjectiveConfig
from .simstore import dump_binary, dump_text, load_similarity

USAGE_EXIT = 1
DATA_EXIT = 2
NUMERIC_EXIT = 3

_DATA_ERRORS = (SchemaError, EmptyInputError, UnknownIdError, FileNotFoundError)
_NUMERIC_ERRORS = (IntegrityError, NumericError)


class _Parser(argparse.ArgumentParser):
    """argparse reserves exit code 2; usage problems must exit 1 here."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(
        dir=path.parent or Path("."), prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def _write_atomic_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(
        dir=path.parent or Path("."), prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def _emit(document: dict, output: str | None) -> None:
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    if output:
        _write_atomic(output, text)
    else:
        sys.stdout.write(text)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise SchemaError(f"config file {path} must hold a JSON object")
    return raw


def _resolve(
    args: argparse.Namespace,
    config: dict,
    name: str,
    default,
    convert: Callable[[str], object] = str,
):
    """flags > ILLUSTRATE_<NAME> > config file > default."""
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    env = os.environ.get(f"ILLUSTRATE_{name.upper()}")
    if env is not None:
        return convert(env)
    if name in config:
        value = config[name]
        return convert(value) if isinstance(value, str) and convert is not str else value
    return default


def _require(value, name: str):
    if value is None:
        raise SchemaError(f"missing required setting {name!r}")
    return value


def _window_config(args, config) -> tuple[WindowConfig, dict]:
    window = int(_resolve(args, config, "window", 75, int))
    overlap = _resolve(args, config, "overlap", "1/3", str)
    cfg = WindowConfig(window=window, overlap_ratio=parse_ratio(str(overlap)))
    return cfg, {"window": window, "overlap": str(cfg.overlap_ratio)}


def _split(args, config) -> Split:
    return Split(str(_resolve(args, config, "split", "all", str)))


def _budget_policy(spec_text: str, corpus) -> assign.BudgetPolicy:
    if spec_text == "gold":
        return assign.BudgetPolicy(kind=assign.BudgetKind.GOLD)
    if spec_text.startswith("fixed:"):
        return assign.BudgetPolicy(
            kind=assign.BudgetKind.FIXED, n=int(spec_text.split(":", 1)[1])
        )
    if spec_text == "predicted":
        model = analysis.fit_image_count_model(corpus)
        return assign.BudgetPolicy(
            kind=assign.BudgetKind.PREDICTED, predictor=model.predictor
        )
    raise SchemaError(
        f"unknown budget policy {spec_text!r} (expected gold, fixed:N, or "
        "predicted)"
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    corpus_path = _require(_resolve(args, config, "corpus", None), "corpus")
    split = _split(args, config)
    corpus = parse_corpus(corpus_path, split)
    n_sections, n_subsections, n_gold = corpus.counts()
    document = {
        "version": 1,
        "run_config": {"corpus": str(corpus_path), "split": split.value},
        "books": len(corpus.books),
        "sections": n_sections,
        "subsections": n_subsections,
        "gold_placements": n_gold,
    }
    _emit(document, args.output)
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    corpus_path = _require(_resolve(args, config, "corpus", None), "corpus")
    similarity = _resolve(args, config, "similarity", None)
    split = _split(args, config)
    window_cfg, window_doc = _window_config(args, config)
    corpus = parse_corpus(corpus_path, split)
    matrix = load_similarity(similarity) if similarity else None
    document = analysis.analyze_corpus(corpus, matrix, window_cfg=window_cfg)
    document["run_config"] = {
        "corpus": str(corpus_path),
        "similarity": str(similarity) if similarity else None,
        "split": split.value,
        **window_doc,
    }
    _emit(document, args.output)
    return 0


def _cmd_assign(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    corpus_path = _require(_resolve(args, config, "corpus", None), "corpus")
    similarity = _require(_resolve(args, config, "similarity", None), "similarity")
    split = _split(args, config)
    window_cfg, window_doc = _window_config(args, config)
    mode = Mode(str(_resolve(args, config, "mode", "joint", str)))
    beta = float(_resolve(args, config, "beta", 1.0, float))
    tau = _resolve(args, config, "tau", None, float)
    tau_quantile = float(_resolve(args, config, "tau_quantile", 0.95, float))
    alloc_score = AllocScore(
        str(_resolve(args, config, "alloc_score", "single_image", str))
    )
    budget = str(_resolve(args, config, "budget", "gold", str))
    parallelism = int(_resolve(args, config, "parallelism", 1, int))
    if parallelism < 1:
        raise SchemaError(f"parallelism must be >= 1, got {parallelism}")

    corpus = parse_corpus(corpus_path, split)
    matrix = load_similarity(similarity)
    policy = _budget_policy(budget, corpus)
    objective_cfg = ObjectiveConfig(
        tau=float(tau) if tau is not None else None,
        tau_quantile=tau_quantile,
        beta=beta,
        mode=mode,
        alloc_score=alloc_score,
    )

    sections = list(corpus.sections())

    def work(section):
        return assign.assign_section(
            section, matrix, objective_cfg, policy, window_cfg, lazy=args.lazy
        )

    if parallelism == 1:
        assignments = [work(s) for s in sections]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(work, s) for s in sections]
            assignments = [f.result() for f in futures]

    document = assign.assignments_to_document(assignments)
    document["run_config"] = {
        "corpus": str(corpus_path),
        "similarity": str(similarity),
        "split": split.value,
        "mode": mode.value,
        "beta": beta,
        "tau": float(tau) if tau is not None else None,
        "tau_quantile": tau_quantile,
        "alloc_score": alloc_score.value,
        "budget": budget,
        "lazy": bool(args.lazy),
        **window_doc,
    }
    _emit(document, args.output)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    corpus_path = _require(_resolve(args, config, "corpus", None), "corpus")
    similarity = _require(_resolve(args, config, "similarity", None), "similarity")
    split = _split(args, config)
    window_cfg, window_doc = _window_config(args, config)
    cutoffs_text = str(
        _resolve(args, config, "cutoffs", "1,5,20,100", str)
    )
    try:
        cutoffs = tuple(int(c) for c in cutoffs_text.split(","))
    except ValueError:
        raise SchemaError(f"bad cutoffs {cutoffs_text!r}") from None
    corpus = parse_corpus(corpus_path, split)
    matrix = load_similarity(similarity)
    report = evalmetrics.evaluate(corpus, matrix, cutoffs, window_cfg)
    document = evalmetrics.report_to_dict(report)
    document["run_config"] = {
        "corpus": str(corpus_path),
        "similarity": str(similarity),
        "split": split.value,
        "cutoffs": list(cutoffs),
        **window_doc,
    }
    _emit(document, args.output)
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = int(_resolve(args, config, "seed", 42, int))
    instances = int(_resolve(args, config, "instances", 50, int))
    n_images = int(_resolve(args, config, "images", 10, int))
    n_concepts = int(_resolve(args, config, "concepts", 8, int))
    budget = int(_resolve(args, config, "budget_size", 3, int))
    objective = str(_resolve(args, config, "objective", "coverage", str))
    beta = float(_resolve(args, config, "beta", 1.0, float))
    trials = int(_resolve(args, config, "trials", 1000, int))

    problems = [
        oracle.Instance.random(seed + k, n_images=n_images, n_concepts=n_concepts)
        for k in range(instances)
    ]
    reports = oracle.greedy_ratio_report(
        problems, objective, budget, beta=beta, trials=trials, check_seed=seed
    )
    document = {
        "version": 1,
        "run_config": {
            "seed": seed,
            "instances": instances,
            "images": n_images,
            "concepts": n_concepts,
            "budget": budget,
            "objective": objective,
            "beta": beta,
            "trials": trials,
        },
        "guarantee": oracle.APPROX_GUARANTEE,
        "instances": [
            {
                "seed": r.seed,
                "opt_value": r.opt_value,
                "opt_selection": list(r.opt_selection),
                "greedy_value": r.greedy_value,
                "greedy_selection": list(r.greedy_selection),
                "ratio": r.ratio,
                "monotone": r.monotone,
                "submodular_violations": r.submodular_violations,
            }
            for r in reports
        ],
    }
    _emit(document, args.output)
    return 0


def _cmd_sim_convert(args: argparse.Namespace) -> int:
    matrix = load_similarity(args.input)
    if args.to == "binary":
        _write_atomic_bytes(args.output, dump_binary(matrix))
    else:
        _write_atomic(args.output, dump_text(matrix))
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="illustrate", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--output", help="output path (default stdout)")

    p_ingest = sub.add_parser("ingest", help="validate a corpus file")
    common(p_ingest)
    p_ingest.add_argument("--corpus")
    p_ingest.add_argument("--split", choices=[s.value for s in Split])
    p_ingest.set_defaults(func=_cmd_ingest)

    p_analyze = sub.add_parser("analyze", help="corpus statistics and regression")
    common(p_analyze)
    p_analyze.add_argument("--corpus")
    p_analyze.add_argument("--similarity")
    p_analyze.add_argument("--split", choices=[s.value for s in Split])
    p_analyze.add_argument("--window", type=int)
    p_analyze.add_argument("--overlap")
    p_analyze.set_defaults(func=_cmd_analyze)

    p_assign = sub.add_parser("assign", help="select and place images")
    common(p_assign)
    p_assign.add_argument("--corpus")
    p_assign.add_argument("--similarity")
    p_assign.add_argument("--split", choices=[s.value for s in Split])
    p_assign.add_argument("--mode", choices=[m.value for m in Mode])
    p_assign.add_argument("--beta", type=float)
    p_assign.add_argument("--tau", type=float)
    p_assign.add_argument("--tau-quantile", dest="tau_quantile", type=float)
    p_assign.add_argument(
        "--alloc-score",
        dest="alloc_score",
        choices=[a.value for a in AllocScore],
    )
    p_assign.add_argument("--budget", help="gold, fixed:N, or predicted")
    p_assign.add_argument("--window", type=int)
    p_assign.add_argument("--overlap")
    p_assign.add_argument("--parallelism", type=int)
    p_assign.add_argument("--lazy", action="store_true")
    p_assign.set_defaults(func=_cmd_assign)

    p_eval = sub.add_parser("evaluate", help="retrieval metrics against gold")
    common(p_eval)
    p_eval.add_argument("--corpus")
    p_eval.add_argument("--similarity")
    p_eval.add_argument("--split", choices=[s.value for s in Split])
    p_eval.add_argument("--cutoffs")
    p_eval.add_argument("--window", type=int)
    p_eval.add_argument("--overlap")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_oracle = sub.add_parser("oracle", help="greedy vs exhaustive report")
    common(p_oracle)
    p_oracle.add_argument("--seed", type=int)
    p_oracle.add_argument("--instances", type=int)
    p_oracle.add_argument("--images", type=int)
    p_oracle.add_argument("--concepts", type=int)
    p_oracle.add_argument("--budget-size", dest="budget_size", type=int)
    p_oracle.add_argument(
        "--objective",
        choices=["local", "coverage", "redundancy", "neg_redundancy", "global", "joint"],
    )
    p_oracle.add_argument("--beta", type=float)
    p_oracle.add_argument("--trials", type=int)
    p_oracle.set_defaults(func=_cmd_oracle)

    p_conv = sub.add_parser("sim-convert", help="transcode similarity files")
    p_conv.add_argument("--input", required=True)
    p_conv.add_argument("--output", required=True)
    p_conv.add_argument("--to", choices=["binary", "text"], required=True)
    p_conv.set_defaults(func=_cmd_sim_convert)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return DATA_EXIT
    except _NUMERIC_ERRORS as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return NUMERIC_EXIT


def entrypoint() -> None:
    raise SystemExit(run())
