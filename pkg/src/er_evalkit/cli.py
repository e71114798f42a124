"""Command-line pipeline: one subcommand per stage, files in, files out.

Configuration resolves in precedence order: explicit flag, then --config
key-value file, then the documented default (printed by --help). Every
subcommand writes a machine-readable JSON summary to stdout; exit status is
0 on success, 1 on module errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import catalog as catalog_mod
from . import clickstream, diagnose, importance, metrics, relevance, simulate
from .errors import ConfigError, EvalKitError
from .jsonl import dumps

ENV_THREADS = "ER_EVALKIT_THREADS"

DEFAULTS = (
    ("k", "5", "top-k cutoff for all metrics"),
    ("min_impressions", "25", "CTR filter: minimum impressions per pair"),
    ("min_ctr", "0.3", "CTR filter: minimum click-through rate"),
    ("min_importance", "0.3", "relevance merge: minimum importance score"),
    ("weights", "1/3,1/3,1/3", "importance weights w_year,w_rank,w_count"),
    ("missing_feature_policy", "default_score",
     "absent feature handling: default_score or exclude_title"),
    ("default_component_score", "0.5", "component score for absent features"),
    ("target_bin", "high", "bin a diagnosed success must reach"),
    ("year_window", "1870,2100", "plausible release-year window"),
    ("threads", "1", f"worker threads; env {ENV_THREADS} overrides"),
    ("n_titles", "1000", "simulate: catalog size"),
    ("n_queries", "500", "simulate: number of queries"),
    ("typo_rate", "0.02", "simulate: per-character edit probability"),
    ("score_noise_sigma", "0.05", "simulate: Gaussian score noise sigma"),
    ("bin_thresholds", "0.8,0.5", "simulate: t_high,t_medium score cutoffs"),
    ("retrieve_m", "10", "simulate: results retrieved per query"),
    ("click_position_decay", "0.7",
     "simulate: click probability decay per rank position"),
    ("n_replays", "200", "simulate: impression replays per query"),
)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_floats(text: str, n: int, what: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ConfigError(f"{what} needs {n} comma-separated values, "
                          f"got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad {what} {text!r}: {exc}") from exc


def _parse_ints(text: str, n: int, what: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ConfigError(f"{what} needs {n} comma-separated values, "
                          f"got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad {what} {text!r}: {exc}") from exc


def _parse_weights(text: str) -> tuple[float, float, float]:
    # Accept "1/3" style fractions so the documented default is writable.
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"weights need 3 comma-separated values, got {text!r}")
    values = []
    for part in parts:
        try:
            if "/" in part:
                num, den = part.split("/", 1)
                values.append(float(num) / float(den))
            else:
                values.append(float(part))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad weight {part!r}: {exc}") from exc
    return tuple(values)


def load_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat key-value file: one `key = value` per line, # comments."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = stripped.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


class Settings:
    """Flag > config file > default resolution for one invocation."""

    def __init__(self, args: argparse.Namespace, config: dict[str, str]):
        self.args = args
        self.config = config

    def _raw(self, key: str):
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        return self.config.get(key)

    def get(self, key: str, default, convert=None):
        value = self._raw(key)
        if value is None:
            return default
        if isinstance(value, str) and convert is not None:
            return convert(value)
        return value

    def get_int(self, key: str, default: int) -> int:
        return self.get(key, default, int)

    def get_float(self, key: str, default: float) -> float:
        return self.get(key, default, float)

    def get_bool(self, key: str, default: bool) -> bool:
        return self.get(key, default, _parse_bool)

    def threads(self) -> int:
        value = self._raw("threads")
        if value is None:
            value = os.environ.get(ENV_THREADS)
        if value is None:
            return 1
        try:
            threads = int(value)
        except ValueError as exc:
            raise ConfigError(f"bad thread count {value!r}") from exc
        if threads < 1:
            raise ConfigError(f"thread count must be >= 1, got {threads}")
        return threads


def _emit(summary: dict) -> None:
    print(dumps(summary))


def cmd_ingest_catalog(args: argparse.Namespace, cfg: Settings) -> int:
    window = cfg.get("year_window", catalog_mod.DEFAULT_YEAR_WINDOW,
                     lambda t: _parse_ints(t, 2, "year_window"))
    parsed = catalog_mod.parse_catalog(
        args.basics, args.ratings, args.ranks,
        strict=cfg.get_bool("strict", False),
        year_window=tuple(window),
    )
    catalog_mod.write_catalog(parsed, args.out)
    _emit({
        "command": "ingest-catalog",
        "titles": len(parsed),
        "rejects": parsed.stats.rejects,
        "stats": parsed.stats.as_dict(),
        "out": str(args.out),
    })
    return 0


def _importance_config(cfg: Settings) -> importance.ImportanceConfig:
    bounds = cfg.get("bounds", None,
                     lambda t: _parse_ints(t, 5, "bounds"))
    if bounds is not None and not isinstance(bounds, importance.ScoreBounds):
        bounds = importance.ScoreBounds(*bounds)
    return importance.ImportanceConfig(
        weights=cfg.get("weights", (1 / 3, 1 / 3, 1 / 3), _parse_weights),
        missing_feature_policy=cfg.get("missing_feature_policy",
                                       importance.POLICY_DEFAULT_SCORE),
        default_component_score=cfg.get_float("default_component_score", 0.5),
        bounds=bounds,
    )


def cmd_score_importance(args: argparse.Namespace, cfg: Settings) -> int:
    loaded = catalog_mod.load_catalog(args.catalog)
    scored, excluded = importance.score_catalog(loaded, _importance_config(cfg))
    importance.write_scored(scored, args.out)
    _emit({
        "command": "score-importance",
        "scored": len(scored),
        "excluded": excluded,
        "out": str(args.out),
    })
    return 0


def cmd_aggregate_ctr(args: argparse.Namespace, cfg: Settings) -> int:
    threads = cfg.threads()
    stats = clickstream.ParseStats()
    events = clickstream.parse_events(
        args.events, strict=cfg.get_bool("strict", False), stats=stats)
    records = clickstream.aggregate_in_shards(events, n_shards=threads,
                                              threads=threads)
    ctr_filter = clickstream.CtrFilter(
        min_impressions=cfg.get_int("min_impressions",
                                    clickstream.DEFAULT_MIN_IMPRESSIONS),
        min_ctr=cfg.get_float("min_ctr", clickstream.DEFAULT_MIN_CTR),
    )
    kept, summary = clickstream.filter_records(records, ctr_filter)
    clickstream.write_ctr_records(kept, args.out)
    _emit({
        "command": "aggregate-ctr",
        "events": stats.events,
        "rejected_events": stats.rejected,
        "pairs": len(records),
        "kept": summary.kept,
        "dropped": summary.dropped,
        "out": str(args.out),
    })
    return 0


def cmd_build_relevance(args: argparse.Namespace, cfg: Settings) -> int:
    ctr_records = clickstream.load_ctr_records(args.ctr)
    scored = importance.load_scored(args.scored)
    relset, summary = relevance.merge_relevance(
        ctr_records, scored,
        min_importance=cfg.get_float("min_importance",
                                     relevance.DEFAULT_MIN_IMPORTANCE),
    )
    provenance_path = (Path(args.provenance) if args.provenance
                       else relevance.default_provenance_path(args.out))
    relevance.emit_qrels(relset, args.out, provenance_path)
    _emit({
        "command": "build-relevance",
        "queries": len(relset.entries),
        "pairs": summary.included,
        "dropped_unscored": summary.dropped_unscored,
        "dropped_low_importance": summary.dropped_low_importance,
        "out": str(args.out),
        "provenance": str(provenance_path),
    })
    return 0


def cmd_evaluate(args: argparse.Namespace, cfg: Settings) -> int:
    qrels = relevance.load_qrels(args.qrels)
    run = metrics.load_run(args.run)
    report = metrics.evaluate_run(qrels, run, k=cfg.get_int("k", metrics.DEFAULT_K))
    if args.out:
        report.save(args.out)
    if cfg.get("format", "json") == "table":
        print(report.render_table())
    else:
        print(dumps(report.to_dict()))
    return 0


def cmd_diagnose(args: argparse.Namespace, cfg: Settings) -> int:
    qrels = relevance.load_qrels(args.qrels)
    run = metrics.load_run(args.run)
    target = metrics.ConfidenceBin(cfg.get("target_bin", "high"))
    diagnoses, summary = diagnose.diagnose_run(
        qrels, run, k=cfg.get_int("k", metrics.DEFAULT_K), target_bin=target)
    if args.out:
        diagnose.write_diagnoses(diagnoses, args.out)
    if cfg.get("format", "json") == "table":
        width = max(len(c.value) for c in diagnose.CATEGORIES)
        lines = [f"{'category':<{width}}  {'count':>7}  {'fraction':>8}"]
        for category in diagnose.CATEGORIES:
            name = category.value
            lines.append(f"{name:<{width}}  {summary.counts[name]:>7}  "
                         f"{summary.fractions[name]:>8.4f}")
        lines.append(f"hit_rate {summary.hit_rate:.4f} "
                     f"consistent={str(summary.consistent).lower()}")
        print("\n".join(lines))
    else:
        print(dumps(summary.to_dict()))
    return 0


def cmd_compare(args: argparse.Namespace, cfg: Settings) -> int:
    baseline = metrics.MetricsReport.load(args.baseline)
    candidate = metrics.MetricsReport.load(args.candidate)
    delta = diagnose.compare_reports(baseline, candidate)
    if args.out:
        delta.save(args.out)
    if cfg.get("format", "json") == "table":
        print(delta.render_table())
    else:
        print(dumps(delta.to_dict()))
    return 0


def cmd_simulate(args: argparse.Namespace, cfg: Settings) -> int:
    sim_config = simulate.SimConfig(
        seed=args.seed,
        n_titles=cfg.get_int("n_titles", 1000),
        n_queries=cfg.get_int("n_queries", 500),
        typo_rate=cfg.get_float("typo_rate", 0.02),
        score_noise_sigma=cfg.get_float("score_noise_sigma", 0.05),
        bin_thresholds=tuple(cfg.get(
            "bin_thresholds", simulate.DEFAULT_BIN_THRESHOLDS,
            lambda t: _parse_floats(t, 2, "bin_thresholds"))),
        retrieve_m=cfg.get_int("retrieve_m", 10),
        click_position_decay=cfg.get_float("click_position_decay", 0.7),
        n_replays=cfg.get_int("n_replays", 200),
    )
    out_dir = Path(args.out_dir)
    generated = simulate.gen_catalog(sim_config)
    queries = simulate.gen_queries(generated, sim_config)
    run = simulate.run_mock_er(generated, queries, sim_config)
    truth = dict(queries)
    simulate.write_catalog_tsv(generated, out_dir)
    events = simulate.gen_clicklog(run, truth, sim_config)
    n_events = clickstream.write_events(events, out_dir / "clicklog.jsonl")
    metrics.save_run(run, out_dir / "run.jsonl")
    simulate.write_truth_qrels(queries, out_dir / "truth_qrels.jsonl")
    _emit({
        "command": "simulate",
        "seed": args.seed,
        "out_dir": str(out_dir),
        "titles": len(generated),
        "queries": len(queries),
        "events": n_events,
        "files": ["basics.tsv", "ratings.tsv", "ranks.tsv", "clicklog.jsonl",
                  "run.jsonl", "truth_qrels.jsonl"],
    })
    return 0


def _defaults_epilog() -> str:
    width = max(len(name) for name, _, _ in DEFAULTS)
    value_width = max(len(value) for _, value, _ in DEFAULTS)
    lines = ["defaults:"]
    for name, value, help_text in DEFAULTS:
        lines.append(f"  {name:<{width}}  {value:<{value_width}}  {help_text}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="er-evalkit",
        description="Relevance test-set generation and bin-aware evaluation "
                    "for entity resolution runs.",
        epilog=_defaults_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name: str, help_text: str, func):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.set_defaults(func=func)
        return p

    p = add("ingest-catalog", "parse catalog TSV dumps into canonical JSONL",
            cmd_ingest_catalog)
    p.add_argument("--basics", required=True, help="basics TSV path")
    p.add_argument("--ratings", required=True, help="ratings TSV path")
    p.add_argument("--ranks", help="optional ranks TSV path")
    p.add_argument("--out", required=True, help="catalog JSONL output")
    p.add_argument("--year-window", dest="year_window",
                   help="plausible release-year window, LO,HI")
    p.add_argument("--strict", action="store_true", default=None,
                   help="error on the first malformed row")

    p = add("score-importance", "compute importance scores for a catalog",
            cmd_score_importance)
    p.add_argument("--catalog", required=True, help="catalog JSONL path")
    p.add_argument("--out", required=True, help="scored JSONL output")
    p.add_argument("--weights", help="w_year,w_rank,w_count (fractions ok)")
    p.add_argument("--missing-feature-policy", dest="missing_feature_policy",
                   choices=[importance.POLICY_DEFAULT_SCORE,
                            importance.POLICY_EXCLUDE_TITLE])
    p.add_argument("--default-component-score", dest="default_component_score",
                   type=float)
    p.add_argument("--bounds",
                   help="fixed min_year,max_year,min_rank,max_rank,"
                        "max_rating_count (default: fit from catalog)")

    p = add("aggregate-ctr", "aggregate click events into filtered CTR records",
            cmd_aggregate_ctr)
    p.add_argument("--events", required=True, help="click event JSONL path")
    p.add_argument("--out", required=True, help="CTR record JSONL output")
    p.add_argument("--min-impressions", dest="min_impressions", type=int)
    p.add_argument("--min-ctr", dest="min_ctr", type=float)
    p.add_argument("--threads", type=int,
                   help=f"worker threads (env {ENV_THREADS})")
    p.add_argument("--strict", action="store_true", default=None,
                   help="error on the first malformed event")

    p = add("build-relevance", "merge CTR records with importance into qrels",
            cmd_build_relevance)
    p.add_argument("--ctr", required=True, help="filtered CTR JSONL path")
    p.add_argument("--scored", required=True, help="scored title JSONL path")
    p.add_argument("--out", required=True, help="qrels JSONL output")
    p.add_argument("--provenance", help="provenance sidecar path")
    p.add_argument("--min-importance", dest="min_importance", type=float)

    p = add("evaluate", "score a run file against qrels", cmd_evaluate)
    p.add_argument("--qrels", required=True, help="qrels JSONL path")
    p.add_argument("--run", required=True, help="run JSONL path")
    p.add_argument("-k", type=int, help="top-k cutoff")
    p.add_argument("--out", help="also write the report JSON here")
    p.add_argument("--format", choices=["json", "table"])

    p = add("diagnose", "classify each query as success or failure category",
            cmd_diagnose)
    p.add_argument("--qrels", required=True, help="qrels JSONL path")
    p.add_argument("--run", required=True, help="run JSONL path")
    p.add_argument("-k", type=int, help="top-k cutoff")
    p.add_argument("--target-bin", dest="target_bin",
                   choices=[b.value for b in metrics.BINS])
    p.add_argument("--out", help="write per-query diagnoses JSONL here")
    p.add_argument("--format", choices=["json", "table"])

    p = add("compare", "delta two evaluation reports column by column",
            cmd_compare)
    p.add_argument("--baseline", required=True, help="baseline report JSON")
    p.add_argument("--candidate", required=True, help="candidate report JSON")
    p.add_argument("--out", help="write the delta report JSON here")
    p.add_argument("--format", choices=["json", "table"])

    p = add("simulate", "generate a seeded synthetic fixture set", cmd_simulate)
    p.add_argument("--seed", type=int, required=True,
                   help="PRNG seed (required: output depends on it)")
    p.add_argument("--out-dir", dest="out_dir", required=True,
                   help="directory for the generated files")
    p.add_argument("--n-titles", dest="n_titles", type=int)
    p.add_argument("--n-queries", dest="n_queries", type=int)
    p.add_argument("--typo-rate", dest="typo_rate", type=float)
    p.add_argument("--score-noise-sigma", dest="score_noise_sigma", type=float)
    p.add_argument("--bin-thresholds", dest="bin_thresholds",
                   help="t_high,t_medium")
    p.add_argument("--retrieve-m", dest="retrieve_m", type=int)
    p.add_argument("--click-position-decay", dest="click_position_decay",
                   type=float)
    p.add_argument("--n-replays", dest="n_replays", type=int)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        config = load_config_file(args.config) if args.config else {}
        return args.func(args, Settings(args, config))
    except (EvalKitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
