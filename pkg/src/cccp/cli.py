"""Command-line entry point.

Subcommands: ``ingest-check`` (validation report), ``train`` (persist models),
``score`` (apply models and rule-based metrics), ``report`` (re-aggregate
persisted tables) and ``run`` (all of the above).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from functools import partial
from importlib import resources
from pathlib import Path
from typing import Optional

from . import __version__, baseline, centrality, pb, rb
from .centrality import Endpoints
from .ingest import Corpus, SynthConfig, cap_per_platform, generate_synthetic, load_corpus, merge, write_corpus
from .nn import TrainConfig
from .report import METRICS, build_report
from .scores import ScoreTable
from .tree import PathMode

log = logging.getLogger("cccp")

MODEL_DIR = "models"
TRAINING_FILE = "training.tsv"


@dataclass
class RunConfig:
    inputs: list[str] = field(default_factory=list)
    synthetic: Optional[SynthConfig] = None
    metrics: tuple[str, ...] = METRICS
    out: str = "out"
    seed: int = 0
    path_mode: str = PathMode.UNDIRECTED.value
    rb_positives: str = rb.Positives.PARENT.value
    centrality_endpoints: str = Endpoints.EXCLUDE.value
    agg: str = "two-stage"
    zeta_base: float = baseline.ZETA_BASE
    theta_base: float = baseline.THETA_BASE
    cap_per_platform: Optional[int] = None
    jobs: int = 1
    rb_config: dict = field(default_factory=dict)
    pb_config: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.metrics:
            raise ValueError("select at least one metric")
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {', '.join(sorted(unknown))}")
        if not self.inputs and self.synthetic is None:
            raise ValueError("give --input PATH or --synthetic")

    def rb(self) -> rb.RBConfig:
        c = self.rb_config
        return rb.RBConfig(
            positives=rb.Positives(self.rb_positives),
            path_mode=PathMode(self.path_mode),
            max_bucket=c["max_bucket"],
            hidden=c["hidden"],
            threshold=c["threshold"],
            train=TrainConfig(c["learning_rate"], c["epochs"], c["batch_size"], self.seed),
        )

    def pb(self) -> pb.PBConfig:
        c = self.pb_config
        return pb.PBConfig(
            max_slots=c["max_slots"],
            hidden=tuple(c["hidden"]),
            train=TrainConfig(c["learning_rate"], c["epochs"], c["batch_size"], self.seed),
        )


def default_model_config(name: str) -> dict:
    return json.loads(resources.files("cccp.configs").joinpath(f"{name}.json").read_text(encoding="utf-8"))


def load_input(config: RunConfig) -> Corpus:
    corpora = [load_corpus(p) for p in config.inputs]
    if config.synthetic is not None:
        corpora.append(generate_synthetic(config.synthetic))
    corpus = corpora[0] if len(corpora) == 1 else merge(*corpora)
    if config.cap_per_platform is not None:
        corpus = cap_per_platform(corpus, config.cap_per_platform, config.seed)
    return corpus


def _chunks(trees, jobs: int):
    size = max(1, -(-len(trees) // jobs))
    return [trees[i:i + size] for i in range(0, len(trees), size)]


def _parallel(fn, corpus: Corpus, jobs: int) -> list:
    """Apply a corpus-level function to contiguous chunks; results stay in corpus order."""
    trees = list(corpus.trees)
    if jobs <= 1 or len(trees) < 2:
        return [fn(trees)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, _chunks(trees, jobs)))


def _concat(metric: str, tables) -> ScoreTable:
    out = ScoreTable(metric)
    for t in tables:
        out.rows.extend(t.rows)
    return out


def train_models(corpus: Corpus, config: RunConfig) -> dict:
    models = {}
    if "rb" in config.metrics:
        log.info("training response-based classifier")
        models["rb"] = rb.train_rb(corpus, config.rb())
    if "pb" in config.metrics:
        log.info("training author-prediction classifier")
        models["pb"] = pb.train_pb(corpus, config.pb())
    return models


def diagnostics(models: dict) -> dict[str, float]:
    out = {}
    if "rb" in models:
        out["rb.precision"] = models["rb"].precision
        out["rb.recall"] = models["rb"].recall
    if "pb" in models:
        out["pb.precision"] = models["pb"].precision
        out["pb.new_fraction"] = models["pb"].new_fraction
    return out


def save_models(models: dict, out: Path) -> None:
    mdir = out / MODEL_DIR
    mdir.mkdir(parents=True, exist_ok=True)
    if "rb" in models:
        rb.save_model(models["rb"], mdir / "rb.model")
    if "pb" in models:
        pb.save_model(models["pb"], mdir / "pb.model")
    lines = ["key\tvalue"] + [f"{k}\t{v:.17g}" for k, v in diagnostics(models).items()]
    (mdir / TRAINING_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_models(model_dir: Path, metrics) -> dict:
    models = {}
    if "rb" in metrics:
        models["rb"] = rb.load_model(model_dir / "rb.model") if (model_dir / "rb.model").exists() else None
    if "pb" in metrics:
        models["pb"] = pb.load_model(model_dir / "pb.model") if (model_dir / "pb.model").exists() else None
    return models


def read_training(model_dir: Path) -> dict[str, float]:
    path = model_dir / TRAINING_FILE
    if not path.exists():
        return {}
    rows = path.read_text(encoding="utf-8").splitlines()[1:]
    return {k: float(v) for k, v in (r.split("\t") for r in rows if r)}


def score_tables(corpus: Corpus, models: dict, config: RunConfig) -> dict[str, ScoreTable]:
    tables: dict[str, ScoreTable] = {}
    jobs = config.jobs
    for metric in config.metrics:
        if metric == "baseline":
            fn = partial(baseline.baseline_scores, zeta_base=config.zeta_base, theta_base=config.theta_base,
                         path_mode=PathMode(config.path_mode))
            tables["baseline"] = _concat("baseline", _parallel(fn, corpus, jobs))
        elif metric == "centrality":
            fn = partial(centrality.centrality_scores, endpoints=Endpoints(config.centrality_endpoints))
            tables["centrality"] = _concat("centrality", _parallel(fn, corpus, jobs))
        elif metric == "rb":
            tables["rb"] = _concat("rb", _parallel(partial(rb.rb_scores, model=models.get("rb")), corpus, jobs))
        elif metric == "pb":
            parts = _parallel(partial(pb.pb_tables, model=models.get("pb")), corpus, jobs)
            tables["pb"] = _concat("pb", [p[0] for p in parts])
            tables["pb_raw"] = _concat("pb_raw", [p[1] for p in parts])
    return tables


def write_tables(tables: dict[str, ScoreTable], out: Path) -> None:
    for name, table in tables.items():
        table.write(out / f"scores_{name}.tsv")


def read_tables(out: Path, metrics) -> dict[str, ScoreTable]:
    tables = {}
    for name in [*metrics, "pb_raw"]:
        path = out / f"scores_{name}.tsv"
        if path.exists():
            tables[name] = ScoreTable.read(path, name)
    return tables


def write_load_report(corpus: Corpus, out: Path) -> None:
    lines = ["conversation_id\terror\tmessage"] + [f"{s.conversation_id}\t{s.error}\t{s.message}" for s in corpus.skipped]
    (out / "load_report.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_manifest(config: RunConfig, corpus: Corpus, out: Path, command: str) -> None:
    cfg = asdict(config)
    manifest = {
        "command": command,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seed": config.seed,
        "corpus_sha256": corpus.checksum(),
        "config": cfg,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class staged:
    """Write into a scratch directory and move files into ``out`` only on success."""

    def __init__(self, out: Path):
        self.out = Path(out)

    def __enter__(self) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out))
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                for src in sorted(self.tmp.rglob("*")):
                    if src.is_file():
                        dst = self.out / src.relative_to(self.tmp)
                        dst.parent.mkdir(parents=True, exist_ok=True)
                        os.replace(src, dst)
        finally:
            shutil.rmtree(self.tmp, ignore_errors=True)
        return False


def cmd_ingest_check(config: RunConfig, args) -> int:
    corpus = load_input(config)
    by_error: dict[str, int] = {}
    for s in corpus.skipped:
        by_error[s.error] = by_error.get(s.error, 0) + 1
    print(f"loaded {len(corpus)} conversations, skipped {len(corpus.skipped)}")
    for platform, (c, n) in corpus.counts().items():
        print(f"  {platform}: {c} conversations, {n} posts")
    for err, n in sorted(by_error.items()):
        print(f"  skipped {err}: {n}")
    for s in corpus.skipped:
        print(f"  {s.conversation_id}\t{s.error}\t{s.message}")
    if args.out_given:
        with staged(Path(config.out)) as tmp:
            write_load_report(corpus, tmp)
    return 0


def cmd_train(config: RunConfig, args) -> int:
    corpus = load_input(config)
    with staged(Path(config.out)) as tmp:
        models = train_models(corpus, config)
        save_models(models, tmp)
        write_manifest(config, corpus, tmp, "train")
    for k, v in diagnostics(models).items():
        print(f"{k}\t{v:.6f}")
    return 0


def cmd_score(config: RunConfig, args) -> int:
    corpus = load_input(config)
    model_dir = Path(args.models) if args.models else Path(config.out) / MODEL_DIR
    models = load_models(model_dir, config.metrics)
    with staged(Path(config.out)) as tmp:
        tables = score_tables(corpus, models, config)
        write_tables(tables, tmp)
        write_corpus(corpus, tmp / "corpus.tsv")
        write_manifest(config, corpus, tmp, "score")
    return 0


def cmd_report(config: RunConfig, args) -> int:
    out = Path(config.out)
    corpus = load_corpus(out / "corpus.tsv")
    tables = read_tables(out, config.metrics)
    report = build_report(corpus, tables, read_training(out / MODEL_DIR), config.agg)
    with staged(out) as tmp:
        report.write(tmp)
    sys.stdout.write(report.render())
    return 0


def cmd_run(config: RunConfig, args) -> int:
    corpus = load_input(config)
    with staged(Path(config.out)) as tmp:
        write_corpus(corpus, tmp / "corpus.tsv")
        write_load_report(corpus, tmp)
        models = train_models(corpus, config)
        save_models(models, tmp)
        write_tables(score_tables(corpus, models, config), tmp)
        # built from the persisted tables so `report` regenerates it byte for byte
        report = build_report(corpus, read_tables(tmp, config.metrics), read_training(tmp / MODEL_DIR), config.agg)
        report.write(tmp)
        write_manifest(config, corpus, tmp, "run")
    sys.stdout.write(report.render())
    return 0


COMMANDS = {
    "ingest-check": (cmd_ingest_check, "load and validate input, report skipped conversations"),
    "train": (cmd_train, "train the response-based and prediction models"),
    "score": (cmd_score, "compute score tables using persisted models"),
    "report": (cmd_report, "rebuild the comparison report from persisted tables"),
    "run": (cmd_run, "ingest, train, score and report in one go"),
}


def _metrics(value: str) -> tuple[str, ...]:
    if value == "all":
        return METRICS
    return tuple(m.strip() for m in value.split(",") if m.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("input")
    src.add_argument("--input", action="append", default=[], metavar="PATH", help="tab-separated dump; repeatable")
    src.add_argument("--synthetic", action="store_true", help="generate a synthetic corpus")
    src.add_argument("--seed", type=int, default=None, help="master seed (default: $CCCP_SEED or 0)")
    src.add_argument("--n-conversations", type=int, default=100)
    src.add_argument("--revisit-rate", type=float, default=0.3)
    src.add_argument("--root-bias", type=float, default=0.3)
    src.add_argument("--cap-per-platform", type=int, default=None, metavar="N",
                     help="subsample at most N conversations per platform")
    run = common.add_argument_group("metrics")
    run.add_argument("--metrics", type=_metrics, default=METRICS, help="comma list of baseline,rb,pb,centrality or 'all'")
    run.add_argument("--out", default=None, metavar="DIR", help="output directory (default: out)")
    run.add_argument("--path-mode", choices=[m.value for m in PathMode], default=PathMode.UNDIRECTED.value)
    run.add_argument("--rb-positives", choices=[p.value for p in rb.Positives], default=rb.Positives.PARENT.value)
    run.add_argument("--centrality-endpoints", choices=[e.value for e in Endpoints], default=Endpoints.EXCLUDE.value)
    run.add_argument("--agg", choices=["two-stage", "pooled"], default="two-stage")
    run.add_argument("--zeta-base", type=float, default=baseline.ZETA_BASE)
    run.add_argument("--theta-base", type=float, default=baseline.THETA_BASE)
    run.add_argument("--rb-config", metavar="JSON", help="override the shipped response-based training config")
    run.add_argument("--pb-config", metavar="JSON", help="override the shipped prediction training config")
    run.add_argument("--models", metavar="DIR", help="model directory for 'score' (default: OUT/models)")
    run.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes for scoring")
    run.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cccp", description="Author participation metrics over reply trees.")
    parser.add_argument("--version", action="version", version=f"cccp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def config_from_args(args) -> RunConfig:
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("CCCP_SEED", "0"))
    synthetic = None
    if args.synthetic:
        synthetic = SynthConfig(
            n_conversations=args.n_conversations,
            root_attachment_bias=args.root_bias,
            revisit_rate=args.revisit_rate,
            seed=seed,
        )
    rb_cfg = default_model_config("rb")
    pb_cfg = default_model_config("pb")
    if args.rb_config:
        rb_cfg.update(json.loads(Path(args.rb_config).read_text(encoding="utf-8")))
    if args.pb_config:
        pb_cfg.update(json.loads(Path(args.pb_config).read_text(encoding="utf-8")))
    return RunConfig(
        inputs=list(args.input),
        synthetic=synthetic,
        metrics=tuple(args.metrics),
        out=args.out or "out",
        seed=seed,
        path_mode=args.path_mode,
        rb_positives=args.rb_positives,
        centrality_endpoints=args.centrality_endpoints,
        agg=args.agg,
        zeta_base=args.zeta_base,
        theta_base=args.theta_base,
        cap_per_platform=args.cap_per_platform,
        jobs=args.jobs,
        rb_config=rb_cfg,
        pb_config=pb_cfg,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args.out_given = args.out is not None
    try:
        config = config_from_args(args)
        if args.command != "report":
            config.validate()
        return COMMANDS[args.command][0](config, args)
    except FileNotFoundError as e:
        print(f"error: FileNotFound: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
