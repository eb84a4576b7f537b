"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 config error.
"""

import argparse
import logging
import sys
from pathlib import Path

from .config import PipelineConfig, load_config
from .errors import AccentEmaError, ConfigError
from .io import ingest
from . import pipeline, report

log = logging.getLogger("accentema")

MEASURE_CHOICES = {"us": ("us",), "relative": ("relative",), "both": ("us", "relative")}
STAT_CHOICES = {"mean": ("mean",), "T": ("T",), "both": ("mean", "T")}


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON or YAML run configuration")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides config)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--measure", choices=sorted(MEASURE_CHOICES), help="accent measure(s) to regress on")
    p.add_argument("--stat", choices=sorted(STAT_CHOICES), help="segment statistic(s)")
    p.add_argument("--workers", type=int, help="processes for gesture fitting")
    p.add_argument("--lenient", action="store_true",
                   help="skip utterances with bad input instead of failing")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser():
    common = _common()
    ap = argparse.ArgumentParser(prog="accentema", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, help, manifest=True):
        p = sub.add_parser(name, help=help, parents=[common])
        if manifest:
            p.add_argument("manifest", type=Path)
        return p

    cmd("run", "full pipeline: scores, reparameterisation, fits, regressions, summary")
    cmd("train-weights", "train US and UK PMI edit weights")
    cmd("score", "per-utterance and per-speaker LD / PMI-LD")
    cmd("reparam", "fit tongue PCA and write reparameterised tracks")
    cmd("fit", "per-segment means and gesture fits")
    p = cmd("regress", "regress segment statistics on accent scores", manifest=False)
    p.add_argument("--scores", type=Path, required=True, help="accent_scores.tsv")
    p.add_argument("--segments", type=Path, required=True, help="segment_stats.tsv")
    p = cmd("report", "gate regression cells into the summary table", manifest=False)
    p.add_argument("--cells", type=Path, required=True, help="regression_cells.tsv")
    p = cmd("synth", "write a synthetic demo corpus", manifest=False)
    p.add_argument("--speakers", type=int, default=20)
    p.add_argument("--utts", type=int, default=8, help="utterances per speaker")
    return ap


def resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.measure:
        changes["measures"] = MEASURE_CHOICES[args.measure]
    if args.stat:
        changes["statistics"] = STAT_CHOICES[args.stat]
    if args.workers is not None:
        changes["workers"] = args.workers
    return cfg.replace(**changes) if changes else cfg


def _run(args):
    cfg = resolve_config(args)
    out = args.out

    if args.command == "synth":
        from .synth import SynthConfig, generate
        sc = generate(out, SynthConfig(n_speakers=args.speakers, n_utts=args.utts, seed=cfg.seed))
        print(sc.manifest_path)
        return

    if args.command == "regress":
        measures = report.read_measures(args.scores)
        feats = pipeline.speaker_features(report.read_segments(args.segments), cfg)
        cells = pipeline.regress_cells(measures, feats, cfg)
        out.mkdir(parents=True, exist_ok=True)
        report.write_cells(out, cells)
        log.info("%d regression cells written to %s", len(cells), out)
        return

    if args.command == "report":
        cells = report.read_cells(args.cells)
        summary_cells, summary = pipeline.summarize_cells(cells, cfg)
        out.mkdir(parents=True, exist_ok=True)
        report.write_summary(out, cells, summary_cells, summary)
        return

    corpus = ingest(args.manifest, strict=not args.lenient)
    for err in corpus.errors:
        log.warning("skipped: %s", err)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.dumps(), encoding="utf-8")

    if args.command == "run":
        rep = pipeline.run_pipeline(corpus, cfg)
        report.write_report(rep, out, corpus.speakers)
        for m, s in rep.summary["per_measure"].items():
            log.info("%s: %d/%d cells significant", m, s["significant"], s["tests_run"])
    elif args.command in ("train-weights", "score"):
        scores = pipeline.score_corpus(corpus, cfg)
        report.write_training(out, scores)
        if args.command == "score":
            report.write_scores(out, scores, corpus.speakers)
    elif args.command == "reparam":
        bases, tracks = pipeline.reparam_corpus(corpus, cfg)
        report.write_json(out / "pca_bases.json", {s: b.to_dict() for s, b in bases.items()})
        for uid, tr in tracks.items():
            rows = ({"t": float(t), **{f: float(v) for f, v in zip(pipeline.FEATURES, row)}}
                    for t, row in zip(tr.times, tr.channels))
            report.write_table(out / "reparam" / f"{uid}.tsv", ("t",) + pipeline.FEATURES, rows)
    elif args.command == "fit":
        _, tracks = pipeline.reparam_corpus(corpus, cfg)
        report.write_segments(out / "segment_stats.tsv", pipeline.segment_stats(corpus, tracks, cfg))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except AccentEmaError as exc:
        kind = "input error" if exc.exit_code == 1 else "numerical failure"
        print(f"{kind}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
