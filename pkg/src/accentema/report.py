"""Tab-separated report tables and their readers.

Floats are written with ``repr`` so values round-trip exactly and reruns
produce byte-identical files.
"""

import csv
import json
import math
from pathlib import Path

from .align import WeightTable
from .errors import MalformedRow, MissingFile
from .pipeline import CellResult, SegmentStat
from .reparam import FEATURES
from .stats import RegressionResult

SCORE_COLUMNS = ("speaker_id", "accent", "n_utts", "ld_us", "ld_uk", "ld_diff",
                 "pmi_ld_us", "pmi_ld_uk", "pmi_ld_diff")
UTT_COLUMNS = ("speaker_id", "utterance_id", "ld_us", "ld_uk", "ld_diff",
               "pmi_ld_us", "pmi_ld_uk", "pmi_ld_diff")
SEGMENT_COLUMNS = ("speaker_id", "utterance_id", "index", "phone", "vowel", "t_start", "t_end",
                   "feature", "mean", "T", "k", "x0", "t_s", "mse", "converged", "n_frames", "status")
CELL_COLUMNS = ("vowel", "feature", "statistic", "measure", "status", "n",
                "slope", "intercept", "R", "R2", "p")
SCATTER_COLUMNS = ("vowel", "feature", "statistic", "measure", "speaker_id", "x", "y")
TABLE1_COLUMNS = ("measure", "vowel", "statistic", "feature", "direction", "strong",
                  "significant", "symbol", "status")


def fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_table(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r[c]) for c in columns])


def read_table(path, columns):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        if tuple(reader.fieldnames or ()) != tuple(columns):
            raise MalformedRow(path, 1, f"expected columns {list(columns)}")
        return list(reader)


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                          encoding="utf-8")


# -- writers -------------------------------------------------------------------

def write_weights(path, table: WeightTable):
    write_table(path, ("a", "b", "cost"),
                ({"a": a, "b": b, "cost": c} for a, b, c in table.items()))


def write_scores(outdir, scores, accents):
    outdir = Path(outdir)
    write_table(outdir / "utterance_distances.tsv", UTT_COLUMNS, scores.utterances)
    rows = []
    for spk, s in scores.speakers.items():
        rows.append({"speaker_id": spk, "accent": accents.get(spk, "other"), "n_utts": s.n_utts,
                     "ld_us": s.ld_us, "ld_uk": s.ld_uk, "ld_diff": s.ld_relative,
                     "pmi_ld_us": s.pmi_ld_us, "pmi_ld_uk": s.pmi_ld_uk, "pmi_ld_diff": s.relative})
    write_table(outdir / "accent_scores.tsv", SCORE_COLUMNS, rows)


def write_training(outdir, scores):
    outdir = Path(outdir)
    write_weights(outdir / "weights_us.tsv", scores.train_us.weights)
    write_weights(outdir / "weights_uk.tsv", scores.train_uk.weights)
    write_json(outdir / "training.json", {
        "us": {"iterations": scores.train_us.iterations, "converged": scores.train_us.converged},
        "uk": {"iterations": scores.train_uk.iterations, "converged": scores.train_uk.converged},
    })


def write_segments(path, stats):
    write_table(path, SEGMENT_COLUMNS, (vars(s) for s in stats))


def write_cells(outdir, cells):
    outdir = Path(outdir)
    rows, scatter = [], []
    for c in cells:
        r = c.result
        rows.append({"vowel": c.vowel, "feature": c.feature, "statistic": c.statistic,
                     "measure": c.measure, "status": c.status,
                     "n": r.n if r else len(c.points),
                     "slope": r.slope if r else math.nan,
                     "intercept": r.intercept if r else math.nan,
                     "R": r.R if r else math.nan, "R2": r.R2 if r else math.nan,
                     "p": r.p if r else math.nan})
        for spk, x, y in c.points:
            scatter.append({"vowel": c.vowel, "feature": c.feature, "statistic": c.statistic,
                            "measure": c.measure, "speaker_id": spk, "x": float(x), "y": float(y)})
    write_table(outdir / "regression_cells.tsv", CELL_COLUMNS, rows)
    write_table(outdir / "fig3_scatter.tsv", SCATTER_COLUMNS, scatter)


def write_summary(outdir, cells, summary_cells, summary):
    outdir = Path(outdir)
    rows = []
    for c, s in zip(cells, summary_cells):
        rows.append({"measure": c.measure, "vowel": s.vowel, "statistic": s.statistic,
                     "feature": s.feature, "direction": s.direction, "strong": s.strong,
                     "significant": s.significant, "symbol": s.symbol, "status": c.status})
    write_table(outdir / "table1_summary.tsv", TABLE1_COLUMNS, rows)
    write_json(outdir / "summary.json", summary)


def write_report(report, outdir, accents):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.json").write_text(report.config.dumps(), encoding="utf-8")
    write_json(outdir / "provenance.json", report.provenance)
    write_json(outdir / "pca_bases.json", report.bases)
    write_training(outdir, report.scores)
    write_scores(outdir, report.scores, accents)
    write_segments(outdir / "segment_stats.tsv", report.segments)
    write_cells(outdir, report.cells)
    write_summary(outdir, report.cells, report.summary_cells, report.summary)


# -- readers (for running stages separately) ----------------------------------------

def read_measures(path):
    """accent_scores.tsv -> speaker -> {"us": ..., "relative": ...}."""
    out = {}
    for r in read_table(path, SCORE_COLUMNS):
        out[r["speaker_id"]] = {"us": float(r["pmi_ld_us"]), "relative": float(r["pmi_ld_diff"])}
    return out


def read_segments(path):
    out = []
    for r in read_table(path, SEGMENT_COLUMNS):
        if r["feature"] not in FEATURES:
            raise MalformedRow(path, 0, f"unknown feature {r['feature']!r}")
        out.append(SegmentStat(
            r["speaker_id"], r["utterance_id"], int(r["index"]), r["phone"], r["vowel"],
            float(r["t_start"]), float(r["t_end"]), r["feature"], float(r["mean"]),
            float(r["T"]), float(r["k"]), float(r["x0"]), float(r["t_s"]), float(r["mse"]),
            r["converged"] == "true", int(r["n_frames"]), r["status"]))
    return out


def read_cells(path):
    """regression_cells.tsv (+ a sibling fig3_scatter.tsv when present) -> CellResult list."""
    path = Path(path)
    points = {}
    scatter = path.parent / "fig3_scatter.tsv"
    if scatter.is_file():
        for r in read_table(scatter, SCATTER_COLUMNS):
            key = (r["vowel"], r["feature"], r["statistic"], r["measure"])
            points.setdefault(key, []).append((r["speaker_id"], float(r["x"]), float(r["y"])))
    cells = []
    for r in read_table(path, CELL_COLUMNS):
        key = (r["vowel"], r["feature"], r["statistic"], r["measure"])
        res = None
        if r["status"] == "ok":
            res = RegressionResult(float(r["slope"]), float(r["intercept"]), float(r["R"]),
                                   float(r["R2"]), float(r["p"]), int(r["n"]))
        cells.append(CellResult(*key, r["status"], res, points.get(key, [])))
    return cells
