"""Study reports: per-trial CSV, JSON summary, and distribution figures.

The summary is always recomputed from the CSV text, so summarizing an
existing CSV reproduces the original summary byte for byte.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from ..errors import IoError
from ..guidance import TRE_ACCEPTABLE_MM
from ..landmarks import LANDMARK_ORDER
from ..montecarlo import TrialResult
from .scenario import canonical_json

CSV_NAME = "trials.csv"
SUMMARY_NAME = "summary.json"

_RESIDUAL_COLUMNS = [f"res_{lid.value}" for lid in LANDMARK_ORDER]
CSV_COLUMNS = ["trial", "seed", "rmse_mm", "tre_mm", "scale", *_RESIDUAL_COLUMNS]


def write_report(results: list[TrialResult], out_dir, figures: bool = True) -> dict:
    """Write trials.csv + summary.json (+ histogram PNGs) and return the summary."""
    if not results:
        raise IoError("no trial results to report")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / CSV_NAME
        with open(csv_path, "w", encoding="ascii", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for r in results:
                writer.writerow([
                    r.trial, r.seed, repr(r.rmse), repr(r.tre), repr(r.scale),
                    *(repr(r.residuals[lid]) for lid in LANDMARK_ORDER),
                ])
        summary = summarize_csv(csv_path)
        (out_dir / SUMMARY_NAME).write_text(canonical_json(summary), encoding="utf-8")
        if figures:
            render_figures(csv_path, out_dir)
        return summary
    except OSError as exc:
        raise IoError(f"could not write report into {out_dir}: {exc}") from exc


def read_csv_rows(csv_path) -> list[dict]:
    with open(csv_path, "r", encoding="ascii", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise IoError(f"no trial rows in {csv_path}")
    return rows


def _column(rows: list[dict], name: str) -> np.ndarray:
    return np.array([float(r[name]) for r in rows])


def _stats(values: np.ndarray) -> dict:
    return {
        "mean": float(np.mean(values)),
        "sd": float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
        "p5": float(np.percentile(values, 5)),
        "p25": float(np.percentile(values, 25)),
        "p50": float(np.percentile(values, 50)),
        "p75": float(np.percentile(values, 75)),
        "p95": float(np.percentile(values, 95)),
    }


def summarize_csv(csv_path) -> dict:
    """Aggregate statistics recomputed from the CSV contents."""
    rows = read_csv_rows(csv_path)
    rmse = _column(rows, "rmse_mm")
    tre = _column(rows, "tre_mm")
    scale = _column(rows, "scale")
    return {
        "schema_version": 1,
        "n_trials": len(rows),
        "rmse_mm": _stats(rmse),
        "tre_mm": _stats(tre),
        "scale": {"mean": float(np.mean(scale)),
                  "sd": float(np.std(scale, ddof=1)) if len(scale) > 1 else 0.0},
        "tre_threshold_mm": TRE_ACCEPTABLE_MM,
        "fraction_tre_below_threshold": float(np.mean(tre < TRE_ACCEPTABLE_MM)),
    }


def render_figures(csv_path, out_dir) -> list[Path]:
    """Histogram PNGs next to the delimited output."""
    rows = read_csv_rows(csv_path)
    out_dir = Path(out_dir)
    written = []
    for column, label, threshold in (
        ("rmse_mm", "registration RMSE [mm]", None),
        ("tre_mm", "target registration error [mm]", TRE_ACCEPTABLE_MM),
    ):
        values = _column(rows, column)
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.hist(values, bins=min(60, max(10, len(values) // 50 or 10)),
                color="#4878a8", edgecolor="white")
        ax.axvline(values.mean(), color="#222222", linestyle="--",
                   label=f"mean {values.mean():.2f} mm")
        if threshold is not None:
            ax.axvline(threshold, color="#b0413e", linestyle=":",
                       label=f"{threshold:g} mm criterion")
        ax.set_xlabel(label)
        ax.set_ylabel("trials")
        ax.legend(frameon=False)
        fig.tight_layout()
        path = out_dir / f"{column.removesuffix('_mm')}_hist.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
