"""Writers for sweep results: ``result.csv``, ``result.json`` and ``plot.svg``.

All three files are byte-reproducible for a fixed fingerprint: floats are
written with ``%.17g``, JSON keys are sorted, and the SVG carries no date
and uses a fixed hash salt.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from displab.harness.experiments import SweepResult

__all__ = ["write_csv", "write_json", "write_plot", "write_report"]

_SVG_SALT = "displab"


def _fmt(v: float) -> str:
    return "%.17g" % v


def write_csv(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["scale", "lhs", "rhs", "ratio"])
        for rec in result.records:
            wr.writerow([_fmt(v) for v in rec])
    return path


def write_json(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(result.to_dict(), sort_keys=True, indent=2) + "\n")
    return path


def write_plot(result: SweepResult, path: str | Path) -> Path:
    """Log-log plot of the ratio column with the fitted line, when there is one."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    scales = np.array([r[0] for r in result.records])
    ratios = np.array([r[3] for r in result.records])
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ok = np.isfinite(ratios) & (ratios > 0)
        ax.loglog(scales[ok], ratios[ok], "o", label="measured", base=2)
        if result.slope is not None and ok.sum() >= 2:
            x = np.log2(scales[ok])
            y = np.log2(ratios[ok])
            icpt = float(np.mean(y - result.slope * x))
            ax.loglog(scales[ok], 2.0 ** (icpt + result.slope * x), "-", base=2,
                      label=f"slope {result.slope:.3f}")
        theory = next((c.target for c in result.checks if "slope" in c.name and c.mode == "abs"), None)
        if theory is not None and ok.sum() >= 2:
            x = np.log2(scales[ok])
            y = np.log2(ratios[ok])
            icpt = float(np.mean(y - theory * x))
            ax.loglog(scales[ok], 2.0 ** (icpt + theory * x), "--", base=2, color="0.5",
                      label=f"theory {theory:.3f}")
        ax.set_xlabel("scale")
        ax.set_ylabel("lhs / rhs")
        status = "pass" if result.passed else "FAIL"
        ax.set_title(f"{result.kind} ({status})")
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def write_report(result: SweepResult, out_dir: str | Path, plot: bool = True) -> dict[str, Path]:
    """Write all artefacts of one sweep into ``out_dir`` (created if needed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": write_csv(result, out / "result.csv"),
        "json": write_json(result, out / "result.json"),
    }
    if plot and len(result.records) > 0 and any(
        math.isfinite(r[3]) and r[3] > 0 for r in result.records
    ):
        paths["svg"] = write_plot(result, out / "plot.svg")
    return paths
