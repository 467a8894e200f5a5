"""Report figures (rendered to files, never shown)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import EvalReport, logistic  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "legend.frameon": False,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def plot_eval(report: EvalReport, path, title=None):
    """Scatter of objective score vs MOS with the fitted logistic curve."""
    scores = np.array([r["score"] for r in report.per_row])
    mos = np.array([r["mos"] for r in report.per_row])
    labels = [r.get("class") for r in report.per_row]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.8))
        groups = sorted({lab for lab in labels if lab is not None}) or [None]
        for lab in groups:
            m = np.array([x == lab for x in labels])
            ax.scatter(scores[m], mos[m], s=22, label=lab if lab is not None else "rows")
        xs = np.linspace(scores.min(), scores.max(), 200)
        ax.plot(xs, logistic(xs, *report.logistic_params), color="k", lw=1.2, label="logistic fit")
        ax.set_xlabel("objective score Q")
        ax.set_ylabel("MOS")
        ax.set_title(title or f"PLCC {report.plcc:.3f}  SRCC {report.srcc:.3f}  "
                              f"RMSE {report.rmse:.3f}  (n={report.n})")
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
