"""PNG renderings of report plot series."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _bar(series, ax):
    vals = np.array([np.nan if v is None else v for v in series["values"]], dtype=float)
    colors = ["tab:red" if v > 0 else "tab:blue" for v in np.nan_to_num(vals)]
    ax.barh(series["labels"], vals, color=colors)
    ax.invert_yaxis()
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("attribution")


def _grid(series, ax):
    points = ["(" + ",".join(f"{c:g}" for c in p) + ")" for p in series["points"]]
    feats = series["features"]
    x = np.arange(len(points))
    width = 0.8 / max(len(feats), 1)
    for k, f in enumerate(feats):
        vals = np.array([np.nan if v is None else v for v in series["values"][f]], dtype=float)
        ax.bar(x + k * width, vals, width, label=f)
    bad = {tuple(p) for p in series.get("violations", [])}
    for j, p in enumerate(series["points"]):
        if tuple(p) in bad:
            ax.axvspan(j - 0.1, j + 0.9, color="tab:red", alpha=0.12)
    ax.set_xticks(x + 0.4 - width / 2)
    ax.set_xticklabels(points, rotation=90, fontsize=7)
    ax.set_ylabel("normalized attribution")
    ax.legend()


def render_series(series: list, directory) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for s in series:
        wide = s["kind"] == "grid"
        fig, ax = plt.subplots(figsize=(10 if wide else 6, 4))
        (_grid if wide else _bar)(s, ax)
        ax.set_title(s["name"])
        fig.tight_layout()
        p = directory / f"{s['name']}.png"
        fig.savefig(p, dpi=100, metadata={"Software": None})
        plt.close(fig)
        out.append(p)
    return out
