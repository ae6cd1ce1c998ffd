"""Render paper-style figures from nphoton CSV/meta outputs.

The renderer consumes only the engine's published file formats (the CSV
scan tables and their JSON sidecars); it never calls the engine.  Flagged
points become gaps, correlation panels use logarithmic vertical axes and
dressed-ladder frequencies read from the sidecar become vertical guide
lines.  Output is deterministic: fixed style, no timestamps.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.25,
    "font.size": 9,
    "svg.hashsalt": "nphoton-figures",
}

GUIDE_COLOR = "0.45"


class RecipeError(ValueError):
    pass


def load_table(csv_path: Path) -> dict[str, np.ndarray]:
    """Read a scan CSV into named columns; the flag column stays text."""
    lines = Path(csv_path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise RecipeError(f"empty csv: {csv_path}")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:] if line]
    cols: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        if name == "flag":
            cols[name] = np.array(raw, dtype=object)
        else:
            cols[name] = np.array(
                [float(v) if v != "nan" else np.nan for v in raw]
            )
    return cols


def masked_values(table: dict[str, np.ndarray], column: str,
                  csv_name: str) -> np.ndarray:
    if column not in table:
        raise RecipeError(f"missing column {column!r} in {csv_name}")
    vals = table[column].astype(float).copy()
    flags = table.get("flag")
    if flags is not None:
        vals[np.array([bool(f) for f in flags])] = np.nan  # gaps, not zeros
    return vals


def ladder_guides(meta_path: Path) -> list[dict]:
    try:
        meta = json.loads(Path(meta_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return []
    return meta.get("ladder", [])


def render(recipe: dict, data_dir: Path, fig=None):
    """Draw one recipe onto a fresh figure; returns the figure."""
    with plt.rc_context(STYLE):
        if fig is None:
            fig = plt.figure()
        ax = fig.add_subplot(111)
        guides_drawn = set()
        for series in recipe.get("series", []):
            csv_name = series["csv"]
            table = load_table(data_dir / csv_name)
            x_col = series["x"]
            if x_col not in table:
                raise RecipeError(f"missing column {x_col!r} in {csv_name}")
            x = table[x_col].astype(float)
            y = masked_values(table, series["y"], csv_name)
            ax.plot(x, y, series.get("style", "-"),
                    label=series.get("label"), linewidth=1.2, markersize=4)
            if recipe.get("guides") == "ladder":
                meta_name = series.get("meta",
                                       csv_name.replace(".csv", ".meta.json"))
                for t in ladder_guides(data_dir / meta_name):
                    freq = round(float(t["frequency"]), 9)
                    if freq not in guides_drawn:
                        guides_drawn.add(freq)
                        ax.axvline(freq, color=GUIDE_COLOR, linestyle=":",
                                   linewidth=0.7, zorder=0)
        if recipe.get("logy"):
            ax.set_yscale("log")
        if recipe.get("logx"):
            ax.set_xscale("log")
        ax.set_xlabel(recipe.get("xlabel", ""))
        ax.set_ylabel(recipe.get("ylabel", ""))
        if recipe.get("title"):
            ax.set_title(recipe["title"])
        if any(s.get("label") for s in recipe.get("series", [])):
            ax.legend(loc=recipe.get("legend_loc", "best"))
        fig.tight_layout()
    return fig


def save(fig, out_path: Path):
    """Write the figure without volatile metadata (byte-reproducible)."""
    out_path = Path(out_path)
    suffix = out_path.suffix.lower()
    metadata = None
    if suffix == ".pdf":
        metadata = {"CreationDate": None, "Producer": None, "Creator": None}
    elif suffix == ".svg":
        metadata = {"Date": None}
    fig.savefig(out_path, metadata=metadata)
    plt.close(fig)


def render_recipe_file(recipe_path, outdir, data_dir=None,
                       fmt: str = "png") -> Path:
    recipe_path = Path(recipe_path)
    recipe = json.loads(recipe_path.read_text(encoding="utf-8"))
    data_dir = Path(data_dir) if data_dir is not None else Path.cwd()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    out_path = outdir / f"{recipe_path.stem}.{fmt}"
    fig = render(recipe, data_dir)
    save(fig, out_path)
    return out_path
