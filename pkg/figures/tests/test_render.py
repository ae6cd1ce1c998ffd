import json

import numpy as np
import pytest

from nphoton_figures import RecipeError, load_table, render, render_recipe_file
from nphoton_figures.cli import main


def test_load_table_columns(mini_data):
    data_dir, _, _ = mini_data
    table = load_table(data_dir / "mini.csv")
    assert set(table) == {"omega1", "g2", "flag"}
    assert table["omega1"][0] == -1.0
    assert np.isnan(table["g2"][1])
    assert table["flag"][1] == "starved"


def test_flagged_points_become_gaps(mini_data):
    data_dir, _, recipe = mini_data
    fig = render(recipe, data_dir)
    ax = fig.axes[0]
    line = ax.lines[0]
    y = line.get_ydata()
    assert np.isnan(y[1])  # gap, not zero
    assert not np.any(y[np.isfinite(y)] == 0.0)


def test_log_axis_and_guides(mini_data):
    data_dir, _, recipe = mini_data
    fig = render(recipe, data_dir)
    ax = fig.axes[0]
    assert ax.get_yscale() == "log"
    guide_xs = sorted(
        ln.get_xdata()[0] for ln in ax.lines if len(set(ln.get_xdata())) == 1
    )
    assert guide_xs == [-1.0, 1.0]  # the ladder frequencies from meta


def test_missing_column_is_named_error(mini_data):
    data_dir, _, recipe = mini_data
    bad = dict(recipe)
    bad["series"] = [dict(recipe["series"][0], y="g3")]
    with pytest.raises(RecipeError, match="missing column 'g3'"):
        render(bad, data_dir)


def test_render_is_deterministic(mini_data, tmp_path):
    data_dir, recipe_path, _ = mini_data
    out1 = render_recipe_file(recipe_path, tmp_path / "a", data_dir=data_dir)
    out2 = render_recipe_file(recipe_path, tmp_path / "b", data_dir=data_dir)
    assert out1.read_bytes() == out2.read_bytes()


def test_cli_roundtrip(mini_data, tmp_path, capsys):
    data_dir, recipe_path, _ = mini_data
    rc = main([str(recipe_path), str(tmp_path / "out"),
               "--data-dir", str(data_dir)])
    assert rc == 0
    assert (tmp_path / "out" / "mini_recipe.png").exists()


def test_cli_reports_missing_input(tmp_path, capsys):
    recipe = {"series": [{"csv": "absent.csv", "x": "omega1", "y": "g2"}]}
    recipe_path = tmp_path / "r.json"
    recipe_path.write_text(json.dumps(recipe))
    rc = main([str(recipe_path), str(tmp_path), "--data-dir", str(tmp_path)])
    assert rc == 1
    assert "absent.csv" in capsys.readouterr().err


def test_table_without_flag_column(tmp_path):
    csv = tmp_path / "plain.csv"
    csv.write_text("n,v\n2,1.0\n3,2.0\n")
    recipe = {
        "series": [{"csv": "plain.csv", "x": "n", "y": "v"}],
        "logy": True,
    }
    fig = render(recipe, tmp_path)
    assert len(fig.axes[0].lines) == 1
