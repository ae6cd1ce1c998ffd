import json
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent.parent
RECIPE_DIR = Path(__file__).resolve().parent.parent / "recipes"
ACCEPTANCE_OUTPUTS = REPO_ROOT / "acceptance_outputs"


@pytest.fixture
def mini_data(tmp_path):
    """A miniature but schema-exact scan output pair."""
    csv = tmp_path / "mini.csv"
    csv.write_text(
        "omega1,g2,flag\n"
        "-1.0000000000000000e+00,2.5000000000000000e+00,\n"
        "-5.0000000000000000e-01,nan,starved\n"
        "0.0000000000000000e+00,5.0000000000000001e-01,\n"
        "5.0000000000000000e-01,1.2000000000000000e+00,\n"
        "1.0000000000000000e+00,3.1000000000000001e+00,\n"
    )
    meta = tmp_path / "mini.meta.json"
    meta.write_text(
        json.dumps(
            {
                "ladder": [
                    {"rung": 1, "branch": "+", "frequency": 1.0,
                     "linewidth": 0.055, "name": "|1,+> -> |vac>"},
                    {"rung": 1, "branch": "-", "frequency": -1.0,
                     "linewidth": 0.055, "name": "|1,-> -> |vac>"},
                ]
            }
        )
    )
    recipe = {
        "title": "mini",
        "xlabel": "omega_1 / g",
        "ylabel": "g2",
        "logy": True,
        "guides": "ladder",
        "series": [
            {"csv": "mini.csv", "x": "omega1", "y": "g2", "label": "mini",
             "style": "-"}
        ],
    }
    recipe_path = tmp_path / "mini_recipe.json"
    recipe_path.write_text(json.dumps(recipe))
    return tmp_path, recipe_path, recipe
