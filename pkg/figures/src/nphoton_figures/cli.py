"""``render_figures <recipe.json> <outdir>`` entry point."""

from __future__ import annotations

import argparse
import sys

from .render import RecipeError, render_recipe_file


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render a figure recipe from nphoton CSV/meta outputs",
    )
    parser.add_argument("recipe", help="recipe JSON file")
    parser.add_argument("outdir", help="output directory")
    parser.add_argument("--data-dir", default=".",
                        help="directory holding the CSV/meta inputs")
    parser.add_argument("--format", default="png",
                        choices=["png", "pdf", "svg"])
    args = parser.parse_args(argv)
    try:
        out = render_recipe_file(args.recipe, args.outdir,
                                 data_dir=args.data_dir, fmt=args.format)
    except (RecipeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
