from .render import RecipeError, load_table, render, render_recipe_file, save

__version__ = "0.1.0"

__all__ = [
    "RecipeError",
    "load_table",
    "render",
    "render_recipe_file",
    "save",
    "__version__",
]
