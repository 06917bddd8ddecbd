"""Figure rendering for wsnloc experiment CSV outputs."""

from .figures import (
    FIGURE_IDS,
    SCHEMAS,
    FigureSpec,
    SchemaError,
    bin_by_count,
    ellipse_patch,
    load_table,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "FIGURE_IDS",
    "SCHEMAS",
    "FigureSpec",
    "SchemaError",
    "bin_by_count",
    "ellipse_patch",
    "load_table",
    "render",
    "__version__",
]
