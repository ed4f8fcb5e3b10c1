"""Figure rendering for simulator run directories.

Consumes only the CSV/JSON artifacts written by the `clonal-evolve` command
line; never recomputes model quantities.
"""

from .artifacts import SchemaError, load_snapshot, load_totals
from .figures import FIGURES, FigureSpec, render, render_many

__version__ = "0.1.0"

__all__ = ["SchemaError", "load_snapshot", "load_totals", "FIGURES",
           "FigureSpec", "render", "render_many", "__version__"]
