"""Figure rendering for the singlet-order pulse-design toolkit's outputs."""

__version__ = "0.1.0"

from .render import STYLE_VERSION, render
from .schema import MissingColumnsError, SpecError, load_plot_spec
