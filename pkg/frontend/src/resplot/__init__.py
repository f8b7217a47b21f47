"""Figure rendering for resonance-scan CSV/JSON artifacts."""
from .render import (InputError, ScanGrid, load_eigenvalues, load_scan,
                     load_study, render_contour, render_convergence)

__all__ = [
    "InputError",
    "ScanGrid",
    "load_eigenvalues",
    "load_scan",
    "load_study",
    "render_contour",
    "render_convergence",
]
