"""Acceptance checks for the renderers against real pipeline artifacts.

The scan and eigenvalue inputs are produced by invoking the ``helmres``
command-line tool, i.e. exactly the files a user would feed to the
render scripts; nothing is imported from the solver package.
"""
import subprocess

import matplotlib.pyplot as plt
import numpy as np
import pytest

from resplot import load_scan, render_contour, render_convergence

REGION = "1.25,2.9,-0.1,-0.005"
SLOPE_RANGE = (-2.2, -1.2)

# first-resonance positions at doubling resolution (published reference
# values), used as input data for the convergence renderer
STUDY_ROWS = [
    (5, 1.3186, -0.0019),
    (10, 1.3147, -0.0023),
    (20, 1.3135, -0.0024),
    (40, 1.3131, -0.0025),
    (80, 1.3130, -0.0025),
]


@pytest.fixture(scope="session")
def chamber_artifacts(tmp_path_factory):
    base = tmp_path_factory.mktemp("chamber")
    scan = base / "scan.csv"
    eigs = base / "eigs.json"
    subprocess.run(
        ["helmres", "scan", "--obstacle", "circular_chamber", "--h", "0.1",
         "--N", "20", "--region", REGION, "--grid-step", "0.01",
         "--out", str(scan)], check=True, capture_output=True)
    subprocess.run(
        ["helmres", "eigs", "--obstacle", "circular_chamber",
         "--out", str(eigs)], check=True, capture_output=True)
    return scan, eigs


def test_criterion_8_contour_shows_three_wells_and_markers(chamber_artifacts, tmp_path):
    scan, eigs = chamber_artifacts
    out = tmp_path / "contour.png"
    fig = render_contour(str(scan), eigs_path=str(eigs), out_path=str(out))
    try:
        assert out.exists() and out.stat().st_size > 0
        assert load_scan(str(scan)).well_count() == 3
        markers = [ln for ax in fig.axes for ln in ax.get_lines()
                   if ln.get_color() == "red"]
        assert len(markers) == 1 and len(markers[0].get_xdata()) == 3
    finally:
        plt.close(fig)


def test_criterion_8_convergence_slope_annotation(tmp_path):
    study = tmp_path / "study.csv"
    lines = ["n,re,im,succ_err"]
    for (n, re, im), nxt in zip(STUDY_ROWS, STUDY_ROWS[1:] + [None]):
        err = "" if nxt is None else \
            f"{abs(complex(re, im) - complex(nxt[1], nxt[2])):.6g}"
        lines.append(f"{n},{re},{im},{err}")
    study.write_text("\n".join(lines) + "\n")
    out = tmp_path / "conv.png"
    fig, slope = render_convergence(str(study), out_path=str(out))
    plt.close(fig)
    assert out.exists()
    assert SLOPE_RANGE[0] <= slope <= SLOPE_RANGE[1]
