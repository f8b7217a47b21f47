"""Script entry points: ``render-contour`` and ``render-convergence``."""
from __future__ import annotations

import argparse
import sys

from .render import InputError, render_contour, render_convergence

EXIT_OK = 0
EXIT_INPUT = 2


def _zoom(text: str):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("zoom needs re0,re1,im0,im1")
    return tuple(parts)


def main_contour(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render-contour",
        description="Render a log|det| scan CSV as a filled contour PNG.")
    parser.add_argument("--scan", required=True, help="scan CSV path")
    parser.add_argument("--eigs", help="eigenvalue JSON for red markers")
    parser.add_argument("--zoom", type=_zoom,
                        help="re0,re1,im0,im1 window for a second panel")
    parser.add_argument("--out", required=True, help="output PNG path")
    args = parser.parse_args(argv)
    try:
        render_contour(args.scan, eigs_path=args.eigs, zoom=args.zoom,
                       out_path=args.out)
    except (InputError, OSError) as exc:
        print(f"render-contour: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main_convergence(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render-convergence",
        description="Render a convergence-study CSV as a PNG.")
    parser.add_argument("--study", required=True, help="study CSV path")
    parser.add_argument("--out", required=True, help="output PNG path")
    args = parser.parse_args(argv)
    try:
        render_convergence(args.study, out_path=args.out)
    except (InputError, OSError) as exc:
        print(f"render-convergence: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK
