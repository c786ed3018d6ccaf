"""Regenerate the frozen fine-grid finite-volume references.

    python3 tests/data/make_oracles.py

Each case is integrated on 512^2 cells and stored block-averaged to 128^2.
"""

from pathlib import Path

import numpy as np

from isocoll.cases import builtin_case
from isocoll.verification.fv import coarsen, reference_fv_solution

FINE_CELLS = 512
STORED_CELLS = 128
HERE = Path(__file__).resolve().parent


def build(name: str) -> Path:
    case = builtin_case(name)
    sol = coarsen(reference_fv_solution(case, FINE_CELLS), FINE_CELLS // STORED_CELLS)
    path = HERE / f"fv_{name}.npz"
    np.savez_compressed(path, x=sol.centers[0], y=sol.centers[1], values=sol.values,
                        t=sol.t, fine_cells=FINE_CELLS)
    return path


if __name__ == "__main__":
    for name in ("burgers_riemann_2d", "euler_case12"):
        print(build(name))
