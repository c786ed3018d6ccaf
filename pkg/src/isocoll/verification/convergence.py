"""Mesh-refinement studies and their CSV tables."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..cases import CaseDefinition
from ..integrator import RunOptions, RunResult, component_names, run
from .norms import error_norm

log = logging.getLogger(__name__)

CSV_COLUMNS = ("case", "k", "n_elements", "h", "norm", "error", "rate")


@dataclass
class ConvergenceRow:
    case: str
    k: int
    n_elements: int
    h: float
    norm: str
    error: float
    rate: float = math.nan


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow] = field(default_factory=list)
    failures: list[tuple[int, int, str]] = field(default_factory=list)

    def select(self, k: int | None = None, norm: str | None = None) -> list[ConvergenceRow]:
        return [r for r in self.rows
                if (k is None or r.k == k) and (norm is None or r.norm == norm)]

    def errors(self, k: int, norm: str) -> np.ndarray:
        return np.array([r.error for r in self.select(k, norm)])

    def rates(self, k: int, norm: str) -> np.ndarray:
        return np.array([r.rate for r in self.select(k, norm)][1:])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([r.case, r.k, r.n_elements, f"{r.h:.17g}", r.norm,
                             f"{r.error:.17g}", "" if math.isnan(r.rate) else f"{r.rate:.17g}"])
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())


def observed_rate(e_coarse: float, e_fine: float, h_coarse: float, h_fine: float) -> float:
    """``log(e_c / e_f) / log(h_c / h_f)``."""
    if not (e_coarse > 0 and e_fine > 0):
        return math.nan
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


def fill_rates(rows: Sequence[ConvergenceRow]) -> None:
    """Pairwise rates between successive rows of equal case, degree and norm."""
    groups: dict[tuple, list[ConvergenceRow]] = {}
    for r in rows:
        groups.setdefault((r.case, r.k, r.norm), []).append(r)
    for group in groups.values():
        group.sort(key=lambda r: -r.h)
        for coarse, fine in zip(group, group[1:]):
            fine.rate = observed_rate(coarse.error, fine.error, coarse.h, fine.h)


def element_size(case: CaseDefinition, n_elements) -> float:
    counts = [n_elements] * case.dim if np.isscalar(n_elements) else list(n_elements)
    return max((b - a) / n for (a, b), n in zip(case.domain, counts))


def convergence_study(case: CaseDefinition, degrees: Sequence[int], meshes: Sequence[int],
                      options: RunOptions | None = None, norms=("L1", "L2"),
                      exact=None, error_fn: Callable[[RunResult], dict] | None = None,
                      **run_kwargs) -> ConvergenceTable:
    """Run every (degree, mesh) pair and tabulate errors and observed rates.

    Errors are measured against ``exact`` (default: the case's exact
    solution) unless ``error_fn`` maps a run result to ``{norm: error}``.
    A failing run is logged and recorded; the other rows still run.
    """
    if len(meshes) < 2:
        raise ValueError("a convergence study needs at least two meshes")
    if error_fn is None:
        exact = exact if exact is not None else (case.exact() if case.exact else None)
        if exact is None:
            raise ValueError(f"{case.name} has no exact solution; pass exact= or error_fn=")
    table = ConvergenceTable()
    names = component_names(case.law)
    for k in degrees:
        for n in meshes:
            try:
                result = run(case, n, k, options, **run_kwargs)
            except Exception as exc:  # keep the other rows
                log.warning("%s k=%d n=%d failed: %s", case.name, k, n, exc)
                table.failures.append((k, n, repr(exc)))
                continue
            if error_fn is not None:
                errs = error_fn(result)
            else:
                errs = {}
                for norm in norms:
                    e = error_norm(result.system.space, result.state.coeffs, exact,
                                   result.state.t, norm)
                    if len(names) == 1:
                        errs[norm] = float(e[0])
                    else:
                        errs.update({f"{norm}_{nm}": float(v) for nm, v in zip(names, e)})
            h = element_size(case, n)
            for norm, e in errs.items():
                table.rows.append(ConvergenceRow(case.name, k, n, h, norm, float(e)))
    fill_rates(table.rows)
    return table
