"""Grid-refinement studies on nested grids h, h/2, h/4.

A check is any callable ``check(grid, reference)`` returning a list of
:class:`~kwlab.residuals.ResidualReport`; ``reference`` is the coarsest grid,
so that boundary margins cover the same physical region on every level.
"""

from dataclasses import dataclass

import numpy as np

RATIO_BAND = (3.2, 4.8)
# residuals at or below this are exact zeros up to roundoff
EXACT_FLOOR = 1e-10


@dataclass(frozen=True)
class StudyRow:
    equation: str
    errors: tuple
    l2: tuple
    h: tuple
    excluded: tuple

    @property
    def ratios(self):
        e = self.errors
        with np.errstate(divide="ignore", invalid="ignore"):
            return tuple(float(a / b) if b > 0 else float("inf") for a, b in zip(e[:-1], e[1:]))

    @property
    def exact(self):
        return max(self.errors) <= EXACT_FLOOR

    @property
    def second_order(self):
        lo, hi = RATIO_BAND
        return all(lo <= r <= hi for r in self.ratios)

    @property
    def passed(self):
        return self.exact or self.second_order

    @property
    def status(self):
        if self.exact:
            return "exact"
        return "pass" if self.second_order else "fail"


def convergence_study(check, grids):
    """Run ``check`` on each nested grid and tabulate refinement ratios.

    Parameters
    ----------
    check : callable
        ``check(grid, reference) -> list[ResidualReport]``.
    grids : sequence of GridSpec
        Three (or more) nested grids, coarsest first.

    Returns
    -------
    list of StudyRow
        One row per equation id, in the order the check reports them.
    """
    grids = list(grids)
    if len(grids) < 3:
        raise ValueError("a convergence study needs three nested grids")
    for a, b in zip(grids[:-1], grids[1:]):
        if b.n_x != 2 * a.n_x - 1 or b.n_t != 2 * a.n_t - 1:
            raise ValueError("grids must be nested: each level halves the spacing")
    reference = grids[0]
    per_level = [check(g, reference) for g in grids]
    rows = []
    for i, rep in enumerate(per_level[0]):
        level = [reports[i] for reports in per_level]
        rows.append(StudyRow(
            equation=rep.equation,
            errors=tuple(r.max_abs for r in level),
            l2=tuple(r.l2 for r in level),
            h=tuple(r.grid_h for r in level),
            excluded=tuple(r.excluded for r in level),
        ))
    return rows


def study_table(rows):
    """Flatten study rows into records with the report CSV columns."""
    out = []
    for row in rows:
        prev = None
        for h, e, l2, ex in zip(row.h, row.errors, row.l2, row.excluded):
            ratio = "" if prev is None else (prev / e if e > 0 else float("inf"))
            out.append({"equation": row.equation, "grid_h": h, "max_abs": e, "l2": l2,
                        "excluded": ex, "ratio_vs_previous": ratio})
            prev = e
    return out
