"""Observed detection tables: total and error counts per (source, measured basis)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .model import NON_VACUUM, Basis, SourceId, Variant


class CountsError(ValueError):
    """A counts table lacks a required cell or holds an inconsistent one."""


@dataclass(frozen=True)
class Cell:
    total: float
    error: float | None = None

    def __post_init__(self):
        if self.total < 0:
            raise CountsError(f"negative total count {self.total}")
        if self.error is not None and not 0 <= self.error <= self.total:
            raise CountsError(f"error count {self.error} exceeds total {self.total}")


@dataclass(frozen=True)
class CountsTable:
    """Counts per cell. ``error`` is None where the experiment did not record it
    (cross-basis cells carry no error information)."""

    cells: Mapping[tuple[SourceId, Basis], Cell]
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        cells = {(SourceId(s), Basis(b)): c for (s, b), c in self.cells.items()}
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @classmethod
    def from_rows(cls, rows, metadata=None) -> "CountsTable":
        """Build from ``(source, basis, total, error)`` rows, rejecting duplicates."""
        cells: dict = {}
        for src, basis, total, error in rows:
            key = (SourceId(src), Basis(basis))
            if key in cells:
                raise CountsError(f"duplicate cell {key[0].value},{key[1].value}")
            try:
                cells[key] = Cell(float(total), None if error is None else float(error))
            except CountsError as exc:
                raise CountsError(f"cell {key[0].value},{key[1].value}: {exc}") from None
        return cls(cells, metadata or {})

    def cell(self, src: SourceId, basis: Basis) -> Cell:
        try:
            return self.cells[SourceId(src), Basis(basis)]
        except KeyError:
            raise CountsError(f"missing cell {SourceId(src).value},{Basis(basis).value}") from None

    def total(self, src: SourceId, basis: Basis) -> float:
        return self.cell(src, basis).total

    def error(self, src: SourceId, basis: Basis) -> float:
        c = self.cell(src, basis)
        if c.error is None:
            raise CountsError(f"cell {SourceId(src).value},{Basis(basis).value} has no recorded error count")
        return c.error

    def required_cells(self, variant: Variant) -> list[tuple[SourceId, Basis]]:
        srcs = NON_VACUUM + ((SourceId.VAC,) if Variant(variant).has_vacuum else ())
        return [(s, b) for s in srcs for b in Basis]

    def validate(self, variant: Variant) -> None:
        for s, b in self.required_cells(variant):
            self.cell(s, b)
        for b in Basis:
            # matched-basis errors drive the error-rate and vacuum bounds
            for rank in (1, 2):
                self.error(SourceId.of(b, rank), b)

    def scaled(self, factor: float) -> "CountsTable":
        return CountsTable(
            {k: Cell(c.total * factor, None if c.error is None else c.error * factor) for k, c in self.cells.items()},
            self.metadata,
        )

    def __iter__(self) -> Iterator[tuple[SourceId, Basis, Cell]]:
        order = {s: i for i, s in enumerate((*NON_VACUUM, SourceId.VAC))}
        for (s, b) in sorted(self.cells, key=lambda k: (order[k[0]], k[1].value == "X")):
            yield s, b, self.cells[s, b]
