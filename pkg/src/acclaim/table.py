"""Columnar feature table with per-column provenance and family tags.

Families partition columns by role: ``meta`` (ids, timestamps), ``Z``
(author baseline covariates), ``A`` (pre-feedback linguistic features),
``outcome`` (labels), ``neural`` (adapter-supplied score columns that have
not been promoted into A). Provenance records how a column was produced:
``raw``, ``engineered``, or ``standardized``. The stratification stage uses
the family tags to guarantee risk models never see an A column.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import pandas as pd


@dataclass
class FeatureTable:
    frame: pd.DataFrame
    family: dict[str, str] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for col in self.frame.columns:
            self.family.setdefault(col, "meta")
            self.provenance.setdefault(col, "raw")

    def columns(self, family: str) -> list[str]:
        return [c for c in self.frame.columns if self.family.get(c) == family]

    def set_column(self, name: str, values, family: str, provenance: str) -> None:
        self.frame[name] = values
        self.family[name] = family
        self.provenance[name] = provenance

    def drop_column(self, name: str) -> None:
        self.frame.drop(columns=[name], inplace=True)
        self.family.pop(name, None)
        self.provenance.pop(name, None)

    def subset(self, mask) -> "FeatureTable":
        return FeatureTable(
            frame=self.frame.loc[mask].copy(),
            family=dict(self.family),
            provenance=dict(self.provenance),
        )

    def copy(self) -> "FeatureTable":
        return FeatureTable(
            frame=self.frame.copy(),
            family=dict(self.family),
            provenance=dict(self.provenance),
        )

    def assert_family(self, columns, expected: str) -> None:
        wrong = [c for c in columns if self.family.get(c) != expected]
        if wrong:
            raise ValueError(
                f"columns {wrong} are not in family '{expected}': "
                f"{[self.family.get(c) for c in wrong]}"
            )
