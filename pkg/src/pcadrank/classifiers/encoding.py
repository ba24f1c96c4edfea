from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd

from pcadrank.dataio import Table
from pcadrank.errors import DataError


@dataclass(frozen=True)
class FeatureEncoder:
    """Numeric columns (optionally standardised) plus one indicator per observed category.

    Categories never seen in training encode as all zeros.
    """

    features: tuple[str, ...]
    numeric: dict[str, tuple[float, float]]  # name -> (center, scale)
    categories: dict[str, tuple[str, ...]]

    @classmethod
    def fit(cls, table: Table, standardize: bool) -> FeatureEncoder:
        numeric, categories = {}, {}
        for name in table.features:
            values = table.column(name)
            if table.schema.is_numeric(name):
                values = values.astype(float)
                scale = float(values.std()) if standardize else 1.0
                numeric[name] = (float(values.mean()) if standardize else 0.0, scale if scale > 0 else 1.0)
            else:
                categories[name] = tuple(sorted(set(values)))
        return cls(tuple(table.features), numeric, categories)

    @property
    def columns(self) -> list[str]:
        names = []
        for name in self.features:
            if name in self.numeric:
                names.append(name)
            else:
                names.extend(f"{name}={value}" for value in self.categories[name])
        return names

    def transform(self, frame: pd.DataFrame) -> np.ndarray:
        missing = [name for name in self.features if name not in frame.columns]
        if missing:
            raise DataError(f"schema mismatch: missing feature column(s) {missing}")
        blocks = []
        for name in self.features:
            if name in self.numeric:
                center, scale = self.numeric[name]
                try:
                    values = frame[name].to_numpy(dtype=float)
                except (TypeError, ValueError) as exc:
                    raise DataError(f"schema mismatch: non-numeric value in {name!r}") from exc
                blocks.append(((values - center) / scale)[:, None])
            else:
                values = frame[name].astype(str).to_numpy()
                blocks.append(np.column_stack([values == c for c in self.categories[name]]).astype(float))
        return np.hstack(blocks)

    def to_dict(self) -> dict[str, Any]:
        return {
            "features": list(self.features),
            "numeric": {k: list(v) for k, v in self.numeric.items()},
            "categories": {k: list(v) for k, v in self.categories.items()},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FeatureEncoder:
        return cls(
            tuple(data["features"]),
            {k: (float(v[0]), float(v[1])) for k, v in data["numeric"].items()},
            {k: tuple(v) for k, v in data["categories"].items()},
        )
