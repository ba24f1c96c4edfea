import numpy as np
import pandas as pd
import pytest

from pcadrank.dataio import CohortSchema, ColumnKind, ColumnRole, ColumnSchema, Table
from pcadrank.synth import generate, planted_ablation_spec, separable_spec


def build_table(data, numeric=(), group=None, label="label", positive="yes"):
    columns = []
    for name in data:
        if name == label:
            columns.append(ColumnSchema(name=name, kind=ColumnKind.CATEGORICAL, role=ColumnRole.LABEL, positive_label=positive))
        elif name == group:
            columns.append(ColumnSchema(name=name, kind=ColumnKind.CATEGORICAL, role=ColumnRole.GROUP))
        else:
            kind = ColumnKind.NUMERIC if name in numeric else ColumnKind.CATEGORICAL
            columns.append(ColumnSchema(name=name, kind=kind))
    return Table.from_frame(CohortSchema(columns=tuple(columns)), pd.DataFrame(data))


@pytest.fixture
def make_table():
    return build_table


@pytest.fixture
def mixed_table():
    """120 rows, 40 positive; x drives the label, z is noise, colour is categorical."""
    rng = np.random.default_rng(5)
    n = 120
    x = rng.normal(size=n)
    label = np.where(x > np.quantile(x, 2 / 3), "yes", "no")
    return build_table(
        {
            "x": x,
            "z": rng.normal(size=n),
            "colour": rng.choice(["red", "green", "blue"], size=n),
            "label": label,
        },
        numeric=("x", "z"),
    )


@pytest.fixture(scope="session")
def separable_cohort():
    return generate(separable_spec(n_rows=2000, seed=7)).table


@pytest.fixture(scope="session")
def planted_cohort():
    return generate(planted_ablation_spec(1.5, n_rows=1000, seed=3)).table
