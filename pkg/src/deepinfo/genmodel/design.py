"""Treatment-coded design matrices over categorical factors."""
import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfigError, InvalidLevelError


@dataclass(frozen=True)
class FactorSpec:
    """Categorical factors as ``(name, level_count)`` pairs.

    Columns are: intercept, then one dummy per non-reference level for each
    factor in declaration order, then (if requested) products of dummies for
    every factor pair ``(a, b)`` with ``a < b`` in declaration order.
    """

    factors: tuple
    include_interactions: bool = True

    def __post_init__(self):
        factors = tuple((str(name), int(count)) for name, count in self.factors)
        object.__setattr__(self, "factors", factors)
        names = [name for name, _ in factors]
        if not factors:
            raise InvalidConfigError("at least one factor is required")
        if len(set(names)) != len(names):
            raise InvalidConfigError("factor names must be unique", factors=names)
        for name, count in factors:
            if count < 2:
                raise InvalidConfigError(f"factor {name!r} needs >= 2 levels, got {count}")

    @property
    def names(self):
        return [name for name, _ in self.factors]

    @property
    def level_counts(self):
        return [count for _, count in self.factors]

    def pairs(self):
        if not self.include_interactions:
            return []
        return list(itertools.combinations(range(len(self.factors)), 2))

    @property
    def n_columns(self):
        counts = self.level_counts
        main = sum(c - 1 for c in counts)
        inter = sum((counts[a] - 1) * (counts[b] - 1) for a, b in self.pairs())
        return 1 + main + inter

    def column_names(self):
        cols = ["intercept"]
        for name, count in self.factors:
            cols += [f"{name}[{lvl}]" for lvl in range(1, count)]
        for a, b in self.pairs():
            (na, ca), (nb, cb) = self.factors[a], self.factors[b]
            cols += [f"{na}[{i}]:{nb}[{j}]" for i in range(1, ca) for j in range(1, cb)]
        return cols

    def cells(self):
        """Every combination of levels, in lexicographic order."""
        return list(itertools.product(*[range(c) for c in self.level_counts]))

    def to_dict(self):
        return {"factors": [list(f) for f in self.factors], "include_interactions": self.include_interactions}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(tuple(f) for f in d["factors"]), bool(d.get("include_interactions", True)))


# the scanned-face database structure (sex x ethnicity x age x expression)
PAPER_FACTORS = FactorSpec((("sex", 2), ("ethnicity", 2), ("age", 3), ("expression", 7)), True)
DESK_FACTORS = FactorSpec((("sex", 2), ("age", 3)), True)


def _levels_tuple(row, spec):
    if isinstance(row, dict):
        try:
            row = [row[name] for name in spec.names]
        except KeyError as exc:
            raise InvalidLevelError(f"missing level for factor {exc.args[0]!r}") from exc
    row = list(row)
    if len(row) != len(spec.factors):
        raise InvalidLevelError(f"expected {len(spec.factors)} levels, got {len(row)}", row=row)
    out = []
    for (name, count), level in zip(spec.factors, row):
        if isinstance(level, (bool, np.bool_)) or not float(level).is_integer() or not 0 <= int(level) < count:
            raise InvalidLevelError(f"level {level!r} is not valid for factor {name!r} ({count} levels)")
        out.append(int(level))
    return out


def build_design_matrix(factor_levels_per_row, spec):
    """Design matrix (rows x ``spec.n_columns``) for the given level table."""
    rows = [_levels_tuple(r, spec) for r in factor_levels_per_row]
    counts = spec.level_counts
    D = np.zeros((len(rows), spec.n_columns))
    D[:, 0] = 1.0
    dummies = []
    col = 1
    for k, c in enumerate(counts):
        block = np.zeros((len(rows), c - 1))
        for i, r in enumerate(rows):
            if r[k] > 0:
                block[i, r[k] - 1] = 1.0
        dummies.append(block)
        D[:, col:col + c - 1] = block
        col += c - 1
    for a, b in spec.pairs():
        prod = (dummies[a][:, :, None] * dummies[b][:, None, :]).reshape(len(rows), -1)
        D[:, col:col + prod.shape[1]] = prod
        col += prod.shape[1]
    return D


def balanced_levels(spec, n_per_cell):
    """Level table with ``n_per_cell`` rows for every factor cell."""
    return [cell for cell in spec.cells() for _ in range(n_per_cell)]
