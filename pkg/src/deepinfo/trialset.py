"""Row-aligned stimulus / layer / response container."""
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidDataError


@dataclass
class TrialSet:
    """Per-trial stimulus features ``S``, layer activations ``L`` and response ``R``.

    Rows are ordered (identity, viewpoint, replicate). ``S`` holds ``f`` features
    of ``feature_dims`` consecutive columns each; ``grid_shape`` lays the
    features out for map rendering.
    """

    S: np.ndarray
    identity: np.ndarray
    viewpoint: np.ndarray
    replicate: np.ndarray
    channel: np.ndarray
    feature_dims: int = 1
    grid_shape: tuple = (32, 32)
    feature_space: str = "pixel"
    images: np.ndarray = field(default=None, repr=False)
    L: dict = field(default_factory=dict, repr=False)
    R: np.ndarray = field(default=None, repr=False)
    target: int = None

    def __post_init__(self):
        self.validate()

    @property
    def n_trials(self):
        return self.S.shape[0]

    @property
    def n_features(self):
        return self.S.shape[1] // self.feature_dims

    def validate(self):
        n = self.S.shape[0]
        for name in ("identity", "viewpoint", "replicate", "channel"):
            if len(getattr(self, name)) != n:
                raise InvalidDataError(f"label {name!r} has {len(getattr(self, name))} rows, expected {n}")
        if self.S.shape[1] % self.feature_dims:
            raise InvalidDataError("S columns are not a multiple of feature_dims")
        if int(np.prod(self.grid_shape)) != self.n_features:
            raise InvalidDataError(f"grid {self.grid_shape} does not hold {self.n_features} features")
        if self.images is not None and len(self.images) != n:
            raise InvalidDataError("images not aligned with S")
        for name, mat in self.L.items():
            if len(mat) != n:
                raise InvalidDataError(f"capture {name!r} has {len(mat)} rows, expected {n}")
        if self.R is not None and len(self.R) != n:
            raise InvalidDataError("R not aligned with S")

    def select(self, rows):
        """Sub-trialset for a boolean mask or index array, order preserved."""
        rows = np.asarray(rows)
        if rows.dtype == bool:
            rows = np.flatnonzero(rows)
        return replace(
            self,
            S=self.S[rows],
            identity=self.identity[rows],
            viewpoint=self.viewpoint[rows],
            replicate=self.replicate[rows],
            channel=self.channel[rows],
            images=None if self.images is None else self.images[rows],
            L={k: v[rows] for k, v in self.L.items()},
            R=None if self.R is None else self.R[rows],
        )

    def viewpoints(self):
        return sorted(set(int(v) for v in self.viewpoint))
