"""Random identities and generative-space noise."""
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InvalidConfigError, InvalidScaleError
from .glm import CHANNELS

NOISE_CHANNELS = ("shape", "texture", "both")
NOISE_SCALES = ("population", "magnitude")


@dataclass(frozen=True)
class Identity:
    factor_levels: tuple
    residual_coeffs: dict = field(compare=False)  # channel -> (n_pcs,) array
    id_label: int = 0

    def coefficients(self, model):
        """Full coefficient vectors ``{channel: categorical mean + residual}``."""
        return {
            ch: model[ch].coefficients_for(self.factor_levels, self.residual_coeffs[ch]) for ch in CHANNELS
        }

    def to_dict(self):
        return {
            "id_label": self.id_label,
            "factor_levels": list(self.factor_levels),
            "residual_coeffs": {ch: self.residual_coeffs[ch].tolist() for ch in CHANNELS},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(d["factor_levels"]),
            {ch: np.asarray(v, dtype=np.float64) for ch, v in d["residual_coeffs"].items()},
            int(d["id_label"]),
        )


@dataclass(frozen=True)
class NoiseSpec:
    """Diagonal Gaussian noise on one or both channels' residual coefficients.

    ``proportion`` multiplies, per coefficient, either the population standard
    deviation (``relative_to="population"``, the default) or the magnitude of
    the identity's own coefficient (``"magnitude"``). Proportion 0 is an exact
    no-op.
    """

    channel: str
    proportion: float
    seed: int = 0
    relative_to: str = "population"

    def __post_init__(self):
        if self.channel not in NOISE_CHANNELS:
            raise InvalidConfigError(f"noise channel must be one of {NOISE_CHANNELS}, got {self.channel!r}")
        if not np.isfinite(self.proportion) or self.proportion < 0:
            raise InvalidConfigError(f"noise proportion must be >= 0, got {self.proportion}")
        if self.relative_to not in NOISE_SCALES:
            raise InvalidConfigError(f"relative_to must be one of {NOISE_SCALES}, got {self.relative_to!r}")

    @property
    def channels(self):
        return CHANNELS if self.channel == "both" else (self.channel,)

    def to_dict(self):
        return {"channel": self.channel, "proportion": self.proportion, "seed": self.seed,
                "relative_to": self.relative_to}


def sample_identity(model, factor_levels, residual_sigma=1.0, seed=0, id_label=0):
    """Draw residual coefficients ~ N(0, (sigma * s_k / sqrt(n))^2) per channel."""
    if residual_sigma < 0:
        raise InvalidScaleError(f"residual_sigma must be >= 0, got {residual_sigma}")
    levels = tuple(int(x) for x in factor_levels)
    model.shape.categorical_mean(levels)  # validates the levels
    rng = np.random.default_rng(seed)
    coeffs = {}
    for ch in CHANNELS:
        m = model[ch]
        coeffs[ch] = rng.standard_normal(m.n_pcs) * (residual_sigma * m.residual_std)
    return Identity(levels, coeffs, int(id_label))


def sample_population(model, n_identities, residual_sigma=1.0, seed=0):
    """``n_identities`` identities cycling through the factor cells in order."""
    cells = model.factor_spec.cells()
    seeds = np.random.SeedSequence(seed).generate_state(n_identities)
    return [
        sample_identity(model, cells[i % len(cells)], residual_sigma, int(seeds[i]), id_label=i)
        for i in range(n_identities)
    ]


def population_std(identities, channel):
    """Per-coefficient standard deviation of residual coefficients across identities."""
    rc = np.stack([ident.residual_coeffs[channel] for ident in identities])
    return rc.std(axis=0, ddof=1)


def noise_std(noise, population_std, residual_coeffs=None):
    """Per-coefficient noise standard deviations for each affected channel.

    ``proportion * population_std``, or ``proportion * |residual_coeffs|`` when
    the noise is relative to the coefficient magnitude.
    """
    stds = {}
    for ch in noise.channels:
        if noise.relative_to == "magnitude":
            if residual_coeffs is None:
                raise InvalidScaleError("magnitude-relative noise needs the identity's coefficients")
            stds[ch] = noise.proportion * np.abs(np.asarray(residual_coeffs[ch], dtype=np.float64))
            continue
        pop = population_std[ch] if isinstance(population_std, dict) else population_std
        pop = np.asarray(pop, dtype=np.float64)
        if pop.size == 0 or not np.all(np.isfinite(pop)) or np.any(pop <= 0):
            raise InvalidScaleError(f"population_std for {ch} must be strictly positive")
        stds[ch] = noise.proportion * pop
    return stds


def inject_noise(identity, noise, population_std):
    """Return a copy of ``identity`` with noisy residual coefficients.

    Draws one standard-normal vector per affected channel (shape first) from a
    generator seeded with ``noise.seed``; the same seed therefore gives the same
    direction at every proportion.
    """
    stds = noise_std(noise, population_std, identity.residual_coeffs)
    rng = np.random.default_rng(noise.seed)
    coeffs = dict(identity.residual_coeffs)
    for ch in noise.channels:
        base = identity.residual_coeffs[ch]
        if stds[ch].shape != base.shape:
            raise InvalidScaleError(f"population_std for {ch} has shape {stds[ch].shape}, expected {base.shape}")
        z = rng.standard_normal(base.shape[0])
        coeffs[ch] = base + z * stds[ch] if noise.proportion > 0 else base.copy()
    return replace(identity, residual_coeffs=coeffs)
