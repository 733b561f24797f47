"""Identification accuracy under growing generative noise."""
from dataclasses import dataclass, field

from ..errors import InvalidConfigError
from ..genmodel import NoiseSpec, noisy_coefficients, render_coefficients
from ..genmodel.render import IMAGE_SIZE
from ..network import forward

# Full-scale reference figures; context for reports only, not reachable at desk scale.
REFERENCE_ACCURACY = {
    "shape_0.8": 1.00,
    "texture_0.8_drop": 0.55,
    "adversarial_shape": (0.97, 0.94),
}


@dataclass
class RobustnessReport:
    proportions: list
    accuracy: list
    channel: str
    accepted: list = field(repr=False)  # one boolean array per proportion
    target_logits: list = field(repr=False)
    target_id: int = 0
    reference: dict = field(default_factory=lambda: dict(REFERENCE_ACCURACY))

    def to_dict(self):
        return {
            "channel": self.channel,
            "target_id": self.target_id,
            "proportions": list(self.proportions),
            "accuracy": list(self.accuracy),
            "reference": {k: list(v) if isinstance(v, tuple) else v for k, v in self.reference.items()},
        }


def noise_robustness_test(params, model, identity, channel, proportions, n_trials, seed, target_id=None,
                          viewpoint=0, population_std=None, size=IMAGE_SIZE):
    """Accuracy of identifying ``identity`` among noisy renders at each proportion.

    The same standard-normal draws are scaled by every proportion (common
    random numbers), so accuracies at different proportions differ only by the
    noise magnitude. Proportion 0 renders the clean identity.
    """
    proportions = [float(p) for p in proportions]
    if not proportions or any(p < 0 for p in proportions):
        raise InvalidConfigError("proportions must be a non-empty list of values >= 0")
    if n_trials < 1:
        raise InvalidConfigError("n_trials must be >= 1")
    if population_std is None:
        population_std = {ch: model[ch].residual_std for ch in ("shape", "texture")}
    target = identity.id_label if target_id is None else int(target_id)
    accuracy, accepted, logits = [], [], []
    for p in proportions:
        noise = NoiseSpec(channel, p, seed)
        coeffs = noisy_coefficients(identity, noise, population_std, model, n_trials, stream=(identity.id_label,))
        images = render_coefficients(coeffs["shape"], coeffs["texture"], viewpoint, size=size)
        out, _ = forward(params, images)
        hits = out.argmax(axis=1) == target
        accuracy.append(float(hits.mean()))
        accepted.append(hits)
        logits.append(out[:, target])
    return RobustnessReport(proportions, accuracy, channel, accepted, logits, target)
