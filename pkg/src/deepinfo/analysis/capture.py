"""Fill a trial set's layer activations and decision variable from a network."""
from dataclasses import replace

import numpy as np

from ..errors import InvalidDataError
from ..network import forward


def capture_trialset(params, trialset, target_id, layers=None):
    """Return a copy of ``trialset`` with ``L`` and ``R`` filled.

    ``R`` is the pre-argmax logit of ``target_id`` (one class, or one per
    trial). ``layers`` restricts which capture points are kept.
    """
    if trialset.images is None:
        raise InvalidDataError("trial set carries no images to feed the network")
    logits, captures = forward(params, trialset.images, capture=True)
    target = np.broadcast_to(np.asarray(target_id), (trialset.n_trials,))
    if layers is not None:
        missing = set(layers) - set(captures)
        if missing:
            raise InvalidDataError(f"unknown capture points {sorted(missing)}")
        captures = {k: captures[k] for k in layers}
    R = logits[np.arange(trialset.n_trials), target]
    single = int(target[0]) if np.all(target == target[0]) else None
    return replace(trialset, L=captures, R=R, target=single)
