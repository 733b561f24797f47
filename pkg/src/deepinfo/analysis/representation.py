"""Viewpoint structure of a layer's principal-component scores."""
import numpy as np

from ..errors import InvalidDataError
from ..linalg import randomized_pca, rdm


def _ordered_rows(trialset, rows, rows_per_block, rng):
    """Rows sorted by viewpoint then replicate, optionally subsampled per viewpoint."""
    out = []
    for v in sorted(set(int(x) for x in trialset.viewpoint[rows])):
        block = rows[trialset.viewpoint[rows] == v]
        block = block[np.argsort(trialset.replicate[block], kind="stable")]
        if rows_per_block and len(block) > rows_per_block:
            keep = np.sort(rng.choice(len(block), rows_per_block, replace=False))
            block = block[keep]
        out.append(block)
    return np.concatenate(out)


def rdm_pipeline(trialset, layer="pool", k=6, rows_per_block=100, seed=0):
    """Randomized PCA and RDM for every (identity, channel) group of trials.

    Within a group, rows are ordered by viewpoint ascending then replicate
    ascending, and the RDM's block labels are the viewpoints. At most
    ``rows_per_block`` trials per viewpoint enter the RDM (``None`` keeps all),
    which bounds its memory at ``(5 * rows_per_block) ** 2`` entries.

    Returns ``{(identity, channel): (PcaModel, Rdm, rows)}`` where ``rows``
    indexes the trial set in RDM order.
    """
    if layer not in trialset.L:
        raise InvalidDataError(f"trial set has no capture for layer {layer!r}")
    acts = trialset.L[layer]
    rng = np.random.default_rng(seed)
    out = {}
    groups = sorted(set(zip(trialset.identity.tolist(), trialset.channel.tolist())))
    for ident, channel in groups:
        rows = np.flatnonzero((trialset.identity == ident) & (trialset.channel == channel))
        rows = _ordered_rows(trialset, rows, rows_per_block, rng)
        data = acts[rows]
        oversampling = max(0, min(10, min(data.shape) - k))
        pca = randomized_pca(data, k, oversampling=oversampling, seed=seed)
        out[(ident, channel)] = (pca, rdm(pca.scores, trialset.viewpoint[rows]), rows)
    return out
