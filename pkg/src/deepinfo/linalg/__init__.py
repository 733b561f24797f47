from .logdet import batched_log_pivots, chol_logdet
from .pca import PcaModel, randomized_pca
from .rdm import Rdm, block_means, rdm

__all__ = [
    "PcaModel",
    "Rdm",
    "batched_log_pivots",
    "block_means",
    "chol_logdet",
    "randomized_pca",
    "rdm",
]
