"""Generalized end-to-end softmax loss with analytic gradients.

For an embedding e_ji (speaker j, utterance i) the similarity to speaker k is
w·cos(e_ji, c_k) + b, where c_k is the centroid of speaker k and, for k = j,
the centroid of speaker j computed without e_ji. The loss of e_ji is the
cross-entropy of the softmax over speakers against its own speaker.
"""

import numpy as np
from scipy.special import logsumexp, softmax

from app.services.exceptions import (
    DegenerateCentroidError,
    InsufficientUtterancesError,
    InvalidInputError,
)
from app.services.loss.schema import (
    MIN_SCALE_W,
    Array,
    EmbeddingBatch,
    LossGradients,
    LossResult,
    LossScale,
    Reduction,
    SimilarityMatrix,
)

MIN_NORM = 1e-12


def centroid(batch: EmbeddingBatch, j: int) -> Array:
    """Arithmetic mean of speaker `j`'s embeddings (not re-normalised)."""
    if not 0 <= j < batch.n_speakers:
        msg = f"Speaker index {j} out of range for {batch.n_speakers} speakers."
        raise IndexError(msg)
    return batch.embeddings[j].mean(axis=0)


def centroid_excluding(batch: EmbeddingBatch, j: int, i: int) -> Array:
    """Mean of speaker `j`'s embeddings without utterance `i`."""
    if batch.m_utterances < 2:  # noqa: PLR2004
        msg = "Leave-one-out centroids need at least two utterances per speaker."
        raise InsufficientUtterancesError(msg)
    if not 0 <= j < batch.n_speakers or not 0 <= i < batch.m_utterances:
        msg = f"Index ({j}, {i}) out of range for a {batch.n_speakers}x{batch.m_utterances} batch."
        raise IndexError(msg)
    return np.delete(batch.embeddings[j], i, axis=0).mean(axis=0)


class _Cosines:
    """Cosine table cos[j, i, k] with the leave-one-out centroid on k = j."""

    def __init__(self, embeddings: Array) -> None:
        n, m, _ = embeddings.shape
        self.n, self.m = n, m
        self.centroids = embeddings.mean(axis=1)
        self.excluded = (embeddings.sum(axis=1, keepdims=True) - embeddings) / (m - 1)

        self.e_norm = np.linalg.norm(embeddings, axis=-1)
        self.c_norm = np.linalg.norm(self.centroids, axis=-1)
        self.x_norm = np.linalg.norm(self.excluded, axis=-1)
        if np.any(self.e_norm <= MIN_NORM):
            msg = "An embedding has zero norm."
            raise DegenerateCentroidError(msg)
        if np.any(self.c_norm <= MIN_NORM) or np.any(self.x_norm <= MIN_NORM):
            msg = "A speaker centroid has zero norm."
            raise DegenerateCentroidError(msg)

        self.e_unit = embeddings / self.e_norm[..., np.newaxis]
        self.c_unit = self.centroids / self.c_norm[:, np.newaxis]
        self.x_unit = self.excluded / self.x_norm[..., np.newaxis]

        self.diagonal = np.sum(self.e_unit * self.x_unit, axis=-1)
        self.table = np.einsum("jid,kd->jik", self.e_unit, self.c_unit)
        speakers = np.arange(n)
        self.table[speakers, :, speakers] = self.diagonal


def _check_scale(scale: LossScale) -> None:
    if not scale.w >= MIN_SCALE_W:
        msg = f"Loss scale w must be at least {MIN_SCALE_W}, got {scale.w}."
        raise InvalidInputError(msg)


def similarity_matrix(batch: EmbeddingBatch, scale: LossScale) -> SimilarityMatrix:
    """(N·M) × N scaled cosine similarities with leave-one-out on the own speaker."""
    _check_scale(scale)
    cosines = _Cosines(batch.embeddings)
    values = scale.w * cosines.table + scale.b
    return SimilarityMatrix(
        values.reshape(cosines.n * cosines.m, cosines.n), cosines.n, cosines.m
    )


def loss_per_embedding(similarity: SimilarityMatrix, j: int, i: int) -> float:
    """-S_{ji,j} + log Σ_k exp(S_{ji,k})."""
    row = similarity.row(j, i)
    return float(logsumexp(row) - row[j])


def ge2e_loss(
    embeddings: Array, scale: LossScale, reduction: Reduction = Reduction.MEAN
) -> LossResult:
    """Loss and gradients for an (N, M, D) array of embeddings of any norm.

    The gradient covers both paths through which e_ji reaches the loss: its
    own row of the similarity matrix, and the centroids (full and leave-one-out)
    it contributes to.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    n, m, _ = embeddings.shape
    cosines = _Cosines(embeddings)
    speakers = np.arange(n)

    logits = scale.w * cosines.table + scale.b
    per_embedding = logsumexp(logits, axis=-1) - logits[speakers, :, speakers]
    factor = 1.0 / (n * m) if reduction is Reduction.MEAN else 1.0
    loss = factor * float(per_embedding.sum())

    # dL/dS: softmax minus the one-hot of the own speaker.
    grad_logits = softmax(logits, axis=-1)
    grad_logits[speakers, :, speakers] -= 1.0
    grad_logits *= factor
    grad_w = float(np.sum(grad_logits * cosines.table))
    grad_b = float(np.sum(grad_logits))

    grad_cos = scale.w * grad_logits
    grad_diag = grad_cos[speakers, :, speakers]
    grad_off = grad_cos.copy()
    grad_off[speakers, :, speakers] = 0.0
    off_weight = grad_off * cosines.table

    # Own row, other speakers' centroids.
    grad_e = (
        np.einsum("jik,kd->jid", grad_off, cosines.c_unit)
        - off_weight.sum(axis=-1)[..., np.newaxis] * cosines.e_unit
    ) / cosines.e_norm[..., np.newaxis]
    # Own row, leave-one-out centroid.
    grad_e += (
        grad_diag[..., np.newaxis]
        * (cosines.x_unit - cosines.diagonal[..., np.newaxis] * cosines.e_unit)
        / cosines.e_norm[..., np.newaxis]
    )

    # Through the full centroids c_k = mean of speaker k.
    grad_centroids = (
        np.einsum("jik,jid->kd", grad_off, cosines.e_unit)
        - off_weight.sum(axis=(0, 1))[:, np.newaxis] * cosines.c_unit
    ) / cosines.c_norm[:, np.newaxis]
    grad_e += grad_centroids[:, np.newaxis, :] / m

    # Through the leave-one-out centroids of the other utterances of the same speaker.
    grad_excluded = (
        grad_diag[..., np.newaxis]
        * (cosines.e_unit - cosines.diagonal[..., np.newaxis] * cosines.x_unit)
        / cosines.x_norm[..., np.newaxis]
    )
    grad_e += (grad_excluded.sum(axis=1, keepdims=True) - grad_excluded) / (m - 1)

    similarity = SimilarityMatrix(logits.reshape(n * m, n), n, m)
    return LossResult(loss, LossGradients(grad_e, grad_w, grad_b), similarity)


def total_loss(
    batch: EmbeddingBatch, scale: LossScale, reduction: Reduction = Reduction.MEAN
) -> LossResult:
    """Sum or mean of the per-embedding losses of a validated batch."""
    _check_scale(scale)
    return ge2e_loss(batch.embeddings, scale, reduction)


def clamp_scale(scale: LossScale) -> LossScale:
    """Project w back to at least 1e-6; b is left alone."""
    return LossScale(w=max(scale.w, MIN_SCALE_W), b=scale.b)
