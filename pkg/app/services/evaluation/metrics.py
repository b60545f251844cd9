"""Cosine scoring and false acceptance / false rejection rates.

A trial is accepted when its score is at least the threshold. FAR is the
share of accepted impostor trials and FRR the share of rejected genuine ones.
"""

import numpy as np

from app.db.models.dvector import DVector
from app.services.evaluation.schema import Array, ErrorRateCurve, SpeakerModel, TrialSet
from app.services.exceptions import DegenerateInputError

MIN_NORM = 1e-12
GRID_SIZE = 2001
GRID_MARGIN = 1e-6


def cosine_score(dvector: DVector | Array, model: SpeakerModel | Array) -> float:
    """Normalised dot product of a test d-vector and a speaker model, in [-1, 1].

    Raises:
        DegenerateInputError: If either vector is zero.
    """
    a = dvector.vector if isinstance(dvector, DVector) else np.asarray(dvector, dtype=np.float64)
    b = model.centroid if isinstance(model, SpeakerModel) else np.asarray(model, dtype=np.float64)
    norm_a, norm_b = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if norm_a <= MIN_NORM or norm_b <= MIN_NORM:
        msg = "Cannot score a zero vector."
        raise DegenerateInputError(msg)
    return float(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))


def score_matrix(tests: Array, models: Array) -> Array:
    """Cosine scores of every test row against every model row.

    Raises:
        DegenerateInputError: If any row is zero.
    """
    test_norms = np.linalg.norm(tests, axis=-1, keepdims=True)
    model_norms = np.linalg.norm(models, axis=-1, keepdims=True)
    if np.any(test_norms <= MIN_NORM) or np.any(model_norms <= MIN_NORM):
        msg = "Cannot score a zero vector."
        raise DegenerateInputError(msg)
    return np.clip((tests / test_norms) @ (models / model_norms).T, -1.0, 1.0)


def error_rates(trials: TrialSet, thresholds: Array) -> tuple[Array, Array]:
    """FAR and FRR at each threshold."""
    thresholds = np.asarray(thresholds, dtype=np.float64)
    impostor = np.sort(trials.impostor)
    genuine = np.sort(trials.genuine)
    far = (impostor.size - np.searchsorted(impostor, thresholds, side="left")) / impostor.size
    frr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
    return far, frr


def error_rates_at(trials: TrialSet, threshold: float) -> tuple[float, float]:
    """FAR and FRR at one threshold.

    Raises:
        NoTrialsError: If either trial list is empty.
    """
    trials.check_non_empty()
    far, frr = error_rates(trials, np.array([threshold]))
    return float(far[0]), float(frr[0])


def crossing(thresholds: Array, far: Array, frr: Array) -> tuple[float, float]:
    """Equal error rate and its threshold where FAR − FRR first reaches zero.

    Between the two thresholds bracketing the sign change both curves are
    interpolated linearly.
    """
    diff = far - frr
    reached = np.flatnonzero(diff <= 0)
    if reached.size == 0:
        return float(far[-1] + frr[-1]) / 2, float(thresholds[-1])
    k = int(reached[0])
    if diff[k] == 0 or k == 0:
        return float(far[k] + frr[k]) / 2, float(thresholds[k])
    alpha = diff[k - 1] / (diff[k - 1] - diff[k])
    eer_far = far[k - 1] + alpha * (far[k] - far[k - 1])
    eer_frr = frr[k - 1] + alpha * (frr[k] - frr[k - 1])
    threshold = thresholds[k - 1] + alpha * (thresholds[k] - thresholds[k - 1])
    return float(eer_far + eer_frr) / 2, float(threshold)


def equal_error_rate(trials: TrialSet) -> tuple[float, float]:
    """Exact EER over every distinct score cut, with its threshold.

    Raises:
        NoTrialsError: If either trial list is empty.
    """
    trials.check_non_empty()
    scores = np.unique(np.concatenate([trials.genuine, trials.impostor]))
    # One cut above every score rejects all trials.
    cuts = np.append(scores, scores[-1] + GRID_MARGIN)
    far, frr = error_rates(trials, cuts)
    return crossing(cuts, far, frr)


def compute_error_curve(trials: TrialSet, n_thresholds: int = GRID_SIZE) -> ErrorRateCurve:
    """FAR/FRR over an even grid spanning the scores, and the exact EER.

    Raises:
        NoTrialsError: If either trial list is empty.
    """
    trials.check_non_empty()
    low = float(min(trials.genuine.min(), trials.impostor.min())) - GRID_MARGIN
    high = float(max(trials.genuine.max(), trials.impostor.max())) + GRID_MARGIN
    thresholds = np.linspace(low, high, n_thresholds)
    far, frr = error_rates(trials, thresholds)
    eer, eer_threshold = equal_error_rate(trials)
    return ErrorRateCurve(thresholds, far, frr, eer, eer_threshold)
