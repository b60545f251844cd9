from dataclasses import dataclass

from loguru import logger

from app.db.codecs.audio import decode_wav
from app.db.codecs.checkpoints import Checkpoint
from app.db.dao.base import Filter
from app.db.dao.dvector_dao import dvector_dao
from app.db.exceptions import ElementNotFoundError
from app.db.models.dvector import DVector, DVectorStore
from app.services.evaluation.extraction import utterance_dvector
from app.services.evaluation.metrics import cosine_score
from app.services.evaluation.schema import SpeakerModel, WindowSpec
from app.services.exceptions import InsufficientUtterancesError, ShapeError
from app.services.frontend.dsp import preprocess_eval_utterance
from app.services.frontend.schema import FrameSpec, VadConfig

UPLOAD_ID = "upload"


@dataclass(frozen=True, slots=True)
class VerificationDecision:
    """Score of a test utterance against a speaker model and the resulting decision."""

    score: float
    threshold: float
    accepted: bool


class VerificationService:
    """Scores test utterances against enrolled speakers with a fixed threshold."""

    def __init__(
        self,
        threshold: float,
        window: WindowSpec | None = None,
        vad: VadConfig | None = None,
        frames: FrameSpec | None = None,
    ) -> None:
        self.threshold = threshold
        self.window = window or WindowSpec()
        self.vad = vad or VadConfig()
        self.frames = frames or FrameSpec()

    def speaker_model(
        self,
        store: DVectorStore,
        speaker_id: str,
        enroll_ids: list[str] | None = None,
        exclude: str | None = None,
    ) -> SpeakerModel:
        """Centroid of the given enrollment utterances, or of all but `exclude`.

        Raises:
            ElementNotFoundError: If the speaker or an enrollment utterance is unknown.
            InsufficientUtterancesError: If no enrollment utterance remains.
        """
        if enroll_ids is None:
            records = [
                r for r in dvector_dao.get_speaker(store, speaker_id) if r.utterance_id != exclude
            ]
        else:
            records = [dvector_dao.get_utterance(store, speaker_id, u) for u in enroll_ids]
        if not records:
            msg = f"Speaker {speaker_id} has no enrollment utterance left."
            raise InsufficientUtterancesError(msg)
        return SpeakerModel.enroll(records)

    def decide(self, score: float) -> VerificationDecision:
        """Accept iff the score reaches the threshold."""
        return VerificationDecision(
            score=score, threshold=self.threshold, accepted=score >= self.threshold
        )

    def score_utterance(
        self,
        store: DVectorStore,
        speaker_id: str,
        test_utterance_id: str,
        enroll_ids: list[str] | None = None,
    ) -> VerificationDecision:
        """Verify a stored utterance against a speaker.

        The test utterance may belong to another speaker (an impostor trial), its
        id is then looked up among all stored d-vectors.

        Raises:
            ElementNotFoundError: If the test utterance is not stored.
        """
        candidates = dvector_dao.get_list(
            store, filters=[Filter(field="utterance_id", operator="eq", value=test_utterance_id)]
        )
        if not candidates:
            msg = f"Utterance with ID: {test_utterance_id} not found."
            raise ElementNotFoundError(msg)
        owned = [c for c in candidates if c.speaker_id == speaker_id]
        test = owned[0] if owned else candidates[0]
        exclude = test_utterance_id if test.speaker_id == speaker_id else None
        model = self.speaker_model(store, speaker_id, enroll_ids, exclude=exclude)
        decision = self.decide(cosine_score(test, model))
        logger.info(
            f"{test.speaker_id}/{test_utterance_id} vs {speaker_id}: score {decision.score:.4f},"
            f" accepted={decision.accepted}"
        )
        return decision

    def score_dvector(
        self, store: DVectorStore, speaker_id: str, dvector: DVector
    ) -> VerificationDecision:
        """Verify an unstored d-vector against all d-vectors of a speaker.

        Raises:
            ShapeError: If the d-vector and the store differ in dimension.
        """
        if dvector.dim != store.dim:
            msg = f"D-vector of dimension {dvector.dim} does not match the store ({store.dim})."
            raise ShapeError(msg)
        return self.decide(cosine_score(dvector, self.speaker_model(store, speaker_id)))

    def embed_audio(self, checkpoint: Checkpoint, payload: bytes) -> DVector:
        """D-vector of a WAV recording.

        Raises:
            FormatError: If the payload is not a readable audio file.
            NoSpeechError: If the recording holds no usable speech.
        """
        waveform = decode_wav(payload, self.frames.sample_rate, source="request body")
        features = preprocess_eval_utterance(
            waveform, self.vad, self.frames, utterance_id=UPLOAD_ID
        )
        return utterance_dvector(
            checkpoint.params, features, self.window, waveform.duration_seconds
        )
