from app.controller.api.v1.verification.schema import DecisionResponse, EmbedResponse
from app.db.models.dvector import DVector
from app.services.verification.service import VerificationDecision


def to_decision_response(decision: VerificationDecision) -> DecisionResponse:
    return DecisionResponse(
        score=decision.score, threshold=decision.threshold, accepted=decision.accepted
    )


def to_embed_response(
    dvector: DVector, decision: VerificationDecision | None = None
) -> EmbedResponse:
    return EmbedResponse(
        dimension=dvector.dim,
        durationSeconds=dvector.duration_seconds,
        dvector=dvector.vector.tolist(),
        decision=to_decision_response(decision) if decision is not None else None,
    )
