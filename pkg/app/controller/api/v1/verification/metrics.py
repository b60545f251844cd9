from prometheus_client import Counter, Histogram

from app.services.verification.service import VerificationDecision

DECISIONS = Counter(
    "ge2e_verification_decisions",
    "Verification decisions by endpoint and outcome.",
    ["endpoint", "accepted"],
)
UPLOAD_SECONDS = Histogram(
    "ge2e_upload_duration_seconds",
    "Duration of the recordings sent to the embed endpoint.",
    buckets=(1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 20.0, 40.0),
)


def record_decision(endpoint: str, decision: VerificationDecision) -> None:
    DECISIONS.labels(endpoint=endpoint, accepted=str(decision.accepted).lower()).inc()
