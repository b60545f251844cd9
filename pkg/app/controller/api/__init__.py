"""HTTP API of the verification service."""
