"""Input surfaces of the verification system: HTTP API and command line."""
