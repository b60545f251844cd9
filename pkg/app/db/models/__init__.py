"""Records of the speaker corpus and its d-vectors."""
