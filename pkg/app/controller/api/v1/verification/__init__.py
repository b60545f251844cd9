"""Speaker verification API."""
