"""Read access to d-vector stores."""
