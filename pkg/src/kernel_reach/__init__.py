"""Data-driven first-hitting safety probabilities via conditional distribution embeddings."""
