"""Causal pair extraction, causal embeddings and causal answer reranking."""

__version__ = "0.1.0"
