"""Space embeddings of translation-based block ciphers into larger GF(2) spaces."""

__version__ = "0.1.0"
