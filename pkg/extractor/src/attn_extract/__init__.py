"""Attention-record extraction from transformer checkpoints.

Runs one forward pass per assistant response of a transcript and writes a
head-averaged attention matrix plus token-role spans in the analytics
container format (a JSON metadata file next to a flat float32 binary).
"""

__version__ = "0.1.0"

from attn_extract.extract import ExtractionJob, SpanAlignmentError, extract

__all__ = ["ExtractionJob", "SpanAlignmentError", "extract", "__version__"]
