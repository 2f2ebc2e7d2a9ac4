"""Batch embedder: turns a corpus and an image bank into a similarity file."""

from .encoders import ClipEncoder, PaletteEncoder, resolve_encoder
from .errors import JobError
from .images import ImageRef, discover_images, load_rgb
from .job import EmbeddingJob, JobReport, SkippedImage, embed_and_export
from .simwrite import dump_binary, write_binary
from .textio import PhraseText, Window, corpus_phrases, parse_ratio, tokenize, window_spans

__all__ = [
    "ClipEncoder",
    "EmbeddingJob",
    "ImageRef",
    "JobError",
    "JobReport",
    "PaletteEncoder",
    "PhraseText",
    "SkippedImage",
    "Window",
    "corpus_phrases",
    "discover_images",
    "dump_binary",
    "embed_and_export",
    "load_rgb",
    "parse_ratio",
    "resolve_encoder",
    "tokenize",
    "window_spans",
    "write_binary",
]
