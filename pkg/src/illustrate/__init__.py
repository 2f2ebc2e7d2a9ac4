"""Automatic image selection and placement for textbook sections.

The pipeline: parse a corpus of books into sections and subsections
(:mod:`illustrate.corpus`), load a phrase-by-image similarity matrix
(:mod:`illustrate.simstore`), score candidate image sets
(:mod:`illustrate.objectives`), and pick plus place images per section
(:mod:`illustrate.assign`). :mod:`illustrate.oracle` holds brute-force
references used to validate the greedy machinery,
:mod:`illustrate.analysis` the corpus statistics and the image-count
regression, and :mod:`illustrate.evalmetrics` retrieval evaluation
against gold placements.
"""

from .assign import Assignment, BudgetKind, BudgetPolicy, assign_section
from .corpus import (
    Book,
    Chapter,
    Concept,
    Corpus,
    Phrase,
    Section,
    Split,
    Subject,
    Subsection,
    WindowConfig,
    parse_corpus,
    save_corpus,
    tokenize,
    window_phrases,
)
from .errors import (
    EmptyInputError,
    IllustrateError,
    IntegrityError,
    NumericError,
    SchemaError,
    UnknownIdError,
)
from .objectives import (
    AllocScore,
    Mode,
    ObjectiveConfig,
    SectionContext,
    build_section_context,
)
from .simstore import (
    ImageBank,
    ImageRecord,
    ImageSource,
    SimMatrix,
    load_image_bank,
    load_similarity,
    write_similarity,
)

__version__ = "0.1.0"

__all__ = [
    "AllocScore",
    "Assignment",
    "Book",
    "BudgetKind",
    "BudgetPolicy",
    "Chapter",
    "Concept",
    "Corpus",
    "EmptyInputError",
    "IllustrateError",
    "ImageBank",
    "ImageRecord",
    "ImageSource",
    "IntegrityError",
    "Mode",
    "NumericError",
    "ObjectiveConfig",
    "Phrase",
    "SchemaError",
    "Section",
    "SectionContext",
    "SimMatrix",
    "Split",
    "Subject",
    "Subsection",
    "UnknownIdError",
    "WindowConfig",
    "assign_section",
    "build_section_context",
    "load_image_bank",
    "load_similarity",
    "parse_corpus",
    "save_corpus",
    "tokenize",
    "window_phrases",
    "write_similarity",
]
