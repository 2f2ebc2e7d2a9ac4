"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: schema and lookup problems are data
errors (exit 2), integrity and numeric problems are exit 3.
"""


class IllustrateError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(IllustrateError):
    """Input file does not conform to its format (bad structure, types,
    magic bytes, version, or declared dimensions)."""


class IntegrityError(IllustrateError):
    """Input parsed but violates a model invariant (duplicate ids,
    irreconcilable budgets, inconsistent cross-references)."""


class NumericError(IllustrateError):
    """Numeric precondition failed (non-finite values, rank-deficient
    design matrix)."""


class EmptyInputError(IllustrateError):
    """An operation that requires non-empty input received none."""


class UnknownIdError(IllustrateError):
    """Lookup of an id that is not present in the corpus, bank, or matrix."""
