class JobError(Exception):
    """An embedding job cannot produce its output file.

    Covers bad inputs (unreadable corpus, no usable images), unusable model
    identifiers, and invalid job parameters. The CLI maps it to exit code 2.
    """
