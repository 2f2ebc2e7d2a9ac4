"""Binary similarity file writer.

Layout, all integers little-endian: magic ``SIMM``, u32 version (1),
u32 phrase count, u32 image count, the logits as float32 row-major
(phrases x images), then the phrase id table and the image id table,
each id a u32 byte length followed by UTF-8 bytes. This must stay
byte-compatible with the selection engine's loader; the round-trip test
re-exports through that loader and compares bytes.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import JobError

MAGIC = b"SIMM"
VERSION = 1


def dump_binary(
    phrase_ids: Sequence[str], image_ids: Sequence[str], logits: np.ndarray
) -> bytes:
    logits = np.asarray(logits, dtype="<f4")
    if logits.ndim != 2 or logits.shape != (len(phrase_ids), len(image_ids)):
        raise JobError(
            f"logit shape {logits.shape} does not match {len(phrase_ids)} "
            f"phrase ids x {len(image_ids)} image ids"
        )
    if not np.all(np.isfinite(logits)):
        raise JobError("logits contain NaN or infinity")
    for kind, seq in (("phrase", phrase_ids), ("image", image_ids)):
        if len(set(seq)) != len(seq):
            raise JobError(f"duplicate {kind} id in output")
    parts = [
        MAGIC,
        struct.pack("<I", VERSION),
        struct.pack("<II", len(phrase_ids), len(image_ids)),
        np.ascontiguousarray(logits).tobytes(),
    ]
    for table in (phrase_ids, image_ids):
        for ident in table:
            raw = ident.encode("utf-8")
            parts.append(struct.pack("<I", len(raw)))
            parts.append(raw)
    return b"".join(parts)


def write_binary(
    path: str | Path,
    phrase_ids: Sequence[str],
    image_ids: Sequence[str],
    logits: np.ndarray,
) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    payload = dump_binary(phrase_ids, image_ids, logits)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    except OSError as exc:
        raise JobError(f"cannot write output {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
