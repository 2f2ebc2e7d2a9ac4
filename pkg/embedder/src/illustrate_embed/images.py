"""Image bank discovery and loading.

The bank is either a directory of image files (ids are the file stems)
or a JSON manifest ``{"images": [{"id": ..., "uri": ...}, ...]}`` in the
same shape the selection engine uses; extra fields like ``source`` and
``caption`` are tolerated and ignored. List order defines the column
order of the output matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from PIL import Image

from .errors import JobError

_EXTENSIONS = {".png", ".jpg", ".jpeg", ".gif", ".bmp", ".webp"}


@dataclass(frozen=True)
class ImageRef:
    id: str
    uri: str


def _from_directory(root: Path) -> list[ImageRef]:
    refs = []
    seen: dict[str, str] = {}
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if not entry.is_file() or entry.suffix.lower() not in _EXTENSIONS:
            continue
        if entry.stem in seen:
            raise JobError(
                f"{root}: files {seen[entry.stem]!r} and {entry.name!r} "
                f"would both get image id {entry.stem!r}"
            )
        seen[entry.stem] = entry.name
        refs.append(ImageRef(id=entry.stem, uri=str(entry)))
    return refs


def _from_manifest(path: Path) -> list[ImageRef]:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise JobError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("images"), list):
        raise JobError(f"{path}: expected object with images[]")
    refs = []
    seen: set[str] = set()
    for i, obj in enumerate(doc["images"]):
        where = f"$.images[{i}]"
        if not isinstance(obj, dict):
            raise JobError(f"{where}: expected object")
        for key in ("id", "uri"):
            if not isinstance(obj.get(key), str):
                raise JobError(f"{where}.{key}: expected string")
        if obj["id"] in seen:
            raise JobError(f"{where}: duplicate image id {obj['id']!r}")
        seen.add(obj["id"])
        uri = obj["uri"]
        # Relative manifest uris point next to the manifest itself.
        if "://" not in uri and not Path(uri).is_absolute():
            uri = str(path.parent / uri)
        refs.append(ImageRef(id=obj["id"], uri=uri))
    return refs


def discover_images(source: str | Path) -> list[ImageRef]:
    source = Path(source)
    if source.is_dir():
        return _from_directory(source)
    if source.is_file():
        return _from_manifest(source)
    raise JobError(f"image source {source} is neither a directory nor a manifest file")


def load_rgb(ref: ImageRef) -> Image.Image:
    """Decode one image to RGB, raising OSError-family errors on failure."""
    if "://" in ref.uri:
        raise JobError(f"remote uri {ref.uri!r}; only local files are readable")
    with Image.open(ref.uri) as img:
        return img.convert("RGB")
