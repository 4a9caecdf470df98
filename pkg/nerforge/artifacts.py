import hashlib
import json
import os
import tempfile
from collections.abc import Iterable, Iterator
from typing import Any

from nerforge import __version__
from nerforge.errors import MalformedInput, MissingPrerequisite
from nerforge.model import Record, RecordError, RecordT, deserialize, serialize
from nerforge.simple_logging import debug_print


def require_file(path: str) -> None:
    if not os.path.isfile(path):
        raise MissingPrerequisite(path + " does not exist, run the stage which creates it first")


def atomic_write_text(path: str, content: str) -> None:
    """
    Writes to a temporary file next to the target and renames it, so that an
    interrupted stage never leaves a half written artifact behind.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(
        dir=directory, prefix="." + os.path.basename(path) + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise


def write_jsonl(path: str, records: Iterable[Record]) -> int:
    lines = [serialize(record) + "\n" for record in records]
    atomic_write_text(path, "".join(lines))
    debug_print("Wrote", len(lines), "records to", path)
    return len(lines)


def read_jsonl(path: str, expected: type[RecordT]) -> Iterator[RecordT]:
    require_file(path)
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield deserialize(line, expected)
            except RecordError as e:
                raise type(e)(f"{path}:{line_number}: {e}") from None


def write_json(path: str, data: Any) -> None:
    atomic_write_text(path, json.dumps(data, ensure_ascii=False, indent=2) + "\n")


def read_json(path: str) -> Any:
    require_file(path)
    with open(path, encoding="utf-8") as f:
        try:
            return json.load(f)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise MalformedInput(f"{path} is not valid JSON: {e}") from None


def _hash_table(manifest: Any, key: str, manifest_file: str) -> dict[str, str]:
    table = manifest.get(key) if isinstance(manifest, dict) else None
    if not isinstance(table, dict) or not all(
        isinstance(value, str) for value in table.values()
    ):
        raise MalformedInput(f"{manifest_file}: '{key}' must map paths to sha256 hashes")
    return table


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def manifest_path(artifact: str) -> str:
    return artifact + ".manifest.json"


def _relative_to(path: str, directory: str) -> str:
    return os.path.relpath(os.path.abspath(path), directory).replace(os.sep, "/")


def write_manifest(artifact: str, stage: str, config_hash: str, inputs: list[str]) -> None:
    """
    Paths are stored relative to the artifact so that a moved output directory
    still verifies. There is no timestamp, reruns produce identical manifests.
    """
    directory = os.path.dirname(os.path.abspath(artifact))
    manifest = {
        "tool": "nerforge",
        "version": __version__,
        "stage": stage,
        "config_hash": config_hash,
        "inputs": {_relative_to(path, directory): file_sha256(path) for path in sorted(inputs)},
        "output": {_relative_to(artifact, directory): file_sha256(artifact)},
    }
    write_json(manifest_path(artifact), manifest)


def find_stale_files(manifest_file: str) -> list[str]:
    """Returns the inputs and outputs whose content no longer matches the manifest."""
    directory = os.path.dirname(os.path.abspath(manifest_file))
    manifest = read_json(manifest_file)
    stale = []
    recorded = {
        **_hash_table(manifest, "inputs", manifest_file),
        **_hash_table(manifest, "output", manifest_file),
    }
    for relative_path, expected_hash in recorded.items():
        path = os.path.normpath(os.path.join(directory, relative_path))
        if not os.path.isfile(path) or file_sha256(path) != expected_hash:
            stale.append(path)
    return stale
