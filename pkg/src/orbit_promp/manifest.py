"""Run manifests: hashed records of inputs, parameters, and outputs so a
command's artifacts are reproducible and verifiable."""
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ManifestError

MANIFEST_NAME = "manifest.json"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def jsonify(obj):
    """Convert numpy scalars/arrays to plain Python for JSON output."""
    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def build_manifest(command, seed, params, inputs, output_paths, extra=None):
    """Assemble a manifest dict; output hashes are computed from the files.

    inputs: mapping name -> sha256 hex digest of each input artifact.
    extra: optional mapping merged at top level (keys must be new).
    The manifest hash covers the canonical JSON of everything else.
    """
    manifest = {
        "version": __package_version__(),
        "command": str(command),
        "seed": int(seed),
        "params": jsonify(params),
        "inputs": jsonify(inputs),
        "outputs": [
            {"name": Path(p).name, "sha256": sha256_file(p)} for p in output_paths
        ],
    }
    if extra:
        for key, value in extra.items():
            if key in manifest:
                raise ManifestError(f"extra manifest key {key!r} clashes")
            manifest[key] = jsonify(value)
    manifest["manifest_hash"] = sha256_bytes(canonical_json(manifest).encode())
    return manifest


def __package_version__():
    from . import __version__

    return __version__


def write_manifest(manifest, out_dir) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def read_manifest(path, verify=True) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {path}") from exc
    if verify:
        stated = manifest.get("manifest_hash")
        body = {k: v for k, v in manifest.items() if k != "manifest_hash"}
        actual = sha256_bytes(canonical_json(body).encode())
        if stated != actual:
            raise ManifestError(f"manifest hash mismatch in {path}")
    return manifest


def verify_outputs(manifest, directory):
    """Check every output listed in the manifest against its stored hash."""
    directory = Path(directory)
    for entry in manifest.get("outputs", []):
        path = directory / entry["name"]
        if not path.is_file():
            raise ManifestError(f"missing output file: {path}")
        if sha256_file(path) != entry["sha256"]:
            raise ManifestError(f"output hash mismatch: {path}")
