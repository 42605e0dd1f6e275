"""Weight dump files.

Layout (all integers little-endian)::

    8 bytes   magic  b"PFWDUMP\\n"
    uint32    format version
    uint64    header length in bytes
    header    UTF-8 JSON, keys sorted
    payload   per layer: W row-major then b, float64 little-endian

The header declares every layer's shape, the payload byte count and its
SHA-256, so truncation and bit rot are caught on load. Older format
versions are upgraded in memory by the functions in ``_MIGRATIONS``.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import DumpIntegrityError
from .nnet import NetworkParams

MAGIC = b"PFWDUMP\n"
FORMAT_VERSION = 2
_LE_F64 = np.dtype("<f8")


@dataclass
class WeightDump:
    params: NetworkParams
    config: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def seed(self):
        return self.config.get("seed")


def _payload(params: NetworkParams) -> bytes:
    parts = []
    for w, b in params.layers:
        parts.append(np.ascontiguousarray(w, dtype=_LE_F64).tobytes())
        parts.append(np.ascontiguousarray(b, dtype=_LE_F64).tobytes())
    return b"".join(parts)


def header_for(dump: WeightDump, payload: bytes) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "activation": dump.params.activation,
        "output_activation": dump.params.output_activation,
        "layers": [{"rows": int(w.shape[0]), "cols": int(w.shape[1])} for w, _ in dump.params.layers],
        "payload_bytes": len(payload),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
        "config": dump.config,
        "seed": dump.config.get("seed"),
        "history": dump.history,
        "meta": dump.meta,
        "created_by": {"package": "pinnforensics", "version": __version__},
    }


def encode(dump: WeightDump, version=FORMAT_VERSION) -> bytes:
    payload = _payload(dump.params)
    header = header_for(dump, payload)
    if version == 1:
        header = _downgrade_to_v1(header)
    elif version != FORMAT_VERSION:
        raise ValueError(f"cannot write format version {version}")
    blob = json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")
    return MAGIC + struct.pack("<IQ", version, len(blob)) + blob + payload


def atomic_write(path, data: bytes):
    """Write to a temporary sibling, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_dump(dump: WeightDump, path, version=FORMAT_VERSION):
    atomic_write(path, encode(dump, version))


# --------------------------------------------------------------------------
# reading


def _downgrade_to_v1(header):
    # Version 1 predates the payload checksum and creator block.
    old = dict(header)
    old.pop("payload_sha256")
    old.pop("created_by")
    old["format_version"] = 1
    return old


def _migrate_v1(header):
    new = dict(header)
    new["format_version"] = 2
    new.setdefault("created_by", {"package": "pinnforensics", "version": "unknown"})
    new["payload_sha256"] = None  # filled in from the payload by the loader
    return new


_MIGRATIONS = {1: _migrate_v1}


def decode(data: bytes) -> WeightDump:
    if len(data) < len(MAGIC) + 12 or data[: len(MAGIC)] != MAGIC:
        raise DumpIntegrityError("not a weight dump (bad magic)", check="magic")
    version, hlen = struct.unpack_from("<IQ", data, len(MAGIC))
    start = len(MAGIC) + 12
    if version != FORMAT_VERSION and version not in _MIGRATIONS:
        raise DumpIntegrityError(f"unrecognized format version {version}", check="version")
    if start + hlen > len(data):
        raise DumpIntegrityError("header runs past end of file", check="header_length")
    try:
        header = json.loads(data[start : start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DumpIntegrityError(f"header is not valid JSON: {exc}", check="header_json") from None
    if header.get("format_version") != version:
        raise DumpIntegrityError("header version disagrees with preamble", check="version")
    while header["format_version"] != FORMAT_VERSION:
        header = _MIGRATIONS[header["format_version"]](header)
    payload = data[start + hlen :]
    try:
        shapes = [(int(d["rows"]), int(d["cols"])) for d in header["layers"]]
    except (KeyError, TypeError, ValueError):
        raise DumpIntegrityError("layer table is malformed", check="layers") from None
    expected = sum(8 * (r * c + r) for r, c in shapes)
    if header.get("payload_bytes") != expected:
        raise DumpIntegrityError(
            f"declared payload {header.get('payload_bytes')} bytes, layer table implies {expected}",
            check="payload_declared",
        )
    if len(payload) != expected:
        raise DumpIntegrityError(f"payload has {len(payload)} bytes, expected {expected}", check="payload_length")
    digest = hashlib.sha256(payload).hexdigest()
    if header["payload_sha256"] is None:
        header["payload_sha256"] = digest
    elif header["payload_sha256"] != digest:
        raise DumpIntegrityError("payload checksum mismatch", check="payload_sha256")
    layers = []
    pos = 0
    for r, c in shapes:
        w = np.frombuffer(payload, _LE_F64, r * c, pos).reshape(r, c).astype(np.float64)
        pos += 8 * r * c
        b = np.frombuffer(payload, _LE_F64, r, pos).astype(np.float64)
        pos += 8 * r
        layers.append((w, b))
    try:
        params = NetworkParams(tuple(layers), header["activation"], header["output_activation"])
    except ValueError as exc:
        raise DumpIntegrityError(f"layers do not form a network: {exc}", check="layer_chain") from None
    return WeightDump(params, header.get("config") or {}, header.get("history") or {}, header.get("meta") or {})


def load_dump(path) -> WeightDump:
    with open(path, "rb") as fh:
        return decode(fh.read())


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        data = fh.read()
    version, hlen = struct.unpack_from("<IQ", data, len(MAGIC))
    return json.loads(data[len(MAGIC) + 12 : len(MAGIC) + 12 + hlen])
