"""Market instance serialization.

Two formats: a portable JSON document {n, m, budgets, values} with the
value matrix flattened row-major, and a compact binary layout for large
instances (16-byte header: magic "FQSM", version, n, m as little-endian
32-bit integers, then budgets and row-major values as little-endian
float64).  Serialization is canonical, so save -> load -> save is
byte-identical.
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import IoError
from .market import MarketInstance, validate_market

_MAGIC = b"FQSM"
_BINARY_VERSION = 1


def market_digest(market: MarketInstance) -> str:
    """Stable content hash of an instance, used to key cached reference values."""
    h = hashlib.sha256()
    h.update(struct.pack("<II", market.n, market.m))
    h.update(np.ascontiguousarray(market.budgets, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(market.values, dtype="<f8").tobytes())
    return h.hexdigest()


def _format_for(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        return fmt
    return "binary" if path.suffix == ".bin" else "json"


def save_market(market: MarketInstance, path, fmt: str | None = None):
    """Write an instance as JSON (default) or binary (``fmt="binary"`` or a .bin suffix)."""
    path = Path(path)
    try:
        if _format_for(path, fmt) == "binary":
            with open(path, "wb") as fh:
                fh.write(_MAGIC)
                fh.write(struct.pack("<III", _BINARY_VERSION, market.n, market.m))
                fh.write(np.ascontiguousarray(market.budgets, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(market.values, dtype="<f8").tobytes())
        else:
            doc = {
                "n": market.n,
                "m": market.m,
                "budgets": market.budgets.tolist(),
                "values": market.values.reshape(-1).tolist(),
            }
            with open(path, "w", newline="\n") as fh:
                json.dump(doc, fh)
                fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write market file {path}: {exc}") from exc


def load_market(path, fmt: str | None = None) -> MarketInstance:
    """Read an instance written by ``save_market``; the result is re-validated."""
    path = Path(path)
    try:
        if _format_for(path, fmt) == "binary":
            with open(path, "rb") as fh:
                blob = fh.read()
            if blob[:4] != _MAGIC:
                raise IoError(f"{path} is not a binary market file")
            version, n, m = struct.unpack("<III", blob[4:16])
            if version != _BINARY_VERSION:
                raise IoError(f"unsupported binary market version {version}")
            expected = 16 + 8 * (n + n * m)
            if len(blob) != expected:
                raise IoError(f"{path} is truncated: {len(blob)} bytes, expected {expected}")
            budgets = np.frombuffer(blob, dtype="<f8", count=n, offset=16)
            values = np.frombuffer(blob, dtype="<f8", count=n * m, offset=16 + 8 * n).reshape(n, m)
        else:
            with open(path) as fh:
                doc = json.load(fh)
            n, m = int(doc["n"]), int(doc["m"])
            budgets = np.asarray(doc["budgets"], dtype=np.float64)
            values = np.asarray(doc["values"], dtype=np.float64).reshape(n, m)
    except OSError as exc:
        raise IoError(f"cannot read market file {path}: {exc}") from exc
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise IoError(f"malformed market file {path}: {exc}") from exc
    return validate_market(budgets, values)
