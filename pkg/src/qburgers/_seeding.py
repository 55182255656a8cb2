"""Deterministic seed derivation shared by the simulation and sweep machinery.

Every stochastic step in the pipeline draws from an RNG seeded through
``derive_seed`` so that reruns with the same base seed reproduce every
artifact bit for bit, independent of execution order or worker count.
"""

from __future__ import annotations

import hashlib

_SEP = b"\x1f"


def _canonical(part: object) -> bytes:
    if isinstance(part, bool):
        return b"b:" + (b"1" if part else b"0")
    if isinstance(part, int):
        return b"i:" + str(part).encode("ascii")
    if isinstance(part, float):
        return b"f:" + repr(part).encode("ascii")
    if isinstance(part, str):
        return b"s:" + part.encode("utf-8")
    raise TypeError(f"unsupported seed part type: {type(part).__name__}")


def derive_seed(*parts: object) -> int:
    """Hash a tuple of ints/floats/strings into a 63-bit unsigned seed."""
    digest = hashlib.sha256(_SEP.join(_canonical(p) for p in parts)).digest()
    return int.from_bytes(digest[:8], "big") >> 1
