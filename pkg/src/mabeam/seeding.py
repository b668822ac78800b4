"""Stable seed derivation for reproducible, splittable randomness.

Child seeds are SHA-256 digests of their labeled parts, so they are
independent of Python's hash randomization, platform, and process layout.
Scenario seeds never depend on which schemes run, and solver seeds never
perturb scenario draws.
"""

import hashlib

__all__ = ["derive_seed"]


def derive_seed(*parts):
    """Deterministic 63-bit seed from an ordered tuple of labeled parts."""
    text = "|".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
