"""Deterministic 64-bit seed derivation.

Child seeds are produced by chaining the splitmix64 finalizer over the
parent seed and any number of integer tokens.  The mix is documented here so
results can be reproduced outside this package: starting from ``h = parent``,
each token ``t`` updates ``h = splitmix64(h XOR t)`` where splitmix64 is the
standard finalizer (add golden gamma, two xor-multiply rounds, final xorshift).
"""
from __future__ import annotations

import struct

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def mix_seed(parent: int, *tokens: int) -> int:
    """Derive a child seed from a parent seed and integer tokens."""
    h = parent & _MASK
    for t in tokens:
        h = splitmix64(h ^ (t & _MASK))
    return splitmix64(h)


def float_token(value: float) -> int:
    """The IEEE-754 bit pattern of a float, usable as a mix token."""
    return struct.unpack("<Q", struct.pack("<d", float(value)))[0]
