"""Deterministic seed derivation.

All randomness in the package flows from explicit 64-bit seeds. Derived
seeds (one per trial, one per curve repeat, ...) are produced by a
splitmix64 finalizer so that nearby inputs give unrelated streams. The
mixing function is fixed and documented here so runs are reproducible:

    derive(seed, k) = splitmix64(seed + (k + 1) * 0x9E3779B97F4A7C15)
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One splitmix64 output step for a 64-bit state."""
    z = (state + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive(seed: int, k: int) -> int:
    """Derive the k-th child seed of ``seed`` (k >= 0)."""
    return splitmix64((seed + (k + 1) * GOLDEN) & MASK64)
