"""Named deterministic random streams for reproducible simulation.

Every random draw in the package comes from a :class:`Stream`, a splitmix64
generator whose seed is derived from the master seed, a scope label, the run
id, and a component label.  Derivation is pure integer arithmetic, so any
component of any run can be replayed in isolation, and executing runs in any
order (or in parallel) reproduces the sequential log exactly.
"""

from __future__ import annotations

from typing import Union

__all__ = ["MASK64", "Stream", "derive_seed", "RunRandomness"]

MASK64 = (1 << 64) - 1

_GOLDEN_GAMMA = 0x9E3779B97F4A7C15

Label = Union[int, str]


def _mix64(x: int) -> int:
    # splitmix64 finalizer (Vigna); full 64-bit avalanche.
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def _fnv1a(text: str) -> int:
    # FNV-1a, 64-bit: stable string hashing independent of PYTHONHASHSEED.
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


_label_cache: dict[str, int] = {}


def _label_value(label: Label) -> int:
    if isinstance(label, str):
        value = _label_cache.get(label)
        if value is None:
            value = _label_cache[label] = _fnv1a(label)
        return value
    return label & MASK64


def derive_seed(master_seed: int, *labels: Label) -> int:
    """Fold labels into a 64-bit seed; distinct label paths give distinct streams."""
    x = _mix64(master_seed & MASK64)
    for label in labels:
        x = _mix64(x ^ _label_value(label))
    return x


class Stream:
    """A splitmix64 sequence: deterministic, platform-independent, cheap to fork."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def bits64(self) -> int:
        """Next 64 uniformly random bits."""
        self._state = (self._state + _GOLDEN_GAMMA) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n), exact via rejection sampling."""
        if n <= 0:
            raise ValueError(f"randrange bound must be positive, got {n}")
        if n == 1:
            return 0
        k = (n - 1).bit_length()
        shift = 64 - k
        while True:
            r = self.bits64() >> shift
            if r < n:
                return r

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]


class RunRandomness:
    """Per-run bundle of named component streams.

    The harness, not the model author, owns randomness: each run component
    (source, station times, station parameters, messages, ...) reads from its
    own stream, seeded by ``(master_seed, scope, run_id, component)``.
    Requesting the same component twice yields a fresh stream in the same
    state, which is how the two stations sample one shared source realization.
    """

    __slots__ = ("master_seed", "run_id", "scope", "_base")

    def __init__(
        self,
        master_seed: int,
        run_id: int,
        scope: str = "main",
        scope_base: int | None = None,
    ):
        # scope_base, when supplied, must equal derive_seed(master_seed, scope);
        # hot loops precompute it once instead of re-deriving per run.
        self.master_seed = master_seed
        self.run_id = run_id
        self.scope = scope
        if scope_base is None:
            scope_base = derive_seed(master_seed, scope)
        self._base = _mix64(scope_base ^ (run_id & MASK64))

    def stream(self, component: str) -> Stream:
        h = _label_cache.get(component)
        if h is None:
            h = _label_cache[component] = _fnv1a(component)
        return Stream(_mix64(self._base ^ h))
