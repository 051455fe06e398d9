"""Seeded pseudo-random streams.

Splits and shuffles use a 64-bit xorshift* generator so that the same seed yields
the same permutation on every platform and in every implementation that follows
these constants. Bulk tensor draws go through numpy's PCG64, seeded from a child
seed derived here.
"""
import hashlib
from typing import List, MutableSequence, TypeVar

import numpy as np

MASK64 = (1 << 64) - 1
XORSHIFT_MULTIPLIER = 0x2545F4914F6CDD1D
SPLITMIX_INCREMENT = 0x9E3779B97F4A7C15

T = TypeVar("T")


def splitmix64(value: int) -> int:
    z = (value + SPLITMIX_INCREMENT) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        # xorshift has a fixed point at zero
        self.state = state if state != 0 else SPLITMIX_INCREMENT

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * XORSHIFT_MULTIPLIER) & MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        if n < 1:
            raise ValueError(f"randbelow needs n >= 1, got {n}")
        bits = max(n.bit_length(), 1)
        while True:
            candidate = self.next_u64() >> (64 - bits)
            if candidate < n:
                return candidate

    def shuffle(self, items: MutableSequence[T]) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> List[int]:
        order = list(range(n))
        self.shuffle(order)
        return order

    def child_seed(self) -> int:
        return self.next_u64() >> 1


def derive_seed(seed: int, *labels: object) -> int:
    text = ":".join([str(seed), *(str(label) for label in labels)])
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def numpy_generator(seed: int, *labels: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *labels) if labels else seed)
