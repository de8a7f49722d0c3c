"""Deterministic rank and randomness primitives.

Every function here is a pure function of an explicit :class:`Seed`, so any
experiment can be replayed bit for bit from a 64-hex-character seed string.
The only primitives used are BLAKE2b keyed hashing and integer arithmetic,
both of which are stable across platforms and Python versions.

Ranks are 64-bit unsigned integers standing in for arrival times in [0, 1)
(a rank ``r`` corresponds to the real number ``r / 2**64``).  Ties between
distinct items are broken by owner id, so any set of ranked items is always
strictly totally ordered.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

_U64 = 1 << 64
_MASK64 = _U64 - 1

# Deterministic Miller-Rabin witnesses; exact for n < 3.3 * 10**24, which
# covers every field size reachable at experiment scale.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@dataclass(frozen=True, slots=True)
class Seed:
    """A 256-bit master key plus an ensemble selector.

    Two seeds with equal fields define identical rank functions and random
    streams.  ``ensemble_index`` selects one of many mutually
    independent-behaving streams keyed by the same master key; it is used by
    algorithms that need several fresh sources of coins per run.
    """

    master_key: bytes
    ensemble_index: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.master_key, bytes) or len(self.master_key) != 32:
            raise ValueError("master_key must be exactly 32 bytes")
        if self.ensemble_index < 0:
            raise ValueError("ensemble_index must be non-negative")

    @classmethod
    def from_hex(cls, text: str, ensemble_index: int = 0) -> "Seed":
        """Parse a seed from 64 hex characters (the CLI wire format)."""
        key = bytes.fromhex(text.strip())
        if len(key) != 32:
            raise ValueError("seed must be 64 hex characters (32 bytes)")
        return cls(key, ensemble_index)

    def hex(self) -> str:
        return self.master_key.hex()

    def with_ensemble(self, index: int) -> "Seed":
        """Same master key, different ensemble."""
        return Seed(self.master_key, index)


@dataclass(frozen=True, order=True, slots=True)
class Rank:
    """Position of an item in the simulated arrival order.

    Field order matters: dataclass ordering compares ``(value, owner)``
    lexicographically, which is exactly the documented tiebreak rule.
    """

    value: int
    owner: int


@dataclass(frozen=True, slots=True)
class FullPseudorandom:
    """Ranks are keyed hashes: every item gets an independent 64-bit value."""


@dataclass(frozen=True, slots=True)
class KWiseIndependent:
    """Ranks from a uniformly random degree-(k-1) polynomial over GF(prime).

    Any k evaluation points are jointly uniform over the field, so every
    relative order of any j <= k items is (up to residue ties, broken by
    owner id) uniformly distributed.  ``prime`` must exceed the item
    universe; choosing ``prime >= universe**3`` keeps residue ties rare.
    """

    k: int
    prime: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if not is_probable_prime(self.prime):
            raise ValueError(f"{self.prime} is not prime")


OrderingKind = Union[FullPseudorandom, KWiseIndependent]


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin with fixed witnesses (exact below 3.3e24)."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    c = max(2, n)
    while not is_probable_prime(c):
        c += 1
    return c


def _digest(seed: Seed, domain: bytes, payload: bytes, size: int) -> bytes:
    """Keyed, domain-separated hash. The domain is length-prefixed so that
    distinct (domain, payload) splits can never collide."""
    h = hashlib.blake2b(key=seed.master_key, digest_size=size)
    h.update(seed.ensemble_index.to_bytes(8, "big"))
    h.update(len(domain).to_bytes(2, "big"))
    h.update(domain)
    h.update(payload)
    return h.digest()


class RandomStream:
    """Deterministic byte stream keyed by (seed, label), in counter mode.

    Used by instance generators and anything else that needs a sequence of
    uniform draws rather than per-item hashing.
    """

    __slots__ = ("_seed", "_label", "_counter", "_buf", "_pos")

    def __init__(self, seed: Seed, label: bytes) -> None:
        self._seed = seed
        self._label = bytes(label)
        self._counter = 0
        self._buf = b""
        self._pos = 0

    def _refill(self) -> None:
        payload = self._label + self._counter.to_bytes(8, "big")
        self._buf = _digest(self._seed, b"stream", payload, 64)
        self._pos = 0
        self._counter += 1

    def u64(self) -> int:
        if self._pos >= len(self._buf):
            self._refill()
        value = int.from_bytes(self._buf[self._pos : self._pos + 8], "big")
        self._pos += 8
        return value

    def random(self) -> float:
        """Float in [0, 1) with 53 bits of precision."""
        return (self.u64() >> 11) / float(1 << 53)

    def randrange(self, bound: int) -> int:
        """Uniform integer in [0, bound). Rejection sampling, no modulo bias."""
        if bound < 1:
            raise ValueError("bound must be >= 1")
        if bound == 1:
            return 0
        if bound <= _U64:
            limit = _U64 - (_U64 % bound)
            while True:
                r = self.u64()
                if r < limit:
                    return r % bound
        # Wide bounds: draw bound.bit_length() bits and reject overflow.
        bits = bound.bit_length()
        words = (bits + 63) // 64
        shift = words * 64 - bits
        while True:
            r = 0
            for _ in range(words):
                r = (r << 64) | self.u64()
            r >>= shift
            if r < bound:
                return r

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]


def derive_subseed(seed: Seed, label: bytes) -> Seed:
    """Deterministic domain-separated derivation of a fresh seed.

    Distinct labels yield streams that behave independently; derivation
    nests, so ``derive(derive(s, a), b)`` differs from ``derive(s, a + b)``.
    The derived seed starts at ensemble 0.
    """
    key = _digest(seed, b"derive", bytes(label), 32)
    return Seed(key, 0)


def random_in_range(seed: Seed, label: bytes, bound: int) -> int:
    """Uniform integer in [0, bound), a pure function of (seed, label)."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    if bound == 1:
        return 0
    return RandomStream(seed, b"range:" + bytes(label)).randrange(bound)


def polynomial_rank(coeffs: tuple[int, ...], prime: int, x: int) -> int:
    """Evaluate a polynomial over GF(prime) at x and scale into 64 bits.

    The scaling ``(value << 64) // prime`` is strictly monotone in the
    residue, so it preserves the field order exactly; only genuinely equal
    residues collide (and are then broken by owner id).
    """
    acc = 0
    for a in reversed(coeffs):
        acc = (acc * x + a) % prime
    return (acc << 64) // prime


@lru_cache(maxsize=4096)
def _kwise_coeffs(seed: Seed, k: int, prime: int) -> tuple[int, ...]:
    stream = RandomStream(seed, b"kwise-coefficients")
    return tuple(stream.randrange(prime) for _ in range(k))


def _rank_value(seed: Seed, kind: OrderingKind, item: int, universe: int) -> int:
    """64-bit rank value of ``item`` in a universe of ``universe`` items."""
    if not 0 <= item < universe:
        raise ValueError(
            f"item {item} outside declared universe of size {universe}; "
            "the instance and the rank oracle disagree"
        )
    if isinstance(kind, FullPseudorandom):
        return int.from_bytes(_digest(seed, b"rank", item.to_bytes(8, "big"), 8), "big")
    if isinstance(kind, KWiseIndependent):
        if kind.prime <= universe:
            raise ValueError(
                f"prime {kind.prime} must exceed the universe size {universe}"
            )
        coeffs = _kwise_coeffs(seed, kind.k, kind.prime)
        return polynomial_rank(coeffs, kind.prime, item)
    raise TypeError(f"unknown ordering kind: {kind!r}")


def rank_of(seed: Seed, kind: OrderingKind, item: int, universe: int) -> Rank:
    """Rank of an item id under the given ordering. Deterministic."""
    return Rank(_rank_value(seed, kind, item, universe), item)


def compare(a: Rank, b: Rank) -> int:
    """Strict total order on ranks: -1 if a precedes b, +1 otherwise.

    Value ties are broken by owner id. Comparing two ranks that are equal in
    both fields is a usage error (two items never share an owner id).
    """
    ka = (a.value, a.owner)
    kb = (b.value, b.owner)
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    raise ValueError("cannot order two identical ranks")


def rank_key_fn(seed: Seed, kind: OrderingKind, universe: int):
    """Return a cached ``item -> (value, owner)`` function.

    The cache is local to the returned closure; sharing one closure across
    the queries of a run avoids rehashing without any cross-run state.
    """
    cache: dict[int, tuple[int, int]] = {}

    def key(item: int) -> tuple[int, int]:
        got = cache.get(item)
        if got is None:
            got = (_rank_value(seed, kind, item, universe), item)
            cache[item] = got
        return got

    return key
