"""Data-plane building blocks: count-min sketch, multi-hash table, Precision
table, and the RTT-sampling fridge.

All structures are single-owner mutable state confined to one simulation
run. Hashing uses a 64-bit mix over (seed ^ key); seeds are derived
deterministically from the run seed so identical seeds reproduce identical
structure states bit for bit. Any probabilistic decision draws from an
injected ``random.Random`` owned by the enclosing simulation.
"""

from __future__ import annotations

import hashlib
from array import array

_MASK = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a strong, cheap 64-bit integer mixer."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def hash_key(seed: int, key: int) -> int:
    return mix64(seed ^ key)


def derive_seed(master: int, label: str) -> int:
    """Domain-separated 64-bit seed: one master knob, independent streams."""
    digest = hashlib.blake2b(
        label.encode(), digest_size=8, key=(master & _MASK).to_bytes(8, "little")
    ).digest()
    return int.from_bytes(digest, "little")


def row_seeds(master: int, label: str, n: int) -> list[int]:
    return [derive_seed(master, f"{label}.{i}") for i in range(n)]


class Cms:
    """Count-min sketch: rows x cols counters, query returns the row minimum.

    Estimates never undercount: every row's counter for a key is incremented
    on each update of that key, so min over rows >= the true count.
    """

    def __init__(self, rows: int, cols: int, seed: int, label: str = "cms"):
        if rows < 1 or cols < 1:
            raise ValueError(f"rows and cols must be positive, got {rows}, {cols}")
        self.rows = rows
        self.cols = cols
        self.seeds = row_seeds(seed, label, rows)
        self.counters = [array("Q", bytes(8 * cols)) for _ in range(rows)]

    def update(self, key: int) -> None:
        cols = self.cols
        for seed, row in zip(self.seeds, self.counters):
            row[hash_key(seed, key) % cols] += 1

    def query(self, key: int) -> int:
        cols = self.cols
        return min(row[hash_key(seed, key) % cols] for seed, row in zip(self.seeds, self.counters))

    def state_tuple(self):
        return tuple(bytes(row) for row in self.counters)


class MultiHashTable:
    """Hash table with one slot candidate per way; no eviction on collision."""

    HIT = "hit"
    INSERTED = "inserted"
    COLLISION = "collision"

    def __init__(self, ways: int, slots_per_way: int, seed: int, label: str = "mht"):
        if ways < 1 or slots_per_way < 1:
            raise ValueError("ways and slots_per_way must be positive")
        self.ways = ways
        self.slots_per_way = slots_per_way
        self.seeds = row_seeds(seed, label, ways)
        self.keys: list[list[int | None]] = [[None] * slots_per_way for _ in range(ways)]
        self.times = [array("q", bytes(8 * slots_per_way)) for _ in range(ways)]

    def access(self, key: int, now: int) -> str:
        slots = self.slots_per_way
        idxs = [hash_key(seed, key) % slots for seed in self.seeds]
        for w, idx in enumerate(idxs):
            if self.keys[w][idx] == key:
                self.times[w][idx] = now
                return self.HIT
        for w, idx in enumerate(idxs):
            if self.keys[w][idx] is None:
                self.keys[w][idx] = key
                self.times[w][idx] = now
                return self.INSERTED
        return self.COLLISION

    def state_tuple(self):
        return (
            tuple(tuple(way) for way in self.keys),
            tuple(bytes(way) for way in self.times),
        )


def replace_probability(count: int) -> float:
    """Probability that a colliding key displaces a cell with this count."""
    return 1.0 / (count + 1)


class PrecisionTable:
    """Keyed counters where collisions probabilistically displace the least
    popular candidate: a cell holding count c survives with odds c/(c+1).
    """

    HIT = "hit"
    INSERTED = "inserted"
    REPLACED = "replaced"
    KEPT = "kept"

    def __init__(self, ways: int, slots_per_way: int, seed: int, label: str = "precision"):
        if ways < 1 or slots_per_way < 1:
            raise ValueError("ways and slots_per_way must be positive")
        self.ways = ways
        self.slots_per_way = slots_per_way
        self.seeds = row_seeds(seed, label, ways)
        self.keys: list[list[int | None]] = [[None] * slots_per_way for _ in range(ways)]
        self.counts = [array("Q", bytes(8 * slots_per_way)) for _ in range(ways)]

    def access(self, key: int, rng) -> str:
        slots = self.slots_per_way
        idxs = [hash_key(seed, key) % slots for seed in self.seeds]
        for w, idx in enumerate(idxs):
            if self.keys[w][idx] == key:
                self.counts[w][idx] += 1
                return self.HIT
        for w, idx in enumerate(idxs):
            if self.keys[w][idx] is None:
                self.keys[w][idx] = key
                self.counts[w][idx] = 1
                return self.INSERTED
        # All candidates occupied: challenge the smallest count (first way wins ties).
        w_min = 0
        c_min = self.counts[0][idxs[0]]
        for w in range(1, self.ways):
            c = self.counts[w][idxs[w]]
            if c < c_min:
                w_min, c_min = w, c
        if rng.random() < replace_probability(c_min):
            self.keys[w_min][idxs[w_min]] = key
            self.counts[w_min][idxs[w_min]] = 1
            return self.REPLACED
        return self.KEPT

    def cells(self):
        """Occupied (key, count) pairs in way-major order."""
        for w in range(self.ways):
            for i in range(self.slots_per_way):
                if self.keys[w][i] is not None:
                    yield self.keys[w][i], self.counts[w][i]

    def state_tuple(self):
        return (
            tuple(tuple(way) for way in self.keys),
            tuple(bytes(way) for way in self.counts),
        )


class Fridge:
    """RTT sampler: admits requests with probability p, pairs them with
    responses, and loses samples only to hash-slot overwrites — never because
    a delay was long, which keeps the sampled delay distribution unbiased.
    """

    def __init__(self, size: int, insert_prob: float, seed: int, label: str = "fridge"):
        if size < 1:
            raise ValueError("size must be positive")
        if not 0 < insert_prob <= 1:
            raise ValueError("insert probability must be in (0, 1]")
        self.size = size
        self.insert_prob = insert_prob
        self.seed = derive_seed(seed, label)
        self.keys: list[int | None] = [None] * size
        self.times = array("q", bytes(8 * size))

    def on_request(self, key: int, now: int, rng) -> None:
        if rng.random() < self.insert_prob:
            slot = hash_key(self.seed, key) % self.size
            self.keys[slot] = key
            self.times[slot] = now

    def on_response(self, key: int, now: int) -> int | None:
        slot = hash_key(self.seed, key) % self.size
        if self.keys[slot] == key:
            self.keys[slot] = None
            return now - self.times[slot]
        return None

    def state_tuple(self):
        return (tuple(self.keys), bytes(self.times))


def formula_p(size: int, span: int) -> float:
    """Closed-form insert probability: largest 2^-k with 2^-k <= min(1, size/span).

    ``span`` is the number of requests between the request and response with
    the maximum delay, i.e. the worst-case number of insertion opportunities
    while a sample is in flight.
    """
    if size < 1 or span < 1:
        raise ValueError("size and span must be >= 1")
    k = 0
    while span > (size << k):
        k += 1
    return 2.0 ** -k
