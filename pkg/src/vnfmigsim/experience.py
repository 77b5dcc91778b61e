"""Success / fail / digital-twin experience buffers and the balanced sampler."""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import SamplingError

PHYSICAL_SUCCESS = "physical-success"
PHYSICAL_FAIL = "physical-fail"
SYNTHETIC = "synthetic"


@dataclass
class Experience:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool
    origin: str


class RingBuffer:
    """FIFO buffer: inserting past capacity evicts the oldest entry."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items = deque(maxlen=capacity)

    def push(self, exp: Experience):
        self._items.append(exp)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]

    def snapshot(self) -> list:
        return list(self._items)

    def sample(self, count: int, rng: np.random.Generator) -> list:
        """Uniform without replacement; falls back to replacement when undersized."""
        items = self._items
        n = len(items)
        if n == 0 or count == 0:
            return []
        if n >= count:
            idx = rng.choice(n, size=count, replace=False)
        else:
            idx = rng.integers(0, n, size=count)
        return [items[int(i)] for i in idx]


class BufferSet:
    """The three buffers, with pushes routed by experience origin."""

    def __init__(self, success_cap: int = 4000, fail_cap: int = 2000, dt_cap: int = 6000):
        self.success = RingBuffer(success_cap)
        self.fail = RingBuffer(fail_cap)
        self.dt = RingBuffer(dt_cap)

    def push(self, exp: Experience):
        if exp.origin == PHYSICAL_SUCCESS:
            self.success.push(exp)
        elif exp.origin == PHYSICAL_FAIL:
            self.fail.push(exp)
        elif exp.origin == SYNTHETIC:
            self.dt.push(exp)
        else:
            raise ValueError(f"unknown origin {exp.origin!r}")

    @property
    def physical_size(self) -> int:
        return len(self.success) + len(self.fail)


def sample_physical(
    buffers: BufferSet, batch_size: int, balance: float, rng: np.random.Generator
) -> list:
    """floor(balance*J) successes plus the remainder from failures, shuffled.

    An empty buffer's share is drawn from the other one (undersized buffers
    sample with replacement); both empty is an error.
    """
    if not (0.0 <= balance <= 1.0):
        raise ValueError("balance must be in [0, 1]")
    if len(buffers.success) == 0 and len(buffers.fail) == 0:
        raise SamplingError("both physical buffers are empty")
    n_succ = int(balance * batch_size)
    n_fail = batch_size - n_succ
    if len(buffers.success) == 0:
        n_fail += n_succ
        n_succ = 0
    elif len(buffers.fail) == 0:
        n_succ += n_fail
        n_fail = 0
    batch = buffers.success.sample(n_succ, rng) + buffers.fail.sample(n_fail, rng)
    rng.shuffle(batch)
    return batch


def sample_dt(buffer: RingBuffer, batch_size: int, rng: np.random.Generator) -> list:
    """Uniform DT mini-batch; an empty buffer yields an empty batch."""
    return buffer.sample(batch_size, rng)


def export_jsonl(buffer: RingBuffer, path: str):
    """Dump a buffer as JSON-lines (synthetic-vs-real distribution inspection)."""
    import json

    with open(path, "w") as fh:
        for exp in buffer.snapshot():
            fh.write(
                json.dumps(
                    {
                        "s": exp.s.tolist(),
                        "a": exp.a,
                        "r": exp.r,
                        "s_next": exp.s_next.tolist(),
                        "terminal": exp.terminal,
                        "origin": exp.origin,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
