"""Bounded attention queues under LIFO and Hot admission.

LIFO keeps a sliding window of the most recent arrivals: a full feed evicts
its oldest entry. Hot admits into a full feed only if the newcomer has
strictly more reshares than the coldest entry (ties on count go to the
older arrival), which is what lets early-popular messages lock a feed.

Reshare counts are read live from a shared count array at comparison time.

``BoundedFeed`` is the single-queue reference. ``FeedStore`` keeps many
queues in two integer matrices so one message can be pushed into thousands
of feeds with a handful of numpy operations; the two are tested to agree
step for step.
"""

from __future__ import annotations

import enum
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_CAPACITY = 10
EMPTY = -1


class FeedPolicy(enum.Enum):
    LIFO = "lifo"
    HOT = "hot"

    @classmethod
    def parse(cls, value: "str | FeedPolicy") -> "FeedPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown feed policy {value!r}; expected lifo or hot") from None


class InsertOutcome(enum.IntEnum):
    ACCEPTED = 0
    EVICTING = 1
    REJECTED_FULL = 2
    DUPLICATE = 3

    @property
    def admitted(self) -> bool:
        return self <= InsertOutcome.EVICTING


class InsertResult(NamedTuple):
    outcome: InsertOutcome
    evicted: int | None = None


class BoundedFeed:
    def __init__(self, capacity: int, policy: FeedPolicy, reshares: Sequence[int]):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.policy = FeedPolicy.parse(policy)
        self.reshares = reshares
        self.entries: dict[int, int] = {}  # message id -> arrival index
        self.next_arrival = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, msg_id: int) -> bool:
        return msg_id in self.entries

    def insert(self, msg_id: int) -> InsertResult:
        if msg_id in self.entries:
            return InsertResult(InsertOutcome.DUPLICATE)
        if len(self.entries) < self.capacity:
            self._admit(msg_id)
            return InsertResult(InsertOutcome.ACCEPTED)
        if self.policy is FeedPolicy.LIFO:
            victim = min(self.entries, key=self.entries.__getitem__)
        else:
            victim = min(self.entries, key=lambda m: (self.reshares[m], self.entries[m]))
            if self.reshares[msg_id] <= self.reshares[victim]:
                return InsertResult(InsertOutcome.REJECTED_FULL)
        del self.entries[victim]
        self._admit(msg_id)
        return InsertResult(InsertOutcome.EVICTING, victim)

    def _admit(self, msg_id: int) -> None:
        self.entries[msg_id] = self.next_arrival
        self.next_arrival += 1

    def remove(self, msg_id: int) -> bool:
        return self.entries.pop(msg_id, None) is not None

    def review_order(self) -> list[int]:
        """Full feed, newest first (LIFO) or hottest first with newest breaking ties (Hot)."""
        if self.policy is FeedPolicy.LIFO:
            return sorted(self.entries, key=lambda m: -self.entries[m])
        return sorted(self.entries, key=lambda m: (-self.reshares[m], -self.entries[m]))


class FeedStore:
    """``n`` bounded feeds of equal capacity sharing one policy.

    Row ``i`` of ``msg`` holds the message ids of feed ``i`` (``EMPTY`` for free
    slots) and the same row of ``arrival`` their per-feed arrival indices.
    """

    def __init__(self, n: int, capacity: int, policy: FeedPolicy, reshares: np.ndarray):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.policy = FeedPolicy.parse(policy)
        self.reshares = reshares
        self.msg = np.full((n, capacity), EMPTY, dtype=np.int64)
        self.arrival = np.zeros((n, capacity), dtype=np.int64)
        self.next_arrival = np.zeros(n, dtype=np.int64)

    def __len__(self) -> int:
        return self.msg.shape[0]

    def size(self, row: int) -> int:
        return int((self.msg[row] != EMPTY).sum())

    def contents(self, row: int) -> list[int]:
        r = self.msg[row]
        return r[r != EMPTY].tolist()

    def deliver(self, rows: np.ndarray, msg_id: int) -> tuple[np.ndarray, np.ndarray]:
        """Insert ``msg_id`` into every feed in ``rows``.

        Returns per-row outcome codes (``InsertOutcome`` values) and evicted ids
        (``EMPTY`` where nothing was evicted).
        """
        rows = np.asarray(rows, dtype=np.int64)
        n = len(rows)
        outcome = np.full(n, InsertOutcome.REJECTED_FULL, dtype=np.int8)
        evicted = np.full(n, EMPTY, dtype=np.int64)
        if n == 0:
            return outcome, evicted
        M = self.msg[rows]
        dup = (M == msg_id).any(axis=1)
        free = M == EMPTY
        has_free = free.any(axis=1)
        outcome[dup] = InsertOutcome.DUPLICATE

        open_ = ~dup & has_free
        full = ~dup & ~has_free
        slot = np.zeros(n, dtype=np.int64)
        slot[open_] = free[open_].argmax(axis=1)
        outcome[open_] = InsertOutcome.ACCEPTED

        if full.any():
            A = self.arrival[rows[full]]
            if self.policy is FeedPolicy.LIFO:
                victim_slot = A.argmin(axis=1)
                admit = np.ones(len(A), dtype=bool)
            else:
                Mf = M[full]
                counts = self.reshares[Mf].astype(np.int64)
                victim_slot = ((counts << 32) | A).argmin(axis=1)
                victim_count = counts[np.arange(len(Mf)), victim_slot]
                admit = self.reshares[msg_id] > victim_count
            full_idx = np.flatnonzero(full)
            take = full_idx[admit]
            slot[take] = victim_slot[admit]
            evicted[take] = M[take, slot[take]]
            outcome[take] = InsertOutcome.EVICTING

        ok = outcome <= InsertOutcome.EVICTING
        r, s = rows[ok], slot[ok]
        self.msg[r, s] = msg_id
        self.arrival[r, s] = self.next_arrival[r]
        self.next_arrival[r] += 1
        return outcome, evicted

    def insert_many(self, row: int, msg_ids: Sequence[int]) -> list[tuple[int, int | None]]:
        """Insert a sequence of messages into one feed, in order.

        Returns ``(outcome, evicted)`` per message. Works on Python lists, which
        beats numpy for the handful of entries a single feed holds.
        """
        ids = self.msg[row].tolist()
        arr = self.arrival[row].tolist()
        nxt = int(self.next_arrival[row])
        counts = self.reshares
        lifo = self.policy is FeedPolicy.LIFO
        results = []
        for m in msg_ids:
            if m in ids:
                results.append((InsertOutcome.DUPLICATE, None))
                continue
            if EMPTY in ids:
                s = ids.index(EMPTY)
                ids[s], arr[s] = m, nxt
                nxt += 1
                results.append((InsertOutcome.ACCEPTED, None))
                continue
            if lifo:
                s = min(range(len(ids)), key=arr.__getitem__)
            else:
                s = min(range(len(ids)), key=lambda j: (counts[ids[j]], arr[j]))
                if counts[m] <= counts[ids[s]]:
                    results.append((InsertOutcome.REJECTED_FULL, None))
                    continue
            results.append((InsertOutcome.EVICTING, ids[s]))
            ids[s], arr[s] = m, nxt
            nxt += 1
        self.msg[row] = ids
        self.arrival[row] = arr
        self.next_arrival[row] = nxt
        return results

    def insert(self, row: int, msg_id: int) -> InsertResult:
        outcome, evicted = self.insert_many(row, [msg_id])[0]
        return InsertResult(InsertOutcome(outcome), evicted)

    def remove(self, row: int, msg_id: int) -> bool:
        hit = np.flatnonzero(self.msg[row] == msg_id)
        if len(hit) == 0:
            return False
        self.msg[row, hit[0]] = EMPTY
        return True

    def review_order(self, row: int) -> list[int]:
        ids = self.msg[row].tolist()
        arr = self.arrival[row].tolist()
        present = [j for j, m in enumerate(ids) if m != EMPTY]
        if self.policy is FeedPolicy.LIFO:
            present.sort(key=lambda j: -arr[j])
        else:
            counts = self.reshares
            present.sort(key=lambda j: (-counts[ids[j]], -arr[j]))
        return [ids[j] for j in present]

    def ordered_entries(self, row: int) -> list[tuple[int, int]]:
        """(message id, arrival index) pairs in arrival order."""
        pairs = [(m, a) for m, a in zip(self.msg[row].tolist(), self.arrival[row].tolist()) if m != EMPTY]
        return sorted(pairs, key=lambda p: p[1])
