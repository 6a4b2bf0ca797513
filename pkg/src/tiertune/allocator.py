"""Page-placement policies: membind, preferred, and weighted interleave.

Mirrors the mempolicy semantics the tuner drives: an m:n weighted interleave
parameterized as an integer percent of new pages placed on the CXL node.
Already-placed pages never move; only future allocations see a ratio change.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DDR_NODE = "ddr"
CXL_NODE = "cxl"
NODES = (DDR_NODE, CXL_NODE)

MEMBIND = "membind"
PREFERRED = "preferred"
WEIGHTED_INTERLEAVE = "weighted_interleave"


class OutOfMemoryError(RuntimeError):
    """A node's page budget cannot satisfy the allocation."""


@dataclass(frozen=True)
class AllocationPolicy:
    mode: str
    node: str | None = None  # membind/preferred target
    ratio: int | None = None  # weighted_interleave: percent of pages to CXL

    def __post_init__(self) -> None:
        if self.mode not in (MEMBIND, PREFERRED, WEIGHTED_INTERLEAVE):
            raise ValueError(f"unknown policy mode {self.mode!r}")
        if self.mode in (MEMBIND, PREFERRED):
            if self.node not in NODES:
                raise ValueError(f"{self.mode} policy needs node in {NODES}")
        else:
            if self.ratio is None or not 0 <= self.ratio <= 100:
                raise ValueError("interleave ratio must be an integer in [0, 100]")
            object.__setattr__(self, "ratio", int(self.ratio))


def membind(node: str) -> AllocationPolicy:
    return AllocationPolicy(MEMBIND, node=node)


def preferred(node: str) -> AllocationPolicy:
    return AllocationPolicy(PREFERRED, node=node)


def weighted_interleave(ratio: int) -> AllocationPolicy:
    return AllocationPolicy(WEIGHTED_INTERLEAVE, ratio=int(ratio))


def set_ratio(policy: AllocationPolicy, new_ratio: float) -> AllocationPolicy:
    """Replace the interleave ratio; rounds to integer percent and clamps.

    Only valid for weighted_interleave policies.  Affects future allocations
    only; pages already placed through this policy stay where they are.
    """
    if policy.mode != WEIGHTED_INTERLEAVE:
        raise ValueError(f"set_ratio requires weighted_interleave, got {policy.mode}")
    # floor(x + 0.5): round half up, independent of banker's rounding.
    rounded = int(np.floor(new_ratio + 0.5))
    return replace(policy, ratio=min(max(rounded, 0), 100))


class PageMap:
    """Node assignments for a growing sequence of pages.

    Interleaved batches follow a Bresenham-style error accumulator so CXL
    pages are spread evenly: every 100-page window at a fixed ratio r holds
    exactly r CXL pages, and any prefix is within one page of n*r/100.  The
    accumulator persists across batches, so the bound holds for whole maps
    built from many small allocations.
    """

    def __init__(self, capacities: dict[str, int] | None = None) -> None:
        self.capacities = dict(capacities) if capacities else None
        self._assignments = np.zeros(0, dtype=np.uint8)  # 0 = DDR, 1 = CXL
        self._interleave_err = 0  # hundredths of a page owed to CXL

    @property
    def total_pages(self) -> int:
        return int(self._assignments.size)

    @property
    def cxl_pages(self) -> int:
        return int(self._assignments.sum())

    @property
    def ddr_pages(self) -> int:
        return self.total_pages - self.cxl_pages

    def node_of(self, index: int) -> str:
        return CXL_NODE if self._assignments[index] else DDR_NODE

    def assignments(self) -> np.ndarray:
        """Copy of the per-page assignment sequence (0 = DDR, 1 = CXL)."""
        return self._assignments.copy()

    def _pages_on(self, node: str) -> int:
        return self.cxl_pages if node == CXL_NODE else self.ddr_pages

    def _budget_left(self, node: str) -> float:
        if self.capacities is None or node not in self.capacities:
            return float("inf")
        return self.capacities[node] - self._pages_on(node)

    def allocate(self, policy: AllocationPolicy, n: int) -> None:
        """Append n pages placed according to policy."""
        if n < 0:
            raise ValueError("page count must be >= 0")
        if n == 0:
            return
        if policy.mode == MEMBIND:
            if self._budget_left(policy.node) < n:
                raise OutOfMemoryError(
                    f"membind: node {policy.node!r} cannot hold {n} more pages"
                )
            batch = np.full(n, policy.node == CXL_NODE, dtype=np.uint8)
        elif policy.mode == PREFERRED:
            fits = int(min(n, max(self._budget_left(policy.node), 0)))
            other = CXL_NODE if policy.node == DDR_NODE else DDR_NODE
            if self._budget_left(other) < n - fits:
                raise OutOfMemoryError(
                    f"preferred: spill node {other!r} cannot hold {n - fits} pages"
                )
            batch = np.empty(n, dtype=np.uint8)
            batch[:fits] = policy.node == CXL_NODE
            batch[fits:] = other == CXL_NODE
        else:
            batch = self._interleave_batch(policy.ratio, n)
            if self._budget_left(CXL_NODE) < int(batch.sum()):
                raise OutOfMemoryError(f"interleave: node {CXL_NODE!r} over budget")
            if self._budget_left(DDR_NODE) < n - int(batch.sum()):
                raise OutOfMemoryError(f"interleave: node {DDR_NODE!r} over budget")
        self._assignments = np.concatenate([self._assignments, batch])

    def _interleave_batch(self, ratio: int, n: int) -> np.ndarray:
        batch = np.empty(n, dtype=np.uint8)
        err = self._interleave_err
        for i in range(n):
            err += ratio
            if err >= 100:
                err -= 100
                batch[i] = 1
            else:
                batch[i] = 0
        self._interleave_err = err
        return batch


def allocate_pages(
    policy: AllocationPolicy, n: int, capacities: dict[str, int] | None = None
) -> PageMap:
    """Place n pages under policy into a fresh PageMap."""
    page_map = PageMap(capacities)
    page_map.allocate(policy, n)
    return page_map
