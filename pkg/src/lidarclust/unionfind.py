"""Label-equivalence store: union-find where the smaller root wins.

The smaller-wins rule is load-bearing for the scan-line algorithm (a
merged cluster keeps the smallest id it was ever assigned), and harmless
for everyone else.
"""

from __future__ import annotations


class UnionFind:
    def __init__(self, n: int = 0):
        self.parent = list(range(n))

    def add(self) -> int:
        """Add a fresh singleton, returning its id."""
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:  # path compression
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> int:
        """Merge the two sets; the smaller root becomes the common root."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        lo, hi = (ra, rb) if ra < rb else (rb, ra)
        self.parent[hi] = lo
        return lo
