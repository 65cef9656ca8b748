"""Fenwick (binary indexed) tree for weighted sampling with point updates."""
from __future__ import annotations

import math


class FenwickTree:
    """Prefix sums over ``n`` non-negative weights.

    Supports ``add`` in ``O(log n)`` and inverse-CDF lookup ``find`` in
    ``O(log n)``; indices are zero-based for callers.
    """

    def __init__(self, weights):
        self.n = len(weights)
        if self.n == 0:
            raise ValueError("need at least one weight")
        self._top = 1 << (self.n.bit_length() - 1)
        self.rebuild(weights)

    def rebuild(self, weights):
        """Recompute the tree from scratch (bounds floating-point drift)."""
        n = self.n
        tree = [0.0] * (n + 1)
        for i, w in enumerate(weights, start=1):
            tree[i] += float(w)
            j = i + (i & -i)
            if j <= n:
                tree[j] += tree[i]
        self._tree = tree
        self.total = math.fsum(float(w) for w in weights)

    def add(self, index: int, delta: float):
        tree, n = self._tree, self.n
        i = index + 1
        while i <= n:
            tree[i] += delta
            i += i & -i
        self.total += delta

    def prefix(self, index: int) -> float:
        """Sum of weights ``0..index`` inclusive."""
        tree = self._tree
        i = index + 1
        acc = 0.0
        while i > 0:
            acc += tree[i]
            i -= i & -i
        return acc

    def find(self, u: float) -> int:
        """Smallest index whose inclusive prefix sum exceeds ``u``.

        ``u`` should lie in ``[0, total)``; values past the end (possible
        through rounding) return the last index.
        """
        tree, n = self._tree, self.n
        pos = 0
        step = self._top
        while step:
            nxt = pos + step
            if nxt <= n and tree[nxt] <= u:
                pos = nxt
                u -= tree[nxt]
            step >>= 1
        return pos if pos < n else n - 1
