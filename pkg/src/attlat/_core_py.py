"""Pure-Python bitset kernel.

Vertex sets are arbitrary-precision ints used as bit masks; adjacency is a
list of per-vertex image masks.  This is the fallback for the compiled kernel
in ``attlat._core`` and the faster choice for small graphs, where conversion
overhead dominates.
"""

from __future__ import annotations


def iter_bits(mask: int):
    """Yield the indices of the set bits of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def image(adj: list[int], mask: int) -> int:
    out = 0
    while mask:
        low = mask & -mask
        out |= adj[low.bit_length() - 1]
        mask ^= low
    return out


def closure(adj: list[int], mask: int) -> int:
    """Forward-reachable closure including the seed (paths of length >= 0)."""
    seen = mask
    frontier = mask
    while frontier:
        new = image(adj, frontier) & ~seen
        seen |= new
        frontier = new
    return seen


def omega(adj: list[int], mask: int) -> tuple[int, int]:
    """Eventual image of ``mask``: the stable set reached by iterating the map
    on the forward closure.  Returns (fixed point, iterations used).

    The closure is mapped into itself, so the iterates decrease and stabilize
    after at most ``popcount(closure)`` steps.
    """
    cur = closure(adj, mask)
    steps = 0
    while True:
        nxt = image(adj, cur)
        steps += 1
        if nxt == cur:
            return cur, steps
        cur = nxt


def tarjan_scc(adj_lists: list[list[int]]) -> tuple[list[int], list[list[int]]]:
    """Iterative Tarjan.  Returns (component label per vertex, components).

    Components come out in reverse topological order: every edge between
    distinct components points from a higher label to a lower one.
    """
    n = len(adj_lists)
    index = [-1] * n
    low = [0] * n
    onstack = bytearray(n)
    stack: list[int] = []
    labels = [-1] * n
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                onstack[v] = 1
            descended = False
            nb = adj_lists[v]
            for i in range(pi, len(nb)):
                w = nb[i]
                if index[w] == -1:
                    work[-1] = (v, i + 1)
                    work.append((w, 0))
                    descended = True
                    break
                if onstack[w] and index[w] < low[v]:
                    low[v] = index[w]
            if descended:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    onstack[w] = 0
                    labels[w] = len(comps)
                    comp.append(w)
                    if w == v:
                        break
                comp.sort()
                comps.append(comp)
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
    return labels, comps
