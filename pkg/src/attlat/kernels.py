"""Kernel selection: compiled extension when available, pure Python otherwise.

Both kernels expose the same three fixpoint primitives on a directed graph
(image, forward closure, eventual image).  The compiled kernel works on
uint64 word arrays and wins on grids with thousands of cells; the pure kernel
works on Python int masks and wins on small graphs.  ``MultivaluedMap`` picks
per instance via :func:`choose_backend`; ``set_backend`` forces a choice
globally (the ``ATTLAT_KERNEL`` environment variable seeds it: ``pure``,
``compiled`` or ``auto``).
"""

from __future__ import annotations

import os

import numpy as np

from . import _core_py

try:  # pragma: no cover - exercised indirectly
    from . import _core as _core_c

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover
    _core_c = None
    HAVE_COMPILED = False

# Below this vertex count the int-mask kernel is faster than converting to
# word arrays and back.
SMALL_GRAPH_CUTOFF = 512

_backend = os.environ.get("ATTLAT_KERNEL", "auto")


def set_backend(name: str) -> None:
    global _backend
    if name not in ("auto", "pure", "compiled"):
        raise ValueError(f"unknown kernel backend {name!r}")
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernel not available")
    _backend = name


def get_backend() -> str:
    return _backend


def choose_backend(n: int) -> str:
    if _backend != "auto":
        return _backend
    if HAVE_COMPILED and n > SMALL_GRAPH_CUTOFF:
        return "compiled"
    return "pure"


def _mask_to_words(mask: int, n: int) -> np.ndarray:
    nwords = (n + 63) >> 6
    return np.frombuffer(mask.to_bytes(nwords * 8, "little"), dtype=np.uint64).copy()

def _words_to_mask(words: np.ndarray) -> int:
    return int.from_bytes(words.tobytes(), "little")


class PureKernel:
    """Int-mask kernel over adjacency masks."""

    name = "pure"

    def __init__(self, adj_masks: list[int]):
        self._adj = adj_masks

    def image(self, mask: int) -> int:
        return _core_py.image(self._adj, mask)

    def closure(self, mask: int) -> int:
        return _core_py.closure(self._adj, mask)

    def omega(self, mask: int) -> tuple[int, int]:
        return _core_py.omega(self._adj, mask)


class CompiledKernel:
    """CSR/word-array kernel backed by the C extension."""

    name = "compiled"

    def __init__(self, adj_lists: list[list[int]]):
        n = len(adj_lists)
        self._n = n
        degrees = [len(a) for a in adj_lists]
        self._indptr = np.zeros(n + 1, dtype=np.int32)
        np.cumsum(degrees, out=self._indptr[1:])
        flat = [w for a in adj_lists for w in a]
        self._indices = np.asarray(flat, dtype=np.int32)

    def image(self, mask: int) -> int:
        words = _mask_to_words(mask, self._n)
        return _words_to_mask(_core_c.image(self._indptr, self._indices, words, self._n))

    def closure(self, mask: int) -> int:
        words = _mask_to_words(mask, self._n)
        return _words_to_mask(_core_c.closure(self._indptr, self._indices, words, self._n))

    def omega(self, mask: int) -> tuple[int, int]:
        words = _mask_to_words(mask, self._n)
        out, steps = _core_c.omega(self._indptr, self._indices, words, self._n)
        return _words_to_mask(out), steps


def make_kernel(adj_lists: list[list[int]], adj_masks: list[int], backend: str | None = None):
    chosen = backend or choose_backend(len(adj_lists))
    if chosen == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel not available")
        return CompiledKernel(adj_lists)
    return PureKernel(adj_masks)
