"""Reference computations that share no code with the solver paths they check."""
from __future__ import annotations

from collections import deque

import numpy as np

BLADE_WORDS = ((), (1,), (2,), (3,), (1, 2), (1, 3), (2, 3), (1, 2, 3))


def reduce_word(word) -> tuple[int, tuple[int, ...]]:
    """Rewrite a product of generators into ``sign * sorted blade``.

    Uses only ``E_i E_i = 1`` and ``E_j E_i = -E_i E_j`` for ``i != j``.
    """
    word = list(word)
    sign = 1
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(word) - 1:
            a, b = word[i], word[i + 1]
            if a == b:
                del word[i:i + 2]
                changed = True
                continue
            if a > b:
                word[i], word[i + 1] = b, a
                sign = -sign
                changed = True
            i += 1
    return sign, tuple(word)


def symbolic_structure_table() -> tuple[np.ndarray, np.ndarray]:
    index = np.zeros((8, 8), dtype=int)
    sign = np.zeros((8, 8))
    for i, wa in enumerate(BLADE_WORDS):
        for j, wb in enumerate(BLADE_WORDS):
            s, w = reduce_word(wa + wb)
            index[i, j] = BLADE_WORDS.index(w)
            sign[i, j] = s
    return index, sign


def loop_sum(values) -> float:
    total = 0.0
    for v in np.asarray(values, dtype=float).ravel():
        total += float(v)
    return total


def rk4_amplification(z: float) -> float:
    """Growth factor of one classical RK4 step on ``y' = lambda y`` with ``z = lambda dt``."""
    return 1 + z + z * z / 2 + z ** 3 / 6 + z ** 4 / 24


def flood_fill_components(mask: np.ndarray) -> int:
    """Face-connected components of ``mask`` on a periodic grid, by breadth-first search."""
    seen = np.zeros(mask.shape, dtype=bool)
    shape = mask.shape
    count = 0
    for start in zip(*np.nonzero(mask)):
        if seen[start]:
            continue
        count += 1
        seen[start] = True
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for axis in range(len(shape)):
                for step in (-1, 1):
                    nb = list(node)
                    nb[axis] = (nb[axis] + step) % shape[axis]
                    nb = tuple(nb)
                    if mask[nb] and not seen[nb]:
                        seen[nb] = True
                        queue.append(nb)
    return count
