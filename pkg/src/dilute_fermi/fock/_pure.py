"""numpy fallback for monomial application, vectorised over basis states."""

from __future__ import annotations

import numpy as np

_ONE = np.uint64(1)


def _parity_below(s: np.ndarray, m: int) -> np.ndarray:
    below = s & np.uint64((1 << m) - 1)
    return np.bitwise_count(below) & 1


def apply_grouped(states_in, states_out, group_mask, group_start, cre, ann, coef):
    """Same contract as the compiled kernel: (rows, cols, vals, dropped)."""
    states_in = np.asarray(states_in, dtype=np.uint64)
    states_out = np.asarray(states_out, dtype=np.uint64)
    rows, cols, vals = [], [], []
    dropped = 0
    n_out = states_out.size
    W = cre.shape[1]
    for g in range(len(group_mask)):
        A = np.uint64(group_mask[g])
        sel = np.nonzero((states_in & A) == A)[0]
        if sel.size == 0:
            continue
        base = states_in[sel]
        for t in range(group_start[g], group_start[g + 1]):
            s = base.copy()
            sign = np.ones(s.size)
            alive = np.ones(s.size, dtype=bool)
            for q in range(W - 1, -1, -1):
                m = int(ann[t, q])
                if m < 0:
                    continue
                bit = _ONE << np.uint64(m)
                alive &= (s & bit) != 0
                sign = np.where(_parity_below(s, m), -sign, sign)
                s = s ^ bit
            for q in range(W - 1, -1, -1):
                m = int(cre[t, q])
                if m < 0:
                    continue
                bit = _ONE << np.uint64(m)
                alive &= (s & bit) == 0
                sign = np.where(_parity_below(s, m), -sign, sign)
                s = s | bit
            if not np.any(alive):
                continue
            s, sg, src = s[alive], sign[alive], sel[alive]
            pos = np.searchsorted(states_out, s)
            pos_c = np.minimum(pos, n_out - 1) if n_out else pos
            hit = (states_out[pos_c] == s) if n_out else np.zeros(s.size, dtype=bool)
            dropped += int(np.count_nonzero(~hit))
            rows.append(pos_c[hit])
            cols.append(src[hit])
            vals.append(sg[hit] * coef[t])
    if rows:
        return (np.concatenate(rows).astype(np.int64), np.concatenate(cols).astype(np.int64),
                np.concatenate(vals).astype(complex), dropped)
    return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, complex), dropped
