"""Independent recoverability oracles for the sliding-window XOR code.

Erased payloads are unknowns; every received packet ``j`` contributes one
GF(2) equation over the erased payloads in ``[j - M, j)``.  XOR acts bitwise,
so single-bit unknowns capture recoverability of whole payloads.
"""

import numpy as np


def check_rows(n, window, lost):
    lost = sorted(lost)
    col = {i: c for c, i in enumerate(lost)}
    rows = []
    for j in range(n):
        if j in col:
            continue
        mask = 0
        for i in range(max(0, j - window), j):
            if i in col:
                mask |= 1 << col[i]
        if mask:
            rows.append(mask)
    return lost, rows


def rank_oracle(n, window, lost):
    """Erased indices whose unit vector lies in the row space of the checks."""
    lost, rows = check_rows(n, window, lost)
    basis = {}
    for r in rows:
        for p in sorted(basis, reverse=True):
            if r >> p & 1:
                r ^= basis[p]
        if r:
            p = r.bit_length() - 1
            for q in basis:
                if basis[q] >> p & 1:
                    basis[q] ^= r
            basis[p] = r
    return {lost[p] for p, r in basis.items() if r == 1 << p}


def brute_oracle(n, window, lost):
    """Erased indices that are zero in every solution of the homogeneous system.

    Enumerates all ``2^L`` assignments of the ``L`` erased bits.
    """
    lost, rows = check_rows(n, window, lost)
    xs = np.arange(1 << len(lost), dtype=np.uint64)
    ok = np.ones(len(xs), dtype=bool)
    for r in rows:
        ok &= np.bitwise_count(xs & np.uint64(r)) % 2 == 0
    seen = np.bitwise_or.reduce(xs[ok]) if ok.any() else 0
    return {lost[c] for c in range(len(lost)) if not int(seen) >> c & 1}
