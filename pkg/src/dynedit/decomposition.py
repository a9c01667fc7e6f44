"""Pattern-matching queries and the greedy phrase decomposition of ``Y``.

``dpm_query`` answers "does ``Y[i..j)`` occur in ``X`` at some shift
``s in [-k..k]``" by trying shifts in the order ``0, -1, 1, -2, 2, ...`` with
fingerprint comparisons.  ``decompose`` splits ``Y`` into ``2k+1`` phrases:
even phrases copy a fragment of ``X`` at a small shift, odd phrases are single
characters.

Two interchangeable ways of growing an even phrase are provided.  ``search``
binary-searches the phrase end with ``dpm_query``; ``scan`` computes, for every
candidate shift at once, how far ``Y`` keeps agreeing with shifted ``X`` on
integer code arrays.  Both pick the longest extension and, among shifts that
reach it, the first one in scan order, so they return identical phrases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import RangeError
from .labeled_string import LabeledString, fragment_equal


class _Far:
    __slots__ = ()

    def __repr__(self) -> str:
        return "FAR"

    def __bool__(self) -> bool:
        return False


FAR = _Far()


@dataclass
class Decomposition:
    """Boundaries ``y_0 = 0 <= ... <= y_{2k+1} = |Y|`` and shifts of the even phrases."""

    boundaries: list[int]
    shifts: list[int]
    k: int
    dpm_calls: int = field(default=0, compare=False)

    @property
    def phrase_count(self) -> int:
        return len(self.boundaries) - 1

    def phrases(self) -> list[tuple[int, int, int | None]]:
        out = []
        for p in range(self.phrase_count):
            s = self.shifts[p // 2] if p % 2 == 0 else None
            out.append((self.boundaries[p], self.boundaries[p + 1], s))
        return out

    def points(self) -> list[int]:
        """Phrase starts ``y_0..y_{2k}`` together with ``|Y|``."""
        return sorted(set(self.boundaries))

    def violations(self, x: Sequence, y: Sequence) -> list[str]:
        """Character-exact check of every phrase invariant."""
        errs = []
        b = self.boundaries
        if self.phrase_count != 2 * self.k + 1:
            errs.append(f"{self.phrase_count} phrases instead of {2 * self.k + 1}")
        if b[0] != 0 or b[-1] != len(y):
            errs.append("boundaries do not span Y")
        if any(b[p] > b[p + 1] for p in range(len(b) - 1)):
            errs.append("boundaries not monotone")
        for p, (lo, hi, s) in enumerate(self.phrases()):
            if s is None:
                if hi - lo != 1:
                    errs.append(f"odd phrase {p} has length {hi - lo}")
                continue
            if abs(s) > 2 * self.k:
                errs.append(f"shift {s} of phrase {p} outside [-2k..2k]")
            if lo + s < 0 or hi + s > len(x):
                errs.append(f"phrase {p} maps outside X")
            elif list(y[lo:hi]) != list(x[lo + s : hi + s]):
                errs.append(f"phrase {p} does not match X at shift {s}")
        return errs


def scan_order(k: int) -> list[int]:
    out = [0]
    for d in range(1, k + 1):
        out.extend((-d, d))
    return out


def dpm_query(x: LabeledString, y: LabeledString, i: int, j: int, k: int) -> int | None:
    """A shift ``s`` with ``Y[i..j) = X[i+s..j+s)``, or ``None`` if no ``s in [-k..k]`` fits."""
    if not 0 <= i <= j <= y.core_length:
        raise RangeError(f"fragment [{i}, {j}) outside Y")
    nx = x.core_length
    for s in scan_order(k):
        if i + s < 0 or j + s > nx:
            continue
        if fragment_equal(y, (i, j), x, (i + s, j + s)):
            return s
    return None


def _extend_search(x, y, pos: int, k: int, calls: list[int]) -> tuple[int, int | None]:
    lo, hi = pos, y.core_length
    best = None
    while lo < hi:
        mid = (lo + hi + 1) // 2
        calls[0] += 1
        s = dpm_query(x, y, pos, mid, k)
        if s is None:
            hi = mid - 1
        else:
            lo, best = mid, s
    return lo, best


def _extend_scan(xc: np.ndarray, yc: np.ndarray, pos: int, k: int) -> tuple[int, int | None]:
    nx, ny = len(xc), len(yc)
    order = np.array(scan_order(k), dtype=np.int64)
    cand = order[(pos + order >= 0) & (pos + order <= nx)]
    if len(cand) == 0 or pos >= ny:
        return pos, None
    ext = np.zeros(len(cand), dtype=np.int64)
    live = np.ones(len(cand), dtype=bool)
    chunk = 16
    while live.any():
        idx = np.flatnonzero(live)
        steps = np.arange(chunk)
        yi = pos + ext[idx, None] + steps
        xi = yi + cand[idx, None]
        ok = (yi < ny) & (xi < nx)
        eq = np.zeros(ok.shape, dtype=bool)
        eq[ok] = yc[yi[ok]] == xc[xi[ok]]
        full = eq.all(axis=1)
        first_bad = np.where(full, chunk, np.argmin(eq, axis=1))
        ext[idx] += first_bad
        live[idx[~full]] = False
        chunk *= 2
    best = int(ext.max())
    if best == 0:
        return pos, None
    return pos + best, int(cand[int(np.argmax(ext))])


def decompose(
    x: LabeledString | None,
    y: LabeledString | None,
    k: int,
    *,
    method: str = "search",
    x_codes: np.ndarray | None = None,
    y_codes: np.ndarray | None = None,
) -> Decomposition | _Far:
    """Greedy decomposition of ``Y`` into ``2k+1`` phrases, or ``FAR``.

    ``FAR`` is only returned when ``ED(X, Y) > k``.  After the length check
    ``k`` is clamped to ``|Y|``.  The ``scan`` method needs integer code arrays of both strings.
    """
    if method == "scan":
        if x_codes is None or y_codes is None:
            raise ValueError("the scan method needs code arrays")
        nx, ny = len(x_codes), len(y_codes)
    elif method == "search":
        nx, ny = x.core_length, y.core_length
    else:
        raise ValueError(f"unknown method {method!r}")
    if k < 0:
        raise ValueError("k must be non-negative")
    if abs(nx - ny) > k:
        return FAR
    # 2|Y|+1 phrases always suffice, so larger thresholds gain nothing
    k = min(k, ny)
    calls = [0]
    bounds = [0]
    shifts: list[int] = []
    pos = 0
    while True:
        if method == "search":
            end, s = _extend_search(x, y, pos, k, calls)
        else:
            end, s = _extend_scan(x_codes, y_codes, pos, k)
        if s is None:
            s = min(0, nx - pos)
        shifts.append(s)
        bounds.append(end)
        pos = end
        if pos == ny:
            break
        if len(bounds) - 1 == 2 * k + 1:
            return FAR
        bounds.append(pos + 1)
        pos += 1
        if pos == ny:
            shifts.append(min(0, nx - pos))
            bounds.append(pos)
            break
    _pad(bounds, shifts, k)
    return Decomposition(bounds, shifts, k, calls[0])


def _pad(bounds: list[int], shifts: list[int], k: int) -> None:
    """Split non-empty even phrases ``[a, b)`` into ``[a, a) [a, a+1) [a+1, b)`` until there are ``2k+1``."""
    while len(bounds) - 1 < 2 * k + 1:
        for p in range(0, len(bounds) - 1, 2):
            a, b = bounds[p], bounds[p + 1]
            if b > a:
                s = shifts[p // 2]
                bounds[p + 1 : p + 1] = [a, a + 1]
                shifts[p // 2 : p // 2 + 1] = [s, s]
                break
        else:
            raise AssertionError("no non-empty even phrase left to split")
