"""O(n log n) distance covariance for univariate samples.

Rows sums of ``|x_i - x_j|`` come from prefix sums over the sorted sample;
the cross term ``sum_ij |x_i - x_j| |y_i - y_j|`` is accumulated in x order
with Fenwick trees indexed by y rank.
"""
from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def _cross_term(x_sorted, y_by_x, y_rank):
    n = x_sorted.shape[0]
    t1 = np.zeros(n + 1)
    ty = np.zeros(n + 1)
    tx = np.zeros(n + 1)
    txy = np.zeros(n + 1)
    c1 = cy = cx = cxy = 0.0
    total = 0.0
    for j in range(n):
        xj = x_sorted[j]
        yj = y_by_x[j]
        k = y_rank[j]
        l1 = ly = lx = lxy = 0.0
        i = k
        while i > 0:
            l1 += t1[i]
            ly += ty[i]
            lx += tx[i]
            lxy += txy[i]
            i -= i & (-i)
        # signed sums over earlier points: +1 below y_j in rank, -1 above
        total += (xj * yj * (2 * l1 - c1) - xj * (2 * ly - cy)
                  - yj * (2 * lx - cx) + (2 * lxy - cxy))
        i = k + 1
        while i <= n:
            t1[i] += 1.0
            ty[i] += yj
            tx[i] += xj
            txy[i] += xj * yj
            i += i & (-i)
        c1 += 1.0
        cy += yj
        cx += xj
        cxy += xj * yj
    return 2.0 * total


def abs_row_sums(x: np.ndarray) -> np.ndarray:
    """``a_i = sum_j |x_i - x_j|`` in O(n log n)."""
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    prefix = np.concatenate([[0.0], np.cumsum(xs)])
    k = np.arange(n)
    sums = xs * k - prefix[:-1] + (prefix[-1] - prefix[1:]) - xs * (n - k - 1)
    out = np.empty(n)
    out[order] = sums
    return out


class UnivariateDcov:
    """Reusable dCov of a fixed sample ``x`` against many ``y`` (or permutations)."""

    def __init__(self, x: np.ndarray):
        x = np.ascontiguousarray(x, dtype=float)
        self.n = x.shape[0]
        self.order = np.argsort(x, kind="stable")
        self.x_sorted = x[self.order]
        self.row = abs_row_sums(x)
        self.row_total = self.row.sum()

    def with_y(self, y: np.ndarray, y_row: np.ndarray, y_rank: np.ndarray | None = None) -> float:
        """dCov against ``y`` given its row sums and, optionally, its ranks.

        Ranks (a permutation of ``0..n-1`` ordering ``y``) are invariant
        under permuting the sample together with ``y``, so permutation tests
        pass them in to skip a sort per call.
        """
        n = self.n
        y_by_x = np.ascontiguousarray(y[self.order])
        if y_rank is None:
            rank = np.empty(n, dtype=np.int64)
            rank[np.argsort(y_by_x, kind="stable")] = np.arange(n)
        else:
            rank = np.ascontiguousarray(y_rank[self.order])
        cross = _cross_term(self.x_sorted, y_by_x, rank)
        return (cross / n**2 - 2.0 * np.dot(self.row, y_row) / n**3
                + self.row_total * y_row.sum() / n**4)


def ranks(y: np.ndarray) -> np.ndarray:
    """Distinct ranks ``0..n-1`` of ``y`` (ties broken by position)."""
    out = np.empty(y.shape[0], dtype=np.int64)
    out[np.argsort(y, kind="stable")] = np.arange(y.shape[0])
    return out


def dcov_univariate(x, y) -> float:
    """Squared sample distance covariance (V-statistic) of two 1-d samples."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(UnivariateDcov(x).with_y(y, abs_row_sums(y)))
