"""Hierarchical risk parity allocation.

Three stages over the stock correlation structure:

1. cluster the stocks with ward linkage on the correlation distance
   ``d_ij = sqrt(0.5 * (1 - rho_ij))``;
2. quasi-diagonalize: read the dendrogram's leaves left to right so that
   correlated stocks sit next to each other;
3. recursive bisection: walk back down the ordered list, splitting each
   contiguous block at its midpoint and dividing weight between the halves
   in inverse proportion to their cluster variances.

Everything here is deterministic and seed-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError
from .market_data import CorrelationMatrix, CovarianceMatrix
from .mvp import Portfolio


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric stock-to-stock distances with a zero diagonal."""

    tickers: tuple[str, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        m = np.asarray(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        n = len(self.tickers)
        if m.ndim != 2 or m.shape != (n, n):
            raise DataError(f"expected a {n}x{n} distance matrix, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NumericError("non-finite distance")
        if np.any(m < 0.0):
            raise NumericError("negative distance")
        if np.max(np.abs(m - m.T), initial=0.0) > 1e-12:
            raise NumericError("distance matrix is not symmetric")
        if np.any(np.diag(m) != 0.0):
            raise NumericError("distance diagonal must be exactly 0")


@dataclass(frozen=True)
class Merge:
    """One agglomeration step: clusters ``left`` and ``right`` join.

    Node ids follow the usual convention: 0..N-1 are leaves, the merge at
    step t creates node N+t.  Children are ordered by a label-free key
    (formation height, then leaf centrality, then id) so the left/right
    layout - and with it the seriation order - depends only on the data,
    not on how the input stocks happened to be numbered.
    """

    left: int
    right: int
    height: float
    count: int


@dataclass(frozen=True)
class LinkageTree:
    """The full merge sequence of a hierarchical clustering over N leaves."""

    tickers: tuple[str, ...]
    merges: tuple[Merge, ...]

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "merges", tuple(self.merges))
        n = len(self.tickers)
        if len(self.merges) != n - 1:
            raise DataError(f"{n} leaves need {n - 1} merges, got {len(self.merges)}")
        counts = {i: 1 for i in range(n)}
        used: set[int] = set()
        prev_height = 0.0
        for step, m in enumerate(self.merges):
            node = n + step
            if m.left == m.right or not (0 <= m.left < node and 0 <= m.right < node):
                raise DataError(f"merge {step} has invalid children ({m.left}, {m.right})")
            if m.left in used or m.right in used:
                raise DataError(f"merge {step} reuses an already-merged node")
            if m.left not in counts or m.right not in counts:
                raise DataError(f"merge {step} references an unknown node")
            if not math.isfinite(m.height) or m.height < 0.0:
                raise NumericError(f"merge {step} has invalid height {m.height!r}")
            # ward heights cannot decrease; allow only float-rounding slack
            if m.height < prev_height - 1e-9:
                raise NumericError(f"merge heights decrease at step {step}")
            if m.count != counts[m.left] + counts[m.right]:
                raise DataError(f"merge {step} count {m.count} != sum of children")
            used.update((m.left, m.right))
            counts[node] = m.count
            prev_height = m.height
        if self.merges and self.merges[-1].count != n:
            raise DataError("root count does not cover all leaves")

    @property
    def n_leaves(self) -> int:
        return len(self.tickers)


def correlation_distance(corr: CorrelationMatrix) -> DistanceMatrix:
    """Map correlations to distances ``d = sqrt(0.5 * (1 - rho))``.

    rho = 1 gives 0, rho = -1 gives 1; rounding slightly above 1 clips to a
    zero distance rather than a NaN.
    """
    half = np.clip((1.0 - corr.matrix) / 2.0, 0.0, None)
    d = np.sqrt(half)
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(tickers=corr.tickers, matrix=d)


def child_order_key(node: int, n: int, heights: dict[int, float], centrality: list[float]):
    """Label-free sort key deciding which child of a merge renders left.

    Clusters formed at lower heights come first; between two leaves (height
    0 both) the one with the smaller centrality - the exact sum of its
    squared distances to every stock - comes first.  Node id is only a
    fallback for exactly tied data, so relabeling stocks with distinct
    distances never changes the dendrogram layout.
    """
    if node < n:
        return (0.0, 0, centrality[node], node)
    return (heights[node], 1, 0.0, node)


def ward_linkage(dist: DistanceMatrix) -> LinkageTree:
    """Agglomerate with the ward criterion via the Lance-Williams update.

    Squared inter-cluster distances start as the squared pairwise distances
    and update on each merge of (i, j) into u as::

        D2(u, k) = ((n_i + n_k) D2(i, k) + (n_j + n_k) D2(j, k)
                    - n_k D2(i, j)) / (n_i + n_j + n_k)

    At every step the active pair with the smallest D2 merges; exact ties
    break to the smallest id pair.  Merge heights are sqrt(D2) at the time
    of merging, and each merge's children are ordered by
    :func:`child_order_key`.
    """
    n = len(dist.tickers)
    if n < 2:
        raise DataError("ward linkage needs at least 2 stocks")

    size = {i: 1 for i in range(n)}
    d2: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            d2[(i, j)] = float(dist.matrix[i, j]) ** 2
    # fsum keeps each leaf's centrality independent of summation order
    centrality = [math.fsum(float(v) ** 2 for v in dist.matrix[i]) for i in range(n)]
    heights: dict[int, float] = {}

    def pair(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    merges: list[Merge] = []
    for step in range(n - 1):
        (i, j) = min(d2, key=lambda p: (d2[p], p))
        best = d2[(i, j)]
        new = n + step
        height = math.sqrt(max(best, 0.0))
        heights[new] = height
        left, right = sorted((i, j), key=lambda c: child_order_key(c, n, heights, centrality))
        merges.append(Merge(left=left, right=right, height=height, count=size[i] + size[j]))
        others = [k for k in size if k != i and k != j]
        for k in others:
            upd = (
                (size[i] + size[k]) * d2[pair(i, k)]
                + (size[j] + size[k]) * d2[pair(j, k)]
                - size[k] * best
            ) / (size[i] + size[j] + size[k])
            d2[pair(new, k)] = upd
        for k in others:
            del d2[pair(i, k)]
            del d2[pair(j, k)]
        del d2[(i, j)]
        size[new] = size.pop(i) + size.pop(j)

    return LinkageTree(tickers=dist.tickers, merges=tuple(merges))


def quasi_diagonalize(tree: LinkageTree) -> tuple[int, ...]:
    """Leaf order of the dendrogram, expanding left children before right.

    Returns a permutation of 0..N-1 in which stocks merged at low heights
    end up adjacent.
    """
    n = tree.n_leaves
    if n == 1:
        return (0,)
    children = {n + t: (m.left, m.right) for t, m in enumerate(tree.merges)}
    root = n + len(tree.merges) - 1
    order: list[int] = []
    stack = [root]
    while stack:
        node = stack.pop()
        if node < n:
            order.append(node)
            continue
        left, right = children[node]
        stack.append(right)
        stack.append(left)  # popped first, so left expands before right
    if sorted(order) != list(range(n)):
        raise DataError("tree does not expand to a permutation of its leaves")
    return tuple(order)


def inverse_variance_weights(cov: CovarianceMatrix, members: list[int]) -> np.ndarray:
    """Weights proportional to 1/variance over the given member indices."""
    if not members:
        raise DataError("empty member list")
    variances = np.array([cov.matrix[i, i] for i in members], dtype=float)
    for idx, var in zip(members, variances):
        if var <= 0.0:
            raise NumericError(f"zero-variance stock {cov.tickers[idx]!r}")
    inv = 1.0 / variances
    return inv / inv.sum()


def cluster_variance(cov: CovarianceMatrix, members: list[int]) -> float:
    """Variance of the inverse-variance portfolio over a member subset."""
    w = inverse_variance_weights(cov, members)
    sub = cov.matrix[np.ix_(members, members)]
    return float(w @ sub @ w)


def recursive_bisection(cov: CovarianceMatrix, order) -> Portfolio:
    """Allocate by splitting the seriation order in half, top down.

    Each contiguous block splits at its midpoint (ceil(k/2) items on the
    left); the left half's weight multiplier is ``alpha = 1 - V_L / (V_L +
    V_R)`` with V the inverse-variance cluster variance, the right half's is
    ``1 - alpha``.  Splitting continues until every block is a singleton.
    """
    n = len(cov.tickers)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise DataError("order must be a permutation of all stock indices")

    weights = np.ones(n, dtype=float)
    blocks = [order] if n > 1 else []
    while blocks:
        items = blocks.pop()
        mid = (len(items) + 1) // 2
        left, right = items[:mid], items[mid:]
        v_left = cluster_variance(cov, left)
        v_right = cluster_variance(cov, right)
        total = v_left + v_right
        if total <= 0.0:
            raise NumericError("zero combined cluster variance in bisection")
        alpha = 1.0 - v_left / total
        weights[left] *= alpha
        weights[right] *= 1.0 - alpha
        if len(left) > 1:
            blocks.append(left)
        if len(right) > 1:
            blocks.append(right)

    return Portfolio(method="hrp", tickers=cov.tickers, weights=weights)


def hrp_portfolio(cov: CovarianceMatrix) -> tuple[Portfolio, LinkageTree, tuple[int, ...]]:
    """Run the full chain: correlation -> distance -> tree -> order -> weights.

    Returns the portfolio together with the linkage tree and seriation order
    so callers can export the dendrogram artifacts.
    """
    from .market_data import correlation_matrix

    if len(cov.tickers) == 1:
        portfolio = Portfolio(method="hrp", tickers=cov.tickers, weights=np.ones(1))
        tree = LinkageTree(tickers=cov.tickers, merges=())
        return portfolio, tree, (0,)
    corr = correlation_matrix(cov)
    tree = ward_linkage(correlation_distance(corr))
    order = quasi_diagonalize(tree)
    return recursive_bisection(cov, order), tree, order


def dendrogram_text(tree: LinkageTree) -> str:
    """Indented ASCII rendering of the merge tree, for eyeballing clusters.

    Internal nodes print their id, height, and member count; leaves print
    their tickers.  Left children render above right children.
    """
    n = tree.n_leaves
    if n == 1:
        return tree.tickers[0] + "\n"
    children = {n + t: m for t, m in enumerate(tree.merges)}
    root = n + len(tree.merges) - 1
    lines: list[str] = []

    def walk(node: int, prefix: str, tail: str, child_prefix: str) -> None:
        if node < n:
            lines.append(prefix + tail + tree.tickers[node])
            return
        m = children[node]
        lines.append(prefix + tail + f"cluster {node}  h={m.height:.6f}  n={m.count}")
        walk(m.left, prefix + child_prefix, "+-- ", "|   ")
        walk(m.right, prefix + child_prefix, "\\-- ", "    ")

    walk(root, "", "", "")
    return "\n".join(lines) + "\n"


def linkage_rows(tree: LinkageTree) -> list[tuple[int, int, float, int]]:
    """Merge records as (left, right, height, count) tuples, in merge order."""
    return [(m.left, m.right, m.height, m.count) for m in tree.merges]
